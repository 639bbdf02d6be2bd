import pytest

from fragtree.builder import (BuildError, ScoringModel, Spectrum, build_candidate_dag,
                              build_compound, format_spectrum, fragment_peaks, parse_spectrum,
                              read_bundle, write_bundle)
from fragtree.chem import Formula, decompose_mass
from fragtree.graph import ALL_CHECKS, validate_graph
from fragtree.synthetic import (CorpusSpec, GeneratorConfig, generate_corpus,
                                generate_synthetic_compound)

GLUCOSE = Formula.parse("C6H12O6")


def glucose_spectrum(*peaks):
    return Spectrum(GLUCOSE.mass(), list(peaks))


def test_precursor_only_gives_single_node():
    g = build_candidate_dag(glucose_spectrum(), GLUCOSE)
    assert g.n == 1 and g.m == 0 and list(g.labels) == ["C6H12O6"]


def test_one_fragment_one_edge():
    frag = Formula.parse("C6H10O5")
    g = build_candidate_dag(glucose_spectrum((frag.mass(), 50.0)), GLUCOSE, tolerance_ppm=1)
    assert g.n == 2 and g.m == 1
    assert list(g.labels) == ["C6H12O6", "C6H10O5"]
    # common loss at zero error and full intensity
    sm = ScoringModel()
    assert g.weight(0, 1) == pytest.approx(sm.mass_term(0.0, 1) + sm.common_loss_bonus, abs=1e-6)


def test_inconsistent_precursor_rejected():
    with pytest.raises(BuildError):
        build_candidate_dag(glucose_spectrum(), Formula.parse("C6H14O6"))


def test_precursor_window_matches_decomposition():
    sp = Spectrum(231.0049370434836, [])
    for f in decompose_mass(sp.precursor_mz, 10):
        build_candidate_dag(sp, f, 10)


def test_water_single_candidate():
    c = build_compound(Spectrum(18.010565, []), 5, ratio_limits=None)
    assert [str(x.formula) for x in c.candidates] == ["H2O"]


def test_no_candidates_flagged():
    c = build_compound(Spectrum(0.5, [(0.4, 1.0)]), 10)
    assert c.candidates == [] and "no_candidates" in c.flags


def test_scoring_terms():
    sm = ScoringModel()
    assert sm.loss_prior(Formula.parse("H2O")) == 2.0
    assert sm.loss_prior(Formula.parse("C3H5N")) == pytest.approx(-0.9)
    assert sm.mass_term(0.0, 10) > sm.mass_term(5.0, 10) > sm.mass_term(10.0, 10)


def test_spectrum_text_roundtrip():
    sp = Spectrum(181.07, [(163.06, 20.0), (145.05, 5.5)])
    assert parse_spectrum(format_spectrum(sp)) == sp


def test_spectrum_parse_errors():
    with pytest.raises(ValueError):
        parse_spectrum("100.0 1.0\n")
    with pytest.raises(ValueError):
        parse_spectrum("PRECURSOR 100\n90 1 2\n")
    with pytest.raises(ValueError):
        Spectrum(100.0, [(90.0, 0.0)])


def _synthetic(seed, **kw):
    sc = generate_synthetic_compound(seed, GeneratorConfig(**kw))
    return sc, build_compound(sc.spectrum, truth=sc.truth)


def test_built_graphs_pass_validation():
    for seed in range(15):
        _, c = _synthetic(seed)
        for cand in c.candidates:
            assert validate_graph(cand.graph, ALL_CHECKS) == []
            assert cand.graph.labels[cand.graph.root] == str(cand.formula)


def test_edges_are_exactly_the_subformula_relation():
    for seed in range(10):
        _, c = _synthetic(seed)
        for cand in c.candidates:
            g = cand.graph
            forms = [Formula.parse(x) for x in g.labels]
            for u in range(g.n):
                for v in range(g.n):
                    expected = (g.color(v) != g.color(u) and g.rank(v) > g.rank(u)
                                and forms[v].is_proper_subformula(forms[u]))
                    assert g.has_edge(u, v) == expected


def test_peak_cap_keeps_intense_prefix():
    sc = generate_synthetic_compound(4, GeneratorConfig(fragments_min=10, fragments_max=12))
    truth = sc.truth
    g_all, kept_all = build_candidate_dag(sc.spectrum, truth, return_peaks=True)
    for cap in (1, 3, 5):
        g, kept = build_candidate_dag(sc.spectrum, truth, max_peaks=cap, return_peaks=True)
        assert len(kept) <= cap
        by_int = sorted(kept_all, key=lambda p: (-p[2], -p[1], p[0]))
        assert sorted(kept) == sorted(by_int[:len(kept)])
        assert g.k <= cap + 1


def test_generator_is_deterministic():
    a = generate_synthetic_compound(17)
    b = generate_synthetic_compound(17)
    assert a.spectrum == b.spectrum and a.truth == b.truth
    assert generate_synthetic_compound(18).spectrum != a.spectrum


def test_noise_free_peaks_explain_planted_fragments():
    cfg = GeneratorConfig(mz_noise_ppm=0.0, noise_peaks_max=0)
    for seed in range(20):
        sc = generate_synthetic_compound(seed, cfg)
        assert len(sc.spectrum.peaks) == len(sc.fragments)
        for fr in sc.fragments[1:]:
            assert fr.formula in decompose_mass(fr.mz, 1.0, sc.truth)
        c = build_compound(sc.spectrum, 10, truth=sc.truth)
        g = c.candidates[c.truth_index].graph
        assert {str(f.formula) for f in sc.fragments} <= set(g.labels)


def test_generator_config_validation():
    with pytest.raises(ValueError):
        GeneratorConfig(mass_min=500, mass_max=100).validate()
    with pytest.raises(ValueError):
        GeneratorConfig.from_dict({"bogus": 1})
    spec = CorpusSpec.from_dict({"seed": 3, "n": 2, "mass_max": 300.0})
    assert spec.n == 2 and spec.generator.mass_max == 300.0


def test_empty_corpus():
    assert list(generate_corpus(CorpusSpec(n=0))) == []


def test_bundle_roundtrip(tmp_path):
    _, c = _synthetic(2)
    write_bundle(c, tmp_path / "b")
    back = read_bundle(tmp_path / "b")
    assert back.truth == c.truth
    assert [x.formula for x in back.candidates] == [x.formula for x in c.candidates]
    for x, y in zip(back.candidates, c.candidates):
        assert list(x.graph.edges()) == list(y.graph.edges())


def test_fragment_peaks_excludes_precursor_window():
    sp = Spectrum(200.0, [(200.001, 1.0), (150.0, 1.0)])
    assert [mz for _, mz, _ in fragment_peaks(sp, 10)] == [150.0]


@pytest.mark.slow
def test_truth_present_in_default_corpus(corpus):
    present = sum(inst.truth_index is not None for _, inst in corpus)
    assert present >= 0.99 * len(corpus)
