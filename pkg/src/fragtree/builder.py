"""Turn MS/MS spectra into candidate fragmentation graphs."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

from .chem import (DEFAULT_BOUNDS, DEFAULT_MASSES, DEFAULT_RATIO_LIMITS, Formula, decompose_mass,
                   ppm_error, within_ratios)
from .graph import ColoredDag, load_graph, reachable_from, save_graph

DEFAULT_PPM = 10.0
DEFAULT_MAX_PEAKS = 60
DEFAULT_MIN_RDBE = -0.5


class BuildError(ValueError):
    pass


@dataclass
class Spectrum:
    precursor_mz: float
    peaks: list = field(default_factory=list)  # (mz, intensity)

    def __post_init__(self):
        self.peaks = [(float(mz), float(i)) for mz, i in self.peaks]
        for mz, inten in self.peaks:
            if not inten > 0:
                raise ValueError(f"peak at {mz} has nonpositive intensity")

    def by_intensity(self):
        return sorted(self.peaks, key=lambda p: (-p[1], -p[0]))


def read_spectrum(path):
    """``PRECURSOR <mz>`` header, then ``<mz> <intensity>`` lines."""
    with open(path) as fh:
        return parse_spectrum(fh.read())


def parse_spectrum(text):
    precursor, peaks = None, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0].upper() == "PRECURSOR":
            precursor = float(parts[1])
            continue
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<mz> <intensity>'")
        peaks.append((float(parts[0]), float(parts[1])))
    if precursor is None:
        raise ValueError("missing PRECURSOR header")
    return Spectrum(precursor, peaks)


def format_spectrum(spectrum):
    lines = [f"PRECURSOR {spectrum.precursor_mz!r}"]
    lines += [f"{mz!r} {inten!r}" for mz, inten in spectrum.peaks]
    return "\n".join(lines) + "\n"


def write_spectrum(spectrum, path):
    with open(path, "w") as fh:
        fh.write(format_spectrum(spectrum))


COMMON_LOSSES = ("H2O", "CO", "NH3", "CH2O", "CO2", "C2H4")


@dataclass
class ScoringModel:
    """Edge weight for the fragment ``u -> v``.

    ``alpha * mass term + beta * log(I_v / I_max) + gamma * loss prior``, with
    ``I_max`` the strongest retained fragment peak.
    The mass term is the log-likelihood ratio of the ppm error of ``v`` under
    a zero-mean Gaussian (sigma = tolerance * sigma_fraction) against a
    uniform error over the tolerance window.  The loss prior rewards common
    neutral losses and penalizes other losses by their atom count.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    common_loss_bonus: float = 2.0
    loss_atom_penalty: float = 0.1
    common_losses: tuple = COMMON_LOSSES
    sigma_fraction: float = 1.0 / 3.0

    def __post_init__(self):
        self.common_losses = tuple(self.common_losses)
        self._common = {Formula.parse(f) for f in self.common_losses}

    def mass_term(self, error_ppm, tolerance_ppm):
        if tolerance_ppm <= 0:
            return 0.0
        sigma = tolerance_ppm * self.sigma_fraction
        log_gauss = -0.5 * (error_ppm / sigma) ** 2 - math.log(sigma * math.sqrt(2 * math.pi))
        return log_gauss + math.log(2 * tolerance_ppm)

    def loss_prior(self, loss):
        if loss in self._common:
            return self.common_loss_bonus
        return -self.loss_atom_penalty * loss.atoms

    def edge_weight(self, loss, error_ppm, tolerance_ppm, intensity_share):
        return (self.alpha * self.mass_term(error_ppm, tolerance_ppm)
                + self.beta * math.log(intensity_share)
                + self.gamma * self.loss_prior(loss))

    def to_dict(self):
        d = asdict(self)
        d["common_losses"] = list(self.common_losses)
        return d


@dataclass
class Candidate:
    formula: Formula
    graph: ColoredDag
    mass_error_ppm: float
    is_truth: bool = False


@dataclass
class CompoundInstance:
    spectrum: Spectrum
    candidates: list
    truth: Formula | None = None
    name: str = ""
    flags: list = field(default_factory=list)

    @property
    def truth_index(self):
        for i, c in enumerate(self.candidates):
            if c.is_truth:
                return i
        return None


def fragment_peaks(spectrum, tolerance_ppm):
    """Peaks clearly below the precursor window, with their spectrum index."""
    cutoff = spectrum.precursor_mz * (1 - tolerance_ppm * 1e-6)
    return [(i, mz, inten) for i, (mz, inten) in enumerate(spectrum.peaks) if mz < cutoff]


def _plausible(f, min_rdbe):
    return min_rdbe is None or f.rdbe >= min_rdbe


def build_candidate_dag(spectrum, precursor, tolerance_ppm=DEFAULT_PPM,
                        max_peaks=DEFAULT_MAX_PEAKS, scoring=None, masses=DEFAULT_MASSES,
                        min_rdbe=DEFAULT_MIN_RDBE, return_peaks=False):
    """Fragment graph for one precursor formula.

    Nodes are (peak, explaining subformula) pairs colored by peak, with color
    ranks by decreasing peak mass; the root is the precursor formula.
    Fragment explanations with RDBE below ``min_rdbe`` are discarded
    (``None`` keeps all).
    """
    if scoring is None:
        scoring = ScoringModel()
    pmass = precursor.mass(masses)
    err = ppm_error(spectrum.precursor_mz, pmass)
    window = spectrum.precursor_mz * tolerance_ppm * 1e-6
    if abs(spectrum.precursor_mz - pmass) > window * (1 + 1e-9) + 1e-12:
        raise BuildError(f"{precursor} ({pmass:.6f}) is {err:.2f} ppm off the precursor "
                         f"{spectrum.precursor_mz}")

    explained = []
    for i, mz, inten in fragment_peaks(spectrum, tolerance_ppm):
        forms = [f for f in decompose_mass(mz, tolerance_ppm, precursor, masses)
                 if f != precursor and _plausible(f, min_rdbe)]
        if forms:
            explained.append((i, mz, inten, forms))
    explained.sort(key=lambda p: (-p[2], -p[1], p[0]))
    kept = explained[:max_peaks]
    kept.sort(key=lambda p: (-p[1], p[0]))

    node_colors = [0]
    node_forms = [precursor]
    node_errors = [err]
    node_inten = [None]
    color_labels = [f"precursor:{spectrum.precursor_mz!r}"]
    for color, (i, mz, inten, forms) in enumerate(kept, start=1):
        color_labels.append(f"peak{i}:{mz!r}")
        for f in sorted(forms, key=str):
            node_colors.append(color)
            node_forms.append(f)
            node_errors.append(ppm_error(mz, f.mass(masses)))
            node_inten.append(inten)
    top = max((p[2] for p in kept), default=1.0)

    edges = []
    n = len(node_forms)
    for u in range(n):
        fu = node_forms[u]
        for v in range(1, n):
            fv = node_forms[v]
            if node_colors[v] > node_colors[u] and fv.is_proper_subformula(fu):
                w = scoring.edge_weight(fu - fv, node_errors[v], tolerance_ppm,
                                        node_inten[v] / top)
                edges.append((u, v, w))
    g = ColoredDag(node_colors, edges, 0, list(range(len(color_labels))),
                   [str(f) for f in node_forms], color_labels)
    g = prune_unreachable(g)
    if return_peaks:
        return g, [(i, mz, inten) for i, mz, inten, _ in kept]
    return g


def prune_unreachable(g):
    """Drop nodes the root cannot reach and colors left without nodes."""
    seen = reachable_from(g, g.root)
    if all(seen):
        return g
    keep = [v for v in range(g.n) if seen[v]]
    idx = {v: i for i, v in enumerate(keep)}
    colors_left = sorted({g.color(v) for v in keep}, key=lambda c: g.color_ranks[c])
    cidx = {c: i for i, c in enumerate(colors_left)}
    edges = [(idx[u], idx[v], w) for u, v, w in g.edges() if seen[u] and seen[v]]
    color_labels = None
    if g.color_labels is not None:
        color_labels = [g.color_labels[c] for c in colors_left]
    return ColoredDag([cidx[g.color(v)] for v in keep], edges, idx[g.root],
                      list(range(len(colors_left))), [g.labels[v] for v in keep], color_labels)


def build_compound(spectrum, tolerance_ppm=DEFAULT_PPM, bounds=None, max_peaks=DEFAULT_MAX_PEAKS,
                   scoring=None, truth=None, name="", masses=DEFAULT_MASSES,
                   min_rdbe=DEFAULT_MIN_RDBE, ratio_limits=DEFAULT_RATIO_LIMITS):
    """Decompose the precursor and build one graph per plausible candidate.

    Candidates must pass the RDBE floor and, unless ``ratio_limits`` is
    ``None``, the element-to-carbon ratio ranges.
    """
    if not spectrum.peaks and spectrum.precursor_mz <= 0:
        raise BuildError("empty spectrum")
    if bounds is None:
        bounds = DEFAULT_BOUNDS
    candidates = []
    for f in decompose_mass(spectrum.precursor_mz, tolerance_ppm, bounds, masses):
        if not _plausible(f, min_rdbe):
            continue
        if ratio_limits is not None and not within_ratios(f, ratio_limits):
            continue
        g = build_candidate_dag(spectrum, f, tolerance_ppm, max_peaks, scoring, masses, min_rdbe)
        candidates.append(Candidate(f, g, ppm_error(spectrum.precursor_mz, f.mass(masses)),
                                    truth is not None and f == truth))
    c = CompoundInstance(spectrum, candidates, truth, name)
    if not candidates:
        c.flags.append("no_candidates")
    if truth is not None and c.truth_index is None:
        c.flags.append("truth_missing")
    return c


# -- bundles ---------------------------------------------------------------

SPECTRUM_FILE = "spectrum.txt"
MANIFEST_FILE = "manifest.json"


def write_bundle(compound, directory, extra=None):
    os.makedirs(directory, exist_ok=True)
    write_spectrum(compound.spectrum, os.path.join(directory, SPECTRUM_FILE))
    entries = []
    for i, cand in enumerate(compound.candidates):
        fname = f"cand_{i:04d}.json"
        save_graph(cand.graph, os.path.join(directory, fname))
        entries.append({"formula": str(cand.formula), "mass_error_ppm": cand.mass_error_ppm,
                        "truth": cand.is_truth, "graph": fname})
    manifest = {"name": compound.name,
                "truth": str(compound.truth) if compound.truth is not None else None,
                "flags": list(compound.flags),
                "candidates": entries}
    if extra:
        manifest.update(extra)
    with open(os.path.join(directory, MANIFEST_FILE), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_manifest(directory):
    with open(os.path.join(directory, MANIFEST_FILE)) as fh:
        return json.load(fh)


def read_bundle(directory):
    manifest = read_manifest(directory)
    spectrum = read_spectrum(os.path.join(directory, SPECTRUM_FILE))
    candidates = []
    for entry in manifest["candidates"]:
        g = load_graph(os.path.join(directory, entry["graph"]))
        candidates.append(Candidate(Formula.parse(entry["formula"]), g,
                                    float(entry["mass_error_ppm"]), bool(entry["truth"])))
    truth = Formula.parse(manifest["truth"]) if manifest.get("truth") else None
    return CompoundInstance(spectrum, candidates, truth, manifest.get("name", ""),
                            list(manifest.get("flags", [])))
