import csv
import filecmp
import io
import json
from pathlib import Path

import pytest

from fragtree.cli import bench_rows, main
from fragtree.graph import ColoredDag, save_graph

DATA = Path(__file__).resolve().parent.parent / "data"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def stdout_rows(capsys):
    return list(csv.DictReader(io.StringIO(capsys.readouterr().out)))


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus") / "c"
    assert main(["gen", "--output", str(out), "--n", "4", "--seed", "42"]) == 0
    return out


def test_solve_toy_cp1(capsys):
    assert main(["solve", "--input", str(DATA / "toy_graph.json"), "--method", "cp1"]) == 0
    (row,) = stdout_rows(capsys)
    assert float(row["score"]) == 8.0 and row["status"] == "ok"


def test_solve_max_lists_every_heuristic(capsys):
    assert main(["solve", "--input", str(DATA / "toy_graph.json"), "--method", "max"]) == 0
    rows = stdout_rows(capsys)
    assert [r["method"] for r in rows] == ["kruskal", "prim", "insertion", "topdown",
                                           "cp1", "cp2", "cp3", "max"]
    assert float(rows[-1]["score"]) == 8.0


def test_solve_capacity_error_row(tmp_path, capsys):
    g = ColoredDag(list(range(6)), [(0, v, 1.0) for v in range(1, 6)], 0)
    save_graph(g, tmp_path / "wide.json")
    code = main(["solve", "--input", str(tmp_path / "wide.json"), "--method", "exact",
                 "--max-colors", "4"])
    (row,) = stdout_rows(capsys)
    assert code == 1
    assert row["status"] == "error" and "capacity" in row["message"]


def test_solve_partial_failure(tmp_path, capsys):
    (tmp_path / "bad.json").write_text('{"root": 0, "colors": [], "nodes": [], "edges": [')
    code = main(["solve", "--input", str(DATA / "toy_graph.json"), str(tmp_path / "bad.json"),
                 "--method", "cp2"])
    rows = stdout_rows(capsys)
    assert code == 1
    assert [r["status"] for r in rows] == ["ok", "error"]


def test_solve_tree_dump_roundtrips(tmp_path, capsys):
    from fragtree.graph import loads_tree
    main(["solve", "--input", str(DATA / "toy_graph.json"), "--method", "exact",
          "--trees", str(tmp_path / "trees")])
    capsys.readouterr()
    (dump,) = list((tmp_path / "trees").iterdir())
    doc = json.loads(dump.read_text())
    assert doc["tree"] is True and doc["score"] == 8.0
    g, t = loads_tree(dump.read_text())
    assert t.score == 8.0


def test_invalid_method_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--input", "x", "--method", "nope"])
    assert exc.value.code == 2


def test_invalid_config_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mass_min": 500, "mass_max": 100}))
    assert main(["gen", "--output", str(tmp_path / "o"), "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"unknown_knob": 1}))
    assert main(["gen", "--output", str(tmp_path / "o"), "--config", str(cfg)]) == 2


def test_gen_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["gen", "--output", str(d), "--n", "1", "--seed", "9"]) == 0
    cmp = filecmp.dircmp(a, b)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for sub in cmp.common_dirs:
        inner = filecmp.dircmp(a / sub, b / sub)
        assert not inner.diff_files and inner.left_only == [] and inner.right_only == []


def test_gen_empty(tmp_path):
    assert main(["gen", "--output", str(tmp_path / "e"), "--n", "0"]) == 0
    manifest = json.loads((tmp_path / "e" / "corpus.json").read_text())
    assert manifest["compounds"] == []


def test_gen_records_seeds(small):
    manifest = json.loads((small / "corpus.json").read_text())
    assert [c["seed"] for c in manifest["compounds"]] == [42, 43, 44, 45]


def test_build_from_spectrum(tmp_path):
    out = tmp_path / "bundle"
    assert main(["build", "--input", str(DATA / "example_spectrum.txt"), "--output", str(out),
                 "--truth", "C6H13O6"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert any(c["truth"] for c in manifest["candidates"])


def test_rank_plain_and_threads_agree(small, tmp_path):
    one, two = tmp_path / "one.csv", tmp_path / "two.csv"
    assert main(["rank", "--input", str(small), "--method", "cp3", "--output", str(one)]) == 0
    assert main(["rank", "--input", str(small), "--method", "cp3", "--output", str(two),
                 "--threads", "2"]) == 0
    strip = [{k: v for k, v in r.items() if k != "seconds"} for r in read_csv(one)]
    assert strip == [{k: v for k, v in r.items() if k != "seconds"} for r in read_csv(two)]
    assert {r["compound"] for r in strip} == {f"syn_000{i}" for i in range(4)}


def test_rank_kbest_stats(small, tmp_path):
    out = tmp_path / "k.csv"
    assert main(["rank", "--input", str(small), "--kbest", "--k", "2", "--warmup", "3",
                 "--output", str(out)]) == 0
    stats = read_csv(f"{out}.solves.csv")
    assert len(stats) == 4
    for s in stats:
        assert int(s["exact_solves"]) <= int(s["candidates"])
    rows = read_csv(out)
    assert all(r["method"] == "kbest:cp3" for r in rows)


def test_rank_kbest_rejects_k_above_warmup(small):
    assert main(["rank", "--input", str(small), "--kbest", "--k", "4", "--warmup", "3"]) == 2


def test_eval_writes_one_csv_per_method(small, tmp_path):
    out = tmp_path / "ev"
    assert main(["eval", "--input", str(small), "--method", "all", "--output", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted(f"eval_{m}.csv" for m in
                           ["kruskal", "prim", "insertion", "topdown", "cp1", "cp2", "cp3",
                            "max", "exact"])
    rows = read_csv(out / "eval_exact.csv")
    pp = [float(r["value"]) for r in rows if r["metric"] == "pp_vs_exact"]
    assert len(pp) == 25 and all(v == 0 for v in pp)


def test_bench_curves_are_monotone(small, capsys):
    assert main(["bench", "--input", str(small), "--method", "kruskal,cp1"]) == 0
    rows = stdout_rows(capsys)
    assert {r["series"] for r in rows} == {"build", "kruskal", "cp1"}
    for series in ("build", "kruskal", "cp1"):
        mine = [r for r in rows if r["series"] == series]
        cum = [float(r["cumulative_seconds"]) for r in mine]
        assert cum == sorted(cum)
        assert float(mine[-1]["fraction"]) == 1.0


def test_bench_rows_sort_each_series():
    rows = bench_rows({"a": [3.0, 1.0, 2.0]})
    assert [r["seconds"] for r in rows] == [1.0, 2.0, 3.0]
    assert [r["cumulative_seconds"] for r in rows] == [1.0, 3.0, 6.0]


def test_missing_input_is_config_error(tmp_path):
    assert main(["rank", "--input", str(tmp_path)]) == 2
