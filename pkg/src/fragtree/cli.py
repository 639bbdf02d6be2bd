"""Command line: gen, build, solve, rank, eval, bench.

Exit status is 0 on success, 1 when some rows failed, 2 for invalid
configuration.  Every CSV is written in a fixed row order; only the timing
columns vary between runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .builder import (DEFAULT_MAX_PEAKS, DEFAULT_PPM, build_candidate_dag,
                      build_compound, read_bundle, read_manifest, read_spectrum, write_bundle)
from .chem import Formula
from .exact import DEFAULT_MAX_COLORS, CapacityError
from .graph import GraphError, load_graph, tree_document
from .heuristics import HEURISTICS
from .ranking import evaluate_corpus, kbest_exact_with_gap, rank_candidates
from .solvers import METHODS, SolveCache, timed_solve
from .synthetic import CorpusSpec, compound_name, generate_synthetic_compound

OK, PARTIAL, BAD_CONFIG = 0, 1, 2

CORPUS_MANIFEST = "corpus.json"

SOLVE_COLUMNS = ["source", "method", "score", "nodes", "seconds", "status", "message"]
RANK_COLUMNS = ["compound", "method", "position", "formula", "score", "mass_error_ppm",
                "truth", "seconds"]
KBEST_COLUMNS = ["compound", "candidates", "exact_solves", "delta", "flagged", "truth_in_top"]
EVAL_COLUMNS = ["compound", "method", "metric", "k", "value"]
BENCH_COLUMNS = ["series", "position", "fraction", "seconds", "cumulative_seconds"]


class ConfigError(ValueError):
    pass


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def _write_csv(path, columns, rows):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _pool_map(fn, items, threads):
    """Ordered map, in-process for one worker, process pool otherwise."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- inputs ----------------------------------------------------------------

def _is_corpus(path):
    return os.path.isfile(os.path.join(path, CORPUS_MANIFEST))


def _is_bundle(path):
    return os.path.isfile(os.path.join(path, "manifest.json"))


def compound_dirs(path):
    """Bundle directories under a corpus, or the bundle itself."""
    if _is_corpus(path):
        with open(os.path.join(path, CORPUS_MANIFEST)) as fh:
            manifest = json.load(fh)
        return [os.path.join(path, c["dir"]) for c in manifest["compounds"]]
    if _is_bundle(path):
        return [path]
    raise ConfigError(f"{path} is neither a corpus nor a compound bundle")


def load_compounds(paths):
    out = []
    for p in paths:
        out.extend(read_bundle(d) for d in compound_dirs(p))
    return out


def _graph_sources(paths):
    """``(label, loader)`` pairs for graph files, bundles and corpora."""
    sources = []
    for p in paths:
        if os.path.isdir(p):
            for d in compound_dirs(p):
                name = read_manifest(d).get("name") or os.path.basename(d)
                for entry in read_manifest(d)["candidates"]:
                    sources.append((f"{name}/{entry['formula']}", os.path.join(d, entry["graph"])))
        else:
            sources.append((p, p))
    return sources


# -- commands --------------------------------------------------------------

def cmd_gen(args):
    if args.config:
        spec = CorpusSpec.load(args.config)
    else:
        spec = CorpusSpec()
    if args.seed is not None:
        spec.seed = args.seed
    if args.n is not None:
        spec.n = args.n
    if args.ppm is not None:
        spec.ppm = args.ppm
    if args.max_peaks is not None:
        spec.max_peaks = args.max_peaks
    spec = CorpusSpec.from_dict(spec.to_dict())
    os.makedirs(args.output, exist_ok=True)
    entries = _pool_map(_gen_one, [(spec, i, args.output) for i in range(spec.n)], args.threads)
    manifest = {"config": spec.to_dict(), "compounds": entries}
    with open(os.path.join(args.output, CORPUS_MANIFEST), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return OK


def _gen_one(job):
    spec, i, out = job
    seed = spec.seed + i
    sc = generate_synthetic_compound(seed, spec.generator)
    name = compound_name(i)
    inst = build_compound(sc.spectrum, spec.ppm, max_peaks=spec.max_peaks, truth=sc.truth,
                          name=name)
    planted = [{"formula": str(f.formula), "parent": f.parent, "mz": f.mz,
                "intensity": f.intensity} for f in sc.fragments]
    write_bundle(inst, os.path.join(out, name),
                 {"seed": seed, "ppm": spec.ppm, "max_peaks": spec.max_peaks,
                  "planted": planted})
    return {"name": name, "dir": name, "seed": seed, "truth": str(sc.truth),
            "candidates": len(inst.candidates), "flags": inst.flags}


def cmd_build(args):
    spectrum = read_spectrum(args.input)
    truth = Formula.parse(args.truth) if args.truth else None
    inst = build_compound(spectrum, args.ppm, max_peaks=args.max_peaks, truth=truth,
                          name=args.name or os.path.basename(os.path.normpath(args.output)))
    write_bundle(inst, args.output, {"ppm": args.ppm, "max_peaks": args.max_peaks})
    return OK


def _solve_rows(job):
    label, path, method, max_colors, tree_dir = job
    try:
        g = load_graph(path)
    except (OSError, ValueError, KeyError, GraphError) as exc:
        return [{"source": label, "method": method, "status": "error", "message": str(exc)}]
    if method == "max":
        names = list(HEURISTICS)
    else:
        names = [method]
    rows, best = [], None
    for name in names:
        try:
            t, secs = timed_solve(name, g, max_colors)
        except CapacityError as exc:
            rows.append({"source": label, "method": name, "status": "error",
                         "message": str(exc)})
            continue
        rows.append({"source": label, "method": name, "score": t.score, "nodes": t.size,
                     "seconds": secs, "status": "ok", "message": ""})
        if best is None or t.score > best[0].score:
            best = (t, name)
        if tree_dir:
            _dump_tree(g, t, tree_dir, label, name)
    if method == "max" and best is not None:
        total = sum(r["seconds"] for r in rows if r["status"] == "ok")
        rows.append({"source": label, "method": "max", "score": best[0].score,
                     "nodes": best[0].size, "seconds": total, "status": "ok",
                     "message": f"best={best[1]}"})
        if tree_dir:
            _dump_tree(g, best[0], tree_dir, label, "max")
    return rows


def _dump_tree(g, t, tree_dir, label, method):
    safe = label.replace(os.sep, "__").replace("/", "__")
    os.makedirs(tree_dir, exist_ok=True)
    with open(os.path.join(tree_dir, f"{safe}.{method}.json"), "w") as fh:
        json.dump(tree_document(g, t), fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_solve(args):
    sources = _graph_sources(args.input)
    jobs = [(label, path, args.method, args.max_colors, args.trees) for label, path in sources]
    rows = [r for rs in _pool_map(_solve_rows, jobs, args.threads) for r in rs]
    _write_csv(args.output, SOLVE_COLUMNS, rows)
    return _status(rows)


def _status(rows):
    bad = sum(r.get("status") == "error" for r in rows)
    return PARTIAL if bad else OK


def _rank_job(job):
    d, method, kbest, k, warmup, max_colors = job
    compound = read_bundle(d)
    cache = SolveCache(max_colors)
    name = compound.name or os.path.basename(d)
    if kbest:
        res = kbest_exact_with_gap(compound, k, warmup, method, cache)
        entries, failed = res.top, res.failed
        stats = {"compound": name, "candidates": res.n_candidates, "exact_solves": res.n_exact,
                 "delta": res.gap.delta, "flagged": int(res.flagged),
                 "truth_in_top": int(any(e.is_truth for e in res.top))}
        label = f"kbest:{method}"
    else:
        r = rank_candidates(compound, method, cache)
        entries, failed, stats, label = r.entries, r.failed, None, method
    rows = [{"compound": name, "method": label, "position": i + 1, "formula": str(e.formula),
             "score": e.score, "mass_error_ppm": e.mass_error_ppm, "truth": int(e.is_truth),
             "seconds": e.seconds} for i, e in enumerate(entries)]
    return rows, stats, len(failed)


def cmd_rank(args):
    if args.kbest and not 1 <= args.k <= args.warmup:
        raise ConfigError("k-best mode needs 1 <= --k <= --warmup")
    dirs = [d for p in args.input for d in compound_dirs(p)]
    jobs = [(d, args.method, args.kbest, args.k, args.warmup, args.max_colors) for d in dirs]
    results = _pool_map(_rank_job, jobs, args.threads)
    rows = [r for rs, _, _ in results for r in rs]
    _write_csv(args.output, RANK_COLUMNS, rows)
    if args.kbest:
        stats_path = args.stats or (f"{args.output}.solves.csv" if args.output not in (None, "-")
                                    else None)
        if stats_path:
            _write_csv(stats_path, KBEST_COLUMNS, [s for _, s, _ in results])
    return PARTIAL if any(f for _, _, f in results) else OK


def summary_rows(summary):
    """Long-format rows for one method's evaluation summary."""
    m = summary.method
    rows = []
    per = {}

    def put(name, metric, value, k=None):
        rows.append({"compound": name, "method": m, "metric": metric, "k": k, "value": value})

    for name, rank in zip(summary.compounds, summary.truth_ranks):
        per.setdefault(name, []).append(("truth_rank", rank))
    for key, metric in (("relative_scores", "relative_score"),
                        ("jaccard_fragments", "jaccard_fragments"),
                        ("jaccard_losses", "jaccard_losses")):
        for name, value in getattr(summary, key):
            per.setdefault(name, []).append((metric, value))
    for name, h, e in summary.truth_scores:
        per.setdefault(name, []).extend([("truth_score", h), ("exact_truth_score", e)])
    for name, h, e in summary.tree_size_pairs:
        per.setdefault(name, []).extend([("tree_size", h), ("exact_tree_size", e)])
    for name in summary.compounds:
        for metric, value in per.get(name, []):
            put(name, metric, value)
    for k in sorted(summary.topk_rate):
        put("*", "topk_rate", summary.topk_rate[k], k)
    for k in sorted(summary.pp_vs_exact):
        put("*", "pp_vs_exact", summary.pp_vs_exact[k], k)
    put("*", "pearson", summary.pearson)
    put("*", "excluded", summary.excluded)
    put("*", "relative_excluded", summary.relative_excluded)
    return rows


def _methods(args):
    chosen = []
    for m in args.method or ["all"]:
        for part in m.split(","):
            if part == "all":
                chosen.extend(METHODS)
            elif part in METHODS:
                chosen.append(part)
            else:
                raise ConfigError(f"unknown method {part!r}; choose from {', '.join(METHODS)}")
    return list(dict.fromkeys(chosen))


def cmd_eval(args):
    methods = _methods(args)
    compounds = load_compounds(args.input)
    cache = SolveCache(args.max_colors)
    summaries = evaluate_corpus(compounds, methods, cache, args.max_k)
    os.makedirs(args.output, exist_ok=True)
    for m in methods:
        _write_csv(os.path.join(args.output, f"eval_{m}.csv"), EVAL_COLUMNS,
                   summary_rows(summaries[m]))
    return OK


def _bench_job(job):
    d, methods, max_colors = job
    compound = read_bundle(d)
    manifest = read_manifest(d)
    ppm = float(manifest.get("ppm", DEFAULT_PPM))
    max_peaks = int(manifest.get("max_peaks", DEFAULT_MAX_PEAKS))
    times = {"build": []}
    for cand in compound.candidates:
        start = time.perf_counter()
        build_candidate_dag(compound.spectrum, cand.formula, ppm, max_peaks)
        times["build"].append(time.perf_counter() - start)
    for m in methods:
        times[m] = []
        for cand in compound.candidates:
            try:
                times[m].append(timed_solve(m, cand.graph, max_colors)[1])
            except CapacityError:
                times[m].append(None)
    return times


def bench_rows(times_by_series):
    """Sorted cumulative curves; each series is ordered by its own times."""
    rows = []
    for series, values in times_by_series.items():
        vals = sorted(v for v in values if v is not None)
        total = 0.0
        for i, v in enumerate(vals, 1):
            total += v
            rows.append({"series": series, "position": i, "fraction": i / len(vals),
                         "seconds": v, "cumulative_seconds": total})
    return rows


def cmd_bench(args):
    methods = _methods(args)
    dirs = [d for p in args.input for d in compound_dirs(p)]
    results = _pool_map(_bench_job, [(d, methods, args.max_colors) for d in dirs], args.threads)
    merged = {"build": []}
    merged.update({m: [] for m in methods})
    for times in results:
        for key, vals in times.items():
            merged[key].extend(vals)
    rows = bench_rows(merged)
    _write_csv(args.output, BENCH_COLUMNS, rows)
    failed = any(v is None for vals in merged.values() for v in vals)
    return PARTIAL if failed else OK


# -- parser ----------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="fragtree",
                                description="Fragmentation trees via maximum colorful subtrees.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, method=False, method_multi=False):
        sp.add_argument("--threads", type=_positive_int, default=1,
                        help="worker processes across instances (default 1)")
        sp.add_argument("--max-colors", type=_positive_int, default=DEFAULT_MAX_COLORS,
                        help="exact solver capacity")
        if method:
            sp.add_argument("--method", choices=METHODS, default="cp3")
        if method_multi:
            sp.add_argument("--method", action="append",
                            help="method id, comma list or 'all' (repeatable; default all)")

    g = sub.add_parser("gen", help="generate a synthetic corpus of compound bundles")
    g.add_argument("--output", required=True)
    g.add_argument("--config", help="corpus config JSON")
    g.add_argument("--seed", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--ppm", type=_nonneg_float)
    g.add_argument("--max-peaks", type=_positive_int)
    g.add_argument("--threads", type=_positive_int, default=1)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build candidate graphs for one spectrum file")
    b.add_argument("--input", required=True)
    b.add_argument("--output", required=True)
    b.add_argument("--ppm", type=_nonneg_float, default=DEFAULT_PPM)
    b.add_argument("--max-peaks", type=_positive_int, default=DEFAULT_MAX_PEAKS)
    b.add_argument("--truth", help="known formula, marked in the manifest")
    b.add_argument("--name")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("solve", help="solve graph files, bundles or corpora")
    s.add_argument("--input", nargs="+", required=True)
    s.add_argument("--output", default="-")
    s.add_argument("--trees", help="directory for solution tree dumps")
    common(s, method=True)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("rank", help="rank candidate formulas")
    r.add_argument("--input", nargs="+", required=True)
    r.add_argument("--output", default="-")
    r.add_argument("--kbest", action="store_true", help="gap-pruned exact k-best mode")
    r.add_argument("--k", type=_positive_int, default=5)
    r.add_argument("--warmup", type=_positive_int, default=10)
    r.add_argument("--stats", help="k-best solve statistics CSV")
    common(r, method=True)
    r.set_defaults(func=cmd_rank)

    e = sub.add_parser("eval", help="evaluate methods on a corpus with known truth")
    e.add_argument("--input", nargs="+", required=True)
    e.add_argument("--output", required=True, help="directory for eval_<method>.csv")
    e.add_argument("--max-k", type=_positive_int, default=25)
    common(e, method_multi=True)
    e.set_defaults(func=cmd_eval)

    h = sub.add_parser("bench", help="sorted cumulative running times")
    h.add_argument("--input", nargs="+", required=True)
    h.add_argument("--output", default="-")
    common(h, method_multi=True)
    h.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:  # includes ConfigError, BuildError and bad files
        print(f"fragtree {args.command}: {exc}", file=sys.stderr)
        return BAD_CONFIG
    except OSError as exc:
        print(f"fragtree {args.command}: {exc}", file=sys.stderr)
        return PARTIAL


if __name__ == "__main__":
    sys.exit(main())
