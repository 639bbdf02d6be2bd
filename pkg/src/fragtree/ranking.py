"""Candidate ranking, the gap-pruned k-best exact procedure, and evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chem import Formula
from .exact import CapacityError
from .solvers import timed_solve


@dataclass
class RankEntry:
    index: int                 # position in the compound's candidate list
    formula: Formula
    score: float
    seconds: float
    tree: object
    mass_error_ppm: float
    is_truth: bool = False


def _entry_key(e):
    return (-e.score, abs(e.mass_error_ppm), str(e.formula))


@dataclass
class CandidateRanking:
    method: str
    entries: list
    truth_rank: int | None = None
    failed: list = field(default_factory=list)   # (index, formula, message)

    def scores(self):
        return {e.index: e.score for e in self.entries}


def rank_candidates(compound, method, solve_fn=None):
    """Solve every candidate with ``method`` and sort by score.

    Ties: smaller absolute mass error, then formula string.  The truth rank
    counts only candidates with a strictly larger score.
    """
    solve_fn = solve_fn or timed_solve
    entries, failed = [], []
    for i, cand in enumerate(compound.candidates):
        try:
            tree, secs = solve_fn(method, cand.graph)
        except CapacityError as exc:
            failed.append((i, cand.formula, str(exc)))
            continue
        entries.append(RankEntry(i, cand.formula, tree.score, secs, tree,
                                 cand.mass_error_ppm, cand.is_truth))
    entries.sort(key=_entry_key)
    truth_rank = None
    for e in entries:
        if e.is_truth:
            truth_rank = 1 + sum(1 for o in entries if o.score > e.score)
    return CandidateRanking(method, entries, truth_rank, failed)


@dataclass
class GapEstimate:
    delta: float = 0.0

    def update(self, exact_score, heuristic_score):
        self.delta = max(self.delta, exact_score - heuristic_score)


@dataclass
class KBestResult:
    top: list                  # RankEntry with exact scores, best first
    n_exact: int
    n_candidates: int
    gap: GapEstimate
    heuristic: CandidateRanking
    flagged: bool = False      # fewer than k candidates available
    failed: list = field(default_factory=list)


def kbest_exact_with_gap(compound, k, warmup=10, heuristic="cp3", solve_fn=None,
                         delta_floor=0.0):
    """Exact trees for the k best candidates, pruning with the heuristic gap.

    Candidates are visited in heuristic order.  The first ``warmup`` are always
    solved exactly; afterwards the scan stops as soon as heuristic score plus
    the largest gap seen so far can no longer beat the current k-th best
    exact score.
    """
    if not 1 <= k <= warmup:
        raise ValueError("need 1 <= k <= warmup")
    solve_fn = solve_fn or timed_solve
    ranking = rank_candidates(compound, heuristic, solve_fn)
    gap = GapEstimate(max(0.0, delta_floor))
    solved, failed = [], list(ranking.failed)
    for pos, h in enumerate(ranking.entries):
        if pos >= warmup and len(solved) >= k:
            threshold = sorted((e.score for e in solved), reverse=True)[k - 1]
            if h.score + gap.delta <= threshold:
                break
        cand = compound.candidates[h.index]
        try:
            tree, secs = solve_fn("exact", cand.graph)
        except CapacityError as exc:
            failed.append((h.index, cand.formula, str(exc)))
            continue
        solved.append(RankEntry(h.index, cand.formula, tree.score, secs, tree,
                                cand.mass_error_ppm, cand.is_truth))
        gap.update(tree.score, h.score)
    solved.sort(key=_entry_key)
    return KBestResult(solved[:k], len(solved), len(compound.candidates), gap, ranking,
                       len(compound.candidates) < k, failed)


def jaccard(a, b):
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def loss_label(parent_label, child_label):
    try:
        return str(Formula.parse(parent_label) - Formula.parse(child_label))
    except ValueError:
        return f"{parent_label}>{child_label}"


def tree_labels(g, t):
    fragments = {g.labels[v] for v in t.nodes}
    losses = {loss_label(g.labels[p], g.labels[v]) for p, v in t.edges()}
    return fragments, losses


def compare_structures(heuristic_tree, exact_tree, g):
    """Fragment and loss Jaccard similarity plus both tree sizes."""
    fh, lh = tree_labels(g, heuristic_tree)
    fe, le = tree_labels(g, exact_tree)
    return jaccard(fh, fe), jaccard(lh, le), (heuristic_tree.size, exact_tree.size)


def pearson(xs, ys):
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return math.nan
    return float(np.corrcoef(x, y)[0, 1])


def relative_score(heuristic, exact):
    """Heuristic score as a fraction of the optimum; ``None`` if undefined."""
    if exact == 0:
        return 1.0 if heuristic == 0 else None
    return heuristic / exact


@dataclass
class EvalSummary:
    method: str
    compounds: list = field(default_factory=list)      # names in evaluation order
    truth_ranks: list = field(default_factory=list)    # per compound, None if unranked
    topk_rate: dict = field(default_factory=dict)
    pp_vs_exact: dict = field(default_factory=dict)
    relative_scores: list = field(default_factory=list)  # (compound, ratio)
    truth_scores: list = field(default_factory=list)     # (compound, heuristic, exact)
    tree_size_pairs: list = field(default_factory=list)  # (compound, heuristic, exact)
    jaccard_fragments: list = field(default_factory=list)
    jaccard_losses: list = field(default_factory=list)
    excluded: int = 0
    relative_excluded: int = 0

    @property
    def pearson(self):
        return pearson([h for _, h, _ in self.truth_scores], [e for _, _, e in self.truth_scores])


def evaluate_corpus(compounds, methods, solve_fn=None, max_k=25):
    """Ranking, score and structure metrics for each method against exact."""
    solve_fn = solve_fn or timed_solve
    summaries = {m: EvalSummary(m) for m in methods}
    usable = []
    excluded = 0
    for i, c in enumerate(compounds):
        if c.truth_index is None:
            excluded += 1
        else:
            usable.append((c.name or f"compound_{i}", c))
    exact_ranks = []
    for name, c in usable:
        exact_rank = rank_candidates(c, "exact", solve_fn)
        exact_ranks.append(exact_rank.truth_rank)
        ti = c.truth_index
        g = c.candidates[ti].graph
        exact_entry = next((e for e in exact_rank.entries if e.index == ti), None)
        for m in methods:
            s = summaries[m]
            r = exact_rank if m == "exact" else rank_candidates(c, m, solve_fn)
            s.compounds.append(name)
            s.truth_ranks.append(r.truth_rank)
            entry = next((e for e in r.entries if e.index == ti), None)
            if entry is None or exact_entry is None:
                s.relative_excluded += 1
                continue
            rel = relative_score(entry.score, exact_entry.score)
            if rel is None:
                s.relative_excluded += 1
            else:
                s.relative_scores.append((name, rel))
            s.truth_scores.append((name, entry.score, exact_entry.score))
            jf, jl, sizes = compare_structures(entry.tree, exact_entry.tree, g)
            s.jaccard_fragments.append((name, jf))
            s.jaccard_losses.append((name, jl))
            s.tree_size_pairs.append((name,) + sizes)
    total = len(usable)
    exact_rate = _topk(exact_ranks, total, max_k)
    for s in summaries.values():
        s.excluded = excluded
        s.topk_rate = _topk(s.truth_ranks, total, max_k)
        s.pp_vs_exact = {k: 100.0 * (s.topk_rate[k] - exact_rate[k]) for k in s.topk_rate}
    return summaries


def _topk(ranks, total, max_k):
    rates = {}
    for k in range(1, max_k + 1):
        hits = sum(1 for r in ranks if r is not None and r <= k)
        rates[k] = hits / total if total else 0.0
    return rates
