"""Method registry shared by ranking, evaluation and the command line."""

from __future__ import annotations

import time

from .exact import DEFAULT_MAX_COLORS, CapacityError, solve_exact_dp
from .heuristics import HEURISTICS, run_heuristic, solve_maximum

METHODS = tuple(HEURISTICS) + ("max", "exact")


def solve(method, g, max_colors=DEFAULT_MAX_COLORS):
    """Solve ``g`` with a method id, applying the standard RDS policy."""
    if method == "exact":
        return solve_exact_dp(g, max_colors)
    if method == "max":
        return solve_maximum(g)[0]
    if method in HEURISTICS:
        return run_heuristic(method, g)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def timed_solve(method, g, max_colors=DEFAULT_MAX_COLORS):
    start = time.perf_counter()
    t = solve(method, g, max_colors)
    return t, time.perf_counter() - start


def check_method(method):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return method


class SolveCache:
    """Memoizing ``(method, graph) -> (tree, seconds)``; graphs are keyed by identity."""

    def __init__(self, max_colors=DEFAULT_MAX_COLORS):
        self.max_colors = max_colors
        self._store = {}
        self._graphs = {}

    def __call__(self, method, g):
        key = (method, id(g))
        hit = self._store.get(key)
        if hit is None:
            try:
                hit = timed_solve(method, g, self.max_colors)
            except CapacityError as exc:  # replayed on every lookup
                hit = exc
            self._store[key] = hit
            self._graphs[id(g)] = g
        if isinstance(hit, CapacityError):
            raise hit
        return hit
