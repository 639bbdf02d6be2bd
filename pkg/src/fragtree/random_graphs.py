"""Random transitive DAGs with order-preserving colorings."""

from __future__ import annotations

import numpy as np

from .graph import ColoredDag, transitive_closure


def random_instance(rng, n, k, density=0.3, integer_weights=False, low=-5.0, high=10.0,
                    transitive=True, shuffle_ids=True):
    """Rooted DAG on ``n`` nodes and ``k`` colors, root alone on the lowest color.

    ``rng`` is a ``numpy.random.Generator``.  Every non-root node receives at
    least one edge from an earlier node, so the root reaches everything.
    Integer weights make ties frequent, which exercises tie-breaking.
    """
    if n < 1 or k < 1 or (n > 1 and k < 2):
        raise ValueError("need n >= 1, k >= 1, and k >= 2 when n > 1")
    colors = [0] + sorted(int(c) for c in rng.integers(1, k, size=n - 1)) if n > 1 else [0]

    def draw():
        if integer_weights:
            return float(rng.integers(int(low), int(high) + 1))
        return float(rng.uniform(low, high))

    edges = []
    for v in range(1, n):
        earlier = [u for u in range(v) if colors[u] < colors[v]]
        u0 = earlier[int(rng.integers(len(earlier)))]
        edges.append((u0, v, draw()))
        for u in earlier:
            if u != u0 and rng.random() < density:
                edges.append((u, v, draw()))

    perm = list(range(n))
    if shuffle_ids:
        perm = [int(x) for x in rng.permutation(n)]
    node_colors = [0] * n
    for old, new in enumerate(perm):
        node_colors[new] = colors[old]
    edges = [(perm[u], perm[v], w) for u, v, w in edges]
    # colors may be unused after sampling; compact them keeping their order
    used = sorted(set(node_colors))
    cidx = {c: i for i, c in enumerate(used)}
    g = ColoredDag([cidx[c] for c in node_colors], edges, perm[0])
    if transitive:
        g = transitive_closure(g, lambda u, v: draw())
    return g


def random_corpus(seed, count, n_range=(2, 8), k_range=(2, 8), **kw):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        k = min(k, n) if n > 1 else 1
        if n > 1:
            k = max(k, 2)
        out.append(random_instance(rng, n, k, **kw))
    return out
