"""Independent reference implementations used only by the tests."""

import itertools

import numpy as np

from fragtree.chem import DEFAULT_MASSES, ELEMENTS, Formula
from fragtree.graph import ColoredDag, SubtreeSolution, reachable_from


def toy_graph(transitive=False):
    # r=0, u=1, v=2, z=3, x=4, y=5; v and z share color 2
    colors = [0, 1, 2, 2, 3, 4]
    edges = [(0, 1, 2.0), (1, 2, 1.0), (2, 4, 3.0), (2, 5, 2.0), (0, 3, 5.0)]
    if transitive:
        edges += [(0, 2, -10.0), (0, 4, -10.0), (0, 5, -10.0), (1, 4, -10.0), (1, 5, -10.0)]
    return ColoredDag(colors, edges, 0, labels=["r", "u", "v", "z", "x", "y"])


def best_by_node_subsets(g):
    """Optimum via enumeration of colorful node sets containing the root.

    For a fixed node set of a DAG, any choice of one in-tree parent per
    non-root node is a tree, so the best tree takes the heaviest parent.
    """
    others = [v for v in range(g.n) if v != g.root]
    best = 0.0
    for mask in range(1 << len(others)):
        chosen = [g.root] + [others[i] for i in range(len(others)) if mask >> i & 1]
        cols = [g.color(v) for v in chosen]
        if len(set(cols)) != len(cols):
            continue
        inset = set(chosen)
        total, ok = 0.0, True
        for v in chosen[1:]:
            ws = [w for u, w in g.in_w[v].items() if u in inset]
            if not ws:
                ok = False
                break
            total += max(ws)
        if ok and total > best:
            best = total
    return best


def all_colorful_subtrees(g):
    """Every root-anchored colorful subtree, as parent maps (tiny graphs only)."""
    order = [v for v in g.nodes_by_rank_desc()[::-1] if v != g.root]
    results = []

    def rec(i, parent, used):
        if i == len(order):
            results.append(dict(parent))
            return
        v = order[i]
        rec(i + 1, parent, used)
        if g.color(v) in used:
            return
        for u in g.pred[v]:
            if u == g.root or u in parent:
                parent[v] = u
                rec(i + 1, parent, used | {g.color(v)})
                del parent[v]

    rec(0, {}, {g.color(g.root)})
    return results


def naive_insertion(g, trace=None):
    """Insertion heuristic recomputing every gain from scratch, O(k^3 n)."""
    parent = {}
    tree = [g.root]
    used = {g.color(g.root)}
    while True:
        best = None
        for v in range(g.n):
            if g.color(v) in used:
                continue
            for u in tree:
                w = g.weight(u, v)
                if w is None:
                    continue
                gain = w
                for x in tree:
                    if x == g.root:
                        continue
                    wvx = g.weight(v, x)
                    wyx = g.weight(parent[x], x)
                    if wvx is not None and wvx > wyx:
                        gain += wvx - wyx
                key = (gain, -v, -u)
                if best is None or key > best[0]:
                    best = (key, v, u)
        if best is None:
            break
        _, v, u = best
        for x in list(tree):
            if x == g.root:
                continue
            wvx = g.weight(v, x)
            if wvx is not None and wvx > g.weight(parent[x], x):
                parent[x] = v
        parent[v] = u
        tree.append(v)
        used.add(g.color(v))
        if trace is not None:
            trace.append(v)
    score = sum(g.weight(p, v) for v, p in parent.items())
    return SubtreeSolution(g.root, parent, score)


def brute_force_decompose(mass, ppm, bounds):
    """Vectorized scan over the full count grid."""
    tol = mass * ppm * 1e-6
    axes = [np.arange(bounds.get(e, 0) + 1) for e in ELEMENTS]
    grids = np.meshgrid(*axes, indexing="ij")
    total = sum(gr * DEFAULT_MASSES[e] for gr, e in zip(grids, ELEMENTS))
    hits = np.argwhere(np.abs(total - mass) <= tol)
    out = set()
    for idx in hits:
        f = Formula(tuple(int(i) for i in idx))
        if not f.is_empty():
            out.add(f)
    return out
