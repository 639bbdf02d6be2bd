"""Tree prunings applied after a heuristic: RDE and RDS."""

from __future__ import annotations

from .graph import SubtreeSolution


def _postorder(t, kids):
    order, stack = [], [t.root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(kids[u])
    order.reverse()
    return order


def remove_dangling_edges(g, t):
    """Repeatedly drop leaves hanging on a negative edge."""
    kids = t.children()
    n_kids = {u: len(vs) for u, vs in kids.items()}
    parent = dict(t.parent)
    score = t.score
    work = [v for v in _postorder(t, kids)
            if v != t.root and n_kids[v] == 0 and g.out_w[parent[v]][v] < 0]
    while work:
        v = work.pop()
        p = parent.pop(v)
        score -= g.out_w[p][v]
        n_kids[p] -= 1
        if p != t.root and n_kids[p] == 0 and g.out_w[parent[p]][p] < 0:
            work.append(p)
    return SubtreeSolution(t.root, parent, score)


def subtree_scores(g, t, kids=None):
    """``D[u]``: best weight of a subtree hanging below ``u`` inside ``t``."""
    if kids is None:
        kids = t.children()
    D = {}
    for u in _postorder(t, kids):
        D[u] = sum(max(0.0, g.out_w[u][v] + D[v]) for v in kids[u])
    return D


def remove_dangling_subtrees(g, t):
    """Cut every edge ``uv`` with ``w(uv) + D[v] < 0`` together with its subtree."""
    kids = t.children()
    D = subtree_scores(g, t, kids)
    parent, score = {}, 0.0
    stack = [t.root]
    while stack:
        u = stack.pop()
        for v in kids[u]:
            w = g.out_w[u][v]
            if w + D[v] < 0:
                continue
            parent[v] = u
            score += w
            stack.append(v)
    return SubtreeSolution(t.root, parent, score)
