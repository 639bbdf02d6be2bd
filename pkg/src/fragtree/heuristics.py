"""Greedy heuristics for the Maximum Colorful Subtree problem.

All solvers expect a transitive DAG with an order-preserving coloring whose
root is the unique source.  Ties are broken towards the smaller target node
id, then the smaller source node id, so every solver is deterministic.
"""

from __future__ import annotations

import heapq

from .graph import SubtreeSolution
from .postprocess import remove_dangling_subtrees


class UnionFind:
    __slots__ = ("parent", "size")

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        return True


def solve_kruskal(g):
    uf = UnionFind(g.n)
    first_of_color = {}
    for v, c in enumerate(g.node_colors):
        if c in first_of_color:
            uf.union(first_of_color[c], v)
        else:
            first_of_color[c] = v

    has_parent = [False] * g.n
    chosen = {}
    edges = list(g.edges())
    edges.sort(key=lambda e: (-e[2], e[1], e[0]))
    for u, v, w in edges:
        if has_parent[v] or uf.find(u) == uf.find(v):
            continue
        uf.union(u, v)
        has_parent[v] = True
        chosen[v] = (u, w)

    # keep the branch hanging below the root
    kids = {}
    for v, (u, _) in chosen.items():
        kids.setdefault(u, []).append(v)
    parent, score = {}, 0.0
    stack = [g.root]
    while stack:
        u = stack.pop()
        for v in kids.get(u, ()):
            p, w = chosen[v]
            parent[v] = p
            score += w
            stack.append(v)
    return SubtreeSolution(g.root, parent, score)


def solve_prim(g):
    used = {g.color(g.root)}
    parent, score = {}, 0.0
    heap = [(-w, v, g.root) for v, w in g.out_w[g.root].items()]
    heapq.heapify(heap)
    while heap:
        negw, v, u = heapq.heappop(heap)
        if g.color(v) in used:
            continue
        used.add(g.color(v))
        parent[v] = u
        score -= negw
        for x, w in g.out_w[v].items():
            if g.color(x) not in used:
                heapq.heappush(heap, (-w, x, v))
    return SubtreeSolution(g.root, parent, score)


def solve_topdown(g):
    used = {g.color(g.root)}
    parent, score = {}, 0.0
    current = g.root
    while True:
        best = None
        for v, w in g.out_w[current].items():
            if g.color(v) not in used and (best is None or w > best[1]):
                best = (v, w)
        if best is None:
            if current == g.root:
                break
            current = g.root
            continue
        v, w = best
        parent[v] = current
        used.add(g.color(v))
        score += w
        current = v
    return SubtreeSolution(g.root, parent, score)


class _RerouteTable:
    """Incrementally maintained ``in``/``out`` scores of the insertion gain.

    ``in_score[v]`` is the best edge weight from the tree into ``v`` (``None``
    when no tree node has an edge to ``v``).  ``out_score[v]`` is the total
    gain of re-hanging tree nodes below ``v``:
    sum over tree nodes x of max(0, w(v, x) - w(parent(x), x)).
    """

    def __init__(self, g):
        self.g = g
        self.in_score = [None] * g.n
        self.out_score = [0.0] * g.n
        self.parent = {}
        self.in_tree = [False] * g.n
        self.tree = []
        self.score = 0.0
        self.rerouted = 0
        self._enter(g.root)

    def _enter(self, v):
        self.in_tree[v] = True
        self.tree.append(v)
        for x, w in self.g.out_w[v].items():
            cur = self.in_score[x]
            if cur is None or w > cur:
                self.in_score[x] = w

    def best_parent(self, v):
        best = None
        for u in self.tree:
            w = self.g.out_w[u].get(v)
            if w is not None and (best is None or w > best[1] or (w == best[1] and u < best[0])):
                best = (u, w)
        return best

    def attach(self, v, u):
        g = self.g
        w_in = g.out_w[u][v]
        self.parent[v] = u
        self.score += w_in
        self._enter(v)
        # v is now a tree node reached with weight w_in
        for z, wz in g.in_w[v].items():
            if wz > w_in:
                self.out_score[z] += wz - w_in
        for x, w_vx in g.out_w[v].items():
            if not self.in_tree[x] or x == g.root:
                continue
            y = self.parent[x]
            w_yx = g.out_w[y][x]
            if w_vx <= w_yx:
                continue
            self.parent[x] = v
            self.score += w_vx - w_yx
            self.rerouted += 1
            for z, w_zx in g.in_w[x].items():
                if w_zx > w_yx:
                    self.out_score[z] -= (w_zx - w_yx) - max(0.0, w_zx - w_vx)

    def solution(self):
        return SubtreeSolution(self.g.root, dict(self.parent), self.score)


def solve_insertion(g, trace=None):
    """Insertion heuristic with incremental ``in``/``out`` bookkeeping.

    ``trace``, if given, receives the inserted node ids in order.
    """
    table = _RerouteTable(g)
    used = {g.color(g.root)}
    while True:
        best_v, best_gain = None, None
        for v in range(g.n):
            inv = table.in_score[v]
            if inv is None or g.color(v) in used:
                continue
            gain = inv + table.out_score[v]
            if best_gain is None or gain > best_gain:
                best_v, best_gain = v, gain
        if best_v is None:
            break
        u, _ = table.best_parent(best_v)
        table.attach(best_v, u)
        used.add(g.color(best_v))
        if trace is not None:
            trace.append(best_v)
    return table.solution()


def critical_path_scores(g, used, order=None):
    """Best color-disjoint path score from every node.

    Returns ``(S, best_child)`` where ``S[u] = max(0, max_{uv, c(v) unused}
    S[v] + w(uv))`` and ``best_child[u]`` is the argmax (``None`` if ``S[u]``
    comes from the empty path).
    """
    if order is None:
        order = g.nodes_by_rank_desc()
    colors = g.node_colors
    S = [0.0] * g.n
    best_child = [None] * g.n
    for u in order:
        best, arg = 0.0, None
        for v, w in g.out_w[u].items():
            if colors[v] in used:
                continue
            val = S[v] + w
            if val > best:
                best, arg = val, v
        S[u] = best
        best_child[u] = arg
    return S, best_child


def _best_tree_node(tree_nodes, S):
    best_u = None
    for u in tree_nodes:
        if best_u is None or S[u] > S[best_u] or (S[u] == S[best_u] and u < best_u):
            best_u = u
    return best_u


def solve_critical_path_1(g):
    order = g.nodes_by_rank_desc()
    used = {g.color(g.root)}
    parent, score = {}, 0.0
    tree = [g.root]
    while True:
        S, child = critical_path_scores(g, used, order)
        u = _best_tree_node(tree, S)
        if S[u] <= 0:
            break
        while child[u] is not None:
            v = child[u]
            parent[v] = u
            score += g.out_w[u][v]
            used.add(g.color(v))
            tree.append(v)
            u = v
    return SubtreeSolution(g.root, parent, score)


def solve_critical_path_2(g):
    order = g.nodes_by_rank_desc()
    used = {g.color(g.root)}
    parent, score = {}, 0.0
    tree = [g.root]
    while True:
        S, child = critical_path_scores(g, used, order)
        u = _best_tree_node(tree, S)
        if S[u] <= 0:
            break
        v = child[u]
        parent[v] = u
        score += g.out_w[u][v]
        used.add(g.color(v))
        tree.append(v)
    return SubtreeSolution(g.root, parent, score)


def solve_critical_path_3(g):
    """Pick the edge ``uv`` maximizing insertion gain of ``v`` under ``u`` plus ``S[v]``."""
    order = g.nodes_by_rank_desc()
    table = _RerouteTable(g)
    used = {g.color(g.root)}
    while True:
        S, _ = critical_path_scores(g, used, order)
        best = None
        for u in table.tree:
            for v, w in g.out_w[u].items():
                if g.color(v) in used:
                    continue
                val = w + table.out_score[v] + S[v]
                if (best is None or val > best[0]
                        or (val == best[0] and (v, u) < (best[1], best[2]))):
                    best = (val, v, u)
        if best is None or best[0] <= 0:
            break
        _, v, u = best
        table.attach(v, u)
        used.add(g.color(v))
    return table.solution()


HEURISTICS = {
    "kruskal": solve_kruskal,
    "prim": solve_prim,
    "insertion": solve_insertion,
    "topdown": solve_topdown,
    "cp1": solve_critical_path_1,
    "cp2": solve_critical_path_2,
    "cp3": solve_critical_path_3,
}

# heuristics evaluated with RDS postprocessing; critical path variants without
WITH_RDS = frozenset({"kruskal", "prim", "insertion", "topdown"})


def run_heuristic(name, g, rds=None):
    t = HEURISTICS[name](g)
    if rds is None:
        rds = name in WITH_RDS
    if rds:
        t = remove_dangling_subtrees(g, t)
    return t


def solve_maximum(g):
    """Best tree over all seven heuristics and the per-heuristic score table."""
    scores = {}
    best_name, best_tree = None, None
    for name in HEURISTICS:
        t = run_heuristic(name, g)
        scores[name] = t.score
        if best_tree is None or t.score > best_tree.score:
            best_name, best_tree = name, t
    scores["max"] = best_tree.score
    return best_tree, scores
