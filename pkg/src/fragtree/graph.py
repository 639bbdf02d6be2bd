"""Colored DAG data model, validation and tree utilities.

Nodes are dense integers ``0..n-1``.  Colors are dense integers ``0..k-1``
with a separate rank that defines the total order used for
order-preserving colorings (edges must go from lower to higher rank).
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator

ACYCLIC = "acyclic"
UNIQUE_SOURCE = "unique_source"
TRANSITIVE = "transitive"
ORDER_PRESERVING = "order_preserving"
ALL_CHECKS = frozenset({ACYCLIC, UNIQUE_SOURCE, TRANSITIVE, ORDER_PRESERVING})

SCORE_TOL = 1e-9


class GraphError(ValueError):
    """Structural problem: dangling ids, self-loops, non-finite weights."""


class InvalidSolution(ValueError):
    pass


@dataclass(frozen=True)
class ColorId:
    index: int
    rank: int


@dataclass(frozen=True)
class Violation:
    kind: str
    nodes: tuple
    message: str = ""

    def __str__(self):
        return f"{self.kind}: {self.message or self.nodes}"


class ColoredDag:
    """Rooted, edge-weighted, node-colored directed graph.

    Duplicate ``(u, v)`` insertions keep the maximum weight.  Instances are
    treated as immutable once built.
    """

    def __init__(self, node_colors, edges, root=0, color_ranks=None,
                 labels=None, color_labels=None):
        node_colors = [int(c) for c in node_colors]
        n = len(node_colors)
        if n == 0:
            raise GraphError("graph needs at least one node")
        if not 0 <= root < n:
            raise GraphError(f"root {root} is not a node id")
        k = max(node_colors) + 1
        if color_ranks is None:
            color_ranks = list(range(k))
        color_ranks = [int(r) for r in color_ranks]
        k = len(color_ranks)
        if sorted(color_ranks) != list(range(k)):
            raise GraphError("color ranks must be a permutation of 0..k-1")
        for v, c in enumerate(node_colors):
            if not 0 <= c < k:
                raise GraphError(f"node {v} has undeclared color {c}")

        out_w = [dict() for _ in range(n)]
        in_w = [dict() for _ in range(n)]
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) references a missing node")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not math.isfinite(w):
                raise GraphError(f"edge ({u}, {v}) has non-finite weight {w}")
            old = out_w[u].get(v)
            if old is None or w > old:
                out_w[u][v] = w
                in_w[v][u] = w

        self.n = n
        self.root = root
        self.node_colors = tuple(node_colors)
        self.color_ranks = tuple(color_ranks)
        self.k = k
        self.labels = tuple(labels) if labels is not None else tuple(str(v) for v in range(n))
        if len(self.labels) != n:
            raise GraphError("one label per node required")
        self.color_labels = tuple(color_labels) if color_labels is not None else None
        self.out_w = tuple({v: ws[v] for v in sorted(ws)} for ws in out_w)
        self.in_w = tuple({u: ws[u] for u in sorted(ws)} for ws in in_w)
        self.succ = tuple(tuple(ws) for ws in self.out_w)
        self.pred = tuple(tuple(ws) for ws in self.in_w)
        self.m = sum(len(ws) for ws in out_w)

    def __repr__(self):
        return f"ColoredDag(n={self.n}, m={self.m}, k={self.k}, root={self.root})"

    def color(self, v):
        return self.node_colors[v]

    def rank(self, v):
        """Rank of the color of node ``v``."""
        return self.color_ranks[self.node_colors[v]]

    def weight(self, u, v):
        """Edge weight, or ``None`` when ``uv`` is not an edge."""
        return self.out_w[u].get(v)

    def has_edge(self, u, v):
        return v in self.out_w[u]

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for u in range(self.n):
            for v, w in self.out_w[u].items():
                yield u, v, w

    def colors(self):
        return [ColorId(c, r) for c, r in enumerate(self.color_ranks)]

    def nodes_by_rank_desc(self):
        """Node ids sorted by decreasing color rank, then by id."""
        return sorted(range(self.n), key=lambda v: (-self.rank(v), v))

    def with_root(self, root):
        return ColoredDag(self.node_colors, self.edges(), root, self.color_ranks,
                          self.labels, self.color_labels)

    # -- serialization --------------------------------------------------

    def to_dict(self):
        colors = []
        for c, r in enumerate(self.color_ranks):
            entry = {"id": c, "rank": r}
            if self.color_labels is not None:
                entry["label"] = self.color_labels[c]
            colors.append(entry)
        return {
            "root": self.root,
            "colors": colors,
            "nodes": [{"id": v, "color": self.node_colors[v], "label": self.labels[v]}
                      for v in range(self.n)],
            "edges": [{"from": u, "to": v, "w": w} for u, v, w in self.edges()],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            colors = sorted(data["colors"], key=lambda c: int(c["id"]))
            nodes = sorted(data["nodes"], key=lambda x: int(x["id"]))
            if [int(c["id"]) for c in colors] != list(range(len(colors))):
                raise GraphError("color ids must be dense 0..k-1")
            if [int(x["id"]) for x in nodes] != list(range(len(nodes))):
                raise GraphError("node ids must be dense 0..n-1")
            ranks = [int(c["rank"]) for c in colors]
            color_labels = None
            if colors and all("label" in c for c in colors):
                color_labels = [str(c["label"]) for c in colors]
            edges = [(e["from"], e["to"], e["w"]) for e in data["edges"]]
            return cls([x["color"] for x in nodes], edges, int(data["root"]), ranks,
                       [str(x.get("label", x["id"])) for x in nodes], color_labels)
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph document: {exc!r}") from exc


@dataclass
class SubtreeSolution:
    """Rooted subtree given by a child -> parent map."""

    root: int
    parent: dict = field(default_factory=dict)
    score: float = 0.0

    @property
    def nodes(self):
        return [self.root] + sorted(self.parent)

    @property
    def size(self):
        return len(self.parent) + 1

    def edges(self):
        return sorted((p, v) for v, p in self.parent.items())

    def children(self):
        kids = {v: [] for v in self.nodes}
        for v, p in sorted(self.parent.items()):
            kids[p].append(v)
        return kids

    def same_tree(self, other):
        return self.root == other.root and self.parent == other.parent


# -- validation -------------------------------------------------------------

def topological_order(g):
    """Kahn order; returns ``None`` if the graph has a cycle."""
    indeg = [len(p) for p in g.pred]
    queue = deque(v for v in range(g.n) if indeg[v] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in g.succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return order if len(order) == g.n else None


def reachable_from(g, source):
    seen = [False] * g.n
    seen[source] = True
    stack = [source]
    while stack:
        u = stack.pop()
        for v in g.succ[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def validate_graph(g, strict=ALL_CHECKS):
    """Check the requested properties; an empty list means all hold."""
    unknown = set(strict) - ALL_CHECKS
    if unknown:
        raise ValueError(f"unknown checks {sorted(unknown)}")
    report = []
    if ACYCLIC in strict:
        stuck = topological_order_partial(g)
        if stuck:
            report.append(Violation(ACYCLIC, tuple(stuck), "nodes on or behind a cycle"))
    if UNIQUE_SOURCE in strict:
        if g.pred[g.root]:
            report.append(Violation(UNIQUE_SOURCE, (g.root,), "root has incoming edges"))
        seen = reachable_from(g, g.root)
        missing = tuple(v for v in range(g.n) if not seen[v])
        if missing:
            report.append(Violation(UNIQUE_SOURCE, missing, f"unreachable from root: {missing}"))
    if ORDER_PRESERVING in strict:
        for u, v, _ in g.edges():
            if not g.rank(u) < g.rank(v):
                report.append(Violation(ORDER_PRESERVING, (u, v),
                                        f"edge ({u},{v}) does not increase color rank"))
    if TRANSITIVE in strict:
        for u in range(g.n):
            out_u = g.out_w[u]
            for v in g.succ[u]:
                for x in g.succ[v]:
                    if x != u and x not in out_u:
                        report.append(Violation(TRANSITIVE, (u, x),
                                                f"missing edge ({u},{x}) via {v}"))
    # duplicate findings for the same pair collapse to one
    unique, seen = [], set()
    for item in report:
        key = (item.kind, item.nodes)
        if key not in seen:
            seen.add(key)
            unique.append(item)
    return unique


def topological_order_partial(g):
    indeg = [len(p) for p in g.pred]
    queue = deque(v for v in range(g.n) if indeg[v] == 0)
    done = set()
    while queue:
        u = queue.popleft()
        done.add(u)
        for v in g.succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return [v for v in range(g.n) if v not in done]


def transitive_closure(g, weight_rule: Callable[[int, int], float]):
    """Add every missing edge ``uv`` with ``v`` reachable from ``u``."""
    order = topological_order(g)
    if order is None:
        raise GraphError("transitive closure needs an acyclic graph")
    reach = [set() for _ in range(g.n)]
    for u in reversed(order):
        r = reach[u]
        for v in g.succ[u]:
            r.add(v)
            r |= reach[v]
    edges = list(g.edges())
    for u in range(g.n):
        for v in sorted(reach[u]):
            if v not in g.out_w[u]:
                edges.append((u, v, weight_rule(u, v)))
    return ColoredDag(g.node_colors, edges, g.root, g.color_ranks, g.labels, g.color_labels)


def attach_superroot(g, desired_root, bonus):
    """New root of a fresh, lowest-ranked color with one edge to ``desired_root``."""
    if not 0 <= desired_root < g.n:
        raise GraphError(f"node {desired_root} does not exist")
    star = g.n
    fresh = g.k
    colors = list(g.node_colors) + [fresh]
    ranks = [r + 1 for r in g.color_ranks] + [0]
    edges = list(g.edges()) + [(star, desired_root, bonus)]
    labels = list(g.labels) + ["*"]
    color_labels = None
    if g.color_labels is not None:
        color_labels = list(g.color_labels) + ["*"]
    return ColoredDag(colors, edges, star, ranks, labels, color_labels)


def tree_score(g, t):
    total = 0.0
    for v, p in t.parent.items():
        w = g.weight(p, v)
        if w is None:
            raise InvalidSolution(f"tree edge ({p},{v}) is not in the graph")
        total += w
    return total


def solution_problems(g, t):
    """List of human readable reasons why ``t`` is not a valid solution on ``g``."""
    problems = []
    if t.root != g.root:
        problems.append(f"tree root {t.root} != graph root {g.root}")
    if t.root in t.parent:
        problems.append("root has a parent")
    nodes = set(t.parent) | {t.root}
    for v, p in t.parent.items():
        if not (0 <= v < g.n and 0 <= p < g.n):
            problems.append(f"edge ({p},{v}) has unknown node ids")
            continue
        if p not in nodes:
            problems.append(f"parent {p} of {v} is not in the tree")
        if not g.has_edge(p, v):
            problems.append(f"edge ({p},{v}) is not in the graph")
    for v in t.parent:
        seen, x = set(), v
        while x in t.parent:
            if x in seen:
                problems.append(f"cycle through {v}")
                break
            seen.add(x)
            x = t.parent[x]
        else:
            if x != t.root:
                problems.append(f"node {v} does not lead back to the root")
    colors = {}
    for v in nodes:
        if 0 <= v < g.n:
            c = g.color(v)
            if c in colors:
                problems.append(f"nodes {colors[c]} and {v} share color {c}")
            colors[c] = v
    if not problems:
        actual = tree_score(g, t)
        if abs(actual - t.score) > SCORE_TOL:
            problems.append(f"score {t.score} != recomputed {actual}")
    return problems


def check_solution(g, t):
    problems = solution_problems(g, t)
    if problems:
        raise InvalidSolution("; ".join(problems))
    return t


def solution_from_parents(g, parent, root=None):
    root = g.root if root is None else root
    t = SubtreeSolution(root, dict(parent), 0.0)
    t.score = tree_score(g, t)
    return t


# -- file format --------------------------------------------------------------

def _reject_constant(token):
    raise GraphError(f"non-finite number {token} in graph file")


def loads_graph(text):
    data = json.loads(text, parse_constant=_reject_constant)
    return ColoredDag.from_dict(data)


def load_graph(path):
    with open(path) as fh:
        return loads_graph(fh.read())


def dumps_graph(g):
    return json.dumps(g.to_dict(), indent=1)


def save_graph(g, path):
    with open(path, "w") as fh:
        fh.write(dumps_graph(g))
        fh.write("\n")


def tree_document(g, t):
    """Tree as a graph document (same schema, plus ``tree`` and ``score``)."""
    keep = t.nodes
    index = {v: i for i, v in enumerate(keep)}
    used_colors = sorted({g.color(v) for v in keep}, key=lambda c: g.color_ranks[c])
    cidx = {c: i for i, c in enumerate(used_colors)}
    colors = []
    for i, c in enumerate(used_colors):
        entry = {"id": i, "rank": i}
        if g.color_labels is not None:
            entry["label"] = g.color_labels[c]
        colors.append(entry)
    return {
        "tree": True,
        "score": t.score,
        "root": index[t.root],
        "colors": colors,
        "nodes": [{"id": index[v], "color": cidx[g.color(v)], "label": g.labels[v],
                   "source_id": v} for v in keep],
        "edges": [{"from": index[p], "to": index[v], "w": g.weight(p, v)}
                  for p, v in t.edges()],
    }


def loads_tree(text):
    """Load a tree dump; returns the tree graph and the solution spanning it."""
    data = json.loads(text, parse_constant=_reject_constant)
    g = ColoredDag.from_dict(data)
    parent = {}
    for u, v, _ in g.edges():
        if v in parent:
            raise GraphError(f"node {v} has two parents in tree document")
        parent[v] = u
    t = solution_from_parents(g, parent)
    return g, t
