"""Exact solver (dynamic programming over color subsets) and LP export."""

from __future__ import annotations

from .graph import SubtreeSolution, reachable_from

DEFAULT_MAX_COLORS = 22


class CapacityError(RuntimeError):
    """Instance has more colors than the exact solver accepts."""


def solve_exact_dp(g, max_colors=DEFAULT_MAX_COLORS):
    """Maximum colorful subtree rooted at ``g.root``.

    ``table[v][T]`` is the best weight of a colorful tree rooted at ``v`` whose
    colors other than ``c(v)`` are exactly the bit set ``T``.  Color bits are
    color ranks, so on order-preserving instances a node only ever sees bits
    above its own rank.
    """
    if g.k > max_colors:
        raise CapacityError(f"instance has {g.k} colors, exact solver capacity is {max_colors}")
    alive = reachable_from(g, g.root)
    bit = [1 << g.rank(v) for v in range(g.n)]
    below = [0] * g.n
    table = [None] * g.n
    back = [None] * g.n

    for v in _children_first(g, alive):
        mask = 0
        for u in g.succ[v]:
            mask |= bit[u] | below[u]
        mask &= ~bit[v]
        below[v] = mask
        best = {0: 0.0}
        arg = {}
        kids = [(u, w, bit[u], table[u]) for u, w in g.out_w[v].items()]
        T = (0 - mask) & mask
        while T:
            val, how = None, None
            for u, w, bu, tu in kids:
                if T & bu:
                    sub = tu.get(T ^ bu)
                    if sub is not None and (val is None or w + sub > val):
                        val, how = w + sub, (u,)
            low = T & -T
            rest = T ^ low
            # T1 = low | s for every proper submask s of rest
            s = rest
            while s:
                s = (s - 1) & rest
                a = best.get(low | s)
                if a is None:
                    continue
                b = best.get(rest ^ s)
                if b is not None and (val is None or a + b > val):
                    val, how = a + b, (None, low | s)
            if val is not None:
                best[T] = val
                arg[T] = how
            T = (T - mask) & mask
        table[v] = best
        back[v] = arg

    root_table = table[g.root]
    best_T, best_val = 0, 0.0
    for T in sorted(root_table):
        if root_table[T] > best_val:
            best_T, best_val = T, root_table[T]
    parent = {}
    _backtrace(g, back, bit, g.root, best_T, parent)
    return SubtreeSolution(g.root, parent, best_val)


def _children_first(g, alive):
    return [v for v in g.nodes_by_rank_desc() if alive[v]]


def _backtrace(g, back, bit, v, T, parent):
    stack = [(v, T)]
    while stack:
        v, T = stack.pop()
        if not T:
            continue
        how = back[v][T]
        if how[0] is None:
            T1 = how[1]
            stack.append((v, T1))
            stack.append((v, T ^ T1))
        else:
            u = how[0]
            parent[u] = v
            stack.append((u, T ^ bit[u]))


def lp_model(g):
    """Build the ILP as ``(objective, constraints, binaries)``.

    Constraints are ``(name, [(coef, var)], rhs)`` meaning ``sum <= rhs``.
    """
    var = {(u, v): f"x_{u}_{v}" for u, v, _ in g.edges()}
    objective = [(w, var[u, v]) for u, v, w in g.edges()]
    constraints = []
    for v in range(g.n):
        if v != g.root and g.pred[v]:
            constraints.append((f"in_{v}", [(1.0, var[u, v]) for u in g.pred[v]], 1.0))
    for v in range(g.n):
        if v == g.root:
            continue
        incoming = [(-1.0, var[u, v]) for u in g.pred[v]]
        for x in g.succ[v]:
            constraints.append((f"conn_{v}_{x}", [(1.0, var[v, x])] + incoming, 0.0))
    by_color = {}
    for v in range(g.n):
        if v != g.root and g.pred[v]:
            by_color.setdefault(g.color(v), []).append(v)
    for c in sorted(by_color):
        terms = [(1.0, var[u, v]) for v in by_color[c] for u in g.pred[v]]
        constraints.append((f"color_{c}", terms, 1.0))
    return objective, constraints, [var[u, v] for u, v, _ in g.edges()]


def _linear(terms):
    parts = []
    for coef, name in terms:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {abs(coef)!r} {name}")
    text = " ".join(parts) if parts else "0"
    return text[2:] if text.startswith("+ ") else text


def export_lp(g, sink):
    """Write the ILP in CPLEX LP format to the text stream ``sink``."""
    objective, constraints, binaries = lp_model(g)
    sink.write(f"\\ maximum colorful subtree, n={g.n} m={g.m} k={g.k} root={g.root}\n")
    sink.write("Maximize\n")
    sink.write(f" obj: {_linear(objective)}\n")
    sink.write("Subject To\n")
    for name, terms, rhs in constraints:
        sink.write(f" {name}: {_linear(terms)} <= {rhs!r}\n")
    sink.write("Binary\n")
    for name in binaries:
        sink.write(f" {name}\n")
    sink.write("End\n")
