"""CHNOPS molecular formulas and mass decomposition."""

from __future__ import annotations

import re
from dataclasses import dataclass

ELEMENTS = ("C", "H", "N", "O", "P", "S")

# monoisotopic masses (Da), standard tables
DEFAULT_MASSES = {
    "H": 1.007825,
    "C": 12.000000,
    "N": 14.003074,
    "O": 15.994915,
    "P": 30.973762,
    "S": 31.972071,
}

DEFAULT_BOUNDS = {"C": 60, "H": 120, "N": 10, "O": 20, "P": 3, "S": 3}

# element-to-carbon ratio ranges a plausible small molecule stays within
DEFAULT_RATIO_LIMITS = {
    "H": (0.2, 3.1),
    "N": (0.0, 1.3),
    "O": (0.0, 1.2),
    "P": (0.0, 0.3),
    "S": (0.0, 0.8),
}

_TOKEN = re.compile(r"([A-Z][a-z]?)(\d*)")


@dataclass(frozen=True)
class Formula:
    """Element counts in the fixed order C, H, N, O, P, S."""

    counts: tuple = (0, 0, 0, 0, 0, 0)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(ELEMENTS)
        if unknown:
            raise ValueError(f"unsupported elements {sorted(unknown)}")
        counts = tuple(int(d.get(e, 0)) for e in ELEMENTS)
        if min(counts) < 0:
            raise ValueError("element counts must be nonnegative")
        return cls(counts)

    @classmethod
    def parse(cls, text):
        text = text.strip()
        pos, d = 0, {}
        for m in _TOKEN.finditer(text):
            if m.start() != pos:
                break
            el, num = m.group(1), m.group(2)
            d[el] = d.get(el, 0) + (int(num) if num else 1)
            pos = m.end()
        if pos != len(text):
            raise ValueError(f"cannot parse formula {text!r}")
        return cls.from_dict(d)

    def as_dict(self):
        return {e: c for e, c in zip(ELEMENTS, self.counts) if c}

    def mass(self, masses=DEFAULT_MASSES):
        return sum(c * masses[e] for e, c in zip(ELEMENTS, self.counts))

    @property
    def atoms(self):
        return sum(self.counts)

    @property
    def rdbe(self):
        """Rings plus double bonds, with N and P counted trivalent."""
        c, h, n, _, p, _ = self.counts
        return c - h / 2 + (n + p) / 2 + 1

    def is_empty(self):
        return not any(self.counts)

    def is_subformula(self, other):
        return all(a <= b for a, b in zip(self.counts, other.counts))

    def is_proper_subformula(self, other):
        return self.counts != other.counts and self.is_subformula(other)

    def __sub__(self, other):
        diff = tuple(a - b for a, b in zip(self.counts, other.counts))
        if min(diff) < 0:
            raise ValueError(f"{other} is not a subformula of {self}")
        return Formula(diff)

    def __add__(self, other):
        return Formula(tuple(a + b for a, b in zip(self.counts, other.counts)))

    def __str__(self):
        # C and H first, then the rest alphabetically
        parts = []
        for e, c in zip(ELEMENTS, self.counts):
            if c:
                parts.append(e if c == 1 else f"{e}{c}")
        return "".join(parts) if parts else "-"

    def __repr__(self):
        return f"Formula({str(self)!r})"


MASS_SLACK = 1e-9


def within_ratios(formula, limits=DEFAULT_RATIO_LIMITS):
    """True if every element-to-carbon ratio lies in its range; carbon-free fails."""
    c = formula.counts[0]
    if c == 0:
        return False
    d = formula.as_dict()
    return all(lo <= d.get(e, 0) / c <= hi for e, (lo, hi) in limits.items())


def ppm_error(measured, theoretical):
    return (measured - theoretical) / theoretical * 1e6


def decompose_mass(mass, tolerance_ppm, bounds=None, masses=DEFAULT_MASSES):
    """All formulas within ``bounds`` whose mass lies in the ppm window.

    Result is sorted by absolute mass error, then by formula string.  The
    window is widened by ``MASS_SLACK`` Da to absorb float summation order.
    """
    if tolerance_ppm < 0:
        raise ValueError("tolerance must be nonnegative")
    if mass <= 0:
        return []
    if bounds is None:
        bounds = DEFAULT_BOUNDS
    if isinstance(bounds, Formula):
        bounds = bounds.as_dict()
    tol = mass * tolerance_ppm * 1e-6 + MASS_SLACK
    lo, hi = mass - tol, mass + tol
    # heaviest element first; hydrogen, the lightest, is solved for last
    order = sorted(ELEMENTS, key=lambda e: -masses[e])
    el_mass = [masses[e] for e in order]
    el_max = [int(bounds.get(e, 0)) for e in order]
    # max_rest[i]: heaviest mass reachable with elements i..end
    max_rest = [0.0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        max_rest[i] = max_rest[i + 1] + el_mass[i] * el_max[i]
    index = {e: ELEMENTS.index(e) for e in order}
    found = []
    counts = [0] * len(order)

    def rec(i, acc):
        if i == len(order) - 1:
            m = el_mass[i]
            first = max(0, -int(-(lo - acc) // m))
            last = min(el_max[i], int((hi - acc) // m))
            for c in range(first, last + 1):
                total = acc + c * m
                if lo <= total <= hi:
                    counts[i] = c
                    found.append(tuple(counts))
            counts[i] = 0
            return
        m = el_mass[i]
        top = min(el_max[i], int((hi - acc) // m))
        for c in range(top + 1):
            here = acc + c * m
            if here + max_rest[i + 1] < lo:
                continue
            counts[i] = c
            rec(i + 1, here)
        counts[i] = 0

    rec(0, 0.0)
    out = []
    for cs in found:
        full = [0] * len(ELEMENTS)
        for e, c in zip(order, cs):
            full[index[e]] = c
        f = Formula(tuple(full))
        if not f.is_empty():
            out.append(f)
    out.sort(key=lambda f: (abs(f.mass(masses) - mass), str(f)))
    return out
