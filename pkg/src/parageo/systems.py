"""Quasi-regular (n,0)-systems built from a mesh sequence X_1 < X_2 < ...

Everything here is exact rational arithmetic.  A system is only known on the
finite prefix of its mesh, so evaluation is restricted to [q_1, q_last].
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .interval import HPInterval, log4
from .validation import check_mesh_values


@dataclass(frozen=True)
class MeshSequence:
    """Finite strictly increasing prefix of positive rationals.

    ``rho`` is set when the prefix was generated as a geometric sequence; it
    is then also used to extend the prefix.
    """

    values: tuple[Fraction, ...]
    rho: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "values", check_mesh_values(self.values))
        if self.rho is not None and Fraction(self.rho) <= 1:
            raise ValueError("rho must exceed 1")

    @classmethod
    def explicit(cls, values) -> "MeshSequence":
        return cls(tuple(values))

    @classmethod
    def regular(cls, x1, rho, count: int) -> "MeshSequence":
        x1, rho = Fraction(x1), Fraction(rho)
        if rho <= 1:
            raise ValueError("rho must exceed 1")
        if count < 1:
            raise ValueError("count must be positive")
        return cls(tuple(x1 * rho**k for k in range(count)), rho=rho)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Fraction:
        """1-based access, extending past the prefix when needed (see ``extended``)."""
        if i < 1:
            raise IndexError("mesh indices start at 1")
        if i <= len(self.values):
            return self.values[i - 1]
        return self.extended(i).values[i - 1]

    def extended(self, count: int) -> "MeshSequence":
        """Continue the prefix to ``count`` terms.

        Regular prefixes continue geometrically.  Explicit prefixes continue
        arithmetically with step max(last gap, 7/5); 7/5 exceeds log 4, so the
        continuation keeps any mesh bound of at least log 4.
        """
        vals = list(self.values)
        if count <= len(vals):
            return self
        if self.rho is not None:
            while len(vals) < count:
                vals.append(vals[-1] * self.rho)
        else:
            step = max(vals[-1] - vals[-2], Fraction(7, 5)) if len(vals) >= 2 else Fraction(7, 5)
            while len(vals) < count:
                vals.append(vals[-1] + step)
        return MeshSequence(tuple(vals), self.rho)


def breakpoints(mesh: MeshSequence | Sequence, n: int) -> list[Fraction]:
    """q_i = (X_i + ... + X_{i+n-1}) / n for every full window of the prefix."""
    xs = mesh.values if isinstance(mesh, MeshSequence) else tuple(Fraction(x) for x in mesh)
    if n < 2:
        raise ValueError("n must be at least 2")
    if len(xs) < n:
        raise ValueError(f"need at least n={n} mesh values, got {len(xs)}")
    return [sum(xs[i : i + n]) / n for i in range(len(xs) - n + 1)]


def phi_sort(v: Sequence) -> tuple:
    """List the coordinates in nondecreasing order (the map onto Delta_n)."""
    return tuple(sorted(v))


def mesh_gap(mesh: MeshSequence) -> Fraction:
    xs = mesh.values
    if len(xs) < 2:
        raise ValueError("mesh gap needs at least two values")
    return min(b - a for a, b in zip(xs, xs[1:]))


def has_mesh_at_least(mesh: MeshSequence, delta=None, prec: int = 128) -> Optional[bool]:
    """Three-valued test of min gap >= delta (default delta = log 4, certified)."""
    if delta is None:
        delta = log4(prec)
    gap = mesh_gap(mesh)
    if isinstance(delta, HPInterval):
        return delta.le(gap)
    return gap >= Fraction(delta)


def is_regular(mesh: MeshSequence) -> Optional[Fraction]:
    xs = mesh.values
    if len(xs) < 2:
        return None
    rho = xs[1] / xs[0]
    if all(b == rho * a for a, b in zip(xs, xs[1:])):
        return rho
    return None


@dataclass(frozen=True)
class GraphSegment:
    component_index: int
    q_start: Fraction
    y_start: Fraction
    q_end: Fraction
    y_end: Fraction
    slope: int

    def __post_init__(self):
        if self.slope * (self.q_end - self.q_start) != self.y_end - self.y_start:
            raise ValueError("segment endpoints disagree with its slope")


@dataclass(frozen=True)
class QuasiRegularSystem:
    n: int
    mesh: MeshSequence
    breakpoints: tuple[Fraction, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(breakpoints(self.mesh, self.n)))

    @classmethod
    def from_values(cls, n: int, values) -> "QuasiRegularSystem":
        return cls(n, MeshSequence.explicit(values))

    @property
    def domain(self) -> tuple[Fraction, Fraction]:
        return self.breakpoints[0], self.breakpoints[-1]

    @property
    def n_intervals(self) -> int:
        return len(self.breakpoints) - 1

    def X(self, i: int) -> Fraction:
        return self.mesh[i]

    def q(self, i: int) -> Fraction:
        """1-based breakpoint; past the prefix it follows the mesh continuation."""
        if i <= len(self.breakpoints):
            return self.breakpoints[i - 1]
        return sum(self.mesh[j] for j in range(i, i + self.n)) / self.n

    def interval_index(self, q) -> int:
        """1-based i with q_i <= q <= q_{i+1} (the last breakpoint maps to the last interval)."""
        q = Fraction(q)
        lo, hi = self.domain
        if q < lo or q > hi:
            raise ValueError(f"q={q} outside the truncated domain [{lo}, {hi}]")
        i = bisect.bisect_right(self.breakpoints, q)
        return max(1, min(i, max(self.n_intervals, 1)))

    def components_on(self, i: int, q) -> tuple[Fraction, ...]:
        """Unsorted components of interval i at q; each is linear in q."""
        q = Fraction(q)
        n = self.n
        xs = [self.mesh[j] for j in range(i, i + n)]
        first = xs[0] + n * (q - self.q(i)) - q
        return tuple([first] + [x - q for x in xs[1:]])

    def evaluate_on(self, i: int, q) -> tuple[Fraction, ...]:
        """Formula of interval i at q (no domain check beyond needing X_i..X_{i+n-1})."""
        return phi_sort(self.components_on(i, q))

    def evaluate(self, q) -> tuple[Fraction, ...]:
        return self.evaluate_on(self.interval_index(q), q)

    __call__ = evaluate

    def combined_graph(self, i_range=None) -> list[GraphSegment]:
        if i_range is None:
            i_range = range(1, self.n_intervals + 1)
        out = []
        n = self.n
        for i in i_range:
            if not 1 <= i <= self.n_intervals:
                raise IndexError(f"interval index {i} out of range 1..{self.n_intervals}")
            qa, qb = self.breakpoints[i - 1], self.breakpoints[i]
            left = self.evaluate_on(i, qa)
            right = self.evaluate_on(i, qb)
            out.append(GraphSegment(1, qa, left[0], qb, right[n - 1], n - 1))
            for j in range(1, n):
                out.append(GraphSegment(j + 1, qa, left[j], qb, right[j - 1], -1))
        return out
