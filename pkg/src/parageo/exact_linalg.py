"""Exact exterior algebra over the integers.

Vectors are plain tuples of Python ints (or Fractions where noted).  Wedge
products, determinants and cross products are computed exactly; only norms
and distances, which involve square roots, come back as ``HPInterval``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import combinations
from typing import Optional, Sequence

from .interval import DEFAULT_PRECISION, HPInterval, sqrt_rational

IntVector = tuple[int, ...]


def as_int_vector(v) -> IntVector:
    out = []
    for c in v:
        if isinstance(c, bool) or not isinstance(c, int):
            if isinstance(c, Fraction) and c.denominator == 1:
                c = c.numerator
            elif hasattr(c, "__index__"):
                c = c.__index__()
            else:
                raise TypeError(f"non-integer coordinate {c!r}")
        out.append(int(c))
    return tuple(out)


def dot(x: Sequence, y: Sequence):
    if len(x) != len(y):
        raise ValueError("dimension mismatch")
    return sum(a * b for a, b in zip(x, y))


def norm_sq(x: Sequence):
    return sum(a * a for a in x)


def norm(x: Sequence, prec: int = DEFAULT_PRECISION) -> HPInterval:
    return sqrt_rational(norm_sq(x), prec)


def _check_same_dim(vs: Sequence[Sequence]) -> int:
    if not vs:
        raise ValueError("need at least one vector")
    n = len(vs[0])
    if any(len(v) != n for v in vs):
        raise ValueError("dimension mismatch")
    return n


def det(rows: Sequence[Sequence]):
    """Exact determinant of a square matrix by fraction-free (Bareiss) elimination.

    Works for integer entries (result is an int) and for Fractions.
    """
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix is not square")
    if n == 0:
        return 1
    m = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * pivot - m[i][k] * m[k][j]
                m[i][j] = num / prev if isinstance(num, Fraction) else num // prev
            m[i][k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def det_sign(vs: Sequence[Sequence[int]]) -> int:
    """Exact determinant of n integer vectors of dimension n (0 means dependent)."""
    vs = [as_int_vector(v) for v in vs]
    return det(vs)


@dataclass(frozen=True)
class Multivector:
    """Element of the k-th exterior power of R^n in the standard basis.

    Coordinates are indexed by strictly increasing index tuples in
    lexicographic order.
    """

    dim: int
    grade: int
    coords: tuple

    @property
    def indices(self) -> list[tuple[int, ...]]:
        return list(combinations(range(self.dim), self.grade))

    @property
    def norm_sq(self):
        return norm_sq(self.coords)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def content(self) -> int:
        """gcd of the (integer) coordinates."""
        return reduce(math.gcd, (abs(int(c)) for c in self.coords), 0)

    def as_dict(self) -> dict:
        return dict(zip(self.indices, self.coords))


def wedge(vs: Sequence[Sequence]) -> Multivector:
    """Wedge product x1 ^ ... ^ xk, coordinates are the k x k minors."""
    n = _check_same_dim(vs)
    k = len(vs)
    if k > n:
        raise ValueError(f"cannot wedge {k} vectors in dimension {n}")
    coords = tuple(
        det([[v[j] for j in cols] for v in vs]) for cols in combinations(range(n), k)
    )
    return Multivector(n, k, coords)


def generalized_cross(vs: Sequence[Sequence]) -> tuple:
    """Vector w with x . w = det(x, v1, ..., v_{n-1}) for every x."""
    n = _check_same_dim(vs)
    if len(vs) != n - 1:
        raise ValueError(f"need {n - 1} vectors in dimension {n}, got {len(vs)}")
    out = []
    for j in range(n):
        minor = [[v[c] for c in range(n) if c != j] for v in vs]
        out.append((-1) ** j * det(minor))
    return tuple(out)


def proj_dist(x: Sequence, y: Sequence, prec: int = DEFAULT_PRECISION) -> HPInterval:
    """Projective distance ||x ^ y|| / (||x|| ||y||), the sine of the angle."""
    nx, ny = norm_sq(x), norm_sq(y)
    if nx == 0 or ny == 0:
        raise ValueError("projective distance needs nonzero vectors")
    return sqrt_rational(Fraction(wedge([x, y]).norm_sq, nx * ny), prec)


def dist_to_subspace_sq(x: Sequence, basis: Sequence[Sequence]) -> Fraction:
    """Exact squared distance of x to span(basis); x may have Fraction entries."""
    if len(x) != _check_same_dim(basis):
        raise ValueError("dimension mismatch")
    nx = norm_sq(x)
    if nx == 0:
        raise ValueError("distance needs a nonzero vector")
    den = wedge(basis).norm_sq
    if den == 0:
        raise ValueError("degenerate subspace basis")
    return Fraction(wedge([x, *basis]).norm_sq) / (nx * den)


def dist_to_subspace(x: Sequence, U, prec: int = DEFAULT_PRECISION) -> HPInterval:
    basis = U.basis if isinstance(U, Subspace) else U
    return sqrt_rational(dist_to_subspace_sq(x, basis), prec)


@dataclass(frozen=True)
class Subspace:
    """Span of linearly independent integer vectors, with its cached wedge."""

    basis: tuple[IntVector, ...]
    wedge: Multivector = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        basis = tuple(as_int_vector(v) for v in self.basis)
        n = _check_same_dim(basis)
        if len(basis) >= n:
            raise ValueError("a subspace needs fewer basis vectors than the dimension")
        w = wedge(basis)
        if w.is_zero():
            raise ValueError("basis vectors are linearly dependent")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "wedge", w)

    @property
    def dim(self) -> int:
        return len(self.basis[0])

    @property
    def is_primitive(self) -> bool:
        return self.wedge.content() == 1

    @property
    def height_sq(self) -> int:
        """H(U)^2; exact even for a non-primitive basis (divides out the index)."""
        g = self.wedge.content()
        return self.wedge.norm_sq // (g * g)


def is_almost_orthogonal(vs: Sequence[Sequence], prec: int = DEFAULT_PRECISION):
    """Whether each vector is at distance >= 1/2 from the span of its predecessors.

    Returns ``(flag, distances)``.  The threshold test is decided on the exact
    squared distances, so it never comes back undecided; the distances are
    reported as enclosures.
    """
    _check_same_dim(vs)
    if wedge(vs).is_zero():
        return False, []
    flag = True
    dists = []
    for j in range(1, len(vs)):
        d2 = dist_to_subspace_sq(vs[j], vs[:j])
        dists.append(sqrt_rational(d2, prec))
        if 4 * d2 < 1:
            flag = False
    return flag, dists


def is_primitive_tuple(vs: Sequence[Sequence]) -> bool:
    n = _check_same_dim(vs)
    if not 1 <= len(vs) <= n:
        raise ValueError("a primitive tuple has between 1 and n vectors")
    w = wedge([as_int_vector(v) for v in vs])
    if w.is_zero():
        raise ValueError("vectors are linearly dependent")
    return w.content() == 1


@dataclass(frozen=True)
class Height:
    value: HPInterval
    height_sq: int
    primitive: bool


def height(U, prec: int = DEFAULT_PRECISION) -> Height:
    if not isinstance(U, Subspace):
        U = Subspace(tuple(U))
    return Height(sqrt_rational(U.height_sq, prec), U.height_sq, U.is_primitive)


def unimodular_extension(w: Sequence[int]) -> tuple[list[IntVector], IntVector]:
    """Column-style Hermite reduction of a primitive row vector.

    Returns ``(columns, z)`` where the columns form a unimodular matrix M with
    ``w M = (1, 0, ..., 0)``; ``z`` is the first column (so ``z . w = 1``) and
    the remaining columns are a basis of the integer points orthogonal to w.
    """
    w = list(as_int_vector(w))
    n = len(w)
    cols = [[int(i == j) for i in range(n)] for j in range(n)]
    row = w[:]
    # Euclid on the row by column operations, pivot into position 0.
    while True:
        nz = [j for j in range(n) if row[j] != 0]
        if not nz:
            raise ValueError("zero vector has no unimodular extension")
        p = min(nz, key=lambda j: abs(row[j]))
        done = True
        for j in nz:
            if j == p:
                continue
            q = row[j] // row[p]
            if q:
                row[j] -= q * row[p]
                cols[j] = [a - q * b for a, b in zip(cols[j], cols[p])]
            if row[j] != 0:
                done = False
        if done:
            break
    if p != 0:
        row[0], row[p] = row[p], row[0]
        cols[0], cols[p] = cols[p], cols[0]
    if abs(row[0]) != 1:
        raise ValueError("vector is not primitive")
    if row[0] < 0:
        cols[0] = [-a for a in cols[0]]
    return [tuple(c) for c in cols], tuple(cols[0])


def hyperplane_point(w: Sequence[int]) -> IntVector:
    """Integer z with z . w = 1 for a primitive integer vector w."""
    return unimodular_extension(w)[1]


def _gram(basis: Sequence[Sequence]) -> list[list]:
    return [[dot(a, b) for b in basis] for a in basis]


def _solve_exact(a: list[list], b: list) -> list[Fraction]:
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(y)] for row, y in zip(a, b)]
    for k in range(n):
        piv = next((r for r in range(k, n) if m[r][k] != 0), None)
        if piv is None:
            raise ValueError("singular system")
        m[k], m[piv] = m[piv], m[k]
        for r in range(n):
            if r != k and m[r][k] != 0:
                f = m[r][k] / m[k][k]
                m[r] = [x - f * y for x, y in zip(m[r], m[k])]
    return [m[k][n] / m[k][k] for k in range(n)]


def solve_in_basis(target: Sequence, basis: Sequence[Sequence], tol=None) -> list:
    """Coefficients c with target = sum c_i basis_i.

    Exact (Fractions) for rational targets, in which case a nonzero residual
    raises.  For ``HPInterval`` targets the coefficients are intervals and the
    residual must contain 0 or stay below ``tol`` componentwise.
    """
    n = _check_same_dim(basis)
    if len(target) != n:
        raise ValueError("dimension mismatch")
    if wedge(basis).is_zero():
        raise ValueError("basis vectors are linearly dependent")
    g = _gram(basis)
    if not any(isinstance(t, HPInterval) for t in target):
        c = _solve_exact(g, [dot(v, target) for v in basis])
        residual = [t - sum(ci * v[j] for ci, v in zip(c, basis)) for j, t in enumerate(target)]
        if any(residual):
            raise ValueError("target is not in the span of the basis")
        return c
    # Interval target: apply the exact inverse Gram matrix column by column.
    k = len(basis)
    inv_cols = [_solve_exact(g, [int(i == j) for i in range(k)]) for j in range(k)]
    proj = [sum((v[j] * target[j] for j in range(n)), 0) for v in basis]
    c = [sum((inv_cols[j][i] * proj[j] for j in range(k)), 0) for i in range(k)]
    for j in range(n):
        r = target[j] - sum((ci * v[j] for ci, v in zip(c, basis)), 0)
        ok = r.contains(0) if isinstance(r, HPInterval) else r == 0
        if not ok and (tol is None or abs(r).gt(tol) is not False):
            raise ValueError("target is not in the span of the basis")
    return c


def orthogonal_component(x: Sequence, basis: Sequence[Sequence]) -> tuple[tuple[Fraction, ...], list[Fraction]]:
    """Exact Gram-Schmidt residual of x against span(basis).

    Returns ``(r, mu)`` with ``r = x - sum mu_j basis_j`` orthogonal to the span.
    """
    if not basis:
        return tuple(Fraction(c) for c in x), []
    mu = _solve_exact(_gram(basis), [dot(v, x) for v in basis])
    r = tuple(Fraction(x[j]) - sum(m * v[j] for m, v in zip(mu, basis)) for j in range(len(x)))
    return r, mu
