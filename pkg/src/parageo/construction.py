"""Recursive construction of integer points whose trajectories follow a system.

``initial_tuple`` builds the starting almost orthogonal primitive tuple,
``next_point`` performs one recursive step, and ``run`` drives the recursion
from a growth sequence A_1, A_2, ... with A_1 >= 1 and A_{i+1} >= 4 A_i.
The limit direction u is never materialized; it is represented by an exact
integer normal together with a certified bound on its projective distance
to u.

Precision convention: ``precision_bits`` is a number of guard bits.  The
working precision of a step is that many bits on top of the binary
magnitude of the quantities being rounded, so huge A_i = exp(X_i) do not eat
into the guard.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .exact_linalg import (
    IntVector,
    as_int_vector,
    det,
    dot,
    generalized_cross,
    hyperplane_point,
    is_almost_orthogonal,
    is_primitive_tuple,
    norm_sq,
    orthogonal_component,
    solve_in_basis,
    wedge,
)
from .interval import (
    DEFAULT_PRECISION,
    HPInterval,
    Indeterminate,
    log2,
    log_rational,
    max_precision,
    sqrt_rational,
)
from .systems import MeshSequence
from .validation import to_fraction

log = logging.getLogger(__name__)

_INV_LN2_UPPER = Fraction(14427, 10000)


class ConstructionError(RuntimeError):
    """A step failed its postconditions or ran out of precision."""


class NeedMoreStages(ValueError):
    """The construction is too short for the requested direction accuracy."""


def _frac_bits(q) -> int:
    q = abs(Fraction(q))
    return (q.numerator // q.denominator + 1).bit_length()


@dataclass(frozen=True)
class Growth:
    """A growth parameter A: an exact rational, or exp of an exact rational."""

    value: Fraction
    is_log: bool = False

    def interval(self, prec: int) -> HPInterval:
        x = HPInterval(self.value, prec=prec)
        return x.exp() if self.is_log else x

    def log_interval(self, prec: int) -> HPInterval:
        if self.is_log:
            return HPInterval(self.value, prec=prec)
        return log_rational(self.value, prec)

    def magnitude_bits(self) -> int:
        """An upper bound on log2(A), rounded up, plus slack."""
        if self.is_log:
            return max(0, math.ceil(self.value * _INV_LN2_UPPER)) + 2
        return _frac_bits(self.value) + 1

    def working_prec(self, guard: int) -> int:
        return guard + self.magnitude_bits()


def as_growth(A) -> Growth:
    if isinstance(A, Growth):
        return A
    return Growth(to_fraction(A))


@dataclass(frozen=True)
class GrowthSequence:
    """A_1, A_2, ... either as exp(X_i) of a mesh or as explicit rationals.

    Past the stored prefix, mesh-derived sequences follow the mesh
    continuation and explicit ones continue with A_{i+1} = 4 A_i.
    """

    mesh: Optional[MeshSequence] = None
    values: tuple[Fraction, ...] = ()

    @classmethod
    def from_mesh(cls, mesh: MeshSequence) -> "GrowthSequence":
        return cls(mesh=mesh)

    @classmethod
    def from_values(cls, values) -> "GrowthSequence":
        vals = tuple(to_fraction(v) for v in values)
        if not vals:
            raise ValueError("empty growth sequence")
        return cls(values=vals)

    def __getitem__(self, i: int) -> Growth:
        if i < 1:
            raise IndexError("growth indices start at 1")
        if self.mesh is not None:
            return Growth(self.mesh[i], is_log=True)
        if i <= len(self.values):
            return Growth(self.values[i - 1])
        return Growth(self.values[-1] * 4 ** (i - len(self.values)))

    def log_value(self, i: int, prec: int) -> HPInterval:
        return self[i].log_interval(prec)

    def check(self, count: int, prec: int = DEFAULT_PRECISION) -> None:
        """Certify A_1 >= 1 and A_{i+1} >= 4 A_i for i < count; raise otherwise."""
        if self.mesh is not None:
            if self.mesh[1] < 0:
                raise ValueError("A_1 = exp(X_1) < 1")
            cap = max_precision()
            for i in range(1, count):
                gap = self.mesh[i + 1] - self.mesh[i]
                bits = prec
                while True:
                    ok = HPInterval(4, prec=bits).log().le(gap)
                    if ok is not None:
                        break
                    if bits >= cap:
                        raise Indeterminate(f"gap X_{i + 1} - X_{i} vs log 4 undecided")
                    bits *= 2
                if not ok:
                    raise ValueError(f"A_{i + 1} < 4 A_{i}: mesh gap {gap} is below log 4")
            return
        if self[1].value < 1:
            raise ValueError("A_1 must be at least 1")
        for i in range(1, count):
            if self[i + 1].value < 4 * self[i].value:
                raise ValueError(f"A_{i + 1} < 4 A_{i}")


def _ceil_growth(A: Growth, guard: int) -> int:
    if not A.is_log:
        return math.ceil(A.value)
    cap = max_precision()
    while True:
        iv = A.interval(A.working_prec(guard))
        lo, hi = iv.lower_fraction(), iv.upper_fraction()
        # exp of a nonzero rational is irrational, so a tight enough enclosure
        # always falls strictly between two integers
        if math.floor(lo) == math.floor(hi) and lo != math.floor(lo):
            return math.floor(lo) + 1
        if A.value == 0:
            return 1
        if guard >= cap:
            raise Indeterminate("ceiling of A is undecided at the precision cap")
        guard *= 2


def initial_tuple(n: int, A: Sequence, precision_bits: int = DEFAULT_PRECISION) -> list[IntVector]:
    """x_i = B_i e_i + e_{i+1} with B_i = ceil(A_i), i = 1..n-1."""
    if n < 2:
        raise ValueError("n must be at least 2")
    A = [as_growth(a) for a in A]
    if len(A) != n - 1:
        raise ValueError(f"need {n - 1} growth values, got {len(A)}")
    out = []
    for i, a in enumerate(A):
        b = _ceil_growth(a, precision_bits)
        if b < 2**i:
            raise ValueError(f"B_{i + 1} = {b} < 2^{i}; growth too slow for the initial tuple")
        x = [0] * n
        x[i] = b
        x[i + 1] = 1
        out.append(tuple(x))
    return out


def norm_window(x: Sequence[int], A: Growth, precision_bits: int = DEFAULT_PRECISION) -> Optional[bool]:
    """Three-valued test of A <= ||x|| <= 2A."""
    nx = norm_sq(x)
    if not A.is_log:
        a2 = A.value**2
        return a2 <= nx <= 4 * a2
    prec = precision_bits + (nx.bit_length() + 64).bit_length() + 8
    half_log = HPInterval(nx, prec=prec).log() * Fraction(1, 2) - A.value
    lo = half_log.ge(0)
    hi = half_log.le(log2(prec))
    if lo is False or hi is False:
        return False
    if lo is None or hi is None:
        return None
    return True


@dataclass(frozen=True)
class RoundingRecord:
    stage: Optional[int]
    z: IntVector
    coefficients: tuple[HPInterval, ...]
    rounded: tuple[int, ...]
    epsilons: tuple[HPInterval, ...]
    precision: int


def _round_coefficients(c: list[HPInterval]):
    """Nearest integers, or None if some coefficient straddles a half-integer."""
    out = []
    for ci in c:
        lo, hi = ci.lower_fraction(), ci.upper_fraction()
        k_lo, k_hi = math.floor(lo + Fraction(1, 2)), math.floor(hi + Fraction(1, 2))
        if k_lo != k_hi:
            return None
        out.append(k_lo)
    return out


def next_point(
    window: Sequence[Sequence[int]],
    A,
    normal: Optional[Sequence[int]] = None,
    precision_bits: int = DEFAULT_PRECISION,
    stage: Optional[int] = None,
) -> tuple[IntVector, RoundingRecord]:
    """One recursive step: extend an almost orthogonal primitive (n-1)-tuple.

    The new point y_n is the integer point z + sum round(c_i) y_i nearest (in
    window coordinates) to the target ``w/|w|^2 + (3/2) A v``, where w is the
    integer normal of the window (``normal`` may supply a sign-flipped one),
    v is the unit vector of span(window) orthogonal to span(y_2..y_{n-1}) with
    y_1 . v > 0, and z is an integer point with z . w = 1.
    """
    window = [as_int_vector(y) for y in window]
    n = len(window[0])
    if len(window) != n - 1:
        raise ValueError(f"window must hold {n - 1} vectors of dimension {n}")
    A = as_growth(A)
    if not is_primitive_tuple(window):
        raise ValueError("window is not primitive")
    if not is_almost_orthogonal(window)[0]:
        raise ValueError("window is not almost orthogonal")

    w = tuple(normal) if normal is not None else generalized_cross(window)
    if any(a != b for a, b in zip(w, generalized_cross(window))) and any(
        a != -b for a, b in zip(w, generalized_cross(window))
    ):
        raise ValueError("normal is not +/- the cross product of the window")
    nw = norm_sq(w)
    z = hyperplane_point(w)

    # exact parts: target - z = r + s * t in window coordinates
    vprime, mu = orthogonal_component(window[0], window[1:])
    t = [Fraction(1)] + [-m for m in mu]
    vnorm_sq = dot(window[0], vprime)
    r = solve_in_basis([Fraction(a, nw) - b for a, b in zip(w, z)], window)

    guard = precision_bits
    cap = max(max_precision(), precision_bits)
    mag = A.magnitude_bits() + max(_frac_bits(x) for x in t + r) + 4
    while True:
        prec = guard + mag
        Ai = A.interval(prec)
        pre = Ai.ge(2 + sum(sqrt_rational(norm_sq(y), prec) for y in window))
        if pre is False:
            raise ValueError("A is below 2 + sum of the window norms")
        s = Ai * Fraction(3, 2) / sqrt_rational(vnorm_sq, prec)
        c = [ri + s * ti for ri, ti in zip(r, t)]
        k = _round_coefficients(c) if pre else None
        if k is not None:
            break
        if guard >= cap:
            # both neighbours keep |eps| <= 1/2 up to the enclosure width; take the lower one
            k = [math.floor(ci.lower_fraction() + Fraction(1, 2)) for ci in c]
            log.warning("rounding undecided at the precision cap (stage %s); rounding down", stage)
            break
        guard *= 2

    y = tuple(zj + sum(ki * yi[j] for ki, yi in zip(k, window)) for j, zj in enumerate(z))
    eps = tuple(ci - ki for ci, ki in zip(c, k))
    record = RoundingRecord(stage, z, tuple(c), tuple(k), eps, prec)

    # postconditions, all re-verified
    full = window + [y]
    if abs(det(full)) != 1:
        raise ConstructionError("new point does not complete a basis of Z^n")
    if abs(dot(window[0], generalized_cross(full[1:]))) != 1:
        raise ConstructionError("duality |y_1 . w'| = 1 fails")
    if not is_almost_orthogonal(full[1:])[0]:
        raise ConstructionError("shifted window is not almost orthogonal")
    ok = norm_window(y, A, precision_bits)
    if ok is False:
        raise ConstructionError("A <= ||y_n|| <= 2A fails")
    if ok is None:
        raise Indeterminate("norm window undecided")
    return y, record


@dataclass(frozen=True)
class ConstructionState:
    """Window U_i = span(x_i, ..., x_{i+n-2}) and its sign-aligned normal w_i."""

    stage: int
    window: tuple[IntVector, ...]
    normal: IntVector
    height_sq: int
    tail_radius: HPInterval

    @property
    def normal_norm_sq(self) -> int:
        return norm_sq(self.normal)


@dataclass(frozen=True)
class DirectionProxy:
    """Integer normal w with dist(w/|w|, u) <= tail (upper end of the interval)."""

    normal: IntVector
    tail: HPInterval
    stage: int


@dataclass
class ConstructionResult:
    n: int
    growth: GrowthSequence
    points: list[IntVector]
    states: list[ConstructionState]
    roundings: list[RoundingRecord]
    precision_bits: int = DEFAULT_PRECISION

    @property
    def M(self) -> int:
        return len(self.points)

    def point(self, i: int) -> IntVector:
        return self.points[i - 1]

    def state(self, i: int) -> ConstructionState:
        return self.states[i - 1]

    def direction(self, needed_radius=None) -> DirectionProxy:
        return direction(self, needed_radius)

    def certificates(self) -> list[dict]:
        return stage_certificates(self)


def _tail_radius(growth: GrowthSequence, i: int, n: int, height_sq: int, prec: int) -> HPInterval:
    """2 / (A_{i+n-1} H(U_i)), computed in log form to keep huge values cheap."""
    lg = growth.log_value(i + n - 1, prec) + log_rational(height_sq, prec) / 2
    return 2 * (-lg).exp()


def run(
    n: int,
    growth: GrowthSequence,
    M: int,
    precision_bits: int = DEFAULT_PRECISION,
    previous: Optional[ConstructionResult] = None,
) -> ConstructionResult:
    """Construct x_1..x_M and the windows U_1..U_{M-n+2}.

    ``previous`` may be a shorter result for the same growth; it is extended.
    """
    if M < n:
        raise ValueError("need at least n points")
    growth.check(M + 1, precision_bits)
    if previous is not None:
        points = list(previous.points)
        states = list(previous.states)
        roundings = list(previous.roundings)
    else:
        points = initial_tuple(n, [growth[i] for i in range(1, n)], precision_bits)
        states, roundings = [], []

    def add_state(i: int):
        window = tuple(points[i - 1 : i + n - 2])
        w = generalized_cross(window)
        if states and dot(w, states[-1].normal) < 0:
            w = tuple(-a for a in w)
        h2 = wedge(window).norm_sq
        states.append(ConstructionState(i, window, w, h2, _tail_radius(growth, i, n, h2, precision_bits)))

    if not states:
        add_state(1)
    while len(points) < M:
        i = len(states)
        st = states[-1]
        y, rec = next_point(st.window, growth[i + n - 1], normal=st.normal, precision_bits=precision_bits, stage=i)
        points.append(y)
        roundings.append(rec)
        add_state(i + 1)
        log.debug("stage %d: |x_%d|^2 has %d bits", i, len(points), norm_sq(y).bit_length())
    return ConstructionResult(n, growth, points, states, roundings, precision_bits)


def direction(result: ConstructionResult, needed_radius=None) -> DirectionProxy:
    """Earliest stage whose tail bound is at most ``needed_radius`` (last stage if None)."""
    if needed_radius is None:
        st = result.states[-1]
        return DirectionProxy(st.normal, st.tail_radius, st.stage)
    for st in result.states:
        if st.tail_radius.le(needed_radius):
            return DirectionProxy(st.normal, st.tail_radius, st.stage)
    raise NeedMoreStages(f"no stage reaches tail radius {needed_radius}; extend the construction")


def height_sandwich(result: ConstructionResult, i: int, prec: Optional[int] = None) -> Optional[bool]:
    """2^{-(n-2)} A_i...A_{i+n-2} <= H(U_i) <= 2^{n-1} A_i...A_{i+n-2}, in log form."""
    n = result.n
    prec = prec or result.precision_bits
    st = result.state(i)
    log_h = log_rational(st.height_sq, prec) / 2
    log_prod = sum((result.growth.log_value(j, prec) for j in range(i, i + n - 1)), 0)
    diff = log_h - log_prod
    l2 = log2(prec)
    lo = diff.ge(-(n - 2) * l2)
    hi = diff.le((n - 1) * l2)
    if lo is False or hi is False:
        return False
    if lo is None or hi is None:
        return None
    return True


def stage_certificates(result: ConstructionResult) -> list[dict]:
    """Per-point certificates.  Window checks are reported where the window exists."""
    n, pts = result.n, result.points
    out = []
    for i in range(1, result.M + 1):
        cert = {"index": i, "norm_window": norm_window(pts[i - 1], result.growth[i], result.precision_bits)}
        if i + n - 1 <= result.M:
            cert["unimodular"] = abs(det(pts[i - 1 : i + n - 1])) == 1
        if i + 1 <= len(result.states):
            cert["duality"] = abs(dot(pts[i - 1], result.state(i + 1).normal)) == 1
        if i <= len(result.states):
            st = result.state(i)
            ao, _ = is_almost_orthogonal(st.window)
            prod = math.prod(norm_sq(x) for x in st.window)
            cert["almost_orthogonal"] = ao
            cert["primitive"] = wedge(st.window).content() == 1
            cert["height_bounds"] = st.height_sq <= prod and 4 ** (n - 2) * st.height_sq >= prod
            cert["height_sandwich"] = height_sandwich(result, i)
        out.append(cert)
    return out


def all_certified(certs: list[dict]) -> bool:
    return all(v is True for c in certs for k, v in c.items() if k != "index")
