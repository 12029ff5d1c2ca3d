"""Distance functions and successive minima of the bodies

    C_u(Q) = { x : ||x|| <= Q, |x . u| <= Q^{-(n-1)} }   (Q >= 1).

The direction u is given by an integer normal w, either exactly
(u = w/||w||) or as a construction proxy with a certified bound on
dist(w/||w||, u).  In the exact case with rational Q every squared distance
function value is rational, so ordering and greedy selection are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .exact_linalg import IntVector, as_int_vector, dot, norm_sq
from .interval import (
    DEFAULT_PRECISION,
    HPInterval,
    Indeterminate,
    as_interval,
    asin,
    log2,
    max_precision,
    pi,
    sort_intervals,
    sqrt_rational,
)
from .validation import to_fraction

DEFAULT_BUDGET = 10**6


class BudgetExceeded(RuntimeError):
    """Brute-force enumeration would visit more candidates than allowed."""


@dataclass(frozen=True)
class BodyFamily:
    """Direction of the family C_u(Q), Q >= 1.

    ``tail`` is None for an exact direction u = normal/||normal||; otherwise
    its upper end bounds dist(normal/||normal||, u).
    """

    normal: IntVector
    tail: Optional[HPInterval] = None

    def __post_init__(self):
        w = as_int_vector(self.normal)
        if len(w) < 2:
            raise ValueError("dimension must be at least 2")
        if not any(w):
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "normal", w)

    @property
    def n(self) -> int:
        return len(self.normal)

    @property
    def exact(self) -> bool:
        return self.tail is None

    @classmethod
    def from_direction(cls, u) -> "BodyFamily":
        """Exact direction from rational coordinates (scaled to a primitive integer vector)."""
        qs = [to_fraction(c) for c in u]
        den = math.lcm(*(q.denominator for q in qs))
        ints = [int(q * den) for q in qs]
        g = math.gcd(*ints)
        if g == 0:
            raise ValueError("direction must be nonzero")
        return cls(tuple(c // g for c in ints))

    @classmethod
    def from_proxy(cls, proxy) -> "BodyFamily":
        return cls(proxy.normal, proxy.tail)

    def abs_dot_sq(self, x: Sequence[int]) -> Fraction:
        """|x . u|^2 exactly (exact directions only)."""
        if not self.exact:
            raise ValueError("exact dot product needs an exact direction")
        return Fraction(dot(x, self.normal) ** 2, norm_sq(self.normal))

    def abs_dot(self, x: Sequence[int], prec: int = DEFAULT_PRECISION) -> HPInterval:
        """Enclosure of |x . u|."""
        d = abs(dot(x, self.normal))
        base = d / sqrt_rational(norm_sq(self.normal), prec) if d else HPInterval(0, prec=prec)
        if self.exact:
            return base
        err = 2 * sqrt_rational(norm_sq(x), prec) * HPInterval(self.tail.upper_fraction(), prec=prec)
        lo = base - err
        return HPInterval(lo.max(0), base + err, prec=prec)


def _q_interval(Q, prec: int) -> HPInterval:
    return Q if isinstance(Q, HPInterval) else HPInterval(to_fraction(Q), prec=prec)


def lambda_sq_exact(x: Sequence[int], body: BodyFamily, Q) -> Fraction:
    """lambda(x, C_u(Q))^2 as an exact rational (exact direction, rational Q)."""
    Q = to_fraction(Q)
    n = body.n
    return max(Fraction(norm_sq(x)) / Q**2, body.abs_dot_sq(x) * Q ** (2 * (n - 1)))


def lambda_point(x: Sequence[int], body: BodyFamily, Q, prec: int = DEFAULT_PRECISION) -> HPInterval:
    """max{ ||x|| / Q, |x . u| Q^{n-1} }."""
    x = as_int_vector(x)
    if not any(x):
        raise ValueError("lambda of the zero vector")
    if Q_is_rational(Q):
        if to_fraction(Q) < 1:
            raise ValueError("Q must be at least 1")
        if body.exact:
            return sqrt_rational(lambda_sq_exact(x, body, Q), prec)
    Qi = _q_interval(Q, prec)
    n = body.n
    return (sqrt_rational(norm_sq(x), prec) / Qi).max(body.abs_dot(x, prec) * Qi ** (n - 1))


def Q_is_rational(Q) -> bool:
    return not isinstance(Q, HPInterval)


@dataclass(frozen=True)
class Trajectory:
    """q -> log lambda(x, C_u(e^q)) = max{log||x|| - q, log|x.u| + (n-1) q}."""

    log_norm: HPInterval
    log_dot: HPInterval
    n: int

    def __call__(self, q) -> HPInterval:
        q = as_interval(q, self.log_norm.prec) if not isinstance(q, HPInterval) else q
        return (self.log_norm - q).max(self.log_dot + (self.n - 1) * q)

    @property
    def breakpoint(self) -> HPInterval:
        return (self.log_norm - self.log_dot) / self.n

    @property
    def min_value(self) -> HPInterval:
        return ((self.n - 1) * self.log_norm + self.log_dot) / self.n


def trajectory(x: Sequence[int], body: BodyFamily, prec: int = DEFAULT_PRECISION) -> Trajectory:
    x = as_int_vector(x)
    d = body.abs_dot(x, prec)
    if d.lower_fraction() <= 0:
        raise ValueError("|x . u| is not certified positive; tighten the direction")
    ln = sqrt_rational(norm_sq(x), prec).log()
    ld = d.log()
    if ld.lt(ln) is not True:
        raise ValueError("|x . u| < ||x|| is not certified")
    return Trajectory(ln, ld, body.n)


@dataclass(frozen=True)
class MinimaProfile:
    Q: object
    values: tuple[HPInterval, ...]
    witnesses: tuple[IntVector, ...]
    values_sq: Optional[tuple[Fraction, ...]] = None


def _canonical_points(n: int, radius_sq: Fraction) -> Iterator[tuple[int, ...]]:
    """Nonzero integer points with ||x||^2 <= radius_sq and first nonzero coordinate > 0."""
    r = math.isqrt(math.floor(radius_sq))

    def rec(prefix: list[int], left: Fraction, leading_done: bool):
        k = len(prefix)
        if k == n:
            if leading_done:
                yield tuple(prefix)
            return
        m = math.isqrt(math.floor(left)) if left >= 0 else -1
        lo = -m if leading_done else 0
        for c in range(lo, m + 1):
            prefix.append(c)
            yield from rec(prefix, left - c * c, leading_done or c != 0)
            prefix.pop()

    if r >= 0:
        yield from rec([], Fraction(radius_sq), False)


class _Span:
    """Incremental exact rank test over the rationals."""

    def __init__(self):
        self.rows: list[tuple[int, list[Fraction]]] = []

    def add(self, v: Sequence[int]) -> bool:
        v = [Fraction(c) for c in v]
        for piv, row in self.rows:
            if v[piv]:
                f = v[piv] / row[piv]
                v = [a - f * b for a, b in zip(v, row)]
        piv = next((j for j, c in enumerate(v) if c), None)
        if piv is None:
            return False
        self.rows.append((piv, v))
        return True


def _greedy(order: list[int], points: list[tuple[int, ...]], n: int) -> list[int]:
    span = _Span()
    chosen = []
    for idx in order:
        if span.add(points[idx]):
            chosen.append(idx)
            if len(chosen) == n:
                break
    return chosen


def successive_minima_bruteforce(
    body: BodyFamily, Q, budget: int = DEFAULT_BUDGET, prec: int = DEFAULT_PRECISION
) -> MinimaProfile:
    """Exact successive minima by enumeration of all points with lambda <= t.

    Since lambda(x) >= ||x||/Q, every point with lambda(x) <= t lies in the
    ball of radius tQ.  t starts at 1 and doubles until the greedy selection
    by increasing lambda finds n independent points of lambda <= t; then the
    candidate set is complete and the greedy values are the minima.
    Ties are broken by norm and then by descending coordinates; only one of
    x and -x is enumerated.  With a proxy direction the values are interval
    enclosures from greedy runs on the lower and upper ends.
    """
    n = body.n
    exact = body.exact and Q_is_rational(Q)
    if Q_is_rational(Q) and to_fraction(Q) < 1:
        raise ValueError("Q must be at least 1")
    Qi = _q_interval(Q, prec)
    Qup = Qi.upper_fraction()
    t = Fraction(1)
    while True:
        radius = t * Qup
        r = math.floor(radius)
        if (2 * r + 1) ** n > budget:
            raise BudgetExceeded(f"enumeration box (2*{r}+1)^{n} exceeds the budget {budget}")
        pts = list(_canonical_points(n, radius * radius))
        tiebreak = [(norm_sq(p), tuple(-c for c in p)) for p in pts]
        if exact:
            keys = [lambda_sq_exact(p, body, Q) for p in pts]
            order = sorted(range(len(pts)), key=lambda k: (keys[k], tiebreak[k]))
            chosen = _greedy(order, pts, n)
            if len(chosen) == n and keys[chosen[-1]] <= t * t:
                vals_sq = tuple(keys[k] for k in chosen)
                values = tuple(sqrt_rational(v, prec) for v in vals_sq)
                return MinimaProfile(Q, values, tuple(pts[k] for k in chosen), vals_sq)
        else:
            lams = [lambda_point(p, body, Q, prec) for p in pts]
            hi_order = sorted(range(len(pts)), key=lambda k: (lams[k].upper_fraction(), tiebreak[k]))
            chosen = _greedy(hi_order, pts, n)
            if len(chosen) == n and lams[chosen[-1]].upper_fraction() <= t:
                lo_order = sorted(range(len(pts)), key=lambda k: (lams[k].lower_fraction(), tiebreak[k]))
                lo_chosen = _greedy(lo_order, pts, n)
                values = tuple(
                    HPInterval(lams[a].lower_fraction(), lams[b].upper_fraction(), prec=prec)
                    for a, b in zip(lo_chosen, chosen)
                )
                return MinimaProfile(Q, values, tuple(pts[k] for k in chosen))
        t *= 2


def ball_volume(m: int, prec: int = DEFAULT_PRECISION) -> HPInterval:
    """Volume of the unit ball of R^m via V_m = 2 pi V_{m-2} / m."""
    if m < 0:
        raise ValueError("negative dimension")
    v = HPInterval(1 if m % 2 == 0 else 2, prec=prec)
    for k in range(2 if m % 2 == 0 else 3, m + 1, 2):
        v = v * pi(prec) * 2 / k
    return v


def _cap_integral(a2: int, x: HPInterval) -> HPInterval:
    """J(x) = integral_0^x (1 - y^2)^{a2/2} dy for x in [0, 1], a2 >= 0.

    Uses J_a = x (1-x^2)^a / (2a+1) + 2a/(2a+1) J_{a-1}, starting from
    J_0 = x (a2 even) or J_{-1/2} = asin x (a2 odd).
    """
    c2 = (1 - x * x).max(0)
    c = c2.sqrt()
    if a2 % 2 == 0:
        j, start = x, 2
    else:
        j, start = asin(x), 1
    for k2 in range(start, a2 + 1, 2):
        # k2 = 2a
        power = c ** k2
        j = x * power / (k2 + 1) + j * Fraction(k2, k2 + 1)
    return j


def volume(body_or_n, Q, tol=None, prec: int = DEFAULT_PRECISION, log_Q=None):
    """Enclosure of vol C_u(Q) and the cheap bound min(V_n Q^n, 2 V_{n-1}).

    vol = 2 V_{n-1} integral_0^t (Q^2 - s^2)^{(n-1)/2} ds with t = Q^{-(n-1)},
    evaluated in closed form.  ``log_Q`` (an interval) may replace Q.
    Precision is raised until the width is at most ``tol``.
    """
    n = body_or_n.n if isinstance(body_or_n, BodyFamily) else int(body_or_n)
    cap = max(max_precision(), prec)
    while True:
        if log_Q is not None:
            lq = as_interval(log_Q, prec).with_prec(prec)
            Qn = (n * lq).exp()
            x = (-n * lq).exp()
            Q_for_bound = lq.exp()
        else:
            Qr = to_fraction(Q)
            if Qr < 1:
                raise ValueError("Q must be at least 1")
            Qn = HPInterval(Qr**n, prec=prec)
            x = HPInterval(1 / Qr**n, prec=prec)
            Q_for_bound = HPInterval(Qr, prec=prec)
        vn1 = ball_volume(n - 1, prec)
        vol = 2 * vn1 * Qn * _cap_integral(n - 1, x.min(1))
        cheap = (ball_volume(n, prec) * Q_for_bound**n).min(2 * vn1)
        if tol is None or vol.upper_fraction() - vol.lower_fraction() <= to_fraction(tol):
            return vol, cheap
        if prec >= cap:
            raise Indeterminate("volume tolerance unreachable at the precision cap")
        prec *= 2


@dataclass(frozen=True)
class Sandwich:
    sorted_values: tuple[HPInterval, ...]
    factor: HPInterval
    bound: HPInterval


def lemma4_sandwich(point_lambdas: Sequence[HPInterval], vol: HPInterval) -> Sandwich:
    """Bracket the minima using n independent points.

    With B >= prod lambda(y_j) vol, the sorted point values s satisfy
    lambda_j <= s_j <= (n! B / 2^n) lambda_j componentwise.
    """
    n = len(point_lambdas)
    prec = max(x.prec for x in [*point_lambdas, vol])
    B = HPInterval(vol.upper_fraction(), prec=prec)
    for lam in point_lambdas:
        B = B * HPInterval(lam.upper_fraction(), prec=prec)
    B = HPInterval(B.upper_fraction(), prec=prec)
    factor = B * math.factorial(n) / 2**n
    return Sandwich(tuple(sort_intervals(point_lambdas)), factor, B)


def brackets(profile_values: Sequence[HPInterval], sandwich: Sandwich) -> bool:
    """Whether lambda_j <= s_j <= factor * lambda_j is consistent for every j."""
    for lam, s in zip(profile_values, sandwich.sorted_values):
        if lam.gt(s) is True:
            return False
        if s.gt(sandwich.factor * lam) is True:
            return False
    return True


@dataclass(frozen=True)
class CertifiedMinima:
    """Log minima bracket: L_u(q)_j lies in [center_j - slack, center_j]."""

    q: object
    center: tuple[HPInterval, ...]
    slack: HPInterval
    analytic_slack: HPInterval
    log_volume: HPInterval

    def bracket(self, j: int) -> tuple:
        return (self.center[j] - self.slack).lower, self.center[j].upper


def analytic_slack(n: int, prec: int = DEFAULT_PRECISION) -> HPInterval:
    """(n^2 + n) log 2 + log(n!/2^n)."""
    return (n * n + n) * log2(prec) + HPInterval(Fraction(math.factorial(n), 2**n), prec=prec).log()


def L_u_certified(q, window: Sequence[Sequence[int]], body: BodyFamily, prec: int = DEFAULT_PRECISION) -> CertifiedMinima:
    """Trajectory-based enclosure of L_u(q) from n independent integer points."""
    n = body.n
    if len(window) != n:
        raise ValueError(f"need {n} points")
    qi = as_interval(q, prec) if not isinstance(q, HPInterval) else q
    if qi.lt(0) is not False:
        raise ValueError("q must be >= 0")
    L = [trajectory(x, body, prec)(qi) for x in window]
    vol, _ = volume(n, None, prec=prec, log_Q=qi)
    log_vol = vol.log()
    log_B = sum(L, 0) + log_vol
    slack = HPInterval(Fraction(math.factorial(n), 2**n), prec=prec).log() + log_B
    # n! B / 2^n >= 1 by Minkowski, so only the upper end carries information
    slack = HPInterval(0, max(slack.upper_fraction(), Fraction(0)), prec=prec)
    return CertifiedMinima(q, tuple(sort_intervals(L)), slack, analytic_slack(n, prec), log_vol)
