"""Certify that a constructed direction realizes a quasi-regular system.

For q in [q_i, q_{i+1}] the points x_i, ..., x_{i+n-1} form a basis of Z^n.
Their trajectories give a center Phi_n(L(x_i, q), ...) that is within n log 2
of P(q), and Minkowski's second theorem turns the same points into a
bracket [center - slack, center] for L_u(q).  Combining the two gives a
certified upper bound on ||P(q) - L_u(q)||_inf at every grid point; the
piecewise-linear structure bounds the error between grid points by n h.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .construction import ConstructionResult, GrowthSequence, run
from .exact_linalg import norm_sq
from .interval import DEFAULT_PRECISION, HPInterval, Indeterminate, log2, sort_intervals
from .minima import (
    BodyFamily,
    L_u_certified,
    Trajectory,
    lambda_point,
    analytic_slack,
    successive_minima_bruteforce,
    trajectory,
    volume,
)
from .systems import QuasiRegularSystem, has_mesh_at_least

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 16
REL_WIDTH_TARGET = 1e-6
MAX_EXTRA_STAGES = 64
MAX_VERIFY_PRECISION = 512

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"


class MeshTooFine(ValueError):
    """The system's mesh is not certified to be at least log 4."""


@dataclass(frozen=True)
class ResidualRow:
    index: int
    q: Fraction
    residual: HPInterval
    ok: Optional[bool]


@dataclass(frozen=True)
class GridRow:
    interval: int
    q: Fraction
    P: tuple[Fraction, ...]
    center: tuple[HPInterval, ...]
    leg1: HPInterval
    slack: HPInterval
    deviation: HPInterval


@dataclass(frozen=True)
class SegmentBound:
    """Bound on ||P - L_u||_inf valid for every q in [q_start, q_end]."""

    interval: int
    q_start: Fraction
    q_end: Fraction
    leg1: Fraction
    leg2: Fraction

    @property
    def total(self) -> Fraction:
        return self.leg1 + self.leg2


@dataclass
class VerificationReport:
    n: int
    covered: tuple[Fraction, Fraction]
    rows: list[GridRow]
    segments: list[SegmentBound]
    residuals: list[ResidualRow]
    h: Fraction
    stages: int
    direction_stage: int
    precision_bits: int
    status: str = INDETERMINATE
    max_deviation: Optional[HPInterval] = None
    max_residual: Optional[HPInterval] = None
    notes: list[str] = field(default_factory=list)

    @property
    def bound(self) -> int:
        return 2 * self.n * self.n

    @property
    def sampling_error(self) -> Fraction:
        """Slope-based allowance n h for reading the bound off grid points alone."""
        return self.n * self.h

    @property
    def grid(self) -> list[Fraction]:
        return sorted({r.q for r in self.rows})

    @property
    def max_leg1(self) -> Fraction:
        return max(s.leg1 for s in self.segments)

    @property
    def max_leg2(self) -> Fraction:
        return max(s.leg2 for s in self.segments)

    def leg1_bound(self) -> HPInterval:
        return self.n * log2(self.precision_bits)

    def leg2_bound(self) -> HPInterval:
        return analytic_slack(self.n, self.precision_bits)

    def analytic_ceiling(self) -> HPInterval:
        """(n^2+n) log 2 + log n!, the sum of the two leg bounds."""
        return self.leg1_bound() + self.leg2_bound()

    def certified_upper(self) -> Fraction:
        """Bound on sup_q ||P(q) - L_u(q)||_inf over the whole covered range."""
        return max(s.total for s in self.segments)

    def grid_upper(self) -> Fraction:
        """Grid maximum plus the n h sampling allowance; coarser than the segment bound."""
        return self.max_deviation.upper_fraction() + self.sampling_error

    def below_analytic_ceiling(self) -> Optional[bool]:
        return self.analytic_ceiling().gt(self.certified_upper())

    def residuals_ok(self) -> bool:
        return all(r.ok is True for r in self.residuals)


def _grid_for_interval(sys: QuasiRegularSystem, i: int, samples: int, extra: Sequence[Fraction]) -> list[Fraction]:
    a, b = sys.q(i), sys.q(i + 1)
    pts = {a, b}
    pts.update(a + (b - a) * k / samples for k in range(1, samples))
    pts.update(q for q in extra if a <= q <= b)
    return sorted(pts)


def build_construction(
    sys: QuasiRegularSystem,
    precision_bits: int = DEFAULT_PRECISION,
    stages: Optional[int] = None,
) -> ConstructionResult:
    """Construction with enough stages to certify every trajectory the system needs.

    Starts at (last window index) + n + 2 points (or ``stages``) and extends
    until every |x_j . u| needed has relative width below 1e-6.
    """
    n, N = sys.n, len(sys.mesh)
    growth = GrowthSequence.from_mesh(sys.mesh)
    last_window = max(sys.n_intervals, 1)
    M = stages if stages is not None else last_window + n + 2
    M = max(M, last_window + n)
    result = run(n, growth, M, precision_bits)
    needed = last_window + n - 1
    for _ in range(MAX_EXTRA_STAGES):
        body = BodyFamily.from_proxy(result.direction())
        widths = [body.abs_dot(result.point(j), precision_bits) for j in range(1, needed + 1)]
        if all(w.lower_fraction() > 0 and w.rel_width() < REL_WIDTH_TARGET for w in widths):
            return result
        result = run(n, growth, result.M + 1, precision_bits, previous=result)
    log.warning("direction still loose after %d extra stages", MAX_EXTRA_STAGES)
    return result


def check_proof_eq(
    result: ConstructionResult,
    grid: Sequence,
    indices: Optional[Sequence[int]] = None,
    body: Optional[BodyFamily] = None,
    prec: Optional[int] = None,
) -> list[ResidualRow]:
    """Residuals |L(x_j, q) - X_j - n max{0, q - q_j} + q| against n log 2.

    X_j = log A_j and q_j is the mean of X_j..X_{j+n-1}, both taken from the
    construction's growth sequence.
    """
    n = result.n
    prec = prec or result.precision_bits
    body = body or BodyFamily.from_proxy(result.direction())
    if indices is None:
        indices = range(1, result.M + 1)
    bound = n * log2(prec)
    rows = []
    for j in indices:
        tr = trajectory(result.point(j), body, prec)
        Xj = result.growth.log_value(j, prec)
        qj = sum((result.growth.log_value(k, prec) for k in range(j, j + n)), 0) / n
        for q in grid:
            q = Fraction(q)
            if q < 0:
                raise ValueError("residuals are defined for q >= 0")
            excess = (q - qj).max(0)
            r = abs(tr(q) - Xj - n * excess + q)
            rows.append(ResidualRow(j, q, r, r.le(bound)))
    return rows


def corollary_check(
    result: ConstructionResult,
    Qs: Sequence,
    indices: Optional[Sequence[int]] = None,
    body: Optional[BodyFamily] = None,
    prec: Optional[int] = None,
) -> list[dict]:
    """2^{-n} (A_i/Q) max{1, Q/Q_i}^n <= lambda(x_i, C_u(Q)) <= 2^n (A_i/Q) max{1, Q/Q_i}^n."""
    n = result.n
    prec = prec or result.precision_bits
    body = body or BodyFamily.from_proxy(result.direction())
    if indices is None:
        indices = range(1, result.M + 1)
    out = []
    for i in indices:
        log_A = result.growth.log_value(i, prec)
        log_Qi = sum((result.growth.log_value(k, prec) for k in range(i, i + n)), 0) / n
        for Q in Qs:
            Q = Fraction(Q)
            lam = lambda_point(result.point(i), body, Q, prec)
            log_Q = HPInterval(Q, prec=prec).log()
            core = (log_A - log_Q + n * (log_Q - log_Qi).max(0)).exp()
            lower = core / 2**n
            upper = core * 2**n
            lo_ok, hi_ok = lower.le(lam), lam.le(upper)
            ok = None if None in (lo_ok, hi_ok) else (lo_ok and hi_ok)
            out.append({"index": i, "Q": Q, "lambda": lam, "lower": lower, "upper": upper, "ok": ok})
    return out


def _deviation(P: Sequence[Fraction], center: Sequence[HPInterval], slack: HPInterval, prec: int):
    """Bounds on max_j |P_j - L_j| given L_j in [center_j.lo - slack, center_j.hi]."""
    lo_all, hi_all = Fraction(0), Fraction(0)
    s = slack.upper_fraction()
    for p, c in zip(P, center):
        a = c.lower_fraction() - s
        b = c.upper_fraction()
        far = max(abs(p - a), abs(p - b))
        near = Fraction(0) if a <= p <= b else min(abs(p - a), abs(p - b))
        lo_all = max(lo_all, near)
        hi_all = max(hi_all, far)
    return HPInterval(lo_all, hi_all, prec=prec)


def _hull_max(xs: Sequence[HPInterval]) -> HPInterval:
    out = xs[0]
    for x in xs[1:]:
        out = out.max(x)
    return out


@dataclass
class _Sample:
    q: Fraction
    comps: tuple[Fraction, ...]
    L: list[HPInterval]
    sum_L: HPInterval
    log_vol: HPInterval


def _segment_leg1(a: _Sample, b: _Sample, kinked: set[int], n: int) -> Fraction:
    """Sup over [a, b] of ||Phi(P components) - Phi(trajectories)||_inf.

    Sorting is 1-Lipschitz for the sup norm, so any fixed matching of
    components to trajectories bounds the sorted difference.  Each matched
    difference is linear on the segment unless its trajectory has a kink
    there, in which case the slope bound n is used instead.
    """
    width = b.q - a.q
    best = None
    for ref in (a, b):
        by_comp = sorted(range(n), key=lambda k: ref.comps[k])
        by_traj = sorted(range(n), key=lambda j: ref.L[j].mid)
        worst = Fraction(0)
        for k, j in zip(by_comp, by_traj):
            ga = abs(a.L[j] - a.comps[k]).upper_fraction()
            gb = abs(b.L[j] - b.comps[k]).upper_fraction()
            worst = max(worst, (ga + gb + n * width) / 2 if j in kinked else max(ga, gb))
        best = worst if best is None else min(best, worst)
    return best


def _report_at(sys, result, samples, prec) -> VerificationReport:
    n = sys.n
    body = BodyFamily.from_proxy(result.direction())
    n_int = sys.n_intervals
    intervals = range(1, n_int + 1) if n_int else [1]
    needed = (n_int or 1) + n - 1
    trajs: dict[int, Trajectory] = {j: trajectory(result.point(j), body, prec) for j in range(1, needed + 1)}
    kinks = {j: (t.breakpoint.lower_fraction(), t.breakpoint.upper_fraction()) for j, t in trajs.items()}
    const = HPInterval(Fraction(math.factorial(n), 2**n), prec=prec).log()
    rows, segments, h = [], [], Fraction(0)
    vols: dict[Fraction, HPInterval] = {}
    for i in intervals:
        window = list(range(i, i + n))
        if n_int:
            qs = _grid_for_interval(sys, i, samples, [e for j in window for e in kinks[j]])
            h = max(h, max(b - a for a, b in zip(qs, qs[1:])))
        else:
            qs = [sys.q(1)]
        pts = []
        for q in qs:
            qi = HPInterval(q, prec=prec)
            comps = sys.components_on(i, q)
            P = tuple(sorted(comps))
            L = [trajs[j](qi) for j in window]
            center = sort_intervals(L)
            leg1 = _hull_max([abs(c - p) for c, p in zip(center, P)])
            if q not in vols:
                vols[q] = volume(n, None, prec=prec, log_Q=qi)[0].log()
            sum_L = sum(L, 0)
            raw = const + sum_L + vols[q]
            slack = HPInterval(0, max(raw.upper_fraction(), Fraction(0)), prec=prec)
            rows.append(GridRow(i, q, P, tuple(center), leg1, slack, _deviation(P, center, slack, prec)))
            pts.append(_Sample(q, comps, L, sum_L, vols[q]))
        if len(pts) == 1:
            r = rows[-1]
            segments.append(SegmentBound(i, r.q, r.q, r.leg1.upper_fraction(), r.slack.upper_fraction()))
        for a, b in zip(pts, pts[1:]):
            kinked = {k for k, j in enumerate(window) if kinks[j][0] < b.q and kinks[j][1] > a.q}
            leg1 = _segment_leg1(a, b, kinked, n)
            # the trajectory sum is convex and the volume grows with Q
            top = max(a.sum_L.upper_fraction(), b.sum_L.upper_fraction())
            leg2 = max(const.upper_fraction() + top + b.log_vol.upper_fraction(), Fraction(0))
            segments.append(SegmentBound(i, a.q, b.q, leg1, leg2))
    grid = sorted({r.q for r in rows})
    residuals = check_proof_eq(result, grid, indices=range(1, needed + 1), body=body, prec=prec)
    report = VerificationReport(
        n=n,
        covered=sys.domain,
        rows=rows,
        segments=segments,
        residuals=residuals,
        h=h,
        stages=result.M,
        direction_stage=result.direction().stage,
        precision_bits=prec,
    )
    report.max_deviation = _hull_max([r.deviation for r in rows])
    report.max_residual = _hull_max([r.residual for r in residuals])
    bound = report.bound
    if report.certified_upper() < bound:
        report.status = PASS
    elif report.max_deviation.lower_fraction() > bound:
        report.status = FAIL
    else:
        report.status = INDETERMINATE
    if not report.residuals_ok():
        report.notes.append("some residuals exceed n log 2 or are undecided")
    return report


def theorem_report(
    sys: QuasiRegularSystem,
    result: Optional[ConstructionResult] = None,
    samples: int = DEFAULT_SAMPLES,
    precision_bits: int = DEFAULT_PRECISION,
    max_precision: int = MAX_VERIFY_PRECISION,
) -> VerificationReport:
    """Certify ||P(q) - L_u(q)||_inf < 2 n^2 over the covered range of ``sys``."""
    ok = has_mesh_at_least(sys.mesh, prec=precision_bits)
    if ok is not True:
        raise MeshTooFine("the system's mesh is not certified to be at least log 4")
    if result is None:
        result = build_construction(sys, precision_bits)
    prec = precision_bits
    while True:
        report = _report_at(sys, result, samples, prec)
        if report.status != INDETERMINATE or prec * 2 > max_precision:
            return report
        prec *= 2


def brute_force_check(
    result: ConstructionResult,
    sys: QuasiRegularSystem,
    qs: Sequence,
    budget: int = 10**6,
    prec: Optional[int] = None,
) -> list[dict]:
    """Compare the certified bracket with enumerated minima at small q."""
    prec = prec or result.precision_bits
    body = BodyFamily.from_proxy(result.direction())
    n = result.n
    out = []
    for q in qs:
        q = Fraction(q)
        i = sys.interval_index(q)
        window = [result.point(j) for j in range(i, i + n)]
        cert = L_u_certified(q, window, body, prec)
        Q = HPInterval(q, prec=prec).exp()
        prof = successive_minima_bruteforce(body, Q, budget, prec)
        logs = [v.log() for v in prof.values]
        inside = all(
            (c - cert.slack).lower_fraction() <= lv.upper_fraction() and lv.lower_fraction() <= c.upper_fraction()
            for lv, c in zip(logs, cert.center)
        )
        out.append({"q": q, "brute": logs, "center": cert.center, "slack": cert.slack, "inside": inside})
    return out
