import math
from fractions import Fraction as F

import pytest

from parageo.construction import GrowthSequence, run
from parageo.interval import HPInterval, log2
from parageo.minima import BodyFamily, successive_minima_bruteforce
from parageo.systems import MeshSequence, QuasiRegularSystem
from parageo.verify import (
    FAIL,
    PASS,
    MeshTooFine,
    brute_force_check,
    build_construction,
    check_proof_eq,
    corollary_check,
    theorem_report,
)


@pytest.fixture(scope="module")
def small_n2():
    sys_ = QuasiRegularSystem.from_values(2, ["1", "2.5", "4", "5.5", "7", "8.5"])
    return sys_, build_construction(sys_)


def test_residual_example_at_zero():
    res = run(2, GrowthSequence.from_values([1, 4, 16, 64, 256, 1024]), 6)
    (row,) = check_proof_eq(res, [0], indices=[1])
    # L(x_1, 0) = log ||(1, 1)|| and X_1 = log 1
    assert row.residual.overlaps(HPInterval(2).log() / 2)
    assert abs(float(row.residual.mid) - 0.347) < 1e-3
    assert row.ok is True


def test_residuals_at_breakpoints_and_constant():
    assert abs(float((3 * log2()).mid) - 2.079) < 1e-3
    res = run(3, GrowthSequence.from_mesh(MeshSequence.regular(2, 2, 8)), 10)
    sys_ = QuasiRegularSystem(3, MeshSequence.regular(2, 2, 8))
    rows = check_proof_eq(res, sys_.breakpoints, indices=range(1, 6))
    assert all(r.ok is True for r in rows)
    with pytest.raises(ValueError):
        check_proof_eq(res, [-1], indices=[1])


def test_corollary_sandwich():
    res = run(2, GrowthSequence.from_values([1, 4, 16, 64, 256, 1024]), 8)
    rows = corollary_check(res, [1, 2, F(7, 2), 10, 100], indices=range(1, 5))
    assert all(r["ok"] is True for r in rows)
    # at Q = 1 the bounds are 2^-n A_i and 2^n A_i
    r = next(r for r in rows if r["index"] == 3 and r["Q"] == 1)
    assert r["lower"].overlaps(HPInterval(4)) and r["upper"].overlaps(HPInterval(64))


@pytest.mark.parametrize("n", [2, 3])
def test_theorem_report_passes(n):
    sys_ = QuasiRegularSystem(n, MeshSequence.regular(2, 2, 9))
    rep = theorem_report(sys_)
    assert rep.status == PASS
    assert rep.certified_upper() < 2 * n * n
    assert rep.residuals_ok()
    assert rep.max_leg1 <= rep.leg1_bound().upper_fraction()
    assert rep.max_leg2 <= rep.leg2_bound().upper_fraction()
    assert rep.below_analytic_ceiling() is True
    assert set(sys_.breakpoints) <= set(rep.grid)
    for r in rep.rows:
        assert r.leg1.upper_fraction() <= rep.leg1_bound().upper_fraction()


def test_ceiling_constants():
    sys_ = QuasiRegularSystem(3, MeshSequence.regular(2, 2, 6))
    rep = theorem_report(sys_)
    assert rep.bound == 18
    assert abs(float(rep.analytic_ceiling().mid) - (12 * math.log(2) + math.log(6))) < 1e-12
    assert abs(float(rep.analytic_ceiling().mid) - 10.11) < 0.01


def test_refuses_fine_mesh():
    sys_ = QuasiRegularSystem.from_values(2, [1, 2, 4])
    with pytest.raises(MeshTooFine):
        theorem_report(sys_)


def test_refinement_never_lowers_the_deviation_lower_bound(small_n2):
    sys_, res = small_n2
    coarse = theorem_report(sys_, res, samples=4)
    fine = theorem_report(sys_, res, samples=8)
    assert set(coarse.grid) <= set(fine.grid)
    assert fine.max_deviation.lower_fraction() >= coarse.max_deviation.lower_fraction()
    assert fine.h <= coarse.h


def test_certified_bound_dominates_true_deviation(small_n2):
    """Exact minima by enumeration at many q, including points off the grid."""
    sys_, res = small_n2
    rep = theorem_report(sys_, res, samples=4)
    bound = rep.certified_upper()
    body = BodyFamily.from_proxy(res.direction())
    lo, _ = sys_.domain
    qs = [lo + F(k, 6) for k in range(0, 13)]
    for q in qs:
        prof = successive_minima_bruteforce(body, HPInterval(q).exp())
        P = sys_.evaluate(q)
        for p, lam in zip(P, prof.values):
            assert abs(lam.log() - p).upper_fraction() <= bound
    for row in brute_force_check(res, sys_, qs[:6]):
        assert row["inside"]


def test_status_values():
    assert PASS == "pass" and FAIL == "fail"
