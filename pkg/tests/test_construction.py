import math
from fractions import Fraction as F

import pytest

from parageo.construction import (
    ConstructionError,
    GrowthSequence,
    NeedMoreStages,
    all_certified,
    direction,
    height_sandwich,
    initial_tuple,
    next_point,
    norm_window,
    run,
    stage_certificates,
)
from parageo.exact_linalg import det, dot, generalized_cross, is_almost_orthogonal, norm_sq, wedge
from parageo.interval import HPInterval
from parageo.minima import BodyFamily
from parageo.systems import MeshSequence


def _postconditions(window, y, A):
    full = list(window) + [y]
    assert abs(det(full)) == 1
    assert abs(dot(window[0], generalized_cross(full[1:]))) == 1
    assert is_almost_orthogonal(full[1:])[0]
    assert A**2 <= norm_sq(y) <= 4 * A**2


def test_initial_tuple():
    assert initial_tuple(3, [1, 4]) == [(1, 1, 0), (0, 4, 1)]
    assert initial_tuple(2, [1]) == [(1, 1)]
    x2 = initial_tuple(3, [1, 4])[1]
    assert 16 <= norm_sq(x2) <= 64 and norm_sq(x2) == 17
    # exp(2) = 7.389 rounds up to 8
    assert initial_tuple(2, [GrowthSequence.from_mesh(MeshSequence.explicit([2, 4]))[1]]) == [(8, 1)]
    with pytest.raises(ValueError):
        initial_tuple(3, [1, 1])


def test_next_point_from_unit_window():
    y, _ = next_point([(1, 0)], 4)
    _postconditions([(1, 0)], y, 4)
    # with w = cross((1,0)) = (0,-1) the hyperplane point is (0,-1) and y = (6, -1)
    assert y == (6, -1)
    assert abs(dot((1, 0), generalized_cross([y]))) == 1


def test_next_point_worked_example():
    y, rec = next_point([(1, 1)], 4)
    assert y == (5, 4)
    assert rec.z == (1, 0)
    assert rec.rounded == (4,)
    assert abs(float(rec.coefficients[0].mid) - 3.74264) < 1e-5
    assert abs(float(rec.epsilons[0].mid) + 0.25736) < 1e-5
    assert abs(rec.epsilons[0].upper_fraction()) <= F(1, 2)
    y3, rec3 = next_point([(5, 4)], 16)
    assert y3 == (19, 15)
    # the hyperplane point is implementation defined; (4, 3) with c = 2.9677 and
    # (-1, -1) with c = 3.9677 both land on (19, 15) with the same epsilon
    assert dot(rec3.z, (4, -5)) == 1
    assert abs(float(rec3.epsilons[0].mid) - (2.9677 - 3)) < 1e-4
    assert det([(5, 4), (19, 15)]) == -1


def test_next_point_rejects_bad_windows():
    with pytest.raises(ValueError):
        next_point([(2, 0)], 10)  # not primitive
    with pytest.raises(ValueError):
        next_point([(1, 0, 0), (10, 1, 0)], 100)  # not almost orthogonal
    with pytest.raises(ValueError):
        next_point([(5, 4)], 4)  # A below 2 + ||y||


def test_run_n2_reference_points():
    res = run(2, GrowthSequence.from_values([1, 4, 16, 64]), 5)
    assert res.points[:4] == [(1, 1), (5, 4), (19, 15), (71, 56)]
    assert res.state(3).normal == (15, -19)
    assert all_certified(stage_certificates(res))


def test_direction_and_tail():
    res = run(2, GrowthSequence.from_values([1, 4, 16, 64]), 5)
    tails = [st.tail_radius for st in res.states]
    assert all(b.upper < a.lower for a, b in zip(tails, tails[1:]))
    # stage 3 normal (15, -19); tail <= 2 / (A_4 sqrt(586))
    st3 = res.state(3)
    assert norm_sq(st3.normal) == 586
    assert st3.tail_radius.contains(2 / (64 * HPInterval(586).sqrt()))
    proxy = direction(res, HPInterval(st3.tail_radius.upper_fraction()))
    assert proxy.stage == 3
    with pytest.raises(NeedMoreStages):
        direction(res, HPInterval(F(1, 10**30)))
    body = BodyFamily(st3.normal, st3.tail_radius)
    # |x_1 . u| A_2 ~ 0.66 lies in [2^-2, 2^2]
    v = body.abs_dot((1, 1)) * 4
    assert abs(float(v.mid) - 0.66) < 0.01
    assert v.ge(F(1, 4)) and v.le(4)


def test_sign_alignment():
    res = run(3, GrowthSequence.from_values([1, 4, 16, 64, 256, 1024]), 7)
    for a, b in zip(res.states, res.states[1:]):
        assert dot(a.normal, b.normal) >= 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_run_from_mesh_certificates(n):
    res = run(n, GrowthSequence.from_mesh(MeshSequence.regular(2, 2, 10)), 10)
    certs = stage_certificates(res)
    assert all_certified(certs)
    for i in range(1, len(res.states) + 1):
        st = res.state(i)
        prod = math.prod(norm_sq(x) for x in st.window)
        assert st.height_sq <= prod <= 4 ** (n - 2) * st.height_sq
        assert wedge(st.window).content() == 1
        assert height_sandwich(res, i) is True


def test_run_extends_previous_result():
    g = GrowthSequence.from_values([1, 4, 16, 64, 256])
    short = run(2, g, 3)
    long = run(2, g, 6, previous=short)
    assert long.points[:3] == short.points
    assert long.points == run(2, g, 6).points


def test_growth_checks():
    with pytest.raises(ValueError):
        run(2, GrowthSequence.from_values([1, 3]), 3)
    with pytest.raises(ValueError):
        GrowthSequence.from_mesh(MeshSequence.explicit([1, 2, 4])).check(3)
    with pytest.raises(ValueError):
        run(3, GrowthSequence.from_values([1, 4]), 2)


def test_norm_window():
    g = GrowthSequence.from_mesh(MeshSequence.explicit([2, 4]))
    # exp(2) = 7.389 <= ||(8,1)|| = 8.06 <= 14.78
    assert norm_window((8, 1), g[1]) is True
    assert norm_window((7, 0), g[1]) is False
    assert norm_window((15, 0), g[1]) is False


def test_construction_error_is_runtime_error():
    assert issubclass(ConstructionError, RuntimeError)
