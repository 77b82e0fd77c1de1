import math
import pickle

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normaudit.errors import ChartSingular, ZeroVector
from normaudit.geometry import (
    ChartPoint,
    Disconnected,
    SpherePoint,
    chart_distance,
    chart_stretch,
    convergence_experiment,
    coord_chart,
    experiment_is_monotone,
    great_circle,
    great_circle_arccos,
    sphere_chart,
    strong_equivalence_check,
)

coord = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: abs(v) > 1e-6)
vectors = st.lists(coord, min_size=2, max_size=6)


def mp_angle(p, q):
    mpmath.mp.dps = 50
    P = [mpmath.mpf(x) for x in p]
    Q = [mpmath.mpf(x) for x in q]
    num = mpmath.sqrt(sum((a - b) ** 2 for a, b in zip(P, Q)))
    den = mpmath.sqrt(sum((a + b) ** 2 for a, b in zip(P, Q)))
    return float(2 * mpmath.atan2(num, den))


def test_charts_basic():
    c = coord_chart((-2.0, 4.0, 1.0))
    assert c == ChartPoint(-1, (2.0, 0.5))
    with pytest.raises(ChartSingular):
        coord_chart((0.0, 1.0))
    s = sphere_chart((3.0, 4.0))
    assert s.coords == pytest.approx((0.6, 0.8))
    with pytest.raises(ZeroVector):
        sphere_chart((0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        SpherePoint((1.0, 1.0))


def test_sphere_chart_handles_extreme_magnitudes():
    assert sphere_chart((1e-300, 1e-300)).coords == pytest.approx((2 ** -0.5, 2 ** -0.5))
    assert sphere_chart((1e300, -1e300)).coords == pytest.approx((2 ** -0.5, -(2 ** -0.5)))


@settings(max_examples=200)
@given(beta=vectors, c=st.floats(1e-3, 1e3))
def test_charts_are_scale_invariant(beta, c):
    scaled = [c * b for b in beta]
    a, b = coord_chart(beta), coord_chart(scaled)
    assert a.sign == b.sign
    np.testing.assert_allclose(a.rest, b.rest, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(sphere_chart(beta).coords, sphere_chart(scaled).coords, rtol=1e-12, atol=1e-14)


@settings(max_examples=200)
@given(p=vectors, q=vectors)
def test_great_circle_against_mpmath(p, q):
    n = min(len(p), len(q))
    P, Q = sphere_chart(p[:n]), sphere_chart(q[:n])
    got = great_circle(P, Q)
    assert 0.0 <= got <= math.pi
    assert got == pytest.approx(mp_angle(P.coords, Q.coords), abs=1e-14, rel=1e-12)
    assert got == pytest.approx(great_circle_arccos(P, Q), abs=1e-7)
    assert great_circle(Q, P) == got


def test_great_circle_small_angle_precision():
    eps = 1e-10
    p, q = sphere_chart((1.0, 0.0)), sphere_chart((1.0, eps))
    assert great_circle(p, q) == pytest.approx(eps, rel=1e-9)
    # the arccos form cannot resolve this angle
    assert great_circle_arccos(p, q) == 0.0


def test_chart_distance_disconnected():
    assert chart_distance(coord_chart((1.0, 2.0)), coord_chart((-1.0, 2.0))) is Disconnected
    assert chart_distance(coord_chart((1.0, 2.0)), coord_chart((2.0, 2.0))) == 1.0
    assert str(Disconnected) == "Disconnected"
    assert pickle.loads(pickle.dumps(Disconnected)) is Disconnected


def test_chart_stretch_blows_up_near_excluded_hyperplane():
    assert chart_stretch((1.0, 0.0)) == 1.0
    assert chart_stretch((1e-3, 1.0)) == pytest.approx(1e6 + 1)


@pytest.mark.parametrize("D", [2, 5, 10])
def test_strong_equivalence(D):
    rep = strong_equivalence_check(20_000, D, D)
    assert rep.passed and rep.violations == 0


def test_strong_equivalence_is_deterministic():
    a = strong_equivalence_check(1000, 3, 9)
    b = strong_equivalence_check(1000, 3, 9)
    assert a == b


def test_within_sign_table():
    rows = convergence_experiment("within_sign", [1, 10, 1e3, 1e6])
    assert [r.M for r in rows] == [1, 10, 1e3, 1e6]
    assert rows[-1].chart == pytest.approx(1e6)
    assert rows[-1].great_circle <= 5e-7
    # angle between (1, M) and (1, 2M) is atan(2M) - atan(M)
    for r in rows:
        assert r.great_circle == pytest.approx(math.atan(2 * r.M) - math.atan(r.M), rel=1e-9)
    assert experiment_is_monotone(rows)


def test_cross_sign_table():
    rows = convergence_experiment("cross_sign", [1, 10, 1e3, 1e6])
    assert all(r.chart is Disconnected for r in rows)
    assert rows[2].great_circle <= 2e-3
    for r in rows:
        assert r.great_circle == pytest.approx(math.pi - 2 * math.atan(r.M), rel=1e-9)
    assert experiment_is_monotone(rows)


def test_experiment_validation():
    with pytest.raises(ValueError):
        convergence_experiment("diagonal", [1, 2])
    with pytest.raises(ValueError):
        convergence_experiment("within_sign", [10, 1])
    with pytest.raises(ValueError):
        strong_equivalence_check(10, 1, 0)
