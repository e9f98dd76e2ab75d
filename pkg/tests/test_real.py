import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_ift import PolyMap, monomial_map
from padic_ift.errors import DimensionMismatch, ParameterOutsideQ, RadiusTooLarge, SingularAtBase
from padic_ift.real import (
    build_real_chart,
    continued_beta,
    inclusion_check,
    integral_identity_check,
    real_beta,
    real_solve,
)

quadratic_family = monomial_map(2, [{(0, 1): 1, (1, 2): 1}])  # (q, y) -> y + q y^2


def beta_closed_form(q):
    # root of q y^2 + y - 1 = 0 near 1, written to avoid cancellation
    return 2 / (1 + math.sqrt(1 + 4 * q))


@pytest.fixture(scope="module")
def chart():
    return build_real_chart(quadratic_family, [0], [1], 0.5, 1.5)


def test_chart_search_result(chart):
    assert chart.A.tolist() == [[1.0]]
    assert chart.R == 1.0 and chart.r == pytest.approx(0.45)
    assert chart.q_radius == 1 / 32
    assert chart.kappa < 0.5
    assert all(v <= 0.9 for v in chart.margins.values())


def test_singular_base_point():
    f = monomial_map(2, [{(0, 2): 1, (1, 0): 1}])
    with pytest.raises(SingularAtBase):
        build_real_chart(f, [0], [0], 0.5, 1.5)


def test_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        build_real_chart(monomial_map(1, [{(2,): 1}]), [0], [1], 0.5, 1.5)


def test_linear_chart_is_exact():
    f = PolyMap.from_dicts(2, [{(0, 1): 3, (1, 0): 1}])  # 3 y + q
    ch = build_real_chart(f, [0], [2], 0.5, 1.5)
    assert ch.kappa == 0
    for q in np.linspace(-ch.q_radius, ch.q_radius, 7):
        assert real_beta(ch, [q])[0] == pytest.approx(2 - q / 3, abs=1e-12)


def test_beta_at_base_and_outside_q(chart):
    assert real_beta(chart, [0])[0] == pytest.approx(1, abs=1e-12)
    with pytest.raises(ParameterOutsideQ):
        real_beta(chart, [0.1])


def test_beta_matches_closed_form_inside_q(chart):
    for q in np.linspace(-chart.q_radius, chart.q_radius, 11):
        assert real_beta(chart, [q])[0] == pytest.approx(beta_closed_form(q), abs=1e-9)


def test_continued_beta_reaches_far_parameters():
    for q in (0.1, 0.5, -0.1):
        value, charts = continued_beta(quadratic_family, [0], [1], 0.5, 1.5, [q])
        assert abs(value[0] - beta_closed_form(q)) <= 1e-9
        assert len(charts) > 1


def test_derivative_matches_central_difference(chart):
    assert chart.beta_derivative()[0, 0] == pytest.approx(-1)
    h = 1e-5
    diff = (real_beta(chart, [h])[0] - real_beta(chart, [-h])[0]) / (2 * h)
    assert abs(diff - chart.beta_derivative()[0, 0]) <= 1e-6


def test_second_derivative_stable_under_step_halving(chart):
    def second(h):
        return (real_beta(chart, [h])[0] - 2 * real_beta(chart, [0])[0] + real_beta(chart, [-h])[0]) / h**2

    d1, d2 = second(1e-3), second(5e-4)
    # beta''(0) = 4 for y + q y^2 = 1
    assert d1 == pytest.approx(4, rel=1e-3) and d2 == pytest.approx(4, rel=1e-3)
    assert abs(d1 / d2 - 1) <= 1e-3


def test_contraction_ratios_respect_kappa(chart):
    for q in (0.0, chart.q_radius / 2, -chart.q_radius):
        for target_shift in (0.0, 0.1, -0.2):
            sol = real_solve(chart, [q], chart.target + target_shift)
            assert all(r <= chart.kappa + 1e-8 for r in sol.ratios())


def test_scaled_distance_sandwich(chart):
    rng = random.Random(0)
    for _ in range(2000):
        q = [rng.uniform(-chart.q_radius, chart.q_radius)]
        y = [1 + rng.uniform(-chart.R, chart.R)]
        z = [1 + rng.uniform(-chart.R, chart.R)]
        d = abs(z[0] - y[0])
        s = chart.scaled_distance(q, y, z)
        assert chart.a * (1 - 1e-6) * d <= s <= chart.b * (1 + 1e-6) * d


def test_inclusions_hold(chart):
    rep = inclusion_check(chart, [0.01], [1.1], 0.2)
    assert rep.ok
    assert rep.worst_outer < chart.b and rep.worst_inner < 1
    with pytest.raises(RadiusTooLarge):
        inclusion_check(chart, [0.01], [1.0], 2 * chart.r)
    with pytest.raises(ParameterOutsideQ):
        inclusion_check(chart, [0.5], [1.0], 0.1)


def test_two_parameter_system():
    # (q1, q2, y1, y2) -> (y1 + q1 y2^2, y2 + q2 y1)
    f = PolyMap.from_dicts(4, [{(0, 0, 1, 0): 1, (1, 0, 0, 2): 1}, {(0, 0, 0, 1): 1, (0, 1, 1, 0): 1}])
    ch = build_real_chart(f, [0, 0], [1, 1], 0.5, 1.5)
    q = np.array([ch.q_radius, -ch.q_radius / 2])
    y = real_beta(ch, q)
    assert np.allclose(ch.value(q, y), ch.target, atol=1e-10)


def test_integral_identity_for_square():
    f = monomial_map(1, [{(2,): 1}])
    rng = random.Random(1)
    samples = [([rng.uniform(-5, 5)], [rng.uniform(-5, 5)], rng.uniform(-3, 3)) for _ in range(50)]
    rep = integral_identity_check(f, samples)
    assert rep.ok and rep.max_rel_error <= 1e-12


def test_integral_identity_at_t_zero_is_the_derivative():
    f = PolyMap.from_dicts(2, [{(3, 0): 1, (1, 2): -2}])
    rep = integral_identity_check(f, [([0.3, -1.2], [2.0, 0.5], 0.0)])
    assert rep.ok


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.integers(-9, 9), min_size=4, max_size=4),
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_integral_identity_for_cubics(coeffs, x, y, t):
    f = monomial_map(1, [{(d,): c for d, c in enumerate(coeffs)}])
    assert integral_identity_check(f, [([x], [y], t)]).ok
