import random
from fractions import Fraction

import pytest

from padic_ift import BallSpec, PolyMap, UltraVector, monomial_map
from padic_ift.errors import (
    NoAdmissibleRadii,
    NotInvertibleAtPrecision,
    ParameterOutsideQ,
    PreconditionError,
    RadiusTooLarge,
    TargetOutsideImage,
)
from padic_ift.implicit import (
    ball_image_param,
    beta,
    beta_solve,
    build_implicit_chart,
    delta_targets,
    psi,
    sample_pairs,
    solve_target,
    theta_roundtrip,
)
from padic_ift.newton import newton_solve

from oracles import fixed_point_mod

quadratic_family = monomial_map(2, [{(0, 1): 1, (1, 2): 1}])  # (q, y) -> y + q y^2
HALF, THREE_HALVES = Fraction(1, 2), Fraction(3, 2)


@pytest.fixture(scope="module")
def chart():
    return build_implicit_chart(quadratic_family, [0], [1], HALF, THREE_HALVES, 7)


def test_chart_constants(chart):
    assert chart.A.to_fractions() == ((1,),)
    assert chart.c == HALF
    assert chart.Q.radius_exp == 1 and chart.B.radius_exp == 0
    assert chart.sigma_cert.sigma == Fraction(1, 7) <= chart.c
    assert chart.delta == HALF * 1 / 2


def test_beta_values(chart):
    assert beta(chart, [0]) == [1]
    b7 = beta(chart, [7])
    assert b7.residues(2) == (fixed_point_mod(lambda y: 1 - 7 * y * y, 1, 49),) == (43,)
    res = beta_solve(chart, [49])
    assert res.final_residual_valuation >= chart.precision
    with pytest.raises(ParameterOutsideQ):
        beta(chart, [1])


def test_beta_is_unique(chart):
    rng = random.Random(0)
    for _ in range(10):
        q = [7 * rng.randrange(1, 1000)]
        sl = chart.slice(q)
        a = newton_solve(sl, chart.target).root
        b = newton_solve(sl, chart.target, start=[1 + 7 * rng.randrange(1, 1000)]).root
        c = newton_solve(sl, chart.target, start=[rng.randrange(2, 1000)]).root
        assert a == b == c


def test_image_is_v_for_every_q(chart):
    rng = random.Random(1)
    for _ in range(20):
        q = [7 * rng.randrange(1000)]
        y = [rng.randrange(1, 10**6)]
        value = UltraVector.of(quadratic_family.eval(tuple(Fraction(v) for v in q + y)), 7)
        assert chart.V.contains(value)


def test_theta_round_trip(chart):
    rep = theta_roundtrip(chart, sample_pairs(chart, 100))
    assert rep.ok and rep.min_valuation >= chart.precision


def test_round_trip_on_every_shell(chart):
    pairs = sample_pairs(chart, 12, seed=3)
    shells = {(UltraVector.of(y, 7) - chart.B.center).valuation() for _, y in pairs}
    assert {0, 1, 2, 3, 4, 5} <= shells
    assert theta_roundtrip(chart, pairs).ok


def test_identity_in_y_round_trips():
    f = monomial_map(2, [{(0, 1): 1}])
    ch = build_implicit_chart(f, [0], [0], HALF, THREE_HALVES, 5)
    assert ch.sigma_cert.sigma == 0
    assert theta_roundtrip(ch, sample_pairs(ch, 20)).ok


def test_delta_guarantee(chart):
    qs = [q for q, _ in sample_pairs(chart, 20, seed=9)]
    for v in delta_targets(chart, 20):
        assert chart.in_delta_ball(v)
        for q in qs:
            y = solve_target(chart, q, v)
            assert chart.B.contains(y)


def test_beta_continuity_modulus(chart):
    rng = random.Random(4)
    for _ in range(20):
        q1, q2 = 7 * rng.randrange(1, 500), 7 * rng.randrange(1, 500)
        b1, b2 = beta(chart, [q1]), beta(chart, [q2])
        f1 = UltraVector.of(quadratic_family.eval((Fraction(q1),) + b2.entries), 7)
        f2 = UltraVector.of(quadratic_family.eval((Fraction(q2),) + b2.entries), 7)
        assert (b1 - b2).norm() <= (f1 - f2).norm()


def test_ball_image_param_matches_residues(chart):
    im = ball_image_param(chart, [7], [1], 1)
    ball = BallSpec.around([1], 1, 7)
    actual = {((y[0] + 7 * y[0] ** 2) % 49,) for y in ball.residues(2)}
    assert actual == im.residues(2)
    with pytest.raises(RadiusTooLarge):
        ball_image_param(chart, [7], [1], -1)


def test_linear_chart():
    f = monomial_map(2, [{(0, 1): 2}])
    ch = build_implicit_chart(f, [0], [3], Fraction(1, 4), 4, 7)
    assert ch.sigma_cert.sigma == 0
    assert beta(ch, [5]) == [3]
    assert psi(ch, [5], [8]) == [4]


def test_constants_are_checked():
    with pytest.raises(PreconditionError):
        build_implicit_chart(quadratic_family, [0], [1], Fraction(3, 2), 2, 7)
    with pytest.raises(PreconditionError):
        build_implicit_chart(quadratic_family, [0], [1], HALF, 1, 7)


def test_singular_base_point():
    f = monomial_map(2, [{(0, 2): 1, (1, 0): 1}])
    with pytest.raises(NotInvertibleAtPrecision):
        build_implicit_chart(f, [0], [0], HALF, THREE_HALVES, 7)


def test_no_admissible_radii_when_search_is_capped():
    f = monomial_map(2, [{(0, 1): 1, (1, 2): 1, (0, 3): 1}])
    with pytest.raises(NoAdmissibleRadii):
        build_implicit_chart(f, [0], [1], HALF, THREE_HALVES, 7, max_exp=0)


def test_targets_outside_v_are_refused(chart):
    with pytest.raises(TargetOutsideImage):
        solve_target(chart, [0], [Fraction(1, 7)])


def test_two_parameter_two_unknown_system():
    # (q1, q2, y1, y2) -> (y1 + q1 y2^2, y2 + q2 y1 y2)
    f = PolyMap.from_dicts(4, [{(0, 0, 1, 0): 1, (1, 0, 0, 2): 1}, {(0, 0, 0, 1): 1, (0, 1, 1, 1): 1}])
    ch = build_implicit_chart(f, [0, 0], [1, 1], HALF, THREE_HALVES, 5)
    b = beta(ch, [5, 25])
    assert UltraVector.of(f.eval((Fraction(5), Fraction(25)) + b.entries), 5) == ch.target
    assert theta_roundtrip(ch, sample_pairs(ch, 10)).ok
