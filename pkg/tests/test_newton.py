import random
from fractions import Fraction

import pytest

from padic_ift import BallSpec, PolyMap, UltraVector, monomial_map
from padic_ift.errors import (
    MaxIterationsExceeded,
    NoContractiveRadius,
    NotInvertibleAtPrecision,
    NoUniformContraction,
    ParameterOutsideQ,
    RadiusTooLarge,
    TargetOutsideImage,
)
from padic_ift.newton import ball_image, build_chart, newton_solve, param_chart_family

from oracles import fixed_point_mod, hensel_digits, pnorm

square = monomial_map(1, [{(2,): 1}])
quadratic_family = monomial_map(2, [{(0, 1): 1, (1, 2): 1}])  # (q, y) -> y + q y^2

# frozen from hensel_digits([0, 0, 1], 2, 7, 3, 3) and the mod-49 fixed point below
SQRT2_MOD_343 = 108
PSI_7_1_MOD_49 = 43


def test_frozen_oracle_values():
    assert hensel_digits([0, 0, 1], 2, 7, 3, 3) == SQRT2_MOD_343
    assert fixed_point_mod(lambda y: 1 - 7 * y * y, 1, 49) == PSI_7_1_MOD_49
    assert (PSI_7_1_MOD_49 + 7 * PSI_7_1_MOD_49**2) % 49 == 1


def test_chart_for_square_at_three():
    chart = build_chart(square, [3], 7)
    assert chart.A.to_fractions() == ((6,),)
    assert chart.kappa < 1
    assert chart.radius_exp == 1


def test_singular_derivative_is_rejected():
    with pytest.raises(NotInvertibleAtPrecision):
        build_chart(square, [0], 7)


def test_explicit_non_contractive_radius_is_rejected():
    with pytest.raises(NoContractiveRadius):
        build_chart(square, [3], 7, radius_exp=0)
    with pytest.raises(NoContractiveRadius):
        build_chart(square, [3], 7, max_exp=0)


def test_linear_chart_certifies_at_any_radius():
    lin = PolyMap.linear([[2, 1], [0, 3]])
    chart = build_chart(lin, [0, 0], 7, min_exp=-5)
    assert chart.radius_exp == -5 and chart.sigma_cert.sigma == 0
    res = newton_solve(chart, [5, 6])
    assert res.iterations <= 2
    assert res.root == [Fraction(3, 2), 2]


def test_square_root_of_two():
    chart = build_chart(square, [3], 7)
    res = newton_solve(chart, [2])
    assert res.root.residues(3) == (SQRT2_MOD_343,)
    assert res.final_residual_valuation >= 32
    assert (res.root.entries[0] ** 2 - 2).is_zero
    assert res.gain_respected(chart.digit_gain)


def test_target_at_center_returns_center_at_once():
    chart = build_chart(square, [3], 7)
    res = newton_solve(chart, [9])
    assert res.iterations == 1 and res.root == [3]


def test_target_outside_image():
    chart = build_chart(square, [3], 7)
    with pytest.raises(TargetOutsideImage):
        newton_solve(chart, [3])


def test_budget_exhaustion_is_an_error():
    chart = build_chart(square, [3], 7)
    with pytest.raises(MaxIterationsExceeded):
        newton_solve(chart, [2], budget=3)


def test_solutions_do_not_depend_on_start():
    chart = build_chart(square, [3], 7)
    a = newton_solve(chart, [2]).root
    for start in ([10], [3 + 7 * 5], [Fraction(3 + 7 * 13)]):
        assert newton_solve(chart, [2], start=start).root == a


def test_ball_image_of_square_at_one():
    chart = build_chart(square, [1], 7)
    im = ball_image(chart, [1], 1)
    ball = BallSpec.around([1], 1, 7)
    image = {(y[0] ** 2 % 49,) for y in ball.residues(2)}
    assert image == im.residues(2)
    assert len(image) == 7
    assert im.contains([1 + 14]) and not im.contains([2])
    with pytest.raises(RadiusTooLarge):
        ball_image(chart, [1], 0)


def test_injective_and_isometric_on_residues():
    chart = build_chart(square, [1], 7)
    pts = chart.ball.residues(3)
    values = {}
    for y in pts:
        v = y[0] ** 2 % 343
        assert v not in values
        values[v] = y
    for i, y in enumerate(pts):
        for z in pts[i + 1:]:
            assert chart.scaled_distance(y, z) == pnorm(z[0] - y[0], 7)


def test_two_dimensional_chart_and_transcript_gain():
    f = PolyMap.from_dicts(2, [{(1, 0): 1, (0, 2): 7}, {(0, 1): 1, (2, 0): 7, (1, 1): 49}])
    chart = build_chart(f, [0, 0], 7)
    rng = random.Random(0)
    for _ in range(10):
        target = [7 ** chart.radius_exp * rng.randrange(1, 100) for _ in range(2)]
        res = newton_solve(chart, target)
        assert UltraVector(f.eval(res.root.entries)) == target
        assert res.gain_respected(chart.digit_gain)
        assert min(res.gains()) >= chart.digit_gain


def test_param_family_for_quadratic():
    fam = param_chart_family(quadratic_family, BallSpec.around([0], 1, 7), [1])
    assert fam.ball.radius_exp == 0
    assert fam.sigma_cert.sigma == Fraction(1, 7)
    assert fam.psi([7], [1]).residues(2) == (PSI_7_1_MOD_49,)
    with pytest.raises(ParameterOutsideQ):
        fam.psi([1], [1])


def test_param_family_q_independent_map():
    f = monomial_map(2, [{(0, 1): 2, (0, 2): 7}])
    fam = param_chart_family(f, BallSpec.around([0], 0, 7), [0])
    assert fam.psi([3], [14]) == fam.psi([5], [14])


def test_param_family_continuity_bound():
    fam = param_chart_family(quadratic_family, BallSpec.around([0], 1, 7), [1])
    rng = random.Random(2)
    inv_norm = 1  # A = 1
    a = fam.sigma_cert.a
    for _ in range(30):
        q1, q2 = 7 * rng.randrange(1, 300), 7 * rng.randrange(1, 300)
        z1, z2 = 1 + 7 * rng.randrange(300), 1 + 7 * rng.randrange(300)
        y1, y2 = fam.psi([q1], [z1]), fam.psi([q2], [z2])
        lhs = (y1 - y2).norm()
        rhs = inv_norm / a * max(pnorm(q1 - q2, 7), pnorm(z1 - z2, 7))
        assert lhs <= rhs


def test_no_uniform_contraction():
    # with |q| up to 7 the term 2 q y in the derivative outweighs A = 1 on every ball
    with pytest.raises(NoUniformContraction):
        param_chart_family(quadratic_family, BallSpec.around([0], -1, 7), [1], max_exp=3)
