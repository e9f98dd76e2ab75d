import random
from fractions import Fraction

import numpy as np
import pytest

from padic_ift import BallSpec, PolyMap, monomial_map
from padic_ift.dq import dq1
from padic_ift.errors import BallOutsideDomain
from padic_ift.strictness import (
    SigmaCertificate,
    canonical_json,
    sck_certify,
    sigma_bound,
    strict_diff_certify,
    uniform_diff_certify,
)

from oracles import pnorm, residue_pair_sigma

square = monomial_map(1, [{(2,): 1}])
cube = monomial_map(1, [{(3,): 1}])


def square_int(q, Y):
    return Y * Y


def test_sigma_of_square_at_one():
    c0 = sigma_bound(square, [[2]], BallSpec.around([1], 0, 7))
    assert c0.sigma == 1 and not c0.contractive
    c1 = sigma_bound(square, [[2]], BallSpec.around([1], 1, 7))
    assert c1.sigma == Fraction(1, 7) and c1.contractive
    assert c1.a == Fraction(6, 7) and c1.b == Fraction(8, 7)


def test_enumeration_agrees_with_brute_force_oracle():
    for k, expected in [(0, 1), (1, Fraction(1, 7)), (2, Fraction(1, 49))]:
        ball = BallSpec.around([1], k, 7)
        enum = sigma_bound(square, [[2]], ball, method="enumeration", enum_precision=3)
        oracle = residue_pair_sigma(square_int, [[2]], ball.residues(3), 7)
        assert enum.sigma == oracle == expected


def test_coefficient_bound_is_sound_for_random_maps():
    rng = random.Random(4)
    for _ in range(8):
        coeffs = {(d,): rng.randint(-6, 6) for d in range(1, 4)}
        f = monomial_map(1, [coeffs])
        x = rng.randrange(5)
        A = f.jacobian_at((x,))
        for k in (0, 1):
            ball = BallSpec.around([x], k, 5)
            cert = sigma_bound(f, A, ball)

            def f_int(q, Y, c=coeffs):
                return sum(int(v) * Y**e[0] for e, v in c.items())

            oracle = residue_pair_sigma(f_int, [[int(A[0][0])]], ball.residues(3), 5)
            assert oracle <= cert.sigma


def test_sigma_monotone_in_radius():
    f = monomial_map(2, [{(2, 0): 1, (0, 1): 3}, {(1, 1): 1, (0, 3): 2}])
    A = f.jacobian_at((1, 2))
    sigmas = [sigma_bound(f, A, BallSpec.around([1, 2], k, 5)).sigma for k in range(5)]
    assert sigmas == sorted(sigmas, reverse=True)


def test_ball_outside_domain():
    with pytest.raises(BallOutsideDomain):
        sigma_bound(square, [[2]], BallSpec.around([1], 0, 7), domain=BallSpec.around([1], 1, 7))


def test_certificate_json_round_trip_is_byte_equal():
    cert = sigma_bound(square, [[6]], BallSpec.around([3], 1, 7))
    again = SigmaCertificate.from_json(cert.to_json())
    assert canonical_json(again.to_json()) == canonical_json(cert.to_json())


def test_strict_radius_for_square_and_cube():
    r = strict_diff_certify(square, [1], Fraction(1, 7), 7)
    assert r.radius_exp == 1 and r.certificate.sigma <= Fraction(1, 7)
    assert "radius_exp" in r.recipe
    for e in (1, 2, 3):
        rc = strict_diff_certify(cube, [0], Fraction(1, 7**e), 7)
        assert rc.certificate.sigma <= Fraction(1, 7**e)
        # one step smaller would fail, unless the ball is already the unit ball
        if rc.radius_exp > 0:
            wider = sigma_bound(cube, [[0]], BallSpec.around([0], rc.radius_exp - 1, 7), a_inv_norm=None)
            assert wider.sigma > Fraction(1, 7**e)


def test_uniform_differentiability_ladder_for_square():
    ball = BallSpec.around([0], 0, 7)
    deltas = {}
    for e in (1, 2, 3):
        cert = uniform_diff_certify(square, ball, Fraction(1, 7**e))
        deltas[e] = cert.delta
        assert cert.bound < Fraction(1, 7**e)
    assert deltas == {1: Fraction(1, 7), 2: Fraction(1, 49), 3: Fraction(1, 343)}
    # shrinking eps by 1/p shrinks delta by at most 1/p
    assert deltas[2] >= deltas[1] / 7 and deltas[3] >= deltas[2] / 7


def test_uniform_bound_sound_on_residue_triples():
    ball = BallSpec.around([0], 0, 5)
    cert = uniform_diff_certify(cube, ball, Fraction(1, 5))
    j = cert.radius_exp
    rng = random.Random(0)
    for _ in range(2000):
        x = rng.randrange(125)
        y = x + 5**j * rng.randrange(25)
        z = x + 5**j * rng.randrange(25)
        if y == z:
            continue
        defect = z**3 - y**3 - 3 * x * x * (z - y)
        assert pnorm(defect, 5) < cert.eps * pnorm(z - y, 5)


def test_sck_linear_map_has_zero_decay():
    lin = PolyMap.linear([[2, 1], [0, 3]])
    rep = sck_certify(lin, BallSpec.around([0, 0], 0, 7), 3, samples=8)
    assert rep.passed
    assert all(level.decay_constant == 0 for level in rep.levels)


def test_sck_square_and_composite_quartic():
    ball = BallSpec.around([0], 0, 7)
    rep = sck_certify(square, ball, 2, samples=16)
    assert rep.passed and [lv.n_vars for lv in rep.levels] == [1, 3]
    assert dq1(square) == monomial_map(3, [{(1, 1, 0): 2, (0, 2, 1): 1}])
    quartic = monomial_map(1, [{(4,): 1}])
    direct = sck_certify(quartic, ball, 2, samples=16)
    composed = sck_certify(square.compose(square), ball, 2, samples=16)
    assert direct.passed and composed.passed
    assert direct.to_json() == composed.to_json()


def test_composite_derivative_is_product_of_derivatives():
    rng = random.Random(9)
    f = PolyMap.from_dicts(2, [{(2, 0): 1, (0, 1): 2}, {(1, 1): 3}])
    g = PolyMap.from_dicts(2, [{(1, 0): 1, (0, 2): 1}, {(3, 0): Fraction(1, 2)}])
    gf = g.compose(f)
    for _ in range(10):
        x = (Fraction(rng.randrange(-20, 20)), Fraction(rng.randrange(-20, 20)))
        J = np.array(gf.jacobian_at(x), dtype=object)
        Jg = np.array(g.jacobian_at(f.eval(x)), dtype=object)
        Jf = np.array(f.jacobian_at(x), dtype=object)
        assert (J == Jg.dot(Jf)).all()


def test_strict_derivative_equals_differential():
    f = PolyMap.from_dicts(2, [{(2, 1): 1, (0, 1): 2}, {(1, 1): 3, (3, 0): 1}])
    x = (Fraction(2), Fraction(-1))
    jac = f.jacobian_at(x)
    g = dq1(f)
    for col in range(2):
        e = tuple(Fraction(int(i == col)) for i in range(2))
        assert g.eval(x + e + (0,)) == tuple(jac[l][col] for l in range(2))
