"""Canonical forms, graded arithmetic and substitution."""

import random
from fractions import Fraction

import pytest

from jetalg import (
    EVEN,
    ODD,
    BaseVar,
    Bundle,
    DiffPoly,
    JetVar,
    jet,
    mi,
    mul,
    normalize,
    partial,
    partial_left,
    substitute,
)
from jetalg.errors import EngineError

from randgen import rand_poly, std_frame

X, W, B = std_frame()


def jb(order=0):
    return jet(B, 1, {X: order} if order else {})


def jw(order=0):
    return jet(W, 1, {X: order} if order else {})


def var_b(order=0):
    return JetVar(B, 1, mi({X: order}) if order else ())


def var_w(order=0):
    return JetVar(W, 1, mi({X: order}) if order else ())


class TestNormalize:
    def test_one_odd_transposition(self):
        poly = normalize([(1, {}, [var_b(1), var_b(0)])])
        assert poly == -mul(jb(), jb(1))
        assert str(poly) == "-b*b_x"

    def test_odd_square_vanishes(self):
        assert normalize([(1, {}, [var_b(), var_b()])]).is_zero()
        assert normalize([(1, {}, [(var_b(), 2)])]).is_zero()

    def test_like_terms_merge(self):
        poly = normalize([(2, {}, [var_w()]), (3, {}, [var_w()])])
        assert poly == 5 * jw()

    def test_idempotent(self):
        rng = random.Random(7)
        for _ in range(50):
            poly = rand_poly(rng, [W, B])
            again = normalize(
                [(coeff, base, list(factors)) for (base, factors), coeff in poly.terms().items()]
            )
            assert again == poly


class TestAddMul:
    def test_cancellation(self):
        assert (jw() + (-jw())).is_zero()

    def test_anticommutativity_cancels(self):
        assert (mul(jb(), jb(1)) + mul(jb(1), jb())).is_zero()

    def test_constant_merge(self):
        assert (jw(1) + DiffPoly.const(1)) + jw(1) == 2 * jw(1) + DiffPoly.const(1)

    def test_odd_product_signs(self):
        assert mul(jb(), jb(1)) == -mul(jb(1), jb())
        assert mul(jw(), jb()) == mul(jb(), jw())

    def test_sign_count_example(self):
        # b_xxx * b has one odd transposition to canonical order.
        value = mul(jb(3), jb()) * Fraction(-1, 4)
        expected = Fraction(1, 4) * mul(jb(), jb(3))
        assert value == expected

    def test_ring_axioms_randomized(self):
        rng = random.Random(11)
        for _ in range(60):
            p = rand_poly(rng, [W, B])
            q = rand_poly(rng, [W, B])
            r = rand_poly(rng, [W, B])
            assert p + q == q + p
            assert (p + q) + r == p + (q + r)
            assert mul(mul(p, q), r) == mul(p, mul(q, r))
            assert mul(p, q + r) == mul(p, q) + mul(p, r)

    def test_supercommutativity_randomized(self):
        rng = random.Random(13)
        for _ in range(60):
            hp = rng.choice([EVEN, ODD])
            hq = rng.choice([EVEN, ODD])
            p = rand_poly(rng, [W, B], parity=hp)
            q = rand_poly(rng, [W, B], parity=hq)
            sign = -1 if (hp and hq) else 1
            assert mul(p, q) == sign * mul(q, p)

    def test_odd_nilpotency(self):
        rng = random.Random(17)
        for _ in range(40):
            p = rand_poly(rng, [W, B], parity=ODD)
            assert mul(p, p).is_zero()


class TestPartial:
    def test_even_power_rule(self):
        poly = mul(jw(), mul(jw(1), jw(1)))
        assert partial(poly, var_w(1)) == 2 * mul(jw(), jw(1))

    def test_right_derivative_moves_right(self):
        assert partial(mul(jb(), jb(1)), var_b()) == -jb(1)
        assert partial(mul(jb(), jb(1)), var_b(1)) == jb()

    def test_left_derivative(self):
        assert partial_left(mul(jb(), jb(1)), var_b()) == jb(1)
        assert partial_left(mul(jb(), jb(1)), var_b(1)) == -jb()

    def test_missing_variable(self):
        assert partial(jw(), var_b()).is_zero()

    def test_right_leibniz_randomized(self):
        # partial(f*g, v) = f*partial(g, v) + (-1)^(|v||g|) partial(f, v)*g
        rng = random.Random(19)
        cases = 0
        while cases < 50:
            f = rand_poly(rng, [W, B])
            g_parity = rng.choice([EVEN, ODD])
            g = rand_poly(rng, [W, B], parity=g_parity)
            if g.is_zero():
                continue
            v = var_b(rng.randint(0, 2))
            lhs = partial(mul(f, g), v)
            sign = -1 if g_parity == ODD else 1
            rhs = mul(f, partial(g, v)) + sign * mul(partial(f, v), g)
            assert lhs == rhs
            cases += 1


class TestParity:
    def test_homogeneous_and_mixed(self):
        assert jw().parity() == EVEN
        assert jb().parity() == ODD
        assert (jw() + jb()).parity() is None
        assert DiffPoly.zero().parity() == EVEN

    def test_odd_degrees(self):
        poly = mul(jb(), jb(1)) + jw()
        assert poly.odd_degrees() == {0, 2}


class TestSubstitute:
    def test_odd_for_even_pair(self):
        p = Bundle("p", 1, EVEN, (X,))
        q = Bundle("q", 1, EVEN, (X,))
        expr = mul(jet(p, 1, {X: 1}), jet(q)) - mul(jet(p), jet(q, 1, {X: 1}))
        value = substitute(expr, {p: jb(), q: jb()})
        assert value == -2 * mul(jb(), jb(1))

    def test_substitute_zero(self):
        p = Bundle("p", 1, EVEN, (X,))
        assert substitute(jet(p), {p: DiffPoly.zero()}).is_zero()

    def test_prolongation(self):
        p = Bundle("p", 1, EVEN, (X,))
        value = substitute(jet(p, 1, {X: 1}), {p: jw() ** 2})
        assert value == 2 * mul(jw(), jw(1))

    def test_unbound_bundles_pass_through(self):
        p = Bundle("p", 1, EVEN, (X,))
        expr = mul(jet(p), jw())
        assert substitute(expr, {p: DiffPoly.const(1)}) == jw()
        assert substitute(jw(), {p: jb()}) == jw()

    def test_odd_value_squares_to_zero(self):
        p = Bundle("p", 1, EVEN, (X,))
        assert substitute(jet(p) ** 2, {p: jb()}).is_zero()


class TestGuards:
    def test_bundle_validation(self):
        with pytest.raises(EngineError):
            Bundle("v", 0, EVEN, (X,))

    def test_jetvar_needs_dependence(self):
        z = BaseVar("z", 2)
        with pytest.raises(EngineError):
            JetVar(B, 1, mi({z: 1}))

    def test_component_range(self):
        with pytest.raises(EngineError):
            JetVar(W, 2)

    def test_rendering_deterministic(self):
        rng = random.Random(23)
        for _ in range(20):
            poly = rand_poly(rng, [W, B])
            rebuilt = normalize(
                [(coeff, base, list(factors)) for (base, factors), coeff in poly.terms().items()]
            )
            assert str(poly) == str(rebuilt)
