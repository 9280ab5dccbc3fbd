import random
from fractions import Fraction

import pytest
import sympy

from fiberlab.polynomials import Polynomial, PolyParseError, parse_polynomial

from conftest import random_polynomial


def to_sympy(p, symbols):
    expr = sympy.Integer(0)
    for exps, c in p.raw_terms().items():
        term = sympy.Rational(c.numerator, c.denominator)
        for s, e in zip(symbols, exps):
            term *= s ** e
        expr += term
    return sympy.expand(expr)


class TestParsing:
    def test_two_squares(self):
        p = parse_polynomial("x1^2 + x2^2", 2)
        assert p.raw_terms() == {(2, 0): 1, (0, 2): 1}

    def test_mixed_signs(self):
        p = parse_polynomial("x1^2 - x1 - x2", 2)
        assert p.raw_terms() == {(2, 0): 1, (1, 0): -1, (0, 1): -1}

    def test_zero(self):
        assert parse_polynomial("0", 3).is_zero

    def test_rational_and_decimal_coefficients(self):
        p = parse_polynomial("3/2*x1 - 0.5*x2", 2)
        assert p.raw_terms() == {(1, 0): Fraction(3, 2), (0, 1): Fraction(-1, 2)}

    def test_parameter_slot(self):
        p = parse_polynomial("a^2*x1 - a*x1", 1, param="a")
        assert p.n_vars == 2
        assert p.raw_terms() == {(1, 2): 1, (1, 1): -1}

    def test_syntax_error_carries_position(self):
        with pytest.raises(PolyParseError) as err:
            parse_polynomial("x1 + + x2", 2)
        assert err.value.position == 5

    def test_variable_out_of_range(self):
        with pytest.raises(PolyParseError, match="out of range"):
            parse_polynomial("x1 + x5", 2)

    def test_unknown_name(self):
        with pytest.raises(PolyParseError, match="unknown variable"):
            parse_polynomial("x1 + y", 2)

    def test_roundtrip_is_identity(self):
        rng = random.Random(7)
        for _ in range(60):
            p = random_polynomial(rng, rng.randint(1, 4))
            assert parse_polynomial(p.to_text(), p.n_vars) == p

    def test_canonical_print_order(self):
        p = parse_polynomial("x2^2 + x1^2 + x1*x2 - x1", 2)
        assert p.to_text() == "x1^2 + x1*x2 + x2^2 - x1"


class TestCalculus:
    def test_gradient_two_squares(self):
        p = parse_polynomial("x1^2 + x2^2", 2)
        assert [g.to_text() for g in p.gradient()] == ["2*x1", "2*x2"]

    def test_gradient_constant(self):
        assert all(g.is_zero for g in Polynomial.constant(5, 2).gradient())

    def test_gradient_parabola(self):
        p = parse_polynomial("x1^2 - x1 - x2", 2)
        gx, gy = p.gradient()
        assert gx == parse_polynomial("2*x1 - 1", 2)
        assert gy == parse_polynomial("-1", 2)

    def test_gradient_against_sympy(self):
        rng = random.Random(13)
        for _ in range(40):
            n = rng.randint(1, 3)
            p = random_polynomial(rng, n)
            symbols = sympy.symbols(f"x1:{n + 1}")
            expr = to_sympy(p, symbols)
            for i, g in enumerate(p.gradient()):
                assert to_sympy(g, symbols) == sympy.expand(sympy.diff(expr, symbols[i]))


class TestHomogeneity:
    def test_quadric(self):
        assert parse_polynomial("x1^2 + x2^2", 2).homogeneity_degree() == 2

    def test_mixed(self):
        assert parse_polynomial("x1^2 - x1 - x2", 2).homogeneity_degree() is None

    def test_quartic(self):
        assert parse_polynomial("x1^3*x2 + x2^4", 2).homogeneity_degree() == 4

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            Polynomial.zero(2).homogeneity_degree()


class TestSubstitution:
    def test_semigroup_compose(self):
        # substituting the exponential semigroup map multiplies p by a^2
        p = parse_polynomial("x1^2 - x1 - x2", 2)
        g = [parse_polynomial("a*x1", 2, param="a"),
             parse_polynomial("a^2*x1 - a*x1 + a^2*x2", 2, param="a")]
        composed = p.substitute(g)
        a_sq = Polynomial.variable(3, 3) ** 2
        assert composed == p.lift(1) * a_sq

    def test_identity_substitution(self):
        rng = random.Random(3)
        p = random_polynomial(rng, 3, nonzero=True)
        identity = [Polynomial.variable(i, 3) for i in (1, 2, 3)]
        assert p.substitute(identity) == p

    def test_linear_substitution(self):
        p = Polynomial.variable(1, 2)
        g = [parse_polynomial("x1 + x2", 2), Polynomial.variable(2, 2)]
        assert p.substitute(g) == parse_polynomial("x1 + x2", 2)

    def test_substitute_against_sympy(self):
        rng = random.Random(29)
        for _ in range(15):
            p = random_polynomial(rng, 2, max_degree=4)
            g = [random_polynomial(rng, 2, max_degree=2) for _ in range(2)]
            symbols = sympy.symbols("x1 x2")
            expr = to_sympy(p, symbols)
            subbed = expr.subs(
                {symbols[i]: to_sympy(g[i], symbols) for i in range(2)},
                simultaneous=True)
            assert to_sympy(p.substitute(g), symbols) == sympy.expand(subbed)

    def test_arity_mismatch(self):
        p = parse_polynomial("x1 + x2", 2)
        with pytest.raises(ValueError):
            p.substitute([Polynomial.variable(1, 2)])


class TestRingOps:
    def test_distributivity_random(self):
        rng = random.Random(41)
        for _ in range(30):
            n = rng.randint(1, 3)
            p, q, r = (random_polynomial(rng, n) for _ in range(3))
            assert (p + q) * r == p * r + q * r

    def test_power(self):
        p = parse_polynomial("x1 + 1", 1)
        assert p ** 3 == parse_polynomial("x1^3 + 3*x1^2 + 3*x1 + 1", 1)

    def test_evaluate_exact(self):
        p = parse_polynomial("x1^2 - 1/2*x2", 2)
        assert p.evaluate([Fraction(1, 2), Fraction(1, 3)]) == Fraction(1, 12)

    def test_permute_vars(self):
        p = parse_polynomial("x1^2 + 2*x2", 2)
        assert p.permute_vars([2, 1]) == parse_polynomial("x2^2 + 2*x1", 2)

    def test_lift(self):
        p = parse_polynomial("x1*x2", 2)
        lifted = p.lift(1)
        assert lifted.n_vars == 3
        assert lifted.raw_terms() == {(1, 1, 0): 1}
