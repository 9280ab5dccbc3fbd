import random
from fractions import Fraction

import pytest

from fiberlab.cohomology import (build_truncated, cohomology_dims, form_basis,
                                 jacobian_quotient_dim, monomials_upto,
                                 sparse_rank, stabilize)
from fiberlab.polynomials import Polynomial, parse_polynomial

from conftest import random_polynomial

CIRCLE = parse_polynomial("x1^2 + x2^2", 2)
CUBIC = parse_polynomial("x1^3 + x2^3", 2)
HYPERBOLA = parse_polynomial("x1^2 - x2^2", 2)
SPHERE = parse_polynomial("x1^2 + x2^2 + x3^2", 3)


class TestBases:
    def test_monomial_count_and_order(self):
        monos = monomials_upto(2, 2)
        assert monos == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_truncated_shapes_for_circle(self):
        tc = build_truncated(CIRCLE, 2)
        # 0-form slice: 6 monomials; image slice: 1-forms of degree <= 3,
        # i.e. 10 monomials times 2 covectors
        assert len(tc.domain_bases[0]) == 6
        assert len(tc.codomain_indices[0]) == 20
        assert len(tc.matrices[0]) == 6

    def test_one_variable_columns(self):
        # d_p(1) = -dx1 and d_p(x1) = dx1 - x1 dx1 for p = x1
        tc = build_truncated(parse_polynomial("x1", 1), 1)
        rows = tc.codomain_indices[0]
        col_const = tc.matrices[0][0]
        col_x1 = tc.matrices[0][1]
        r0 = rows[((1,), (0,))]
        r1 = rows[((1,), (1,))]
        assert col_const == {r0: -1}
        assert col_x1 == {r0: 1, r1: -1}

    def test_rejects_low_truncation(self):
        with pytest.raises(ValueError, match="below deg"):
            build_truncated(CUBIC, 2)

    def test_rejects_zero_polynomial(self):
        with pytest.raises(ValueError):
            build_truncated(Polynomial.zero(2), 3)

    def test_composite_is_zero_across_levels(self):
        # chain the level-D matrices into the level-(D + m - 1) ones
        rng = random.Random(11)
        for p in (CIRCLE, random_polynomial(rng, 2, max_degree=3, nonzero=True)):
            D = p.total_degree() + 1
            m = p.total_degree()
            tc1 = build_truncated(p, D)
            tc2 = build_truncated(p, D + m - 1)
            n = p.n_vars
            for k in range(n):
                # tc1 codomain basis of (k+1)-forms == tc2 domain basis
                assert form_basis(n, k + 1, D + m - 1) == list(tc2.domain_bases[k + 1])
                for col in tc1.matrices[k]:
                    acc = {}
                    for row, coeff in col.items():
                        for r2, c2 in tc2.matrices[k + 1][row].items():
                            acc[r2] = acc.get(r2, Fraction(0)) + coeff * c2
                    assert all(v == 0 for v in acc.values())


class TestDims:
    def test_circle(self):
        assert cohomology_dims(build_truncated(CIRCLE, 6)) == [0, 0, 1]

    def test_one_variable(self):
        assert cohomology_dims(build_truncated(parse_polynomial("x1", 1), 3)) == [0, 0]

    def test_constant_polynomial(self):
        # dp = 0, so the twisted complex is plain d: degree-zero cohomology is
        # the constants, and the numbers cannot depend on which constant
        dims3 = cohomology_dims(build_truncated(Polynomial.constant(3, 2), 3))
        dims7 = cohomology_dims(build_truncated(Polynomial.constant(7, 2), 3))
        assert dims3[0] == 1
        assert dims3 == dims7

    def test_stabilize_circle(self):
        report = stabilize(CIRCLE, 8)
        assert report.stabilized
        assert report.dims == (0, 0, 1)
        assert report.levels == tuple(range(2, 9))

    def test_stabilize_cubic(self):
        report = stabilize(CUBIC, 10)
        assert report.stabilized
        assert report.dims == (0, 0, 4)

    def test_stabilize_hyperbola(self):
        report = stabilize(HYPERBOLA, 8)
        assert report.stabilized
        assert report.dims == (0, 0, 1)

    def test_stabilize_rejects_small_ladder(self):
        with pytest.raises(ValueError):
            stabilize(CIRCLE, 3)

    def test_report_serializes(self):
        report = stabilize(CIRCLE, 8)
        data = report.to_json_dict()
        assert data["dims"] == [0, 0, 1]
        assert data["ladder"]["2"] == [0, 0, 1]
        assert data["stabilized"] is True

    def test_order_independence(self):
        rng = random.Random(19)
        p = parse_polynomial("x1^2 + x2^3 + x1*x3", 3)
        base = cohomology_dims(build_truncated(p, 5))
        for _ in range(3):
            perm = list(range(1, 4))
            rng.shuffle(perm)
            permuted = p.permute_vars(perm)
            assert cohomology_dims(build_truncated(permuted, 5)) == base


class TestJacobianQuotient:
    def test_circle(self):
        assert jacobian_quotient_dim(CIRCLE, 8) == 1

    def test_cubic(self):
        # quotient by (3 x1^2, 3 x2^2): classes 1, x1, x2, x1 x2
        assert jacobian_quotient_dim(CUBIC, 8) == 4

    def test_unit_ideal(self):
        assert jacobian_quotient_dim(parse_polynomial("x1", 1), 5) == 0

    def test_constant_has_zero_ideal(self):
        assert jacobian_quotient_dim(Polynomial.constant(2, 2), 3) == \
            len(monomials_upto(2, 3))

    def test_oracle_matches_top_twisted_dimension(self):
        cases = [(CIRCLE, 8), (CUBIC, 8), (HYPERBOLA, 8), (SPHERE, 6)]
        for p, dmax in cases:
            report = stabilize(p, dmax)
            assert report.stabilized
            assert report.dims[-1] == jacobian_quotient_dim(p, dmax)


class TestSparseRank:
    def test_known_rank(self):
        cols = [{0: Fraction(1), 1: Fraction(2)},
                {0: Fraction(2), 1: Fraction(4)},
                {1: Fraction(1)}]
        assert sparse_rank(cols) == 2

    def test_row_filter(self):
        cols = [{0: Fraction(1), 5: Fraction(1)}, {5: Fraction(2)}]
        assert sparse_rank(cols, keep_row=lambda r: r >= 5) == 1
