"""Twisted de Rham cohomology of polynomial forms, by degree truncation.

The differential ``d_p = d - dp`` is not homogeneous in coefficient degree
(d lowers it by one, dp raises it by deg(p) - 1), so kernels and images live
in different degree slices.  At truncation level D the reported dimension in
form degree k is

    dim ker(d_p on the coefficient-degree <= D slice of k-forms)
      - dim( d_p(degree <= D (k-1)-forms)  intersected with the <= D slice )

Both terms are monotone in D; a ladder of levels that agrees three times in
a row is reported as stabilized.  Stability is evidence, not proof: no
effective truncation bound is claimed.

All ranks are computed by exact fraction-free elimination over the
rationals; no floating point enters this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .forms import PolyForm, twisted_differential
from .polynomials import Polynomial, grlex_key

Exponents = Tuple[int, ...]
IndexSubset = Tuple[int, ...]
BasisElement = Tuple[IndexSubset, Exponents]  # covector subset, monomial
SparseColumn = Dict[int, Fraction]


def monomials_upto(n_vars: int, max_degree: int) -> List[Exponents]:
    """All exponent vectors of total degree <= max_degree, graded-lex order."""
    if max_degree < 0:
        return []
    out: List[Exponents] = []

    def rec(prefix: list, remaining: int, slot: int) -> None:
        if slot == n_vars - 1:
            for e in range(remaining + 1):
                out.append(tuple(prefix + [e]))
            return
        for e in range(remaining + 1):
            rec(prefix + [e], remaining - e, slot + 1)

    rec([], max_degree, 0)
    out.sort(key=grlex_key)
    return out


def _subsets(n_vars: int, size: int) -> List[IndexSubset]:
    from itertools import combinations
    return [tuple(c) for c in combinations(range(1, n_vars + 1), size)]


def form_basis(n_vars: int, form_degree: int, max_coeff_degree: int) -> List[BasisElement]:
    """Ordered monomial-times-covector basis of the degree slice."""
    monos = monomials_upto(n_vars, max_coeff_degree)
    return [(subset, exps)
            for subset in _subsets(n_vars, form_degree)
            for exps in monos]


def sparse_rank(columns: Sequence[SparseColumn], keep_row=None) -> int:
    """Exact rank by fraction-free column elimination.

    Pivots are chosen as the first (smallest-index) nonzero row of each
    column, in input order, so the computation is deterministic.  If
    `keep_row` is given, the matrix is first restricted to rows where
    keep_row(row) is true.
    """
    pivots: Dict[int, SparseColumn] = {}
    rank = 0
    for col in columns:
        if keep_row is None:
            current = dict(col)
        else:
            current = {r: v for r, v in col.items() if keep_row(r)}
        while current:
            r = min(current)
            pivot = pivots.get(r)
            if pivot is None:
                scale = current[r]
                pivots[r] = {rr: vv / scale for rr, vv in current.items()}
                rank += 1
                break
            factor = current.pop(r)
            for rr, vv in pivot.items():
                if rr == r:
                    continue
                nv = current.get(rr, 0) - factor * vv
                if nv:
                    current[rr] = nv
                else:
                    current.pop(rr, None)
    return rank


@dataclass(frozen=True)
class TruncatedComplex:
    """Matrices of d_p between degree-truncated form slices.

    For each form degree k, `matrices[k]` maps the coefficient-degree <= D
    slice of k-forms into the <= D + deg(p) - 1 slice of (k+1)-forms; columns
    follow `domain_bases[k]`, row indices follow `codomain_indices[k]`.
    """

    polynomial: Polynomial
    truncation: int
    poly_degree: int
    domain_bases: Tuple[Tuple[BasisElement, ...], ...]
    codomain_indices: Tuple[Dict[BasisElement, int], ...]
    matrices: Tuple[Tuple[SparseColumn, ...], ...]

    @property
    def n_vars(self) -> int:
        return self.polynomial.n_vars


def build_truncated(p: Polynomial, truncation: int) -> TruncatedComplex:
    """Assemble the truncated twisted complex column by column.

    Truncation below deg(p) is rejected: it would silently drop dp-wedge
    terms.  Constant p is accepted (dp = 0, the complex is plain d).
    """
    if p.is_zero:
        raise ValueError("the twisted complex needs a nonzero polynomial")
    m = p.total_degree()
    if truncation < m:
        raise ValueError(f"truncation {truncation} below deg(p) = {m}")
    n = p.n_vars
    codomain_bound = truncation + m - 1

    domain_bases = []
    codomain_indices = []
    matrices = []
    for k in range(n + 1):
        basis = form_basis(n, k, truncation)
        codomain = form_basis(n, k + 1, codomain_bound) if k < n else []
        index = {elem: i for i, elem in enumerate(codomain)}
        cols: List[SparseColumn] = []
        for subset, exps in basis:
            image = twisted_differential(
                PolyForm.basis(n, subset, Polynomial(n, {exps: 1})), p)
            col: SparseColumn = {}
            for out_subset, poly in image.components():
                for out_exps, coeff in poly.raw_terms().items():
                    col[index[(out_subset, out_exps)]] = coeff
            cols.append(col)
        domain_bases.append(tuple(basis))
        codomain_indices.append(index)
        matrices.append(tuple(cols))

    return TruncatedComplex(p, truncation, m, tuple(domain_bases),
                            tuple(codomain_indices), tuple(matrices))


def cohomology_dims(tc: TruncatedComplex) -> List[int]:
    """Per-form-degree dimension estimates at this truncation level.

    The image of d_p from the level below is intersected back into the <= D
    slice by comparing its rank with the rank of its projection onto the
    excess rows (codomain coefficient degree > D).
    """
    n = tc.n_vars
    D = tc.truncation
    dims: List[int] = []
    prev_image_in_slice = 0
    for k in range(n + 1):
        cols = tc.matrices[k]
        rank = sparse_rank(cols)
        kernel = len(tc.domain_bases[k]) - rank
        dims.append(kernel - prev_image_in_slice)
        if k < n:
            # prepare the image term for degree k+1
            excess = {i for (_, exps), i in tc.codomain_indices[k].items()
                      if sum(exps) > D}
            escaped = sparse_rank(cols, keep_row=excess.__contains__) if excess else 0
            prev_image_in_slice = rank - escaped
    return dims


@dataclass(frozen=True)
class CohomologyReport:
    """Truncation-ladder record: per-k dimensions at each level.

    `stabilized` is set only when the last three ladder levels agree for
    every k; the flag is evidence of stability, never a proof of exactness.
    """

    polynomial_text: str
    levels: Tuple[int, ...]
    dims_by_level: Tuple[Tuple[int, ...], ...]
    stabilized: bool
    dims: Tuple[int, ...]
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        return {
            "polynomial": self.polynomial_text,
            "ladder": {str(level): list(dims)
                       for level, dims in zip(self.levels, self.dims_by_level)},
            "levels": list(self.levels),
            "stabilized": self.stabilized,
            "dims": list(self.dims),
            "warnings": list(self.warnings),
        }


def stabilize(p: Polynomial, max_truncation: int) -> CohomologyReport:
    """Run the truncation ladder D = deg(p), ..., max_truncation."""
    if p.is_zero:
        raise ValueError("the twisted complex needs a nonzero polynomial")
    start = p.total_degree()
    if max_truncation < start + 2:
        raise ValueError(f"max_truncation must be at least deg(p) + 2 = {start + 2}")
    levels = tuple(range(start, max_truncation + 1))
    ladder = tuple(tuple(cohomology_dims(build_truncated(p, D))) for D in levels)
    stabilized = len(ladder) >= 3 and ladder[-1] == ladder[-2] == ladder[-3]
    warnings = ()
    if not stabilized:
        warnings = ("truncation ladder did not stabilize: "
                    "three consecutive levels never agreed",)
    return CohomologyReport(p.to_text(), levels, ladder, stabilized,
                            ladder[-1], warnings)


def jacobian_quotient_dim(p: Polynomial, truncation: int) -> int:
    """Dimension of polynomials of degree <= D modulo the gradient-ideal slice.

    The slice is spanned by all monomial multiples of the partials of p that
    stay within degree D.  For p with isolated critical points this
    stabilizes to the total Milnor number, which identifies the top twisted
    cohomology; it serves as an independent oracle for `stabilize`.
    """
    if p.is_zero:
        raise ValueError("jacobian quotient of the zero polynomial is undefined")
    if truncation < p.total_degree():
        raise ValueError(f"truncation {truncation} below deg(p) = {p.total_degree()}")
    n = p.n_vars
    monos = monomials_upto(n, truncation)
    index = {e: i for i, e in enumerate(monos)}
    columns: List[SparseColumn] = []
    for i in range(1, n + 1):
        g = p.partial(i)
        if g.is_zero:
            continue
        room = truncation - g.total_degree()
        for beta in monomials_upto(n, room):
            shift = Polynomial(n, {beta: 1}) * g
            columns.append({index[e]: c for e, c in shift.raw_terms().items()})
    return len(monos) - sparse_rank(columns)
