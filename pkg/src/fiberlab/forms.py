"""Differential forms with polynomial coefficients and their exterior algebra.

Implements the operators the twisted complex is built from: exterior
derivative, wedge product, the twisted differential ``d - dp``, interior
product and Lie derivative along the Euler field ``sum x_i d/dx_i``, and
formal scaling pullbacks ``x_i -> s^{w_i} x_i``.  Everything is exact; forms
are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

from .polynomials import Polynomial, Scalar

IndexSubset = Tuple[int, ...]


def _validate_subset(subset: IndexSubset, degree: int, n_vars: int) -> IndexSubset:
    subset = tuple(int(i) for i in subset)
    if len(subset) != degree:
        raise ValueError(f"index subset {subset} has size {len(subset)}, expected {degree}")
    if any(not 1 <= i <= n_vars for i in subset):
        raise ValueError(f"index subset {subset} out of range 1..{n_vars}")
    if any(a >= b for a, b in zip(subset, subset[1:])):
        raise ValueError(f"index subset {subset} must be strictly increasing")
    return subset


class PolyForm:
    """Degree-k form: map from strictly increasing index subsets to polynomials."""

    __slots__ = ("n_vars", "degree", "_components")

    def __init__(self, n_vars: int, degree: int,
                 components: Optional[Mapping[IndexSubset, Polynomial]] = None):
        if n_vars < 1:
            raise ValueError("n_vars must be a positive integer")
        if not 0 <= degree <= n_vars:
            raise ValueError(f"form degree {degree} outside [0, {n_vars}]")
        clean: Dict[IndexSubset, Polynomial] = {}
        if components:
            for subset, poly in components.items():
                subset = _validate_subset(subset, degree, n_vars)
                if not isinstance(poly, Polynomial):
                    poly = Polynomial.constant(poly, n_vars)
                if poly.n_vars != n_vars:
                    raise ValueError("component polynomial lives in the wrong ring")
                if poly.is_zero:
                    continue
                if subset in clean:
                    poly = clean[subset] + poly
                    if poly.is_zero:
                        del clean[subset]
                        continue
                clean[subset] = poly
        object.__setattr__(self, "n_vars", n_vars)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "_components", clean)

    def __setattr__(self, name, value):
        raise AttributeError("PolyForm is immutable")

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, n_vars: int, degree: int) -> "PolyForm":
        return cls(n_vars, min(degree, n_vars))

    @classmethod
    def from_polynomial(cls, poly: Polynomial) -> "PolyForm":
        return cls(poly.n_vars, 0, {(): poly})

    @classmethod
    def basis(cls, n_vars: int, subset: Sequence[int],
              coefficient: Union[Polynomial, Scalar] = 1) -> "PolyForm":
        """The form coefficient * dx_{i1} ^ ... ^ dx_{ik}."""
        subset = tuple(subset)
        if not isinstance(coefficient, Polynomial):
            coefficient = Polynomial.constant(coefficient, n_vars)
        return cls(n_vars, len(subset), {subset: coefficient})

    # -- inspection ----------------------------------------------------------

    def components(self) -> list:
        return sorted(self._components.items())

    def component(self, subset: Sequence[int]) -> Polynomial:
        return self._components.get(tuple(subset), Polynomial.zero(self.n_vars))

    @property
    def is_zero(self) -> bool:
        return not self._components

    def coefficient_degree(self) -> int:
        """Max total degree over component polynomials; -1 for the zero form."""
        if not self._components:
            return -1
        return max(p.total_degree() for p in self._components.values())

    # -- linear structure ------------------------------------------------------

    def _check_compatible(self, other: "PolyForm") -> None:
        if self.n_vars != other.n_vars:
            raise ValueError(f"mismatched n_vars: {self.n_vars} vs {other.n_vars}")
        if self.degree != other.degree:
            raise ValueError(f"mismatched form degrees: {self.degree} vs {other.degree}")

    def __add__(self, other):
        if not isinstance(other, PolyForm):
            return NotImplemented
        self._check_compatible(other)
        res = dict(self._components)
        for subset, poly in other._components.items():
            cur = res.get(subset)
            s = poly if cur is None else cur + poly
            if s.is_zero:
                res.pop(subset, None)
            else:
                res[subset] = s
        return PolyForm(self.n_vars, self.degree, res)

    def __neg__(self):
        return PolyForm(self.n_vars, self.degree,
                        {s: -p for s, p in self._components.items()})

    def __sub__(self, other):
        if not isinstance(other, PolyForm):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        """Multiplication by a scalar or polynomial coefficient."""
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other, self.n_vars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return PolyForm(self.n_vars, self.degree,
                        {s: p * other for s, p in self._components.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PolyForm):
            return NotImplemented
        return (self.n_vars == other.n_vars and self.degree == other.degree
                and self._components == other._components)

    def __hash__(self):
        return hash((self.n_vars, self.degree, frozenset(self._components.items())))

    def __bool__(self):
        return bool(self._components)

    # -- evaluation ------------------------------------------------------------

    def evaluate(self, point: Sequence) -> Dict[IndexSubset, float]:
        """Component values at a point (missing subsets are zero)."""
        return {s: p.evaluate(point) for s, p in self._components.items()}

    def __str__(self):
        if not self._components:
            return "0"
        parts = []
        for subset, poly in self.components():
            dx = "^".join(f"dx{i}" for i in subset) if subset else ""
            parts.append(f"({poly}) {dx}".strip())
        return " + ".join(parts)

    def __repr__(self):
        return f"PolyForm({self.n_vars}, {self.degree}, {str(self)!r})"


# -- exterior algebra ----------------------------------------------------------


def _insert_index(i: int, subset: IndexSubset) -> Tuple[int, IndexSubset]:
    """Sign and sorted subset for dx_i ^ dx_subset; i must not be in subset."""
    pos = 0
    while pos < len(subset) and subset[pos] < i:
        pos += 1
    sign = -1 if pos % 2 else 1
    return sign, subset[:pos] + (i,) + subset[pos:]


def _merge_sign(left: IndexSubset, right: IndexSubset) -> int:
    """Parity of the shuffle sorting left+right (disjoint, each sorted)."""
    inversions = 0
    for i in left:
        for j in right:
            if j < i:
                inversions += 1
    return -1 if inversions % 2 else 1


def exterior_derivative(omega: PolyForm) -> PolyForm:
    """d(omega); top-degree input maps to the zero form."""
    n = omega.n_vars
    if omega.degree >= n:
        return PolyForm.zero(n, n)
    res: Dict[IndexSubset, Polynomial] = {}
    for subset, poly in omega._components.items():
        taken = set(subset)
        for i in range(1, n + 1):
            if i in taken:
                continue
            d = poly.partial(i)
            if d.is_zero:
                continue
            sign, new = _insert_index(i, subset)
            term = d if sign > 0 else -d
            cur = res.get(new)
            s = term if cur is None else cur + term
            if s.is_zero:
                res.pop(new, None)
            else:
                res[new] = s
    return PolyForm(n, omega.degree + 1, res)


def wedge(alpha: PolyForm, beta: PolyForm) -> PolyForm:
    """Wedge product; degrees exceeding n_vars give the zero form."""
    if alpha.n_vars != beta.n_vars:
        raise ValueError(f"mismatched n_vars: {alpha.n_vars} vs {beta.n_vars}")
    n = alpha.n_vars
    k = alpha.degree + beta.degree
    if k > n:
        return PolyForm.zero(n, n)
    res: Dict[IndexSubset, Polynomial] = {}
    for s1, p1 in alpha._components.items():
        set1 = set(s1)
        for s2, p2 in beta._components.items():
            if set1 & set(s2):
                continue
            sign = _merge_sign(s1, s2)
            merged = tuple(sorted(s1 + s2))
            term = p1 * p2
            if sign < 0:
                term = -term
            cur = res.get(merged)
            s = term if cur is None else cur + term
            if s.is_zero:
                res.pop(merged, None)
            else:
                res[merged] = s
    return PolyForm(n, k, res)


def twisted_differential(omega: PolyForm, p: Polynomial) -> PolyForm:
    """d(omega) - dp ^ omega.  Squares to zero for any p."""
    if omega.n_vars != p.n_vars:
        raise ValueError(f"mismatched n_vars: form has {omega.n_vars}, polynomial has {p.n_vars}")
    dp = exterior_derivative(PolyForm.from_polynomial(p))
    return exterior_derivative(omega) - wedge(dp, omega)


def interior_product_euler(omega: PolyForm) -> PolyForm:
    """Contraction with the Euler field: dx_i picks up the coefficient x_i."""
    n = omega.n_vars
    if omega.degree == 0:
        return PolyForm.zero(n, 0)
    res: Dict[IndexSubset, Polynomial] = {}
    for subset, poly in omega._components.items():
        for t, i in enumerate(subset):
            term = poly * Polynomial.variable(i, n)
            if t % 2:
                term = -term
            new = subset[:t] + subset[t + 1:]
            cur = res.get(new)
            s = term if cur is None else cur + term
            if s.is_zero:
                res.pop(new, None)
            else:
                res[new] = s
    return PolyForm(n, omega.degree - 1, res)


def lie_derivative_euler(omega: PolyForm) -> PolyForm:
    """Euler Lie derivative via the homotopy formula d i_R + i_R d.

    On a form whose coefficients are homogeneous of degree q this multiplies
    the degree-k part by q + k.
    """
    if omega.degree == 0:
        return interior_product_euler(exterior_derivative(omega))
    first = exterior_derivative(interior_product_euler(omega))
    if omega.degree >= omega.n_vars:
        return first  # d(omega) vanishes in top degree
    return first + interior_product_euler(exterior_derivative(omega))


@dataclass(frozen=True)
class FormalScaling:
    """Per-variable scaling x_i -> s^{w_i} x_i with a formal parameter s.

    Weights must be positive integers; the parameter is adjoined as an extra
    trailing polynomial variable by `pullback_scaling`, so identities in s
    reduce to exact polynomial identities.
    """

    weights: Tuple[int, ...]
    param: str = "s"

    def __post_init__(self):
        if not self.weights:
            raise ValueError("weights must be nonempty")
        if any(not isinstance(w, int) or w <= 0 for w in self.weights):
            raise ValueError("scaling weights must be positive integers")

    @classmethod
    def uniform(cls, n_vars: int, param: str = "s") -> "FormalScaling":
        return cls((1,) * n_vars, param)


def pullback_scaling(omega: PolyForm, scaling: FormalScaling) -> PolyForm:
    """Substitute x_i -> s^{w_i} x_i and dx_i -> s^{w_i} dx_i.

    The result lives over n_vars + 1 variables with the scaling parameter in
    the last slot; index subsets still refer to the original dx_i.
    """
    n = omega.n_vars
    if len(scaling.weights) != n:
        raise ValueError(f"scaling has {len(scaling.weights)} weights, form has {n} variables")
    w = scaling.weights
    res: Dict[IndexSubset, Polynomial] = {}
    for subset, poly in omega._components.items():
        covector_weight = sum(w[i - 1] for i in subset)
        terms = {}
        for exps, c in poly.raw_terms().items():
            s_power = covector_weight + sum(e * w[i] for i, e in enumerate(exps))
            terms[exps + (s_power,)] = c
        res[subset] = Polynomial(n + 1, terms)
    return PolyForm(n + 1, omega.degree, res)


def contract_components(values: Mapping[IndexSubset, float],
                        vector: Sequence[float]) -> Dict[IndexSubset, float]:
    """Numeric interior product: contract evaluated form components with a vector.

    `values` maps size-k subsets to numbers; the result maps size-(k-1)
    subsets, with (i_v w)_J = sum_i +- v_i * w_{J u i} and the usual
    alternating sign.
    """
    res: Dict[IndexSubset, float] = {}
    for subset, value in values.items():
        for t, i in enumerate(subset):
            contrib = vector[i - 1] * value
            if t % 2:
                contrib = -contrib
            key = subset[:t] + subset[t + 1:]
            res[key] = res.get(key, 0.0) + contrib
    return res
