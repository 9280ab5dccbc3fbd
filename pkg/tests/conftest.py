"""Shared randomized-input generators (seeded, exact rational coefficients)."""

from __future__ import annotations

import random
from fractions import Fraction

from fiberlab.forms import PolyForm
from fiberlab.polynomials import Polynomial


def random_polynomial(rng: random.Random, n_vars: int, max_degree: int = 6,
                      max_terms: int = 5, coeff_bound: int = 9,
                      nonzero: bool = False) -> Polynomial:
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        exps = [0] * n_vars
        budget = rng.randint(0, max_degree)
        for _ in range(budget):
            exps[rng.randrange(n_vars)] += 1
        num = rng.randint(-coeff_bound, coeff_bound)
        den = rng.randint(1, 4)
        if num:
            terms[tuple(exps)] = terms.get(tuple(exps), 0) + Fraction(num, den)
    p = Polynomial(n_vars, terms)
    if nonzero and p.is_zero:
        return Polynomial.constant(rng.randint(1, coeff_bound), n_vars)
    return p


def random_form(rng: random.Random, n_vars: int, degree: int,
                max_degree: int = 6, max_components: int = 3) -> PolyForm:
    from itertools import combinations
    subsets = list(combinations(range(1, n_vars + 1), degree))
    components = {}
    for subset in rng.sample(subsets, min(len(subsets), rng.randint(1, max_components))):
        components[subset] = random_polynomial(rng, n_vars, max_degree)
    return PolyForm(n_vars, degree, components)
