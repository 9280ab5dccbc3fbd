"""Float evaluation helpers shared by the sampling, flow, and bound modules.

The exact modules never touch floats; everything numeric funnels through
these small compiled term lists instead.
"""

from __future__ import annotations

from typing import Callable, List, Sequence, Tuple

import numpy as np

from .polynomials import Polynomial

TermList = List[Tuple[float, Tuple[int, ...]]]


def compile_terms(p: Polynomial) -> TermList:
    return [(float(c), exps) for exps, c in sorted(p.raw_terms().items())]


def eval_terms(terms: TermList, x: Sequence[float]) -> float:
    total = 0.0
    for c, exps in terms:
        v = c
        for xi, e in zip(x, exps):
            if e == 1:
                v *= xi
            elif e:
                v *= xi ** e
        total += v
    return total


def eval_terms_batch(terms: TermList, X: np.ndarray) -> np.ndarray:
    """Evaluate on an (m, n) array of points."""
    total = np.zeros(len(X))
    for c, exps in terms:
        v = np.full(len(X), c)
        for i, e in enumerate(exps):
            if e == 1:
                v = v * X[:, i]
            elif e:
                v = v * X[:, i] ** e
        total += v
    return total


class PolyEvaluator:
    """Bundles compiled float evaluation of p and its gradient (and Hessian)."""

    def __init__(self, p: Polynomial):
        self.polynomial = p
        self.n_vars = p.n_vars
        self._p = compile_terms(p)
        self._grad = [compile_terms(g) for g in p.gradient()]
        self._hess = None

    def value(self, x: Sequence[float]) -> float:
        return eval_terms(self._p, x)

    def gradient(self, x: Sequence[float]) -> np.ndarray:
        return np.array([eval_terms(t, x) for t in self._grad])

    def values(self, X: np.ndarray) -> np.ndarray:
        return eval_terms_batch(self._p, X)

    def gradients(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack([eval_terms_batch(t, X) for t in self._grad])

    def hessian(self, x: Sequence[float]) -> np.ndarray:
        if self._hess is None:
            n = self.n_vars
            grads = self.polynomial.gradient()
            self._hess = [[compile_terms(grads[i].partial(j + 1)) for j in range(n)]
                          for i in range(n)]
        n = self.n_vars
        H = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                H[i, j] = eval_terms(self._hess[i][j], x)
        return H
