"""Numeric surrogates for the gradient lower bound at infinity.

The quantity probed is g(t) = min |grad p(x)| * |x| over the level set
p = t: a positive floor on g over a t-range is the computable face of the
bound "|grad p| > c / |x| sufficiently far out".  Exact semialgebraic
machinery is deliberately replaced by multistart projected-gradient
optimization plus log-log regression of growth exponents, and every output
is labeled as an empirical estimate: the optimizer yields *upper* bounds on
minima, never certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._numeric import PolyEvaluator
from .errors import NonConvergenceError, SamplingError
from .fiber import farthest_point_subsample, sample_fiber
from .polynomials import Polynomial

PROJECTION_TOL = 1e-10
STEP_FLOOR = 1e-12
MAX_ITER = 500


def _project_to_level(ev: PolyEvaluator, x: np.ndarray, t: float) -> Optional[np.ndarray]:
    """Newton along the gradient onto p = t; None if it fails to converge."""
    x = x.copy()
    for _ in range(60):
        r = ev.value(x) - t
        if abs(r) <= PROJECTION_TOL:
            return x
        g = ev.gradient(x)
        g2 = float(g @ g)
        if g2 < 1e-24:
            return None
        x = x - (r / g2) * g
    return None


def _objective(ev: PolyEvaluator, x: np.ndarray) -> float:
    g = ev.gradient(x)
    return float((g @ g) * (x @ x))


def _objective_gradient(ev: PolyEvaluator, x: np.ndarray) -> np.ndarray:
    g = ev.gradient(x)
    H = ev.hessian(x)
    return 2.0 * float(x @ x) * (H @ g) + 2.0 * float(g @ g) * x


def _descend_on_level(ev: PolyEvaluator, x: np.ndarray, t: float) -> Tuple[np.ndarray, float]:
    """Projected-gradient descent of |grad p|^2 |x|^2 on the level set p = t."""
    fx = _objective(ev, x)
    for _ in range(MAX_ITER):
        grad = _objective_gradient(ev, x)
        g = ev.gradient(x)
        norm_g = float(np.linalg.norm(g))
        if norm_g < 1e-12:
            break
        u = g / norm_g
        d = -(grad - float(grad @ u) * u)
        nd = float(np.linalg.norm(d))
        if nd < STEP_FLOOR:
            break
        alpha = min(1.0, (1.0 + float(np.linalg.norm(x))) / nd)
        improved = False
        for _ in range(40):
            y = _project_to_level(ev, x + alpha * d, t)
            if y is not None:
                fy = _objective(ev, y)
                if fy <= fx - 1e-4 * alpha * nd * nd:
                    x, fx = y, fy
                    improved = True
                    break
            alpha *= 0.5
        if not improved or alpha * nd < STEP_FLOOR:
            break
    return x, fx


def levelset_min_gradnorm(p: Polynomial, t: float, restarts: int = 12,
                          seed: int = 0,
                          box_radius: Optional[float] = None) -> float:
    """Empirical minimum of |grad p(x)| * |x| over the level set p = t.

    Multistart projected-gradient descent from level-set samples; the return
    value is the square root of the best objective found, an upper bound on
    the true constrained minimum.  With a fixed seed the start list is a
    deterministic prefix sequence, so adding restarts can only lower the
    reported value.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    ev = PolyEvaluator(p)
    fs = sample_fiber(p, t, box_radius=box_radius,
                      n_seeds=max(50 * restarts, 400), seed=seed)
    if fs.is_empty:
        raise SamplingError(f"level set p = {t} is presumed empty; nothing to minimize")
    starts = farthest_point_subsample(fs.points, min(restarts, len(fs.points)))

    best = math.inf
    projected_any = False
    for x0 in starts:
        x = _project_to_level(ev, np.asarray(x0, dtype=float), t)
        if x is None:
            continue
        projected_any = True
        _, fx = _descend_on_level(ev, x, t)
        best = min(best, fx)
    if not projected_any:
        raise NonConvergenceError("no restart could be projected onto the level set")
    return math.sqrt(best)


@dataclass(frozen=True)
class PowerLawFit:
    constant: float
    exponent: float
    quality: float  # max relative deviation over the fitted samples
    used: Tuple[Tuple[float, float], ...]


def fit_puiseux_exponent(samples: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """Leading power-law fit value ~ c * r^alpha from the asymptotic tail.

    Least squares on log value vs log r, restricted to the upper half of the
    r-range in log scale (at least three points).  Requires four or more
    strictly increasing positive samples spanning a factor of eight in r.
    """
    pts = [(float(r), float(v)) for r, v in samples]
    if len(pts) < 4:
        raise ValueError("need at least 4 samples for a power-law fit")
    rs = [r for r, _ in pts]
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise ValueError("sample abscissae must be strictly increasing")
    if any(v <= 0 for _, v in pts):
        raise ValueError("power-law fit needs positive values")
    if rs[-1] / rs[0] < 8.0:
        raise ValueError(f"insufficient span: r ranges over a factor "
                         f"{rs[-1] / rs[0]:.2f} < 8")
    cut = math.sqrt(rs[0] * rs[-1])
    tail = [(r, v) for r, v in pts if r >= cut]
    if len(tail) < 3:
        tail = pts[-min(3, len(pts)):]
    lr = np.log([r for r, _ in tail])
    lv = np.log([v for _, v in tail])
    alpha, intercept = np.polyfit(lr, lv, 1)
    c = math.exp(intercept)
    quality = max(abs(v - c * r ** alpha) / abs(v) for r, v in tail)
    return PowerLawFit(float(c), float(alpha), float(quality), tuple(tail))


def _sphere_min(ev: PolyEvaluator, r: float, floor_level: float, seed: int,
                restarts: int) -> Optional[float]:
    """Min of |grad p| * |x| over the sphere |x| = r within the region p >= floor_level."""
    rng = np.random.default_rng(seed)
    n = ev.n_vars
    best = None
    found = 0
    for _ in range(restarts * 20):
        if found >= restarts:
            break
        d = rng.normal(size=n)
        x = r * d / np.linalg.norm(d)
        if ev.value(x) < floor_level:
            continue
        found += 1
        fx = _objective(ev, x)
        for _ in range(200):
            grad = _objective_gradient(ev, x)
            u = x / np.linalg.norm(x)
            dvec = -(grad - float(grad @ u) * u)
            nd = float(np.linalg.norm(dvec))
            if nd < STEP_FLOOR:
                break
            alpha = min(1.0, r / nd)
            improved = False
            for _ in range(40):
                y = x + alpha * dvec
                y = r * y / np.linalg.norm(y)
                if ev.value(y) >= floor_level:
                    fy = _objective(ev, y)
                    if fy <= fx - 1e-4 * alpha * nd * nd:
                        x, fx = y, fy
                        improved = True
                        break
                alpha *= 0.5
            if not improved:
                break
        best = fx if best is None else min(best, fx)
    return math.sqrt(best) if best is not None else None


@dataclass(frozen=True)
class BoundEstimate:
    """Empirical (T, c, alpha) for the gradient bound, with diagnostics.

    `samples` records (level t, g(t)); `alpha` is the fitted growth exponent
    of g.  The radial sweep records min |grad p| |x| on spheres |x| = r within
    the region, mirroring how a failing bound would force that quantity to
    decay.  Verdict "bound-holds" requires a non-negative fitted trend with
    fit quality <= 0.15; everything here is labeled empirical and the true
    minimum is never claimed to be attained.
    """

    threshold: float
    constant: float
    alpha: Optional[float]
    samples: Tuple[Tuple[float, float], ...]
    fit_quality: Optional[float]
    verdict: str
    warnings: Tuple[str, ...] = field(default_factory=tuple)
    radial_samples: Tuple[Tuple[float, float], ...] = ()
    radial_alpha: Optional[float] = None
    minimizer_levels: Tuple[Tuple[float, Tuple[float, ...]], ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "estimate_kind": "empirical upper-bound optimization; not a certificate",
            "threshold": self.threshold,
            "constant": self.constant,
            "alpha": self.alpha,
            "samples": [[t, g] for t, g in self.samples],
            "fit_quality": self.fit_quality,
            "verdict": self.verdict,
            "warnings": list(self.warnings),
            "radial_samples": [[r, v] for r, v in self.radial_samples],
            "radial_alpha": self.radial_alpha,
            "minimizers": [[t, list(x)] for t, x in self.minimizer_levels],
        }


def threshold_estimate(p: Polynomial, t_grid: Sequence[float],
                       r_grid: Sequence[float] = (), seed: int = 0,
                       restarts: int = 12,
                       box_radius: Optional[float] = None) -> BoundEstimate:
    """Estimate the bound threshold T and constant c from a level grid.

    Computes g(t) = levelset_min_gradnorm over the grid, fits the growth
    exponent of g, and reports T as the smallest grid level past which g
    stays positive, with c = half the tail minimum (factor-2 safety margin:
    the optimizer overestimates minima, never underestimates the bound's
    room).  A fitted negative trend of g flags the bound as suspect; the
    optional r_grid drives the sphere-restricted radial diagnostic.
    """
    levels = [float(t) for t in t_grid]
    if not levels:
        raise ValueError("t_grid must be nonempty")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("t_grid must be strictly increasing")

    ev = PolyEvaluator(p)
    warnings: List[str] = []
    samples: List[Tuple[float, float]] = []
    minimizers: List[Tuple[float, Tuple[float, ...]]] = []
    for i, t in enumerate(levels):
        try:
            g = levelset_min_gradnorm(p, t, restarts=restarts, seed=seed + i,
                                      box_radius=box_radius)
        except SamplingError:
            warnings.append(f"level set p = {t:g} presumed empty; skipped")
            continue
        samples.append((t, g))
    if not samples:
        raise SamplingError("all level sets on the grid are empty")

    alpha = quality = None
    if len(samples) >= 4 and samples[-1][0] / samples[0][0] >= 8.0:
        fit = fit_puiseux_exponent(samples)
        alpha, quality = fit.exponent, fit.quality
    else:
        warnings.append("t grid too small for an exponent fit; trend judged from endpoints")

    gs = [g for _, g in samples]
    tail_positive = [t for i, (t, _) in enumerate(samples) if min(gs[i:]) > 0]
    threshold = tail_positive[0] if tail_positive else samples[-1][0]
    tail_min = min(g for t, g in samples if t >= threshold)
    constant = 0.5 * tail_min

    if alpha is not None:
        trend_ok = alpha >= -0.05
        fit_ok = quality <= 0.15
    else:
        trend_ok = gs[-1] >= 0.5 * gs[0]
        fit_ok = True
    if not trend_ok:
        warnings.append("fitted trend of g(t) is negative: bound suspect")
    if not fit_ok:
        warnings.append(f"power-law fit quality {quality:.3f} exceeds 0.15")
    verdict = "bound-holds" if (trend_ok and fit_ok) else "bound-suspect"

    radial: List[Tuple[float, float]] = []
    radial_alpha = None
    if r_grid:
        radii = [float(r) for r in r_grid]
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("r_grid must be strictly increasing")
        floor_level = levels[0]
        for j, r in enumerate(radii):
            val = _sphere_min(ev, r, floor_level, seed + 1000 + j, restarts)
            if val is None:
                warnings.append(f"sphere |x| = {r:g} misses the region p >= {floor_level:g}")
                continue
            radial.append((r, val))
        if len(radial) >= 4 and radial[-1][0] / radial[0][0] >= 8.0:
            radial_alpha = fit_puiseux_exponent(radial).exponent

    return BoundEstimate(threshold, constant, alpha, tuple(samples), quality,
                         verdict, tuple(warnings), tuple(radial), radial_alpha,
                         tuple(minimizers))
