"""Gradient-type flows, semigroup identities, and the cone comparison map.

Two flows are integrated numerically: the normalized gradient flow
``dx/ds = grad p / |grad p|^2`` (which raises p at unit rate) and its
rescaling by p (which multiplies p by e^s).  Both are checked against their
exact level-drift laws on every accepted trajectory.

The cone map pairs a form with a damped copy and a scaling-tail integral,

    omega -> ( e^{-p} omega ,  - int_1^inf  mu_s^*( e^{-p} i_R omega ) ds/s ),

where mu_s scales coordinates by s and i_R contracts with the Euler field.
For homogeneous p the tail integrand decays like exp(-s^m p(x)), so the
integral is evaluated pointwise by adaptive quadrature after the
substitution u = log s.  The defining cochain identity

    tail(d_p omega) = damped(omega) - d tail(omega)

is checked by finite differences, deliberately independent of the symbolic
route that produced the integrand.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp

from ._numeric import PolyEvaluator
from .errors import CriticalPointError, NonConvergenceError
from .forms import (FormalScaling, PolyForm, contract_components,
                    interior_product_euler, pullback_scaling, twisted_differential)
from .polynomials import Polynomial

GRAD_FLOOR = 1e-8
DRIFT_FACTOR = 100.0


@dataclass(frozen=True)
class FlowTrajectory:
    """One integrated trajectory with its per-step level record.

    `steps` has rows (sigma, x_1..x_n, p(x)); `drift` is the worst violation
    of the exact level law over all recorded steps (|p - p0 - sigma| for the
    unit-rate flow, |p - e^sigma p0| e^{-sigma} for the scaled flow).
    Accepted trajectories satisfy drift <= 100 * tol.
    """

    start: np.ndarray
    end: np.ndarray
    flow_time: float
    steps: np.ndarray
    tol: float
    drift: float


def _trajectory_csv_rows(trajectories: Sequence[FlowTrajectory]):
    for tid, traj in enumerate(trajectories):
        for row in traj.steps:
            yield [tid] + [repr(float(v)) for v in row]


def trajectories_to_csv(trajectories: Sequence[FlowTrajectory], path) -> None:
    if not trajectories:
        n = 0
    else:
        n = trajectories[0].steps.shape[1] - 2
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trajectory", "sigma"] + [f"x{i}" for i in range(1, n + 1)] + ["p"])
        writer.writerows(_trajectory_csv_rows(trajectories))


def _integrate(ev: PolyEvaluator, rhs: Callable, x0: np.ndarray, s: float,
               tol: float, drift_of: Callable) -> FlowTrajectory:
    if s == 0.0:
        p0 = ev.value(x0)
        steps = np.array([[0.0, *x0, p0]])
        return FlowTrajectory(x0, x0.copy(), 0.0, steps, tol, 0.0)

    g0 = ev.gradient(x0)
    if float(np.sqrt(g0 @ g0)) <= GRAD_FLOOR:
        raise CriticalPointError(
            f"start point {x0.tolist()} is already within {GRAD_FLOOR:g} of a "
            "critical point of p")

    def near_critical(_sigma, x):
        g = ev.gradient(x)
        return float(np.sqrt(g @ g)) - GRAD_FLOOR

    near_critical.terminal = True

    sol = solve_ivp(rhs, (0.0, s), x0, method="RK45", rtol=tol,
                    atol=tol * 1e-3, events=near_critical, dense_output=False)
    if sol.status == 1:
        raise CriticalPointError(
            f"flow from {x0.tolist()} approached a critical point of p "
            f"(|grad p| < {GRAD_FLOOR:g})")
    if sol.status != 0:
        raise NonConvergenceError(f"flow integration failed: {sol.message}")

    sigmas = sol.t
    xs = sol.y.T
    pvals = np.array([ev.value(x) for x in xs])
    p0 = pvals[0]
    drift = float(np.max(np.abs(drift_of(sigmas, pvals, p0))))
    if drift > DRIFT_FACTOR * tol:
        raise NonConvergenceError(
            f"level drift {drift:.3e} exceeds {DRIFT_FACTOR:g} * tol = "
            f"{DRIFT_FACTOR * tol:.3e}; tighten tol")
    steps = np.column_stack([sigmas, xs, pvals])
    return FlowTrajectory(x0, xs[-1].copy(), float(s), steps, tol, drift)


def transport(p: Polynomial, points: Sequence[Sequence[float]], s: float,
              tol: float = 1e-8) -> List[FlowTrajectory]:
    """Flow points along grad p / |grad p|^2 for time s; p grows at unit rate.

    Every start point must satisfy p(x) > 0, and for s < 0 the flow must not
    exhaust the level: |s| < p(x).  Trajectories whose recorded level drift
    exceeds 100 * tol are rejected with `NonConvergenceError`; proximity to a
    critical point aborts with `CriticalPointError`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ev = PolyEvaluator(p)

    def rhs(_sigma, x):
        g = ev.gradient(x)
        return g / (g @ g)

    def drift_of(sigmas, pvals, p0):
        return pvals - p0 - sigmas

    out = []
    for point in points:
        x0 = np.asarray(point, dtype=float)
        p0 = ev.value(x0)
        if p0 <= 0:
            raise ValueError(f"start point {x0.tolist()} has p(x) = {p0:g} <= 0")
        if s < 0 and abs(s) >= p0:
            raise ValueError(f"flow time {s} would exhaust p(x) = {p0:g} at {x0.tolist()}")
        out.append(_integrate(ev, rhs, x0, s, tol, drift_of))
    return out


def scaled_transport(p: Polynomial, points: Sequence[Sequence[float]], s: float,
                     tol: float = 1e-8) -> List[FlowTrajectory]:
    """Flow along p * grad p / |grad p|^2 for time s; p is multiplied by e^s."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    ev = PolyEvaluator(p)

    def rhs(_sigma, x):
        g = ev.gradient(x)
        return (ev.value(x) / (g @ g)) * g

    def drift_of(sigmas, pvals, p0):
        return (pvals - np.exp(sigmas) * p0) * np.exp(-sigmas)

    out = []
    for point in points:
        x0 = np.asarray(point, dtype=float)
        p0 = ev.value(x0)
        if p0 <= 0:
            raise ValueError(f"start point {x0.tolist()} has p(x) = {p0:g} <= 0")
        out.append(_integrate(ev, rhs, x0, s, tol, drift_of))
    return out


def verify_semigroup(p: Polynomial, g: Sequence[Polynomial],
                     m: Union[int, Fraction, str],
                     param_weight: Union[int, Fraction, str] = 1) -> Tuple[bool, Polynomial]:
    """Exact check that the substitution map g multiplies p by the m-th power law.

    The components of g live over n_vars + 1 variables whose last slot is a
    formal parameter a standing for e^{s * w}, w = param_weight.  The check
    computes p(g) - a^{m/w} * p exactly and reports whether the residual is
    the zero polynomial.  m/w must be a nonnegative integer; otherwise the
    identity cannot be expressed in a and a different w must be declared.
    """
    m = Fraction(m)
    w = Fraction(param_weight)
    if w <= 0:
        raise ValueError("param_weight must be positive")
    k = m / w
    if k.denominator != 1 or k < 0:
        raise ValueError(
            f"exponent m/w = {k} is not a nonnegative integer; declare a "
            "param_weight w that divides m")
    n = p.n_vars
    if len(g) != n:
        raise ValueError(f"substitution has {len(g)} components, p has {n} variables")
    for gi in g:
        if gi.n_vars != n + 1:
            raise ValueError("each component of g must live over n_vars + 1 variables "
                             "(the trailing slot is the formal parameter)")
    param = Polynomial.variable(n + 1, n + 1)
    residual = p.substitute(list(g)) - p.lift(1) * param ** int(k)
    return residual.is_zero, residual


# -- cone comparison map -------------------------------------------------------


@dataclass(frozen=True)
class ConeMapComponent:
    """One tail-integral component: value of - int_1^inf (...) ds/s."""

    subset: Tuple[int, ...]
    value: float
    quad_tol: float
    s_max: float
    integrand_at_cutoff: float


@dataclass(frozen=True)
class ConeMapValue:
    """Pointwise cone-map evaluation: damped components and tail components."""

    point: Tuple[float, ...]
    level: float
    quad_tol: float
    damped: Dict[Tuple[int, ...], float]
    components: Tuple[ConeMapComponent, ...]

    def tail(self, subset: Sequence[int]) -> float:
        key = tuple(subset)
        for comp in self.components:
            if comp.subset == key:
                return comp.value
        return 0.0

    def damped_component(self, subset: Sequence[int]) -> float:
        return self.damped.get(tuple(subset), 0.0)


def _adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                      tol: float, max_depth: int = 48) -> float:
    """Plain adaptive Simpson (no Richardson boost, so error tracks tol)."""
    fa, fb = f(a), f(b)
    mid = 0.5 * (a + b)
    fm = f(mid)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0

    def rec(a, mid_, b, fa, fm, fb, whole, tol, depth):
        lm = 0.5 * (a + mid_)
        rm = 0.5 * (mid_ + b)
        flm, frm = f(lm), f(rm)
        left = (mid_ - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - mid_) * (fm + 4.0 * frm + fb) / 6.0
        if depth >= max_depth:
            raise NonConvergenceError("tail quadrature did not converge "
                                      f"(depth {max_depth} reached)")
        if abs(left + right - whole) <= 15.0 * tol:
            return left + right
        half = 0.5 * tol
        return (rec(a, lm, mid_, fa, flm, fm, left, half, depth + 1)
                + rec(mid_, rm, b, fm, frm, fb, right, half, depth + 1))

    return rec(a, mid, b, fa, fm, fb, whole, tol, 0)


def cone_map_eval(omega: PolyForm, p: Polynomial, point: Sequence[float],
                  t: float, quad_tol: float = 1e-10) -> ConeMapValue:
    """Evaluate the cone map of a form at a point of the region p > t.

    Requires homogeneous p of degree m >= 1 and p(point) > t > 0.  The damped
    part is e^{-p(x)} omega(x).  Each tail component is assembled
    symbolically (scaling pullback of the Euler contraction), reduced at the
    point to a polynomial in the scale s, and integrated against
    exp(-s^m p(x)) on s in [1, s_max] after substituting u = log s; s_max is
    grown until the integrand is below 1e-14.
    """
    if omega.n_vars != p.n_vars:
        raise ValueError("form and polynomial live over different variable counts")
    m = p.homogeneity_degree()
    if m is None or m < 1:
        raise ValueError("the tail integral needs homogeneous p of degree >= 1")
    if not t > 0:
        raise ValueError(f"level t must be positive, got {t}")
    ev = PolyEvaluator(p)
    x = [float(v) for v in point]
    P = ev.value(x)
    if not P > t:
        raise ValueError(f"point has p(x) = {P:g} <= t = {t:g}; outside the region")
    if quad_tol <= 0:
        raise ValueError("quad_tol must be positive")

    damped_scale = math.exp(-P)
    damped = {s: damped_scale * v for s, v in omega.evaluate(x).items()}

    eta = interior_product_euler(omega)
    pulled = pullback_scaling(eta, FormalScaling.uniform(p.n_vars))

    components = []
    for subset, poly in pulled.components():
        # collapse to a univariate polynomial in the scale parameter
        in_s: Dict[int, float] = {}
        for exps, c in poly.raw_terms().items():
            v = float(c)
            for xi, e in zip(x, exps[:-1]):
                if e:
                    v *= xi ** e
            b = exps[-1]
            in_s[b] = in_s.get(b, 0.0) + v
        coeffs = sorted(in_s.items())

        def integrand(s: float, coeffs=coeffs) -> float:
            poly_val = 0.0
            for b, c in coeffs:
                poly_val += c * s ** b
            return poly_val * math.exp(-(s ** m) * P)

        s_max = 2.0
        for _ in range(200):
            if abs(integrand(s_max)) <= 1e-14:
                break
            s_max *= 1.25
        else:
            raise NonConvergenceError("tail integrand failed to decay; "
                                      "is the level positive?")

        value = -_adaptive_simpson(lambda u: integrand(math.exp(u)),
                                   0.0, math.log(s_max), quad_tol)
        components.append(ConeMapComponent(subset, value, quad_tol, s_max,
                                           abs(integrand(s_max))))

    return ConeMapValue(tuple(x), float(t), float(quad_tol), damped,
                        tuple(components))


def cone_map_cochain_residual(omega: PolyForm, p: Polynomial,
                              points: Sequence[Sequence[float]], t: float,
                              quad_tol: float = 1e-12,
                              fd_step: float = 1e-4) -> float:
    """Max violation of the cochain identity tail(d_p w) + d tail(w) - damped(w).

    The differential of the tail is taken by central finite differences of
    the numerically evaluated components, keeping the check independent of
    the symbolic integrand; the reported residual therefore budgets both the
    quadrature tolerance and the O(h^2) differencing error.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    n = omega.n_vars
    k = omega.degree
    d_p_omega = twisted_differential(omega, p)
    worst = 0.0
    for point in points:
        x = np.asarray(point, dtype=float)
        direct = cone_map_eval(d_p_omega, p, x, t, quad_tol)
        plus = []
        minus = []
        for i in range(n):
            shift = np.zeros(n)
            shift[i] = fd_step
            plus.append(cone_map_eval(omega, p, x + shift, t, quad_tol))
            minus.append(cone_map_eval(omega, p, x - shift, t, quad_tol))
        base = cone_map_eval(omega, p, x, t, quad_tol)
        for subset in combinations(range(1, n + 1), k):
            d_tail = 0.0
            for pos, i in enumerate(subset):
                rest = subset[:pos] + subset[pos + 1:]
                diff = plus[i - 1].tail(rest) - minus[i - 1].tail(rest)
                term = diff / (2.0 * fd_step)
                d_tail += -term if pos % 2 else term
            residual = direct.tail(subset) + d_tail - base.damped_component(subset)
            worst = max(worst, abs(residual))
    return worst


# -- semigroup tail diagnostics --------------------------------------------------


@dataclass(frozen=True)
class DecayTable:
    """Sampled tail integrand along the scaled flow; diagnostic evidence only."""

    flow_times: Tuple[float, ...]
    components: Tuple[Tuple[int, ...], ...]
    values: np.ndarray  # (len(flow_times), len(components))
    max_abs: Tuple[float, ...]
    fitted_rate: Optional[float]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s"] + ["c" + "_".join(map(str, c)) for c in self.components]
                            + ["max_abs"])
            for s, row, mx in zip(self.flow_times, self.values, self.max_abs):
                writer.writerow([repr(float(s))] + [repr(float(v)) for v in row]
                                + [repr(float(mx))])


def probe_tail_decay(omega: PolyForm, p: Polynomial, point: Sequence[float],
                     s_cap: float, grid_size: int = 9,
                     tol: float = 1e-10) -> DecayTable:
    """Sample the semigroup tail integrand g~_s^*(e^{-p} i_v~ omega) at a point.

    The flow pullback uses a forward-difference Jacobian of the flow map
    (step 1e-6 * (1 + |x|)), so the probe is numeric end to end.  It emits
    the sampled values and a fitted exponential decay rate; it never claims
    convergence of the tail integral, only evidence.
    """
    if s_cap <= 0 or grid_size < 2:
        raise ValueError("need s_cap > 0 and at least two grid points")
    n = p.n_vars
    ev = PolyEvaluator(p)
    x0 = np.asarray(point, dtype=float)
    flow_times = [0.0] + [s_cap * 2.0 ** (j - (grid_size - 2))
                          for j in range(grid_size - 1)]
    subsets = list(combinations(range(1, n + 1), max(omega.degree - 1, 0)))
    delta = 1e-6 * (1.0 + float(np.linalg.norm(x0)))

    rows = []
    for s in flow_times:
        if s == 0.0:
            y = x0.copy()
            jac = np.eye(n)
        else:
            y = scaled_transport(p, [x0], s, tol)[0].end
            cols = []
            for i in range(n):
                shifted = x0.copy()
                shifted[i] += delta
                cols.append((scaled_transport(p, [shifted], s, tol)[0].end - y) / delta)
            jac = np.column_stack(cols)
        g = ev.gradient(y)
        v_tilde = (ev.value(y) / (g @ g)) * g
        eta_vals = contract_components(omega.evaluate(y), v_tilde)
        scale = math.exp(-ev.value(y)) if ev.value(y) < 700 else 0.0
        row = []
        for I in subsets:
            total = 0.0
            for J, val in eta_vals.items():
                minor = jac[np.ix_([j - 1 for j in J], [i - 1 for i in I])]
                total += val * float(np.linalg.det(minor)) if len(J) else val
            row.append(scale * total)
        rows.append(row)

    values = np.array(rows) if rows else np.empty((0, len(subsets)))
    max_abs = tuple(float(np.max(np.abs(r))) if len(r) else 0.0 for r in values)

    fitted = None
    usable = [(s, m) for s, m in zip(flow_times, max_abs) if s > 0 and m > 1e-280]
    if len(usable) >= 2:
        ss = np.array([u[0] for u in usable])
        ll = np.log([u[1] for u in usable])
        fitted = float(np.polyfit(ss, ll, 1)[0])

    return DecayTable(tuple(flow_times), tuple(subsets), values, max_abs, fitted)
