"""End-to-end runs: compute both sides of the comparison and report them.

A run juxtaposes three quantities for one polynomial and level:

  * reduced Betti numbers of the sampled real fiber (topological side),
  * their degree shift, the predicted dimensions of the twisted tempered
    complex (entry k+1 is the k-th reduced Betti number),
  * the twisted cohomology of polynomial forms from the truncation ladder
    (algebraic side).

Agreement between the last two is flagged per degree.  Divergence is
expected behavior and is explained, never treated as an error: the
algebraic side counts the complex generic fiber, while the prediction is
about the real fiber, and the two answer different questions whenever those
fibers differ.  Every number in the report carries provenance (producing
module plus parameters), and byte-identical configs and seeds produce
byte-identical reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import bounds as bounds_mod
from . import cohomology as cohomology_mod
from . import fiber as fiber_mod
from . import flows as flows_mod
from .errors import ConfigError
from .forms import PolyForm
from .polynomials import Polynomial, PolyParseError, parse_polynomial

MODES = ("fiber", "algebraic", "flow", "cone_map", "bounds")

DIVERGENCE_NOTE = (
    "predicted and algebraic dimensions differ: the algebraic side computes "
    "twisted cohomology of polynomial forms, which counts the complex "
    "generic fiber, while the prediction reflects the sampled real fiber. "
    "When the real and complex fibers differ topologically this divergence "
    "is expected behavior, not an error.")


@dataclass(frozen=True)
class SemigroupSpec:
    """A substitution semigroup supplied for exact verification."""

    components: Tuple[str, ...]
    param: str = "a"
    param_weight: str = "1"
    rate: str = "1"  # the semigroup multiplies p by exp(rate * s)


@dataclass(frozen=True)
class RunConfig:
    """Flat configuration for one run; defaults are echoed into the report."""

    polynomial: str
    n_vars: int
    level: float = 1.0
    modes: Tuple[str, ...] = ("fiber", "algebraic")
    seed: int = 0
    # fiber knobs
    box_radius: Optional[float] = None
    n_seeds: int = 2000
    max_points: Optional[int] = None
    ms_grid: int = 64
    rips_cap: Optional[float] = None
    epsilon: Optional[float] = None
    # algebraic knobs
    max_truncation: int = 8
    # flow knobs
    flow_time: float = 3.0
    flow_tol: float = 1e-8
    flow_points: int = 50
    # cone-map knobs
    quad_tol: float = 1e-10
    fd_step: float = 1e-4
    cone_points: int = 10
    # bounds knobs
    bounds_t_grid: Tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    bounds_r_grid: Tuple[float, ...] = ()
    restarts: int = 8
    semigroup: Optional[SemigroupSpec] = None

    def __post_init__(self):
        if self.n_vars < 1:
            raise ConfigError("n_vars must be a positive integer")
        if not self.modes:
            raise ConfigError("at least one mode must be enabled")
        unknown = [m for m in self.modes if m not in MODES]
        if unknown:
            raise ConfigError(f"unknown modes {unknown}; choose from {list(MODES)}")
        for name in ("flow", "cone_map"):
            if name in self.modes and "fiber" not in self.modes:
                raise ConfigError(f"mode {name!r} needs the fiber sample; enable 'fiber' too")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "polynomial" not in data or "n_vars" not in data:
            raise ConfigError("config needs at least 'polynomial' and 'n_vars'")
        for key in ("modes", "bounds_t_grid", "bounds_r_grid"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        if data.get("semigroup") is not None:
            sg = data["semigroup"]
            if not isinstance(sg, dict) or "components" not in sg:
                raise ConfigError("semigroup must be an object with 'components'")
            data["semigroup"] = SemigroupSpec(
                components=tuple(sg["components"]),
                param=sg.get("param", "a"),
                param_weight=str(sg.get("param_weight", "1")),
                rate=str(sg.get("rate", "1")))
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            if isinstance(value, SemigroupSpec):
                value = {"components": list(value.components), "param": value.param,
                         "param_weight": value.param_weight, "rate": value.rate}
            out[f.name] = value
        return out


@dataclass(frozen=True)
class GateVerdict:
    """Is this run backed by the homogeneous scaling result or conjectural?"""

    label: str  # "theorem-backed" | "conjecture-mode"
    homogeneous: bool
    degree: Optional[int]
    level_positive: bool
    notes: Tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {"verdict": self.label, "homogeneous": self.homogeneous,
                "degree": self.degree, "level_positive": self.level_positive,
                "notes": list(self.notes)}


def check_homogeneous_gate(p: Polynomial, t: float,
                           semigroup_verified: Optional[bool] = None) -> GateVerdict:
    """Label a run theorem-backed iff p is homogeneous (degree >= 1) and t > 0.

    Everything else still runs but is labeled conjecture-mode; an exactly
    verified substitution semigroup upgrades the note (its hypotheses are
    partially verified), and a homogeneous run at t <= 0 carries a warning
    that the scaling result needs a positive level.
    """
    degree = p.homogeneity_degree()
    homogeneous = degree is not None and degree >= 1
    level_positive = t > 0
    notes: List[str] = []
    if homogeneous and level_positive:
        label = "theorem-backed"
    else:
        label = "conjecture-mode"
        if homogeneous and not level_positive:
            notes.append("homogeneous p but level t <= 0: the scaling "
                         "isomorphism is only backed for t > 0")
        if not homogeneous:
            notes.append("p is not homogeneous: comparison runs in conjecture mode")
    if semigroup_verified is True:
        notes.append("supplied semigroup verified exactly: multiplicative-flow "
                     "hypotheses partially verified")
    elif semigroup_verified is False:
        notes.append("supplied semigroup FAILS its exact identity; ignoring it")
    return GateVerdict(label, homogeneous, degree, level_positive, tuple(notes))


@dataclass
class ComparisonReport:
    """Assembled run output; serializes deterministically to report.json."""

    config: RunConfig
    gate: GateVerdict
    sections: Dict[str, dict] = field(default_factory=dict)
    comparison: Optional[dict] = None
    warnings: Tuple[str, ...] = ()
    artifacts: Tuple[str, ...] = ()

    @property
    def agreement(self) -> Optional[bool]:
        return self.comparison["agreement"] if self.comparison else None

    def to_json_dict(self) -> dict:
        out = {
            "config": self.config.to_json_dict(),
            "gate": self.gate.to_json_dict(),
            "warnings": list(self.warnings),
            "artifacts": list(self.artifacts),
            "comparison": self.comparison,
        }
        out.update(self.sections)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def _parse_config_polynomial(config: RunConfig) -> Polynomial:
    try:
        p = parse_polynomial(config.polynomial, config.n_vars)
    except PolyParseError as exc:
        raise ConfigError(f"bad polynomial text: {exc}") from None
    if p.is_zero:
        raise ConfigError("the zero polynomial has no fiber/complex to compare")
    return p


def _verify_semigroup_spec(p: Polynomial, spec: SemigroupSpec):
    try:
        g = [parse_polynomial(text, p.n_vars, param=spec.param)
             for text in spec.components]
        ok, residual = flows_mod.verify_semigroup(
            p, g, Fraction(spec.rate), Fraction(spec.param_weight))
    except (PolyParseError, ValueError) as exc:
        raise ConfigError(f"bad semigroup spec: {exc}") from None
    return ok, residual


def _suggest_cap(points: np.ndarray, ms_cell: Optional[float]) -> float:
    D = fiber_mod._distance_matrix(points)
    np.fill_diagonal(D, np.inf)
    nn = D.min(axis=1)
    cap = 2.5 * float(nn.max())
    if ms_cell is not None:
        cap = max(cap, 3.0 * ms_cell)
    return cap


def run(config: RunConfig, out_dir=".") -> ComparisonReport:
    """Execute the enabled modes in dependency order and write artifacts.

    Artifacts land in `out_dir`: always report.json, plus fiber_points.csv,
    cohomology_ladder.json, trajectories.csv, and bounds.json per mode.
    Warnings never fail a run; hard errors propagate (the CLI maps them to
    exit codes).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = _parse_config_polynomial(config)
    t = float(config.level)
    n = config.n_vars

    warnings: List[str] = []
    artifacts: List[str] = ["report.json"]
    sections: Dict[str, dict] = {}

    semi_ok = None
    semi_residual_text = None
    if config.semigroup is not None:
        semi_ok, residual = _verify_semigroup_spec(p, config.semigroup)
        semi_residual_text = residual.to_text()
    gate = check_homogeneous_gate(p, t, semi_ok)
    if gate.label == "conjecture-mode":
        warnings.append("run is in conjecture mode (no homogeneous positive-level backing)")

    sample = None
    predicted = None
    if "fiber" in config.modes:
        sample, section = _run_fiber(config, p, t, warnings)
        sections["fiber"] = section
        predicted = section.get("predicted_tempered_dims")
        if sample is not None and len(sample):
            sample.to_csv(out / "fiber_points.csv")
            artifacts.append("fiber_points.csv")

    algebraic_dims = None
    if "algebraic" in config.modes:
        report = cohomology_mod.stabilize(p, config.max_truncation)
        if not report.stabilized:
            warnings.append("algebraic truncation ladder did not stabilize; "
                            "dims reported from the last level only")
        algebraic_dims = list(report.dims)
        sections["algebraic"] = {
            "provenance": {"module": "fiberlab.cohomology",
                           "parameters": {"max_truncation": config.max_truncation}},
            "stabilized": report.stabilized,
            "dims": algebraic_dims,
            "ladder": report.to_json_dict()["ladder"],
        }
        (out / "cohomology_ladder.json").write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n")
        artifacts.append("cohomology_ladder.json")

    comparison = None
    if predicted is not None and algebraic_dims is not None:
        rows = [{"k": k, "predicted": predicted[k], "algebraic": algebraic_dims[k],
                 "agree": predicted[k] == algebraic_dims[k]}
                for k in range(n + 1)]
        agreement = all(r["agree"] for r in rows)
        comparison = {"rows": rows, "agreement": agreement,
                      "note": None if agreement else DIVERGENCE_NOTE}

    if "flow" in config.modes:
        sections["flow"] = _run_flow(config, p, t, sample, out, artifacts,
                                     warnings, semi_ok, semi_residual_text)

    if "cone_map" in config.modes:
        sections["cone_map"] = _run_cone_map(config, p, t, sample, warnings)

    if "bounds" in config.modes:
        est = bounds_mod.threshold_estimate(
            p, config.bounds_t_grid, config.bounds_r_grid,
            seed=config.seed, restarts=config.restarts,
            box_radius=config.box_radius)
        warnings.extend(est.warnings)
        payload = est.to_json_dict()
        payload["provenance"] = {"module": "fiberlab.bounds",
                                 "parameters": {"t_grid": list(config.bounds_t_grid),
                                                "r_grid": list(config.bounds_r_grid),
                                                "restarts": config.restarts,
                                                "seed": config.seed}}
        sections["bounds"] = payload
        (out / "bounds.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")
        artifacts.append("bounds.json")

    unique_warnings = tuple(dict.fromkeys(warnings))
    report = ComparisonReport(config, gate, sections, comparison,
                              unique_warnings, tuple(artifacts))
    (out / "report.json").write_text(report.to_json())
    return report


def _run_fiber(config: RunConfig, p: Polynomial, t: float,
               warnings: List[str]):
    if config.n_vars > 3:
        raise ConfigError("fiber homology is supported for at most 3 variables "
                          "(homology through dimension 2)")
    if config.box_radius is None and p.homogeneity_degree() in (None, 0):
        raise ConfigError("non-homogeneous p has no default sampling box; "
                          "set box_radius")
    sample = fiber_mod.sample_fiber(
        p, t, box_radius=config.box_radius, n_seeds=config.n_seeds,
        seed=config.seed, max_points=config.max_points, ms_grid=config.ms_grid)
    provenance = {"module": "fiberlab.fiber",
                  "parameters": {"n_seeds": config.n_seeds, "seed": config.seed,
                                 "box_radius": sample.box_radius,
                                 "max_points": config.max_points,
                                 "ms_grid": config.ms_grid if config.n_vars == 2 else None}}
    if sample.is_empty:
        warnings.append("fiber presumed empty (heuristic: all seeds failed and "
                        "a grid scan kept a gap around the level)")
        rb = fiber_mod.reduced_betti(sample, None)
        return sample, {
            "provenance": provenance,
            "point_count": 0,
            "verdict": sample.verdict,
            "reduced_betti": {str(k): rb.at(k) for k in range(-1, config.n_vars)},
            "predicted_tempered_dims": fiber_mod.predicted_tempered_dims(rb),
        }

    ms_cell = (2.0 * sample.box_radius / config.ms_grid
               if config.n_vars == 2 and config.ms_grid else None)
    cap = config.rips_cap if config.rips_cap is not None else _suggest_cap(sample.points, ms_cell)
    median_nn = fiber_mod.median_nn_distance(sample.points)
    epsilon = config.epsilon if config.epsilon is not None else 3.0 * median_nn
    max_dim = config.n_vars - 1

    diagram = fiber_mod.rips_persistence(sample, max_dim, cap)
    rb = fiber_mod.reduced_betti(sample, diagram)
    sweep = fiber_mod.epsilon_sweep(sample)
    section = {
        "provenance": provenance,
        "point_count": len(sample),
        "residual_bound": sample.residual_bound,
        "verdict": sample.verdict,
        "median_nn_distance": median_nn,
        "epsilon": epsilon,
        "components": fiber_mod.connected_components(sample, epsilon),
        "epsilon_sweep": [[e, c] for e, c in sweep],
        "rips_cap": cap,
        "rips_max_dim": max_dim,
        "essential_bars": {str(d): c for d, c in sorted(diagram.essential_counts().items())},
        "reduced_betti": {str(k): rb.at(k) for k in range(-1, config.n_vars)},
        "predicted_tempered_dims": fiber_mod.predicted_tempered_dims(rb),
    }
    return sample, section


def _run_flow(config: RunConfig, p: Polynomial, t: float, sample, out: Path,
              artifacts: List[str], warnings: List[str], semi_ok,
              semi_residual_text):
    section: dict = {
        "provenance": {"module": "fiberlab.flows",
                       "parameters": {"flow_time": config.flow_time,
                                      "tol": config.flow_tol,
                                      "max_trajectories": config.flow_points}},
    }
    if config.semigroup is not None:
        section["semigroup"] = {
            "components": list(config.semigroup.components),
            "param_weight": config.semigroup.param_weight,
            "rate": config.semigroup.rate,
            "verified": semi_ok,
            "residual": semi_residual_text,
        }
    if sample is None or sample.is_empty or t <= 0:
        warnings.append("flow transport skipped: no usable fiber points "
                        "with positive level")
        section["trajectories"] = 0
        return section
    pts = sample.points[: config.flow_points]
    trajectories = flows_mod.transport(p, pts, config.flow_time, config.flow_tol)
    flows_mod.trajectories_to_csv(trajectories, out / "trajectories.csv")
    artifacts.append("trajectories.csv")
    ends = np.array([traj.steps[-1, -1] for traj in trajectories])
    section.update({
        "trajectories": len(trajectories),
        "flow_time": config.flow_time,
        "target_level": t + config.flow_time,
        "max_level_error": float(np.max(np.abs(ends - (t + config.flow_time)))),
        "max_drift": float(max(traj.drift for traj in trajectories)),
    })
    return section


def _run_cone_map(config: RunConfig, p: Polynomial, t: float, sample,
                  warnings: List[str]):
    degree = p.homogeneity_degree()
    if degree is None or degree < 1:
        raise ConfigError("cone_map mode needs homogeneous p of degree >= 1")
    if t <= 0:
        raise ConfigError("cone_map mode needs a positive level t")
    section: dict = {
        "provenance": {"module": "fiberlab.flows",
                       "parameters": {"quad_tol": config.quad_tol,
                                      "fd_step": config.fd_step,
                                      "base_points": config.cone_points}},
    }
    if sample is None or sample.is_empty or len(sample) == 0:
        warnings.append("cone-map checks skipped: no base points available "
                        "in the region p > t")
        return section
    # scale fiber points off the level set: for homogeneous p of degree m,
    # multiplying points by 2^(1/m) multiplies p by 2, landing in p > t.
    factor = 2.0 ** (1.0 / degree)
    base = sample.points[: config.cone_points] * factor
    n = config.n_vars

    volume = PolyForm.basis(n, tuple(range(1, n + 1)))
    first = base[0]
    value = flows_mod.cone_map_eval(volume, p, first, t, config.quad_tol)
    section["volume_form_tail"] = {
        "point": [float(v) for v in first],
        "components": {"_".join(map(str, c.subset)) or "0": c.value
                       for c in value.components},
        "s_max": max((c.s_max for c in value.components), default=None),
    }

    if n >= 2:
        check_form = PolyForm.basis(n, (2,), Polynomial.variable(1, n))
        form_text = "x1 dx2"
    else:
        check_form = PolyForm.basis(1, (1,), Polynomial.variable(1, 1))
        form_text = "x1 dx1"
    residual = flows_mod.cone_map_cochain_residual(
        check_form, p, base, t, config.quad_tol, config.fd_step)
    section["cochain_check"] = {
        "form": form_text,
        "points": len(base),
        "base_level": float(2.0 * t),
        "max_residual": residual,
    }
    return section
