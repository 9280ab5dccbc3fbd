"""fiberlab: topology of real polynomial level sets vs twisted cohomology.

Exact polynomial exterior algebra, degree-truncated twisted de Rham
cohomology, level-set sampling with small-scale persistence, gradient-type
flow transport with semigroup checks, and gradient bounds near infinity,
tied together by a comparison CLI.
"""

from .bounds import BoundEstimate, fit_puiseux_exponent, levelset_min_gradnorm, threshold_estimate
from .cohomology import (CohomologyReport, TruncatedComplex, build_truncated,
                         cohomology_dims, jacobian_quotient_dim, stabilize)
from .errors import ConfigError, CriticalPointError, NonConvergenceError, SamplingError
from .fiber import (FiberSample, PersistenceDiagram, ReducedBetti, connected_components,
                    default_box_radius, farthest_point_subsample, predicted_tempered_dims,
                    reduced_betti, rips_persistence, sample_fiber)
from .flows import (ConeMapValue, DecayTable, FlowTrajectory, cone_map_cochain_residual,
                    cone_map_eval, probe_tail_decay, scaled_transport, transport,
                    verify_semigroup)
from .forms import (FormalScaling, PolyForm, exterior_derivative, interior_product_euler,
                    lie_derivative_euler, pullback_scaling, twisted_differential, wedge)
from .polynomials import Polynomial, PolyParseError, parse_polynomial
from .report import ComparisonReport, GateVerdict, RunConfig, check_homogeneous_gate, run

__version__ = "0.1.0"

__all__ = [
    "BoundEstimate", "CohomologyReport", "ComparisonReport", "ConeMapValue",
    "ConfigError", "CriticalPointError", "DecayTable", "FiberSample",
    "FlowTrajectory", "FormalScaling", "GateVerdict", "NonConvergenceError",
    "PersistenceDiagram", "PolyForm", "PolyParseError", "Polynomial",
    "ReducedBetti", "RunConfig", "SamplingError", "TruncatedComplex",
    "build_truncated", "check_homogeneous_gate", "cohomology_dims",
    "cone_map_cochain_residual", "cone_map_eval", "connected_components",
    "default_box_radius", "exterior_derivative", "farthest_point_subsample",
    "fit_puiseux_exponent", "interior_product_euler", "jacobian_quotient_dim",
    "levelset_min_gradnorm", "lie_derivative_euler", "parse_polynomial",
    "predicted_tempered_dims", "probe_tail_decay", "pullback_scaling",
    "reduced_betti", "rips_persistence", "run", "sample_fiber",
    "scaled_transport", "stabilize", "threshold_estimate", "transport",
    "twisted_differential", "verify_semigroup", "wedge",
]
