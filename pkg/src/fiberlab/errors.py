"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2, numeric
nonconvergence exits 3, anything else exits 4.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid run configuration or CLI input."""


class NonConvergenceError(RuntimeError):
    """A numeric procedure failed to meet its tolerance."""


class CriticalPointError(NonConvergenceError):
    """A gradient flow came too close to a critical point of p."""


class SamplingError(NonConvergenceError):
    """Level-set sampling produced no usable points and could not certify emptiness."""
