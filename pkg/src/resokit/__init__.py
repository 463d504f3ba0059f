"""Toolkit for certifying and simulating unbounded resonant oscillations.

Weakly coupled second-order systems x_j'' + n_j^2 x_j + h_j(...) = p_j(t)
with bounded couplings and periodic forcing admit explicit sufficient
conditions for solutions to escape to infinity.  This package checks those
conditions soundly (interval bounds on the couplings, closed-form Fourier
gains), constructs the predicted escape regions in phase space, and
verifies the per-period growth and energy estimates along numerically
integrated trajectories.
"""

from . import certify, diagnose, expr, forcing, integrate, scenario, system
from .integrate import State, active_kernel, kernel_names

__version__ = "0.1.0"

__all__ = [
    "certify",
    "diagnose",
    "expr",
    "forcing",
    "integrate",
    "scenario",
    "system",
    "State",
    "active_kernel",
    "kernel_names",
    "__version__",
]
