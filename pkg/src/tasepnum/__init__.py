"""Exact finite-time and limiting multi-point distributions of TASEP.

Finite-time joint probabilities come from Fredholm determinants on nested
circles (``multipoint``), periodic TASEP from Bethe-root sums (``periodic``),
the KPZ limits from the same kernels on ray contours (``limits``).  The
``simulate`` module holds the independent oracles used to check them.
"""

from __future__ import annotations

from .errors import (ConditioningError, ConvergenceError, Degenerate, InvalidInput,
                     NumericalDomain, NumericalQualityWarning, TasepError, Unsupported)
from .limits import LimitObservation, RayContourPlan, d_flat, d_step, f_limit, scaling_map
from .multipoint import (ObservationSet, ProbabilityResult, dy_fredholm, dy_series,
                         flat_probability, joint_probability, signed_probability)
from .periodic import PeriodicParams, bethe_roots, large_period_residual, periodic_probability
from .quadrature import ContourPlan
from .simulate import ctmc_exact, mc_joint, poisson_joint, poisson_tail
from .symfunc import ParticleConfig, chi_lambda, g_lambda, kess

__version__ = "0.1.0"

__all__ = [
    "ConditioningError", "ConvergenceError", "ContourPlan", "Degenerate", "InvalidInput",
    "LimitObservation", "NumericalDomain", "NumericalQualityWarning", "ObservationSet",
    "ParticleConfig", "PeriodicParams", "ProbabilityResult", "RayContourPlan", "TasepError",
    "Unsupported", "bethe_roots", "chi_lambda", "ctmc_exact", "d_flat", "d_step",
    "dy_fredholm", "dy_series", "f_limit", "flat_probability", "g_lambda",
    "joint_probability", "kess", "large_period_residual", "mc_joint", "periodic_probability",
    "poisson_joint", "poisson_tail", "scaling_map", "signed_probability",
]
