"""Filippov sliding calculus and fused-focus analysis of Welander's model."""
from .errors import FusedFocusError
from .filippov import (BoundaryKind, PiecewiseSystem, classify_boundary, eval_field,
                       find_tangencies, sliding_flow, sliding_lambda)
from .integrator import (IntegrationOptions, SmoothSystem, find_limit_cycle, integrate,
                         poincare_map)
from .kernels import BACKEND
from .welander import WelanderParams, nonsmooth_system

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundaryKind", "FusedFocusError", "IntegrationOptions", "PiecewiseSystem",
    "SmoothSystem", "WelanderParams", "classify_boundary", "eval_field", "find_limit_cycle",
    "find_tangencies", "integrate", "nonsmooth_system", "poincare_map", "sliding_flow",
    "sliding_lambda",
]
