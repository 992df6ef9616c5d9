"""Effective Hamiltonians for periodically driven quantum systems.

Two independent constructions (nested-commutator Magnus series and the
iterated integration-by-parts recursion), reference propagators, model
builders and the verification experiments that tie them together.
"""

from __future__ import annotations

from .effective import SCoeffTable, defect_polynomial, heff_coefficients, s_coefficients
from .magnus import EffectiveSeries, bernoulli, fm_coefficients, omega_terms
from .models import Model, ModelSpec, build, default_state
from .operator_core import BlockPartition, Conjugation, DimensionError, Operator, matexp
from .propagate import (
    ConvergenceError,
    PropagatorConfig,
    effective_propagator,
    reference_propagator,
    stroboscopic,
)
from .trigpoly import FourierOp, TermGrowthError, TrigPolyOp, limits
from .verify import (
    PropertyReport,
    ScalingReport,
    compare_series,
    long_horizon_scan,
    monodromy_log_oracle,
    property_suite,
    stroboscopic_scan,
)

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "Conjugation",
    "ConvergenceError",
    "DimensionError",
    "EffectiveSeries",
    "FourierOp",
    "Model",
    "ModelSpec",
    "Operator",
    "PropagatorConfig",
    "PropertyReport",
    "SCoeffTable",
    "ScalingReport",
    "TermGrowthError",
    "TrigPolyOp",
    "bernoulli",
    "build",
    "compare_series",
    "default_state",
    "defect_polynomial",
    "effective_propagator",
    "fm_coefficients",
    "heff_coefficients",
    "limits",
    "long_horizon_scan",
    "matexp",
    "monodromy_log_oracle",
    "omega_terms",
    "property_suite",
    "reference_propagator",
    "s_coefficients",
    "stroboscopic",
    "stroboscopic_scan",
]
