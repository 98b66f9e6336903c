"""Curvature, Riccati and hyperbolicity diagnostics for monotone Hamiltonian flows."""

__version__ = "0.1.0"

from .phase import (  # noqa: F401
    Atlas,
    Chart,
    ChartTransition,
    FlowSegment,
    IntegratorOptions,
    PhasePoint,
    PhaseSystem,
    TangentVector,
    Trajectory,
    flow,
    hamiltonian_vector_field,
    linearized_flow,
    make_point,
    monotone_form,
)
from .models import MODEL_NAMES, Model, instantiate  # noqa: F401
