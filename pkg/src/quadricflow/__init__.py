"""Integrable flows on spheres and ellipsoids: Neumann, Jacobi, Rosochatius and dual Rosochatius."""

from .dynamics import (
    SYSTEMS,
    AccelResult,
    SingularConfigurationError,
    dual_rosochatius_accel,
    jacobi_accel,
    neumann_accel,
    polar_geodesic_accel,
    rosochatius_accel,
)
from .integrate import IntegrationConfig, IntegrationError, Trajectory, drift_report, integrate_flow
from .invariants import InvariantVector, dual_I, hamiltonian, rosochatius_H, uhlenbeck_F, uhlenbeck_G
from .maps import gauge_transform, gauss_map, lift_dual, lift_rosochatius, polar_embed, polar_reduce
from .model import (
    ConstraintError,
    EllipsoidState,
    ParameterError,
    PolarState,
    SphereState,
    SystemParams,
    tangent_project,
    validate_params,
)

__version__ = "0.1.0"

__all__ = [
    "SYSTEMS",
    "AccelResult",
    "ConstraintError",
    "EllipsoidState",
    "IntegrationConfig",
    "IntegrationError",
    "InvariantVector",
    "ParameterError",
    "PolarState",
    "SingularConfigurationError",
    "SphereState",
    "SystemParams",
    "Trajectory",
    "drift_report",
    "dual_I",
    "dual_rosochatius_accel",
    "gauge_transform",
    "gauss_map",
    "hamiltonian",
    "integrate_flow",
    "jacobi_accel",
    "lift_dual",
    "lift_rosochatius",
    "neumann_accel",
    "polar_embed",
    "polar_geodesic_accel",
    "polar_reduce",
    "rosochatius_H",
    "rosochatius_accel",
    "tangent_project",
    "uhlenbeck_F",
    "uhlenbeck_G",
    "validate_params",
]
