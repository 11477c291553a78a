"""Accelerations of the five second-order systems.

The Lagrange multiplier of each constrained system is eliminated from the
instantaneous state, so every right-hand side is an explicit function of
position and velocity.  Sphere systems evolve in time t, ellipsoid
systems in the arclength-like parameter s.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .model import PolarState, SystemParams

SYSTEMS = ("neumann", "jacobi", "rosochatius", "dual", "polar2n")
SPHERE_SYSTEMS = ("neumann", "rosochatius")
ELLIPSOID_SYSTEMS = ("jacobi", "dual")

NEAR_SINGULAR = 1e-6


class SingularConfigurationError(ValueError):
    """A coordinate hit zero where a centrifugal term needs it nonzero."""

    def __init__(self, index: int, message: str = "singular configuration"):
        super().__init__(f"{message} at index {index}")
        self.index = index


@dataclass(frozen=True, eq=False)
class AccelResult:
    accel: np.ndarray
    multiplier: float
    near_singular: bool = False


def _check_barrier(coords: np.ndarray, strength: np.ndarray, scale: float) -> bool:
    """Raise on an exact zero under a positive barrier; report near-misses."""
    active = strength > 0
    if not np.any(active):
        return False
    mags = np.abs(coords)
    hit = np.flatnonzero(active & (mags == 0.0))
    if hit.size:
        raise SingularConfigurationError(int(hit[0]))
    return bool(np.any(active & (mags < NEAR_SINGULAR * scale)))


def _neumann_kernel(x, v, a):
    xi = (v @ v - a @ (x * x)) / (x @ x)
    return -a * x - xi * x, xi


def _jacobi_kernel(q, p, b):
    normal = q / b
    xi = np.sum(p * p / b) / (normal @ normal)
    return -xi * normal, xi


def _rosochatius_kernel(x, v, a, c, active):
    cx2 = np.zeros_like(x)
    np.divide(c, x * x, out=cx2, where=active)
    xi = (v @ v - a @ (x * x) + cx2.sum()) / (x @ x)
    # c_k / x_k^3 written as (c_k/x_k^2)/x_k to reuse the masked division
    barrier = np.zeros_like(x)
    np.divide(cx2, x, out=barrier, where=active)
    return -a * x + barrier - xi * x, xi


def _dual_kernel(q, p, b, d, active):
    normal = q / b
    dq2 = np.zeros_like(q)
    np.divide(d, q * q, out=dq2, where=active)
    xi = np.sum((p * p + dq2) / b) / (normal @ normal)
    barrier = np.zeros_like(q)
    np.divide(dq2, q, out=barrier, where=active)
    return barrier - xi * normal, xi


def _nonzero(vec, what="zero position"):
    if not np.any(vec):
        raise ValueError(what)


def neumann_accel(x, xdot, params: SystemParams) -> AccelResult:
    x = np.asarray(x, dtype=float)
    _nonzero(x)
    acc, xi = _neumann_kernel(x, np.asarray(xdot, dtype=float), params.a)
    return AccelResult(acc, float(xi))


def jacobi_accel(q, qprime, params: SystemParams) -> AccelResult:
    q = np.asarray(q, dtype=float)
    _nonzero(q, "R^2 = 0 (zero position)")
    acc, xi = _jacobi_kernel(q, np.asarray(qprime, dtype=float), params.b)
    return AccelResult(acc, float(xi))


def rosochatius_accel(x, xdot, params: SystemParams) -> AccelResult:
    x = np.asarray(x, dtype=float)
    c = params.c
    flag = _check_barrier(x, c, abs(params.r))
    _nonzero(x)
    acc, xi = _rosochatius_kernel(x, np.asarray(xdot, dtype=float), params.a, c, c > 0)
    return AccelResult(acc, float(xi), flag)


def dual_rosochatius_accel(q, qprime, params: SystemParams) -> AccelResult:
    q = np.asarray(q, dtype=float)
    b, d = params.b, params.d
    flag = _check_barrier(q, d, float(np.sqrt(b.max())))
    _nonzero(q, "R^2 = 0 (zero position)")
    acc, xi = _dual_kernel(q, np.asarray(qprime, dtype=float), b, d, d > 0)
    return AccelResult(acc, float(xi), flag)


def _polar_accel(q, th_dot, q_dot, a, b):
    if np.any(q == 0.0):
        raise SingularConfigurationError(int(np.flatnonzero(q == 0.0)[0]),
                                         "angle undefined")
    R2 = np.sum((q / b) ** 2)
    s = np.sum((q_dot**2 + (q * th_dot) ** 2) / b)
    qdd = q * th_dot**2 - a * q * (s / R2)
    thdd = -2.0 * q_dot * th_dot / q
    return qdd, thdd


def polar_geodesic_accel(s: PolarState, params: SystemParams):
    """Return (q'', theta'') of the geodesic system in polar coordinates.

    ``s.x`` carries the radial coordinates q_k and ``s.xdot`` their
    s-derivatives.
    """
    return _polar_accel(s.x, s.thetadot, s.xdot, params.a, params.b)


def state_size(system: str, n: int) -> int:
    return 4 * n if system == "polar2n" else 2 * n


def first_order_field(system: str, params: SystemParams) -> Callable[[np.ndarray], np.ndarray]:
    """Return u -> du/dt for the first-order form of ``system``.

    The state vector is (position, velocity), or (q, theta, q', theta')
    for ``polar2n``.
    """
    if system == "polar2n":
        n = params.n
        a, b = params.a, params.b

        def polar_field(u):
            q, th_dot, q_dot = u[:n], u[3 * n:], u[2 * n:3 * n]
            qdd, thdd = _polar_accel(q, th_dot, q_dot, a, b)
            return np.concatenate([q_dot, th_dot, qdd, thdd])

        return polar_field
    n = params.n
    a, b, c, d = params.a, params.b, params.c, params.d
    if system == "neumann":
        def kernel(x, v):
            return _neumann_kernel(x, v, a)[0]
    elif system == "jacobi":
        def kernel(x, v):
            return _jacobi_kernel(x, v, b)[0]
    elif system == "rosochatius":
        active = c > 0

        def kernel(x, v):
            return _rosochatius_kernel(x, v, a, c, active)[0]
    elif system == "dual":
        active = d > 0

        def kernel(x, v):
            return _dual_kernel(x, v, b, d, active)[0]
    else:
        raise ValueError(f"unknown system {system!r}")

    def field(u):
        return np.concatenate([u[n:], kernel(u[:n], u[n:])])

    return field


def as_first_order(system: str, state, params: SystemParams) -> np.ndarray:
    """Evaluate the first-order vector field at ``state`` (vector or state object).

    Unlike :func:`first_order_field` this goes through the checked
    acceleration functions, so singular inputs raise.
    """
    u = state.vector() if hasattr(state, "vector") else np.asarray(state, dtype=float)
    n = params.n
    if system == "polar2n":
        ps = PolarState(u[:n], u[n:2 * n], u[2 * n:3 * n], u[3 * n:])
        qdd, thdd = polar_geodesic_accel(ps, params)
        return np.concatenate([ps.xdot, ps.thetadot, qdd, thdd])
    accel = {
        "neumann": neumann_accel,
        "jacobi": jacobi_accel,
        "rosochatius": rosochatius_accel,
        "dual": dual_rosochatius_accel,
    }.get(system)
    if accel is None:
        raise ValueError(f"unknown system {system!r}")
    return np.concatenate([u[n:], accel(u[:n], u[n:], params).accel])
