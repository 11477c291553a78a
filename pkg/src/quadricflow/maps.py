"""Maps between the systems: Gauss map, gauge shifts, polar lifts and reductions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .dynamics import SingularConfigurationError
from .integrate import Trajectory
from .model import EllipsoidState, PolarState, SphereState, SystemParams, tangent_project


@dataclass(frozen=True, eq=False)
class MappedPair:
    source: EllipsoidState
    s: float
    target: SphereState
    t: float
    kappa: float
    mu: float


def _radius2(q, b) -> float:
    R2 = float(np.sum((np.asarray(q, dtype=float) / b) ** 2))
    if R2 == 0.0:
        raise ValueError("R = 0 (zero position)")
    return R2


def compute_kappa(q, p, params: SystemParams) -> float:
    """kappa = (R^2 sum p^2/b)^(-1/2), constant along geodesics."""
    p = np.asarray(p, dtype=float)
    energy = float(np.sum(p * p / params.b))
    if energy == 0.0:
        raise ValueError("zero momentum: kappa undefined")
    return 1.0 / np.sqrt(_radius2(q, params.b) * energy)


def time_rate(q, kappa: float, params: SystemParams) -> float:
    """ds/dt = kappa R^2."""
    return kappa * _radius2(q, params.b)


def gauss_map(q, p, params: SystemParams, mu: float = 0.0, kappa: float | None = None) -> SphereState:
    """Image of an ellipsoid phase point on the sphere of radius r, in gauged form.

    ``kappa`` defaults to the value computed from (q, p); pass the initial
    value to map a whole trajectory with one fixed time scale.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    b, r = params.b, params.r
    R = np.sqrt(_radius2(q, b))
    if kappa is None:
        kappa = compute_kappa(q, p, params)
    s_dot = kappa * R * R
    x = (r / R) * q / b
    y = (r / (R * b)) * (p * s_dot + mu * q)
    return SphereState(x, y, gauged=True)


def gauss_pair(q, p, params: SystemParams, mu: float = 0.0, s: float = 0.0, t: float = 0.0) -> MappedPair:
    kappa = compute_kappa(q, p, params)
    return MappedPair(EllipsoidState(q, p), s, gauss_map(q, p, params, mu, kappa), t, kappa, mu)


def reparametrize_time(trajectory: Trajectory, params: SystemParams, kappa: float | None = None) -> Trajectory:
    """Convert an s-parametrized ellipsoid trajectory into one in Neumann time t.

    t(s) = integral of ds / (kappa R^2) by cumulative Simpson on the stored
    grid; kappa is frozen at its initial value.  States are mapped with the
    Gauss map into (x, v) pairs.
    """
    s = np.asarray(trajectory.times, dtype=float)
    states = np.asarray(trajectory.states, dtype=float)
    if len(s) < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(s) <= 0):
        raise ValueError("non-monotone parameter grid")
    n = params.n
    if kappa is None:
        kappa = compute_kappa(states[0, :n], states[0, n:2 * n], params)
    R2 = np.sum((states[:, :n] / params.b) ** 2, axis=1)
    rate = 1.0 / (kappa * R2)
    t = cumulative_simpson(rate, x=s, initial=0.0)
    if np.any(np.diff(t) <= 0):
        raise ValueError("reparametrized time is not monotone")
    mapped = []
    for row in states:
        img = gauss_map(row[:n], row[n:2 * n], params, 0.0, kappa)
        mapped.append(np.concatenate([img.x, img.velocity()]))
    return Trajectory("neumann", t, np.array(mapped), {}, None)


def gauge_transform(state: SphereState, lam: float) -> SphereState:
    if not state.gauged:
        raise ValueError("gauge transformations act on gauged states")
    return SphereState(state.x, state.w + lam * state.x, gauged=True)


def polar_embed(state: PolarState) -> tuple[np.ndarray, np.ndarray]:
    """(x, theta) -> z = (x cos theta, x sin theta) with its time derivative."""
    x, th, xd, thd = state.x, state.theta, state.xdot, state.thetadot
    c, s = np.cos(th), np.sin(th)
    z = np.concatenate([x * c, x * s])
    w = np.concatenate([xd * c - x * thd * s, xd * s + x * thd * c])
    return z, w


def polar_reduce(z, w, signs=None) -> tuple[PolarState, np.ndarray]:
    """Inverse of :func:`polar_embed`; also returns the per-plane angular momenta.

    Radial coordinates come out nonnegative unless ``signs`` is given, in
    which case x_k takes sign ``signs[k]`` and theta_k shifts by pi.  A
    flow whose barrier forbids x_k = 0 keeps the sign it started with.
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    n = len(z) // 2
    zc, zs = z[:n], z[n:]
    wc, ws = w[:n], w[n:]
    x = np.hypot(zc, zs)
    zero = np.flatnonzero(x == 0.0)
    if zero.size:
        raise SingularConfigurationError(int(zero[0]), "angle undefined")
    sgn = np.ones(n) if signs is None else np.where(np.asarray(signs) < 0, -1.0, 1.0)
    x = sgn * x
    theta = np.arctan2(sgn * zs, sgn * zc)
    xdot = (zc * wc + zs * ws) / x
    ang = zc * ws - zs * wc
    return PolarState(x, theta, xdot, ang / (x * x)), ang


def _theta0(theta0, n):
    return np.zeros(n) if theta0 is None else np.asarray(theta0, dtype=float)


def lift_rosochatius(x, xdot, params: SystemParams, theta0=None):
    """2N Neumann initial data whose reduction is the given Rosochatius state.

    Returns (z, w, params2n) with angular momenta x_k^2 thetadot_k = sqrt(c_k).
    """
    x = np.asarray(x, dtype=float)
    c = params.c
    hit = np.flatnonzero((c > 0) & (x == 0.0))
    if hit.size:
        raise SingularConfigurationError(int(hit[0]))
    thd = np.zeros_like(x)
    np.divide(np.sqrt(c), x * x, out=thd, where=c > 0)
    z, w = polar_embed(PolarState(x, _theta0(theta0, len(x)), xdot, thd))
    return z, w, params.doubled()


def dual_angular_rates(q, params: SystemParams) -> np.ndarray:
    """theta'_k from f_k^2 theta'_k = sqrt(d_k)/b_k^2 with f_k = q_k/b_k."""
    q = np.asarray(q, dtype=float)
    d, b = params.d, params.b
    hit = np.flatnonzero((d > 0) & (q == 0.0))
    if hit.size:
        raise SingularConfigurationError(int(hit[0]))
    f = q / b
    thd = np.zeros_like(q)
    np.divide(np.sqrt(d) / (b * b), f * f, out=thd, where=d > 0)
    return thd


def lift_dual(q, qprime, params: SystemParams, theta0=None):
    """2N Jacobi initial data (zeta, pi, params2n) for a dual-Rosochatius state."""
    q = np.asarray(q, dtype=float)
    thd = dual_angular_rates(q, params)
    zeta, pi = polar_embed(PolarState(q, _theta0(theta0, len(q)), qprime, thd))
    return zeta, pi, params.doubled()


def polar_state_for_dual(q, qprime, params: SystemParams, theta0=None) -> PolarState:
    """(q, theta, q', theta') initial data of the polar geodesic system."""
    q = np.asarray(q, dtype=float)
    return PolarState(q, _theta0(theta0, len(q)), qprime, dual_angular_rates(q, params))


def sphere_velocity_from_ellipsoid(q, p, params: SystemParams, kappa: float | None = None) -> np.ndarray:
    """dx/dt of the Gauss image, obtained by projecting the gauged momentum."""
    img = gauss_map(q, p, params, 0.0, kappa)
    return tangent_project(img.x, img.w)
