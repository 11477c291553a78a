"""Classical RK4 stepping with optional constraint projection and drift monitoring."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import invariants as inv
from .dynamics import (
    ELLIPSOID_SYSTEMS,
    NEAR_SINGULAR,
    SPHERE_SYSTEMS,
    SYSTEMS,
    first_order_field,
    state_size,
)
from .model import SystemParams, tangent_project

PROJECTIONS = ("none", "renormalize")


class IntegrationError(RuntimeError):
    """Integration aborted; carries the last good time and state."""

    def __init__(self, message: str, last_time: float, last_state: np.ndarray):
        super().__init__(f"{message} (last good t = {last_time:.6g})")
        self.last_time = last_time
        self.last_state = last_state
        self.partial: Trajectory | None = None


@dataclass(frozen=True)
class IntegrationConfig:
    step: float
    t_end: float
    projection: str = "none"
    sample_stride: int = 1
    singular_guard_radius: float = 0.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        # t_end = 0 is admitted and yields the initial sample only
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.t_end > 0 and self.step > self.t_end:
            raise ValueError("step must not exceed t_end")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"projection must be one of {PROJECTIONS}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.singular_guard_radius < 0:
            raise ValueError("singular_guard_radius must be nonnegative")


@dataclass(frozen=True, eq=False)
class Trajectory:
    system: str
    times: np.ndarray
    states: np.ndarray
    invariant_samples: dict = field(default_factory=dict)
    diagnostics: np.ndarray | None = None
    truncated: bool = False

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)


def rk4_step(field_fn: Callable[[np.ndarray], np.ndarray], u: np.ndarray, h: float) -> np.ndarray:
    k1 = field_fn(u)
    k2 = field_fn(u + 0.5 * h * k1)
    k3 = field_fn(u + 0.5 * h * k2)
    k4 = field_fn(u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def project_state(system: str, u, params: SystemParams) -> np.ndarray:
    """Rescale the position onto the constraint surface and project the velocity."""
    u = np.array(u, dtype=float)
    n = params.n
    if system in SPHERE_SYSTEMS:
        x = u[:n]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            raise ValueError("zero position")
        x = x * (abs(params.r) / norm)
        return np.concatenate([x, tangent_project(x, u[n:])])
    if system in ELLIPSOID_SYSTEMS or system == "polar2n":
        b = params.b
        q = u[:n]
        level = np.sum(q * q / b)
        if level == 0.0:
            raise ValueError("zero position")
        q = q / np.sqrt(level)
        vel = slice(n, 2 * n) if system != "polar2n" else slice(2 * n, 3 * n)
        out = u.copy()
        out[:n] = q
        out[vel] = tangent_project(q / b, u[vel])
        return out
    raise ValueError(f"unknown system {system!r}")


def constraint_residuals(system: str, u, params: SystemParams) -> tuple[float, float]:
    u = np.asarray(u, dtype=float)
    n = params.n
    if system in SPHERE_SYSTEMS:
        x, v = u[:n], u[n:]
        return float(x @ x - params.r**2), float(x @ v)
    q = u[:n]
    p = u[n:2 * n] if system != "polar2n" else u[2 * n:3 * n]
    b = params.b
    return float(np.sum(q * q / b) - 1.0), float(np.sum(q * p / b))


def sample_invariants(system: str, u, params: SystemParams) -> dict[str, np.ndarray]:
    """Conserved quantities monitored for ``system`` at state ``u``."""
    n = params.n
    u = np.asarray(u, dtype=float)
    if system == "polar2n":
        q, thd = u[:n], u[3 * n:]
        return {"L": q * q * thd, "hamiltonian": np.array([inv.hamiltonian(system, u, params)])}
    family = inv.SYSTEM_FAMILY[system]
    iv = inv._FAMILY_FUNCS[family](u[:n], u[n:], params)
    return {family: iv.values, "hamiltonian": np.array([inv.hamiltonian(system, (u[:n], u[n:]), params)])}


def _guard(system: str, params: SystemParams, config: IntegrationConfig):
    if system == "rosochatius":
        strength, scale = params.c, abs(params.r)
    elif system == "dual":
        strength, scale = params.d, float(np.sqrt(params.b.max()))
    else:
        return None
    active = strength > 0
    if not np.any(active):
        return None
    radius = max(NEAR_SINGULAR * scale, config.singular_guard_radius)
    n = params.n

    def tripped(u):
        hit = np.flatnonzero(active & (np.abs(u[:n]) < radius))
        return int(hit[0]) if hit.size else None

    return tripped


def _as_vector(initial) -> np.ndarray:
    if hasattr(initial, "vector"):
        return np.asarray(initial.vector(), dtype=float)
    return np.array(initial, dtype=float)


def integrate_flow(
    system: str,
    initial,
    params: SystemParams,
    config: IntegrationConfig,
    *,
    monitor: bool = True,
) -> Trajectory:
    """Integrate ``system`` from ``initial`` up to ``config.t_end``.

    Samples are stored every ``sample_stride`` steps plus the final state.
    If the step count does not divide ``t_end`` the last step is shortened.
    Raises :class:`IntegrationError` when the singular guard trips; the
    error carries the partial trajectory as ``partial``.
    """
    if system not in SYSTEMS:
        raise ValueError(f"unknown system {system!r}")
    u = _as_vector(initial)
    if len(u) != state_size(system, params.n):
        raise ValueError(f"state has {len(u)} entries, {system} needs {state_size(system, params.n)}")
    field_fn = first_order_field(system, params)
    tripped = _guard(system, params, config)
    project = config.projection == "renormalize"

    if tripped is not None:
        idx = tripped(u)
        if idx is not None:
            raise IntegrationError(f"initial state inside singular guard at index {idx}", 0.0, u)

    n_steps = int(np.ceil(config.t_end / config.step - 1e-9)) if config.t_end > 0 else 0
    times = [0.0]
    states = [u.copy()]
    t = 0.0
    for i in range(1, n_steps + 1):
        h = config.step if i < n_steps else config.t_end - (n_steps - 1) * config.step
        try:
            nxt = rk4_step(field_fn, u, h)
        except (ValueError, ZeroDivisionError) as exc:
            err = IntegrationError(f"field evaluation failed: {exc}", t, u)
            err.partial = _finish(system, params, times, states, monitor, truncated=True)
            raise err from exc
        if project:
            nxt = project_state(system, nxt, params)
        if tripped is not None:
            idx = tripped(nxt)
            if idx is not None:
                err = IntegrationError(f"singular guard tripped at index {idx}", t, u)
                err.partial = _finish(system, params, times, states, monitor, truncated=True)
                raise err
        u = nxt
        t = config.t_end if i == n_steps else i * config.step
        if i % config.sample_stride == 0 or i == n_steps:
            times.append(t)
            states.append(u.copy())
    return _finish(system, params, times, states, monitor)


def _finish(system, params, times, states, monitor, truncated=False) -> Trajectory:
    states = np.array(states)
    diagnostics = np.array([constraint_residuals(system, s, params) for s in states])
    samples: dict[str, np.ndarray] = {}
    if monitor:
        rows = [sample_invariants(system, s, params) for s in states]
        for key in rows[0]:
            samples[key] = np.array([r[key] for r in rows])
    return Trajectory(system, np.array(times), states, samples, diagnostics, truncated)


def integrate_on_grid(system: str, initial, params: SystemParams, times: Sequence[float]) -> np.ndarray:
    """RK4 along an arbitrary increasing time grid; returns the state at every grid point."""
    times = np.asarray(times, dtype=float)
    field_fn = first_order_field(system, params)
    u = _as_vector(initial)
    out = np.empty((len(times), len(u)))
    out[0] = u
    for i in range(1, len(times)):
        u = rk4_step(field_fn, u, times[i] - times[i - 1])
        out[i] = u
    return out


def drift_report(trajectory: Trajectory, families: Sequence[str] | None = None) -> dict[str, np.ndarray]:
    """Per-entry max_t |V(t) - V(0)| / (1 + |V(0)|) for each monitored family."""
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    samples = trajectory.invariant_samples
    if not samples:
        raise ValueError("trajectory carries no invariant samples")
    keys = families if families is not None else list(samples)
    out = {}
    for key in keys:
        vals = np.asarray(samples[key], dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        out[key] = np.max(np.abs(vals - vals[0]), axis=0) / (1.0 + np.abs(vals[0]))
    return out


def max_drift(report: dict[str, np.ndarray]) -> float:
    return max(float(np.max(v)) for v in report.values()) if report else 0.0
