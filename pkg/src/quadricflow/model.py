"""Domain types, parameter validation and constraint residuals.

Every system in the package is defined by one :class:`SystemParams`
bundle.  Sphere-side systems (Neumann, Rosochatius) use ``a``, ``r`` and
``c``; ellipsoid-side systems (Jacobi, dual Rosochatius) use ``b = 1/a``
and ``d``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

ADMISSION_TOL = 1e-9


class ParameterError(ValueError):
    """Raised for an invalid parameter bundle; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConstraintError(ValueError):
    """Raised when a state is not admitted on its constraint surface."""


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemParams:
    """Parameters shared by all systems.

    Construct through :func:`validate_params`; direct construction skips
    every check and is used internally for the degenerate 2N lifts.
    """

    a: np.ndarray
    b: np.ndarray
    r: float = 1.0
    c: np.ndarray = None
    d: np.ndarray = None

    def __post_init__(self):
        a = _frozen(self.a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _frozen(self.b))
        object.__setattr__(self, "r", float(self.r))
        zeros = np.zeros_like(a)
        object.__setattr__(self, "c", _frozen(zeros if self.c is None else self.c))
        object.__setattr__(self, "d", _frozen(zeros if self.d is None else self.d))

    @property
    def n(self) -> int:
        return len(self.a)

    def doubled(self) -> SystemParams:
        """Parameters of the degenerate 2N system with a_{k+N} = a_k."""
        z = np.zeros(2 * self.n)
        return SystemParams(
            a=np.concatenate([self.a, self.a]),
            b=np.concatenate([self.b, self.b]),
            r=self.r,
            c=z,
            d=z,
        )

    def replace(self, **changes) -> SystemParams:
        fields = {"a": self.a, "b": self.b, "r": self.r, "c": self.c, "d": self.d}
        fields.update(changes)
        return SystemParams(**fields)

    def as_dict(self) -> dict[str, Any]:
        return {
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "r": self.r,
            "c": self.c.tolist(),
            "d": self.d.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, SystemParams):
            return NotImplemented
        return (
            self.r == other.r
            and all(
                np.array_equal(getattr(self, k), getattr(other, k)) for k in "abcd"
            )
        )

    __hash__ = None


def _vector(raw: Mapping, key: str) -> np.ndarray | None:
    if key not in raw or raw[key] is None:
        return None
    try:
        arr = np.asarray(raw[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParameterError(key, "must be a sequence of reals") from exc
    if arr.ndim != 1:
        raise ParameterError(key, "must be a one-dimensional sequence")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(key, "entries must be finite")
    return arr


def validate_params(
    raw: Mapping | SystemParams,
    *,
    allow_degenerate: bool = False,
    allow_single: bool = False,
) -> SystemParams:
    """Validate a parameter bundle and derive whichever of a/b is missing.

    ``raw`` is a mapping with keys ``a`` and/or ``b``, ``r`` and the
    optional centrifugal constants ``c`` and ``d`` (default zero).  The
    frequencies must be strictly increasing; ``allow_degenerate`` relaxes
    this to nondecreasing (spherical ellipsoids, isotropic potentials).
    """
    if isinstance(raw, SystemParams):
        raw = raw.as_dict()
    a = _vector(raw, "a")
    b = _vector(raw, "b")
    if a is None and b is None:
        raise ParameterError("a", "one of 'a' or 'b' is required")
    if "r" not in raw or raw["r"] is None:
        raise ParameterError("r", "missing sphere radius")
    try:
        r = float(raw["r"])
    except (TypeError, ValueError) as exc:
        raise ParameterError("r", "must be a real number") from exc
    if r == 0.0 or not np.isfinite(r):
        raise ParameterError("r", "must be finite and nonzero")

    if a is None:
        if np.any(b <= 0):
            raise ParameterError("b", "entries must be positive")
        a = 1.0 / b
    elif b is None:
        if np.any(a <= 0):
            raise ParameterError("a", "entries must be positive")
        b = 1.0 / a
    else:
        if a.shape != b.shape:
            raise ParameterError("b", "length differs from 'a'")
        if np.any(a <= 0) or np.any(b <= 0):
            raise ParameterError("a", "entries must be positive")
        if not np.allclose(a * b, 1.0, rtol=1e-12, atol=0.0):
            raise ParameterError("b", "must satisfy b_k * a_k = 1")
        b = 1.0 / a

    n = len(a)
    if n == 0 or (n < 2 and not allow_single):
        raise ParameterError("a", "need at least two frequencies")
    if np.any(a <= 0):
        raise ParameterError("a", "entries must be positive")
    gaps = np.diff(a)
    if not allow_degenerate:
        if np.any(gaps == 0):
            raise ParameterError("a", "duplicate frequency")
        if np.any(gaps < 0):
            raise ParameterError("a", "not strictly increasing")
    elif np.any(gaps < 0):
        raise ParameterError("a", "not increasing")

    out = {}
    for key in ("c", "d"):
        v = _vector(raw, key)
        if v is None:
            v = np.zeros(n)
        if v.shape != (n,):
            raise ParameterError(key, f"expected {n} entries")
        if np.any(v < 0):
            raise ParameterError(key, "centrifugal constants must be nonnegative")
        out[key] = v
    return SystemParams(a=a, b=b, r=r, c=out["c"], d=out["d"])


@dataclass(frozen=True, eq=False)
class SphereState:
    """Phase point of a sphere system.

    ``w`` is the velocity (tangent to the sphere) when ``gauged`` is
    false, or the gauged momentum y (defined up to y + lambda*x) when true.
    """

    x: np.ndarray
    w: np.ndarray
    gauged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "w", _frozen(self.w))
        if self.x.shape != self.w.shape:
            raise ValueError("x and w must have the same shape")

    def velocity(self) -> np.ndarray:
        return tangent_project(self.x, self.w) if self.gauged else np.array(self.w)

    def to_velocity(self) -> SphereState:
        return SphereState(self.x, self.velocity(), gauged=False)

    def to_gauged(self, lam: float = 0.0) -> SphereState:
        """Gauged representative y = v + lam*x of a velocity state."""
        return SphereState(self.x, self.velocity() + lam * self.x, gauged=True)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.velocity()])


@dataclass(frozen=True, eq=False)
class EllipsoidState:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "p", _frozen(self.p))
        if self.q.shape != self.p.shape:
            raise ValueError("q and p must have the same shape")

    def vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])


@dataclass(frozen=True, eq=False)
class PolarState:
    """Radial coordinates and angles of a 2N-dimensional point, with rates."""

    x: np.ndarray
    theta: np.ndarray
    xdot: np.ndarray
    thetadot: np.ndarray

    def __post_init__(self):
        for name in ("x", "theta", "xdot", "thetadot"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.theta, self.xdot, self.thetadot])


def neumann_residuals(s: SphereState, params: SystemParams) -> tuple[float, float]:
    """Return (sum x^2 - r^2, x.w); the second is identically 0 when gauged."""
    x = s.x
    sphere = float(x @ x - params.r**2)
    tangency = 0.0 if s.gauged else float(x @ s.w)
    return sphere, tangency


def jacobi_residuals(s: EllipsoidState, params: SystemParams) -> tuple[float, float]:
    """Return (sum q^2/b - 1, sum q p / b)."""
    b = params.b
    return float(np.sum(s.q**2 / b) - 1.0), float(np.sum(s.q * s.p / b))


def tangent_project(x, y) -> np.ndarray:
    """Remove the radial part of y: v = y - x (x.y)/x^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x2 = x @ x
    if x2 == 0.0:
        raise ValueError("zero position vector")
    return y - x * ((x @ y) / x2)


def admit_sphere(s: SphereState, params: SystemParams, tol: float = ADMISSION_TOL):
    sphere, tangency = neumann_residuals(s, params)
    if abs(sphere) > tol or abs(tangency) > tol:
        raise ConstraintError(
            f"sphere state not admitted: residuals ({sphere:.3e}, {tangency:.3e})"
        )
    return s


def admit_ellipsoid(s: EllipsoidState, params: SystemParams, tol: float = ADMISSION_TOL):
    surface, tangency = jacobi_residuals(s, params)
    if abs(surface) > tol or abs(tangency) > tol:
        raise ConstraintError(
            f"ellipsoid state not admitted: residuals ({surface:.3e}, {tangency:.3e})"
        )
    return s


def _rescale_speed(w: np.ndarray, speed: float | None) -> np.ndarray:
    if speed is None:
        return w
    norm = np.linalg.norm(w)
    return w if norm == 0.0 else w * (speed / norm)


def sample_sphere_state(
    rng: np.random.Generator,
    params: SystemParams,
    *,
    speed: float | None = 1.0,
    min_abs: float = 0.0,
) -> SphereState:
    """Random admitted (x, v): normalized Gaussian position, projected Gaussian velocity.

    ``min_abs`` rejects positions with any |x_k| < min_abs * r, which keeps
    samples away from the Rosochatius barrier.
    """
    n = params.n
    r = abs(params.r)
    for _ in range(10_000):
        u = rng.standard_normal(n)
        x = r * u / np.linalg.norm(u)
        if np.all(np.abs(x) >= min_abs * r):
            break
    else:
        raise RuntimeError("could not sample a position with the requested min_abs")
    v = tangent_project(x, rng.standard_normal(n))
    return SphereState(x, _rescale_speed(v, speed))


def sample_ellipsoid_state(
    rng: np.random.Generator,
    params: SystemParams,
    *,
    speed: float | None = 1.0,
    min_abs: float = 0.0,
) -> EllipsoidState:
    """Random admitted (q, p) via the sphere pullback q_k = sqrt(b_k) u_k."""
    n = params.n
    sb = np.sqrt(params.b)
    for _ in range(10_000):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        q = sb * u
        if np.all(np.abs(q) >= min_abs * sb):
            break
    else:
        raise RuntimeError("could not sample a position with the requested min_abs")
    normal = q / params.b
    p = tangent_project(normal, rng.standard_normal(n))
    return EllipsoidState(q, _rescale_speed(p, speed))
