"""Poisson brackets as contractions with explicit structure matrices.

A phase point is a 2N-vector (position block, momentum block).  The
momentum block is the gauged y for ``gauged_neumann``, the tangent
velocity v for ``dirac_neumann`` and p for ``dirac_jacobi`` and
``canonical``.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .invariants import family_jacobian
from .model import SystemParams

KINDS = ("canonical", "gauged_neumann", "dirac_neumann", "dirac_jacobi")

FD_STEP = 1e-6


def _antisymmetric(upper_xy: np.ndarray, yy: np.ndarray) -> np.ndarray:
    """Assemble [[0, A], [-A^T, B]] with B made exactly antisymmetric."""
    n = upper_xy.shape[0]
    B = np.triu(yy, 1)
    B = B - B.T
    out = np.zeros((2 * n, 2 * n))
    out[:n, n:] = upper_xy
    out[n:, :n] = -upper_xy.T
    out[n:, n:] = B
    return out


def structure_matrix(kind: str, point, params: SystemParams | None = None) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    n = len(point) // 2
    pos, mom = point[:n], point[n:]
    if kind == "canonical":
        return _antisymmetric(np.eye(n), np.zeros((n, n)))
    if kind in ("gauged_neumann", "dirac_neumann"):
        x2 = pos @ pos
        if x2 == 0.0:
            raise ValueError("degenerate point: x = 0")
        ang = -(np.outer(pos, mom) - np.outer(mom, pos)) / x2
        if kind == "gauged_neumann":
            return _antisymmetric(np.eye(n), ang)
        return _antisymmetric(np.eye(n) - np.outer(pos, pos) / x2, ang)
    if kind == "dirac_jacobi":
        if params is None:
            raise ValueError("dirac_jacobi needs the ellipsoid parameters")
        b = params.b
        R2 = np.sum((pos / b) ** 2)
        if R2 == 0.0:
            raise ValueError("degenerate point: R^2 = 0")
        bb = np.outer(b, b)
        xy = np.eye(n) - np.outer(pos, pos) / (R2 * bb)
        ang = -(np.outer(pos, mom) - np.outer(mom, pos)) / (R2 * bb)
        return _antisymmetric(xy, ang)
    raise ValueError(f"unknown structure kind {kind!r}")


@dataclass(frozen=True)
class PoissonStructure:
    kind: str
    params: SystemParams | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown structure kind {self.kind!r}")

    def evaluate(self, point) -> np.ndarray:
        return structure_matrix(self.kind, point, self.params)


def fd_gradient(value: Callable, point, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient with per-coordinate step ``step * max(1, |z_i|)``."""
    point = np.asarray(point, dtype=float)
    grad = np.empty_like(point)
    for i in range(len(point)):
        h = step * max(1.0, abs(point[i]))
        up = point.copy()
        dn = point.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (value(up) - value(dn)) / (up[i] - dn[i])
    return grad


@dataclass(frozen=True)
class PhaseFunction:
    """A scalar phase-space function, optionally with an analytic gradient."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""

    def grad(self, point, *, finite_difference: bool = False) -> np.ndarray:
        if self.gradient is None or finite_difference:
            return fd_gradient(self.value, point)
        return np.asarray(self.gradient(np.asarray(point, dtype=float)), dtype=float)

    def self_check(self, points: Sequence) -> float:
        """Max relative mismatch between the analytic and central-difference gradients."""
        if self.gradient is None:
            return 0.0
        worst = 0.0
        for pt in points:
            g = self.grad(pt)
            fd = self.grad(pt, finite_difference=True)
            worst = max(worst, float(np.max(np.abs(g - fd)) / (1.0 + np.max(np.abs(g)))))
        return worst


def coordinate_function(index: int) -> PhaseFunction:
    def value(z):
        return float(z[index])

    def gradient(z):
        g = np.zeros(len(z))
        g[index] = 1.0
        return g

    return PhaseFunction(value, gradient, name=f"z[{index}]")


def constant_function(c: float = 1.0) -> PhaseFunction:
    return PhaseFunction(lambda z: c, lambda z: np.zeros(len(z)), name="const")


def family_functions(family: str, params: SystemParams) -> list[PhaseFunction]:
    """Phase functions V_k(pos, mom) of one invariant family, with analytic gradients."""
    n = params.n

    def make(k):
        def value(z):
            vals, _ = family_jacobian(family, z[:n], z[n:], params)
            return float(vals[k])

        def gradient(z):
            _, jac = family_jacobian(family, z[:n], z[n:], params)
            return jac[k]

        return PhaseFunction(value, gradient, name=f"{family}_{k + 1}")

    return [make(k) for k in range(n)]


def bracket_eval(
    f: PhaseFunction,
    g: PhaseFunction,
    structure: PoissonStructure,
    point,
    *,
    finite_difference: bool = False,
) -> float:
    """{f, g} = grad f . Pi . grad g, antisymmetrized so {f, f} is exactly 0."""
    point = np.asarray(point, dtype=float)
    Pi = structure.evaluate(point)
    gf = f.grad(point, finite_difference=finite_difference)
    gg = g.grad(point, finite_difference=finite_difference)
    return 0.5 * float(gf @ Pi @ gg - gg @ Pi @ gf)


def involution_matrix(
    family: str,
    structure: PoissonStructure,
    points: Sequence,
    params: SystemParams,
    *,
    finite_difference: bool = False,
) -> np.ndarray:
    """Matrix of max_points |{V_k, V_l}| for one invariant family."""
    if len(points) == 0:
        raise ValueError("need at least one sample point")
    n = params.n
    out = np.zeros((n, n))
    funcs = family_functions(family, params)
    for pt in points:
        pt = np.asarray(pt, dtype=float)
        Pi = structure.evaluate(pt)
        if finite_difference:
            grads = np.array([f.grad(pt, finite_difference=True) for f in funcs])
        else:
            _, grads = family_jacobian(family, pt[:n], pt[n:], params)
        B = grads @ Pi @ grads.T
        B = 0.5 * (B - B.T)
        out = np.maximum(out, np.abs(B))
    np.fill_diagonal(out, 0.0)
    return out


def reference_table(kind: str, point, params: SystemParams | None = None) -> dict[str, np.ndarray]:
    """The coordinate-bracket blocks written out entry by entry as an independent path."""
    point = np.asarray(point, dtype=float)
    n = len(point) // 2
    pos, mom = point[:n], point[n:]
    xx = np.zeros((n, n))
    if kind == "canonical":
        return {"xx": xx, "xy": np.eye(n), "yy": np.zeros((n, n))}
    xy = np.empty((n, n))
    yy = np.empty((n, n))
    x2 = sum(v * v for v in pos)
    if kind == "dirac_jacobi":
        b = params.b
        R2 = sum((pos[l] / b[l]) ** 2 for l in range(n))
    for i in range(n):
        for j in range(n):
            delta = 1.0 if i == j else 0.0
            if kind == "gauged_neumann":
                xy[i, j] = delta
                yy[i, j] = -(pos[i] * mom[j] - pos[j] * mom[i]) / x2
            elif kind == "dirac_neumann":
                xy[i, j] = delta - pos[i] * pos[j] / x2
                yy[i, j] = -(pos[i] * mom[j] - pos[j] * mom[i]) / x2
            elif kind == "dirac_jacobi":
                xy[i, j] = delta - pos[i] * pos[j] / (R2 * b[i] * b[j])
                yy[i, j] = -(pos[i] * mom[j] - pos[j] * mom[i]) / (R2 * b[i] * b[j])
            else:
                raise ValueError(f"unknown structure kind {kind!r}")
    return {"xx": xx, "xy": xy, "yy": yy}


def bracket_table_check(kind: str, points: Sequence, params: SystemParams | None = None) -> float:
    """Max |computed - reference| over all coordinate pairs and points."""
    structure = PoissonStructure(kind, params)
    worst = 0.0
    for pt in points:
        pt = np.asarray(pt, dtype=float)
        n = len(pt) // 2
        coords = [coordinate_function(i) for i in range(2 * n)]
        table = reference_table(kind, pt, params)
        for i in range(n):
            for j in range(n):
                got = {
                    "xx": bracket_eval(coords[i], coords[j], structure, pt),
                    "xy": bracket_eval(coords[i], coords[n + j], structure, pt),
                    "yy": bracket_eval(coords[n + i], coords[n + j], structure, pt),
                }
                for block, val in got.items():
                    worst = max(worst, abs(val - table[block][i, j]))
    return worst


def projected_velocity_jacobian(point) -> tuple[np.ndarray, np.ndarray]:
    """Return v(x, y) = y - x (x.y)/x^2 and its Jacobian d v / d(x, y)."""
    point = np.asarray(point, dtype=float)
    n = len(point) // 2
    x, y = point[:n], point[n:]
    x2 = x @ x
    s = x @ y
    v = y - x * (s / x2)
    eye = np.eye(n)
    dv_dx = -eye * (s / x2) - np.outer(x, y) / x2 + 2.0 * np.outer(x, x) * (s / x2**2)
    dv_dy = eye - np.outer(x, x) / x2
    return v, np.hstack([dv_dx, dv_dy])


def chain_rule_residual(points: Sequence) -> float:
    """Push the gauged structure through (x, y) -> (x, v) and compare with the Dirac table.

    Returns the max entrywise mismatch of the {x, v} and {v, v} blocks.
    """
    worst = 0.0
    for pt in points:
        pt = np.asarray(pt, dtype=float)
        n = len(pt) // 2
        v, dv = projected_velocity_jacobian(pt)
        jac = np.vstack([np.hstack([np.eye(n), np.zeros((n, n))]), dv])
        pushed = jac @ structure_matrix("gauged_neumann", pt) @ jac.T
        dirac = structure_matrix("dirac_neumann", np.concatenate([pt[:n], v]))
        worst = max(worst, float(np.max(np.abs(pushed - dirac))))
    return worst


def jacobiator(
    f: PhaseFunction,
    g: PhaseFunction,
    h: PhaseFunction,
    structure: PoissonStructure,
    point,
) -> float:
    """{f,{g,h}} + {g,{h,f}} + {h,{f,g}} with finite-difference outer gradients."""

    def inner(u, v):
        return PhaseFunction(lambda z: bracket_eval(u, v, structure, z))

    return (
        bracket_eval(f, inner(g, h), structure, point)
        + bracket_eval(g, inner(h, f), structure, point)
        + bracket_eval(h, inner(f, g), structure, point)
    )
