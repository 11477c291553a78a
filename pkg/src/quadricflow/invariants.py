"""Conserved-quantity families, Hamiltonians and cross-system identities.

All four families share one shape::

    V_k = lead_k + scale * sum_{l != k} S_kl / (lam_k - lam_l)

with S_kl an antisymmetric-square pair term plus optional centrifugal
pieces.  ``_family`` evaluates that shape together with its analytic
Jacobian, which the bracket engine needs for tight involution checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import SingularConfigurationError
from .model import EllipsoidState, SphereState, SystemParams, tangent_project

FAMILIES = ("F", "G", "H", "I")


@dataclass(frozen=True, eq=False)
class InvariantVector:
    values: np.ndarray
    family: str
    hamiltonian: float


def pair_weights(lam: np.ndarray) -> np.ndarray:
    """Matrix of 1/(lam_k - lam_l) off the diagonal, zero on it."""
    lam = np.asarray(lam, dtype=float)
    diff = lam[:, None] - lam[None, :]
    off = ~np.eye(len(lam), dtype=bool)
    if np.any(diff[off] == 0.0):
        raise ValueError("degenerate parameters: equal entries give zero denominators")
    W = np.zeros_like(diff)
    W[off] = 1.0 / diff[off]
    return W


def _masked_inverse_square(coords, strength):
    hit = np.flatnonzero((strength > 0) & (coords == 0.0))
    if hit.size:
        raise SingularConfigurationError(int(hit[0]))
    g = np.zeros_like(coords)
    np.divide(strength, coords * coords, out=g, where=strength > 0)
    return g


def _family(x, y, lam, cent, *, sphere: bool, with_jacobian: bool):
    """Evaluate one invariant family and optionally its (N, 2N) Jacobian.

    ``sphere`` selects the F/H shape (lead x_k^2, scale 1/x^2); otherwise
    the G/I shape (lead y_k^2 + cent_k/x_k^2, scale 1).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cent = np.asarray(cent, dtype=float)
    W = pair_weights(lam)
    J = np.outer(x, y) - np.outer(y, x)
    x2v = x * x
    g = _masked_inverse_square(x, cent)
    T = np.outer(g, x2v)
    S = J * J + T + T.T
    pair = (W * S).sum(axis=1)

    if sphere:
        norm2 = x @ x
        if norm2 == 0.0:
            raise ValueError("zero position")
        u = 1.0 / norm2
        values = x2v + u * pair
    else:
        u = 1.0
        values = y * y + g + pair
    if not with_jacobian:
        return values, None

    n = len(x)
    eye = np.eye(n)
    M = W * J
    dx = 2.0 * (eye * (M @ y)[:, None] - M * y[:, None])
    dy = 2.0 * (M * x[:, None] - eye * (M @ x)[:, None])
    # centrifugal pieces sum_l W_kl (g_k x_l^2 + g_l x_k^2)
    if np.any(cent > 0):
        gp = np.zeros_like(x)
        np.divide(-2.0 * g, x, out=gp, where=cent > 0)
        dx += eye * (gp * (W @ x2v) + 2.0 * x * (W @ g))[:, None]
        dx += W * (2.0 * np.outer(g, x) + np.outer(x2v, gp))
    else:
        gp = np.zeros_like(x)

    if sphere:
        jx = 2.0 * eye * x[:, None] + u * dx - 2.0 * u * u * np.outer(pair, x)
        jy = u * dy
    else:
        jx = dx + eye * gp[:, None]
        jy = dy + 2.0 * eye * y[:, None]
    return values, np.hstack([jx, jy])


def _gauge_free(x, y):
    """J_kl is gauge invariant, so (x, v) and (x, y) representations agree."""
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def uhlenbeck_F(x, y, params: SystemParams) -> InvariantVector:
    x, y = _gauge_free(x, y)
    values, _ = _family(x, y, params.a, np.zeros_like(x), sphere=True, with_jacobian=False)
    return InvariantVector(values, "F", 0.5 * float(params.a @ values))


def uhlenbeck_G(q, p, params: SystemParams) -> InvariantVector:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    values, _ = _family(q, p, params.b, np.zeros_like(q), sphere=False, with_jacobian=False)
    return InvariantVector(values, "G", 0.5 * float(values.sum()))


def rosochatius_H(x, y, params: SystemParams) -> InvariantVector:
    """Rosochatius integrals; the Hamiltonian carries the c_k/x_k^2 offset verbatim."""
    x, y = _gauge_free(x, y)
    values, _ = _family(x, y, params.a, params.c, sphere=True, with_jacobian=False)
    offset = 0.5 * params.c.sum() / (x @ x)
    return InvariantVector(values, "H", 0.5 * float(params.a @ values) + float(offset))


def dual_I(q, p, params: SystemParams) -> InvariantVector:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    values, _ = _family(q, p, params.b, params.d, sphere=False, with_jacobian=False)
    return InvariantVector(values, "I", 0.5 * float(values.sum()))


def family_values(family: str, pos, mom, params: SystemParams) -> np.ndarray:
    return _FAMILY_FUNCS[family](pos, mom, params).values


def family_jacobian(family: str, pos, mom, params: SystemParams):
    """Return (values, Jacobian) with Jacobian rows d V_k / d(pos, mom)."""
    if family == "F":
        return _family(pos, mom, params.a, np.zeros(len(pos)), sphere=True, with_jacobian=True)
    if family == "H":
        return _family(pos, mom, params.a, params.c, sphere=True, with_jacobian=True)
    if family == "G":
        return _family(pos, mom, params.b, np.zeros(len(pos)), sphere=False, with_jacobian=True)
    if family == "I":
        return _family(pos, mom, params.b, params.d, sphere=False, with_jacobian=True)
    raise ValueError(f"unknown family {family!r}")


_FAMILY_FUNCS = {"F": uhlenbeck_F, "G": uhlenbeck_G, "H": rosochatius_H, "I": dual_I}

SYSTEM_FAMILY = {"neumann": "F", "jacobi": "G", "rosochatius": "H", "dual": "I"}


def hamiltonian(system: str, state, params: SystemParams) -> float:
    """Energy of ``state`` under ``system``.

    Sphere states may be gauged; the kinetic term always uses the
    tangent-projected velocity.
    """
    if system in ("neumann", "rosochatius"):
        if isinstance(state, SphereState):
            x, v = state.x, state.velocity()
        else:
            x, v = state
            x = np.asarray(x, dtype=float)
            v = tangent_project(x, v)
        energy = 0.5 * float(v @ v + params.a @ (x * x))
        if system == "rosochatius":
            energy += 0.5 * float(_masked_inverse_square(x, params.c).sum())
        return energy
    if system in ("jacobi", "dual"):
        if isinstance(state, EllipsoidState):
            q, p = state.q, state.p
        else:
            q, p = (np.asarray(s, dtype=float) for s in state)
        energy = 0.5 * float(p @ p)
        if system == "dual":
            energy += 0.5 * float(_masked_inverse_square(q, params.d).sum())
        return energy
    if system == "polar2n":
        n = params.n
        u = state.vector() if hasattr(state, "vector") else np.asarray(state, dtype=float)
        q, qd, thd = u[:n], u[2 * n:3 * n], u[3 * n:]
        return 0.5 * float(qd @ qd + (q * thd) @ (q * thd))
    raise ValueError(f"unknown system {system!r}")


def lifted_pair_sums(family: str, pos2n, mom2n, params2n: SystemParams) -> np.ndarray:
    """V_k + V_{k+N} of a degenerate 2N lift, combining pairs before division.

    ``family`` is "F" (2N Neumann lift, sums to H) or "G" (2N Jacobi lift,
    sums to I).  The partner terms l = k+N have zero denominators but
    cancel exactly between V_k and V_{k+N}, so they are dropped; the
    remaining four cross terms for each plane j share one denominator.
    """
    pos2n = np.asarray(pos2n, dtype=float)
    mom2n = np.asarray(mom2n, dtype=float)
    n = len(pos2n) // 2
    lam = params2n.a[:n] if family == "F" else params2n.b[:n]
    W = pair_weights(lam)
    J = np.outer(pos2n, mom2n) - np.outer(mom2n, pos2n)
    J2 = J * J
    blocks = J2[:n, :n] + J2[:n, n:] + J2[n:, :n] + J2[n:, n:]
    pair = (W * blocks).sum(axis=1)
    if family == "F":
        lead = pos2n[:n] ** 2 + pos2n[n:] ** 2
        return lead + pair / (pos2n @ pos2n)
    if family == "G":
        lead = mom2n[:n] ** 2 + mom2n[n:] ** 2
        return lead + pair
    raise ValueError("lifted_pair_sums supports families 'F' and 'G'")


def identity_residuals(
    jacobi_state: EllipsoidState,
    mapped: SphereState,
    params: SystemParams,
    mu: float,
    nu: float = 0.0,
) -> dict[str, float]:
    """Residuals of the Jacobi/Neumann cross identities on Gauss-mapped data.

    ``mapped`` must be the gauged image of ``jacobi_state`` with gauge
    ``mu``.  Keys ending in ``_stated`` evaluate the relations as they are
    usually written::

        F_k = (r kappa / b_k)^2 (p_k^2 - G_k),  sum b F = r^2/R^2,  sum b^2 F = 0

    These do not hold for F as defined by its pair sum.  ``_corrected``
    keys use the forms that do: F_k = -(r kappa / b_k)^2 G_k, sum b F = 0
    and sum b^2 F = -(r kappa)^2 |p|^2.
    """
    q, p = jacobi_state.q, jacobi_state.p
    b, r = params.b, params.r
    R2 = float(np.sum((q / b) ** 2))
    kappa2 = 1.0 / (R2 * float(np.sum(p * p / b)))
    F = uhlenbeck_F(mapped.x, mapped.w, params).values
    G = uhlenbeck_G(q, p, params).values
    scale = r * r * kappa2 / (b * b)
    y = mapped.w
    z = y + nu * mapped.x
    x2 = float(mapped.x @ mapped.x)
    out = {
        "sum_F_equals_x2": float(F.sum() - x2),
        "sum_G_over_b_zero": float(np.sum(G / b)),
        "F_vs_G_stated": float(np.max(np.abs(F - scale * (p * p - G)))),
        "sum_bF_stated": float(b @ F - r * r / R2),
        "sum_b2F_stated": float((b * b) @ F),
        "F_vs_G_corrected": float(np.max(np.abs(F + scale * G))),
        "sum_bF_corrected": float(b @ F),
        "sum_b2F_corrected": float((b * b) @ F + r * r * kappa2 * float(p @ p)),
        "sum_y2_over_a": float(b @ (y * y) - r * r * (1.0 + mu * mu / R2)),
        "sum_z2_over_a_shifted": float(b @ (z * z) - r * r * (1.0 + (mu + nu) ** 2 / R2)),
    }
    return out
