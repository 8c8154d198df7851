"""Variable-gain observer driven by a continuous Riccati equation (CRE).

The translational error ``x = (e_p, e_v, e_a)`` obeys ``x' = A(t) x`` with
``A = [0 I 0; 0 0 -R; 0 0 0]`` and output ``C = [I 0 0]``; the observer gains
are ``[K3; K4; K5] = P C^T Q`` where ``P`` solves

    P' = A P + P A^T - P C^T Q C P + V.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .dynamics import MeasurementFrame
from .geometry import hat, vee_skew
from .observer_const import ObserverState, rk4_sampled

Array = NDArray[np.float64]

C_OUT = np.hstack([np.eye(3), np.zeros((3, 6))])


class LostPositivity(ArithmeticError):
    """Riccati solution stopped being positive definite."""

    def __init__(self, msg: str, t: float | None = None) -> None:
        super().__init__(msg if t is None else f"{msg} (t = {t:.6g} s)")
        self.t = t


@dataclass(frozen=True)
class RiccatiState:
    P: Array = field(default_factory=lambda: np.eye(9))
    Q: Array = field(default_factory=lambda: np.eye(3))
    V: Array = field(default_factory=lambda: 0.1 * np.eye(9))
    k1: float = 1.0
    k2: float = 1.0

    def __post_init__(self) -> None:
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        for name, M, n in (("P", self.P, 9), ("Q", self.Q, 3), ("V", self.V, 9)):
            if np.shape(M) != (n, n):
                raise ValueError(f"{name} must be {n}x{n}")


@dataclass(frozen=True)
class GainTriple:
    K3: Array
    K4: Array
    K5: Array


def build_A(R: ArrayLike) -> Array:
    A = np.zeros((9, 9))
    A[0:3, 3:6] = np.eye(3)
    A[3:6, 6:9] = -np.asarray(R, dtype=float)
    return A


def observability_certificate(R: ArrayLike) -> Array:
    """``M M^T`` with ``M = [M0 M1 M2]``, ``M0 = C^T``, ``M_{i+1} = M_i' + A^T M_i``.

    For this (A, C) pair the derivatives of ``M0`` and ``M1`` vanish, giving
    ``M0 = [I;0;0]``, ``M1 = [0;I;0]`` and ``M2 = [0;0;-R^T]``.
    """
    R = np.asarray(R, dtype=float)
    M = np.zeros((9, 9))
    M[0:3, 0:3] = np.eye(3)
    M[3:6, 3:6] = np.eye(3)
    M[6:9, 6:9] = -R.T
    return M @ M.T


def cre_rhs(P: ArrayLike, R: ArrayLike, Q: ArrayLike, V: ArrayLike) -> Array:
    P = np.asarray(P, dtype=float)
    R = np.asarray(R, dtype=float)
    # A P uses the block structure of A: rows (P[3:6], -R P[6:9], 0).
    AP = np.zeros((9, 9))
    AP[0:3] = P[3:6]
    AP[3:6] = -R @ P[6:9]
    PC = P[:, 0:3]
    return AP + AP.T - PC @ np.asarray(Q, dtype=float) @ PC.T + np.asarray(V, dtype=float)


def _check_positive(P: Array, t: float | None = None) -> float:
    lam = float(np.linalg.eigvalsh(P)[0])
    if not lam > 0.0:
        raise LostPositivity(f"lambda_min(P) = {lam:.3e}", t)
    return lam


def _symmetrize(P: Array) -> Array:
    return 0.5 * (P + P.T)


def step_riccati(
    rs: RiccatiState,
    R: ArrayLike,
    dt: float,
    R_mid: ArrayLike | None = None,
    R_end: ArrayLike | None = None,
    t: float | None = None,
) -> RiccatiState:
    """One RK4 step of the CRE, followed by symmetrization and a positivity check."""
    Q, V = rs.Q, rs.V
    P_new = rk4_sampled(
        lambda P, RR: cre_rhs(P, RR, Q, V), rs.P, dt, np.asarray(R, dtype=float),
        None if R_mid is None else np.asarray(R_mid, dtype=float),
        None if R_end is None else np.asarray(R_end, dtype=float),
    )
    P_new = _symmetrize(P_new)
    _check_positive(P_new, t)
    return replace(rs, P=P_new)


def gains_from(P: Array, Q: Array) -> Array:
    """Stacked ``[K3; K4; K5] = P C^T Q`` (9 x 3)."""
    return P[:, 0:3] @ Q


def extract_gains(rs: RiccatiState) -> GainTriple:
    K = gains_from(rs.P, rs.Q)
    return GainTriple(K[0:3], K[3:6], K[6:9])


def _joint_rhs(z: Array, m: MeasurementFrame, g: Array, rs: RiccatiState) -> Array:
    x, P = z[:21], z[21:].reshape(9, 9)
    R_bar = x[:9].reshape(3, 3)
    p_bar, v_bar, bw_bar, ba_bar = x[9:12], x[12:15], x[15:18], x[18:21]
    R = m.R
    e_p = m.p - p_bar
    Ke = gains_from(P, rs.Q) @ e_p
    dR = R @ hat(m.omega - bw_bar) + rs.k1 * (R - R_bar)
    dbw = rs.k2 * vee_skew(R.T @ R_bar)
    dp = v_bar + Ke[0:3]
    dv = g + R @ (m.a - ba_bar) + Ke[3:6]
    dba = Ke[6:9]
    dP = cre_rhs(P, R, rs.Q, rs.V)
    return np.concatenate([dR.ravel(), dp, dv, dbw, dba, dP.ravel()])


def step_observer_var(
    o: ObserverState,
    m: MeasurementFrame,
    g: ArrayLike,
    rs: RiccatiState,
    dt: float,
    m_mid: MeasurementFrame | None = None,
    m_end: MeasurementFrame | None = None,
) -> tuple[ObserverState, RiccatiState]:
    """Jointly advance the observer and its Riccati matrix by one RK4 step.

    Gains are recomputed from the stage value of ``P`` at every RK4 stage.

    Raises
    ------
    LostPositivity
        If ``P`` is not positive definite after the step.
    """
    g = np.asarray(g, dtype=float)
    z = np.concatenate([o.to_vector(), rs.P.ravel()])
    z = rk4_sampled(lambda z, mm: _joint_rhs(z, mm, g, rs), z, dt, m, m_mid, m_end)
    P = _symmetrize(z[21:].reshape(9, 9))
    _check_positive(P, m.t + dt)
    return ObserverState.from_vector(z[:21]), replace(rs, P=P)

