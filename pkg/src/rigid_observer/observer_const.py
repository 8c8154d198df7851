"""Constant-gain observer in the ambient space R^{3x3} x R^3 x ... and the
gain feasibility checks for (k3, k4, k5)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .dynamics import MeasurementFrame
from .geometry import hat, vee_skew

Array = NDArray[np.float64]


class BaseGainsInfeasible(ValueError):
    """Base gains passed to :func:`scale_gains` are not in K(1)."""


@dataclass(frozen=True)
class ObserverState:
    """Estimate ``(R_bar, p_bar, v_bar, b_omega_bar, b_a_bar)``.

    ``R`` lives in R^{3x3} and is never projected back onto SO(3).
    """

    R: Array = field(default_factory=lambda: np.eye(3))
    p: Array = field(default_factory=lambda: np.zeros(3))
    v: Array = field(default_factory=lambda: np.zeros(3))
    b_omega: Array = field(default_factory=lambda: np.zeros(3))
    b_a: Array = field(default_factory=lambda: np.zeros(3))

    def to_vector(self) -> Array:
        return np.concatenate([np.ravel(self.R), self.p, self.v, self.b_omega, self.b_a])

    @classmethod
    def from_vector(cls, x: ArrayLike) -> "ObserverState":
        x = np.asarray(x, dtype=float)
        return cls(x[:9].reshape(3, 3), x[9:12], x[12:15], x[15:18], x[18:21])


@dataclass(frozen=True)
class ConstGains:
    k1: float = 1.0
    k2: float = 1.0
    k3: float = 3.4
    k4: float = 5.5
    k5: float = 1.3
    c: float = 1.0

    def __post_init__(self) -> None:
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.c <= 0:
            raise ValueError("angular velocity bound c must be positive")


@dataclass(frozen=True)
class FeasibilityReport:
    k3: float
    k4: float
    k5: float
    c: float
    in_K: bool
    Y_min_eig: float
    Z_min_eig: float
    violated_conditions: list[str]
    condition_values: dict[str, float]

    @property
    def satisfies_lmi(self) -> bool:
        """Y > 0 and Z > 0 hold directly (possibly outside K(c))."""
        return self.Y_min_eig > 0.0 and self.Z_min_eig > 0.0


def build_Y(k3: float, k4: float, k5: float, c: float) -> Array:
    return np.array(
        [
            [2 * k3**2 - 2 * k4 - k5**2, k3 * k4 - k3 * k5**2, -k3 * k5],
            [k3 * k4 - k3 * k5**2, 2 * k4**2 - 2 * k3 * k5 - k3**2 * k5**2, -k4 * k5],
            [-k3 * k5, -k4 * k5, 2 * k5**2 - c**2],
        ],
        dtype=float,
    )


def build_Z(k3: float, k4: float, k5: float) -> Array:
    return np.array(
        [
            [k3, k4, -k5],
            [k4, k3 * k4 - k5, -k3 * k5],
            [-k5, -k3 * k5, k4 * k5],
        ],
        dtype=float,
    )


# name -> (k3, k4, k5, c) -> value that must be > 0
K_CONDITIONS: dict[str, Callable[[float, float, float, float], float]] = {
    "k5 > c": lambda k3, k4, k5, c: k5 - c,
    "k3 > 0": lambda k3, k4, k5, c: k3,
    "k4^2 - 2*k3*k5 - 2*k3^2*k5^2 > 0": lambda k3, k4, k5, c: k4**2 - 2 * k3 * k5 - 2 * k3**2 * k5**2,
    "k3^2*k4 - k3*k5 - k4^2 > 0": lambda k3, k4, k5, c: k3**2 * k4 - k3 * k5 - k4**2,
    "k3^2*k4^2 - k3^3*k5 - k4^3 > 0": lambda k3, k4, k5, c: k3**2 * k4**2 - k3**3 * k5 - k4**3,
    "k3^2 - 2*k4 - 2*k5^2 > 0": lambda k3, k4, k5, c: k3**2 - 2 * k4 - 2 * k5**2,
}


def check_gains(k3: float, k4: float, k5: float, c: float) -> FeasibilityReport:
    """Test (k3, k4, k5) against the six sufficient conditions defining K(c).

    The minimum eigenvalues of Y and Z are reported as well: K(c) is only a
    sufficient set, and gains outside it may still make both matrices
    positive definite.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    values = {name: float(f(k3, k4, k5, c)) for name, f in K_CONDITIONS.items()}
    violated = [name for name, val in values.items() if not val > 0.0]
    y_min = float(np.linalg.eigvalsh(build_Y(k3, k4, k5, c))[0])
    z_min = float(np.linalg.eigvalsh(build_Z(k3, k4, k5))[0])
    return FeasibilityReport(k3, k4, k5, c, not violated, y_min, z_min, violated, values)


def scale_gains(k3p: float, k4p: float, k5p: float, c: float) -> tuple[float, float, float]:
    """Map a triple from K(1) into K(c), c > 1, as ``(c k3', c^2 k4', c k5')``."""
    if c <= 1.0:
        raise ValueError("scaling is defined for c > 1")
    if not check_gains(k3p, k4p, k5p, 1.0).in_K:
        raise BaseGainsInfeasible(f"{(k3p, k4p, k5p)} is not in K(1)")
    scaled = (c * k3p, c**2 * k4p, c * k5p)
    report = check_gains(*scaled, c)
    if not report.in_K:  # pragma: no cover - guaranteed by construction
        raise ArithmeticError(f"scaled gains left K(c): {report.violated_conditions}")
    return scaled


def lyapunov_matrix(gains: ConstGains, R: ArrayLike) -> Array:
    """``diag(I6, R^T) (Z kron I3) diag(I6, R)``; its inverse weights the
    translational error ``x = (e_p, e_v, e_a)``."""
    R = np.asarray(R, dtype=float)
    T = np.eye(9)
    T[6:, 6:] = R
    return T.T @ np.kron(build_Z(gains.k3, gains.k4, gains.k5), np.eye(3)) @ T


def observer_rhs(x: Array, m: MeasurementFrame, g: Array, gains: ConstGains) -> Array:
    R_bar = x[:9].reshape(3, 3)
    p_bar, v_bar, bw_bar, ba_bar = x[9:12], x[12:15], x[15:18], x[18:21]
    R = m.R
    e_p = m.p - p_bar
    dR = R @ hat(m.omega - bw_bar) + gains.k1 * (R - R_bar)
    dbw = gains.k2 * vee_skew(R.T @ R_bar)
    dp = v_bar + gains.k3 * e_p
    dv = g + R @ (m.a - ba_bar) + gains.k4 * e_p
    dba = -gains.k5 * (R.T @ e_p)
    return np.concatenate([dR.ravel(), dp, dv, dbw, dba])


def rk4_sampled(
    rhs: Callable[[Array, MeasurementFrame], Array],
    x: Array,
    dt: float,
    m: MeasurementFrame,
    m_mid: MeasurementFrame | None = None,
    m_end: MeasurementFrame | None = None,
) -> Array:
    """One RK4 step with measurements sampled at the stage times.

    Without `m_mid`/`m_end` the measurement `m` is held over the whole step
    (zero-order hold).
    """
    if (m_mid is None) != (m_end is None):
        raise ValueError("pass both m_mid and m_end, or neither")
    if m_mid is None:
        m_mid = m_end = m
    h = 0.5 * dt
    k1 = rhs(x, m)
    k2 = rhs(x + h * k1, m_mid)
    k3 = rhs(x + h * k2, m_mid)
    k4 = rhs(x + dt * k3, m_end)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_observer_const(
    o: ObserverState,
    m: MeasurementFrame,
    g: ArrayLike,
    gains: ConstGains,
    dt: float,
    m_mid: MeasurementFrame | None = None,
    m_end: MeasurementFrame | None = None,
) -> ObserverState:
    """Advance the constant-gain observer by one RK4 step.

    `m` is the measurement at the start of the step.  When the measurements
    at ``t + dt/2`` and ``t + dt`` are also available (simulation), pass them
    as `m_mid` and `m_end`; otherwise `m` is held constant.
    """
    g = np.asarray(g, dtype=float)
    x = rk4_sampled(lambda x, mm: observer_rhs(x, mm, g, gains), o.to_vector(), dt, m, m_mid, m_end)
    return ObserverState.from_vector(x)

