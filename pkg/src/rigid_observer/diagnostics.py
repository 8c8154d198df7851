"""Observer error bookkeeping, Lyapunov values and convergence summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .dynamics import TruthState
from .observer_const import ObserverState

Array = NDArray[np.float64]

ERROR_FIELDS = ("norm_E_R", "norm_e_p", "norm_e_v", "norm_e_omega", "norm_e_a")


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class ErrorRecord:
    t: float
    norm_E_R: float
    norm_e_p: float
    norm_e_v: float
    norm_e_omega: float
    norm_e_a: float
    V1: float
    V2: float | None = None

    def norms(self) -> Array:
        return np.array([getattr(self, f) for f in ERROR_FIELDS])

    @property
    def total(self) -> float:
        return float(np.linalg.norm(self.norms()))


@dataclass(frozen=True)
class ConvergenceSummary:
    fitted_rate: float
    fit_r2: float
    window: tuple[float, float]
    final_bias_omega: Array | None = None
    final_bias_a: Array | None = None


def lyapunov_v1(E_R: ArrayLike, e_omega: ArrayLike, k2: float) -> float:
    """``k2/2 <E_R, E_R> + <e_omega, e_omega>``."""
    E_R = np.asarray(E_R, dtype=float)
    e_omega = np.asarray(e_omega, dtype=float)
    return float(0.5 * k2 * np.sum(E_R * E_R) + e_omega @ e_omega)


def lyapunov_v2(x: ArrayLike, P: ArrayLike) -> float:
    """``x^T P^{-1} x`` for the stacked translational error ``(e_p, e_v, e_a)``."""
    x = np.asarray(x, dtype=float)
    return float(x @ np.linalg.solve(np.asarray(P, dtype=float), x))


def compute_errors(
    truth: TruthState,
    b_omega: ArrayLike,
    b_a: ArrayLike,
    obs: ObserverState,
    k2: float,
    P: ArrayLike | None = None,
    t: float = 0.0,
) -> ErrorRecord:
    """Error norms between the true state/biases and an observer estimate.

    `P`, when given, is the 9x9 matrix whose inverse weights
    ``x = (e_p, e_v, e_a)`` in ``V2``.
    """
    E_R = truth.R - obs.R
    e_p = truth.p - obs.p
    e_v = truth.v - obs.v
    e_w = np.asarray(b_omega, dtype=float) - obs.b_omega
    e_a = np.asarray(b_a, dtype=float) - obs.b_a
    V2 = None if P is None else lyapunov_v2(np.concatenate([e_p, e_v, e_a]), P)
    return ErrorRecord(
        t=float(t),
        norm_E_R=float(np.linalg.norm(E_R)),
        norm_e_p=float(np.linalg.norm(e_p)),
        norm_e_v=float(np.linalg.norm(e_v)),
        norm_e_omega=float(np.linalg.norm(e_w)),
        norm_e_a=float(np.linalg.norm(e_a)),
        V1=lyapunov_v1(E_R, e_w, k2),
        V2=V2,
    )


def fit_exponential_rate(
    series: Sequence[tuple[float, float]] | ArrayLike, window: tuple[float, float]
) -> ConvergenceSummary:
    """Least-squares fit of ``log(norm) = a + rate * t`` over `window`.

    Raises
    ------
    InsufficientData
        Fewer than 10 samples with norm > 1e-14 inside the window.
    """
    t0, t1 = window
    if not t0 < t1:
        raise ValueError("window must satisfy t_start < t_end")
    data = np.asarray(series, dtype=float).reshape(-1, 2)
    t, y = data[:, 0], data[:, 1]
    keep = (t >= t0) & (t <= t1) & (y > 1e-14)
    if keep.sum() < 10:
        raise InsufficientData(f"only {int(keep.sum())} usable samples in {window}")
    t, logy = t[keep], np.log(y[keep])
    slope, intercept = np.polyfit(t, logy, 1)
    ss_res = float(np.sum((logy - (intercept + slope * t)) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    # a constant series is fitted exactly
    r2 = 1.0 if ss_tot <= 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    return ConvergenceSummary(float(slope), r2, (float(t0), float(t1)))


def summarize_bias(series: ArrayLike, tail_fraction: float = 0.2) -> tuple[Array, float]:
    """Mean and max deviation from it over the trailing `tail_fraction` of samples.

    `series` is an (n, d) array of bias estimates in time order.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must be in (0, 1]")
    data = np.asarray(series, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    n_tail = max(1, int(np.ceil(tail_fraction * len(data))))
    tail = data[-n_tail:]
    mean = tail.mean(axis=0)
    return mean, float(np.max(np.abs(tail - mean)))


def is_converged(mean: ArrayLike, max_deviation: float) -> bool:
    """Tail deviation below 1% of the mean magnitude, or 0.01 absolute."""
    return max_deviation < max(0.01 * float(np.linalg.norm(mean)), 0.01)
