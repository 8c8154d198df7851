"""Drives truth, sensors and observers over a time grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .diagnostics import ErrorRecord, compute_errors
from .dynamics import (
    GRAVITY,
    MeasurementFrame,
    Sensor,
    SensorSpec,
    SignalSpec,
    TruthState,
    initial_truth,
    step_truth,
)
from .observer_const import ConstGains, ObserverState, lyapunov_matrix, step_observer_const
from .observer_riccati import LostPositivity, RiccatiState, step_observer_var

Array = NDArray[np.float64]

OBSERVERS = ("constant", "riccati")


@dataclass
class Trajectory:
    """Truth states and measurements on a uniform grid ``t_k = k dt``.

    ``mid_frames[k]`` is the measurement at ``t_k + dt/2``, used for the
    middle RK4 stages of the observer step from ``t_k`` to ``t_{k+1}``.
    """

    dt: float
    times: Array
    truth: list[TruthState]
    frames: list[MeasurementFrame]
    mid_frames: list[MeasurementFrame]
    b_omega: Array
    b_a: Array
    g: Array

    @property
    def n_steps(self) -> int:
        return len(self.frames) - 1

    def log_frames(self) -> list[MeasurementFrame]:
        """All frames in time order on the half-step grid."""
        out = [self.frames[0]]
        for mid, end in zip(self.mid_frames, self.frames[1:]):
            out += [mid, end]
        return out


@dataclass
class ObserverRun:
    kind: str
    times: Array
    states: list[ObserverState]
    P: list[Array] | None = None
    records: list[ErrorRecord] = field(default_factory=list)

    def bias_series(self) -> tuple[Array, Array]:
        return (
            np.array([s.b_omega for s in self.states]),
            np.array([s.b_a for s in self.states]),
        )

    def P_eig_bounds(self) -> Array:
        """(n, 2) array of (lambda_min, lambda_max) of P along the run."""
        if self.P is None:
            raise ValueError("not a Riccati run")
        ev = np.linalg.eigvalsh(np.array(self.P))
        return np.column_stack([ev[:, 0], ev[:, -1]])


def n_steps_for(t_end: float, dt: float) -> int:
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    return max(1, int(round(t_end / dt)))


def generate_trajectory(
    sig: SignalSpec,
    spec: SensorSpec,
    dt: float = 1e-3,
    t_end: float = 15.0,
    g: ArrayLike = GRAVITY,
    truth0: TruthState | None = None,
    seed: int | None = None,
) -> Trajectory:
    """Integrate the rigid body and synthesize measurements.

    The truth at ``t_k + dt/2`` comes from a separate half step out of
    ``truth_k`` so that observers can sample measurements at every RK4 stage.
    """
    g = np.asarray(g, dtype=float)
    n = n_steps_for(t_end, dt)
    sensor = Sensor(spec, sig, seed)
    s = initial_truth() if truth0 is None else truth0
    truth, frames, mids = [s], [sensor.measure(s, 0.0)], []
    for k in range(n):
        t = k * dt
        s_mid = step_truth(s, sig, g, t, 0.5 * dt)
        s = step_truth(s, sig, g, t, dt)
        mids.append(sensor.measure(s_mid, t + 0.5 * dt))
        frames.append(sensor.measure(s, (k + 1) * dt))
        truth.append(s)
    return Trajectory(dt, np.arange(n + 1) * dt, truth, frames, mids, spec.b_omega, spec.b_a, g)


def run_observer(
    traj: Trajectory,
    kind: str,
    gains: ConstGains | None = None,
    rs0: RiccatiState | None = None,
    obs0: ObserverState | None = None,
    const_v2: bool = False,
) -> ObserverRun:
    """Run one observer over a simulated trajectory with stage-sampled
    measurements; records errors against the truth at every grid point."""
    if kind not in OBSERVERS:
        raise ValueError(f"unknown observer {kind!r}")
    gains = gains or ConstGains()
    rs = rs0 or RiccatiState()
    o = obs0 or ObserverState()
    k2 = gains.k2 if kind == "constant" else rs.k2
    states, Ps = [o], ([rs.P] if kind == "riccati" else None)

    def record(k: int, o: ObserverState, P: Array | None) -> ErrorRecord:
        truth = traj.truth[k]
        if P is None and const_v2:
            P = lyapunov_matrix(gains, truth.R)
        return compute_errors(truth, traj.b_omega, traj.b_a, o, k2, P, traj.times[k])

    records = [record(0, o, rs.P if kind == "riccati" else None)]
    dt = traj.dt
    for k in range(traj.n_steps):
        m0, mh, m1 = traj.frames[k], traj.mid_frames[k], traj.frames[k + 1]
        if kind == "constant":
            o = step_observer_const(o, m0, traj.g, gains, dt, mh, m1)
            P = None
        else:
            o, rs = step_observer_var(o, m0, traj.g, rs, dt, mh, m1)
            P = rs.P
            Ps.append(P)
        states.append(o)
        records.append(record(k + 1, o, P))
    return ObserverRun(kind, traj.times.copy(), states, Ps, records)


def replay_observer(
    frames: Sequence[MeasurementFrame],
    kind: str,
    g: ArrayLike = GRAVITY,
    gains: ConstGains | None = None,
    rs0: RiccatiState | None = None,
    obs0: ObserverState | None = None,
    hold: str = "zoh",
    max_step: float = 1e-2,
) -> ObserverRun:
    """Run an observer over logged measurement frames.

    ``hold="zoh"`` keeps each frame constant until the next one, sub-stepping
    intervals longer than `max_step`.  ``hold="midpoint"`` consumes frames in
    pairs: with uniformly spaced rows ``t_0, t_1, t_2, ...`` the step from
    ``t_{2j}`` to ``t_{2j+2}`` takes ``t_{2j+1}`` as its midpoint sample.
    """
    if kind not in OBSERVERS:
        raise ValueError(f"unknown observer {kind!r}")
    g = np.asarray(g, dtype=float)
    gains = gains or ConstGains()
    rs = rs0 or RiccatiState()
    o = obs0 or ObserverState()
    states, times = [o], [frames[0].t]
    Ps = [rs.P] if kind == "riccati" else None

    def advance(o, rs, m, dt, mh=None, m1=None):
        if kind == "constant":
            return step_observer_const(o, m, g, gains, dt, mh, m1), rs
        return step_observer_var(o, m, g, rs, dt, mh, m1)

    if hold == "zoh":
        for m, nxt in zip(frames[:-1], frames[1:]):
            span = nxt.t - m.t
            n_sub = max(1, int(np.ceil(span / max_step - 1e-9)))
            h = span / n_sub
            for _ in range(n_sub):
                o, rs = advance(o, rs, m, h)
            states.append(o)
            times.append(nxt.t)
            if Ps is not None:
                Ps.append(rs.P)
    elif hold == "midpoint":
        if len(frames) % 2 == 0:
            raise ValueError("midpoint hold needs an odd number of frames")
        for j in range(0, len(frames) - 1, 2):
            m0, mh, m1 = frames[j], frames[j + 1], frames[j + 2]
            span = m1.t - m0.t
            if abs((mh.t - m0.t) - 0.5 * span) > 1e-9 * max(1.0, span):
                raise ValueError(f"frame at t={mh.t} is not the midpoint of its step")
            o, rs = advance(o, rs, m0, span, mh, m1)
            states.append(o)
            times.append(m1.t)
            if Ps is not None:
                Ps.append(rs.P)
    else:
        raise ValueError(f"unknown hold mode {hold!r}")
    return ObserverRun(kind, np.array(times), states, Ps)


def shift_frames(frames: Iterable[MeasurementFrame], delta: ArrayLike) -> list[MeasurementFrame]:
    """Add a constant offset to both the gyro and accelerometer channels."""
    d = np.asarray(delta, dtype=float)
    return [MeasurementFrame(m.t, m.R, m.p, m.omega + d, m.a + d) for m in frames]


__all__ = [
    "LostPositivity",
    "ObserverRun",
    "Trajectory",
    "generate_trajectory",
    "replay_observer",
    "run_observer",
    "shift_frames",
]
