"""CSV sensor logs and observer traces."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from .diagnostics import ErrorRecord
from .dynamics import MeasurementFrame, frame_from_row, orthogonality_defect
from .simulation import ObserverRun, Trajectory

log = logging.getLogger(__name__)

ORTH_WARN = 1e-3
ORTH_ERROR = 1e-1
MAX_GAP = 0.5


class NonMonotoneTime(ValueError):
    pass


class GapTooLarge(ValueError):
    pass


class BadRotation(ValueError):
    pass


def _mat_cols(prefix: str) -> list[str]:
    return [f"{prefix}{i}{j}" for i in range(1, 4) for j in range(1, 4)]


def _vec_cols(prefix: str) -> list[str]:
    return [f"{prefix}{c}" for c in "xyz"]


SENSOR_LOG_HEADER = ["t", *_mat_cols("r"), "px", "py", "pz", "wx", "wy", "wz", "ax", "ay", "az"]

MEAS_COLS = [*_mat_cols("Rm"), *_vec_cols("pm_"), *_vec_cols("wm_"), *_vec_cols("am_")]
TRUTH_COLS = [*_mat_cols("R"), *_vec_cols("p_"), *_vec_cols("v_")]
ESTIMATE_COLS = [*_mat_cols("Rbar"), *_vec_cols("pbar_"), *_vec_cols("vbar_"), *_vec_cols("bwbar_"), *_vec_cols("babar_")]
ERROR_COLS = ["norm_E_R", "norm_e_p", "norm_e_v", "norm_e_omega", "norm_e_a", "V1", "V2"]
RICCATI_COLS = ["P_min_eig", "P_max_eig"]

SIM_TRACE_HEADER = ["t", *TRUTH_COLS, *MEAS_COLS, *ESTIMATE_COLS, *ERROR_COLS, *RICCATI_COLS]
REPLAY_TRACE_HEADER = ["t", *MEAS_COLS, *ESTIMATE_COLS, *RICCATI_COLS]


def fmt(x: float | None) -> str:
    """17 significant digits so values survive a text round trip exactly."""
    return "" if x is None else format(float(x), ".17g")


def frame_values(m: MeasurementFrame) -> list[float]:
    return [*np.ravel(m.R), *m.p, *m.omega, *m.a]


def write_sensor_log(path: str | Path, frames: Sequence[MeasurementFrame]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SENSOR_LOG_HEADER)
        for m in frames:
            w.writerow([fmt(m.t), *map(fmt, frame_values(m))])


def read_sensor_log(path: str | Path) -> list[MeasurementFrame]:
    """Read and validate a sensor log.

    Raises
    ------
    NonMonotoneTime
        Empty log or timestamps not strictly increasing.
    GapTooLarge
        Consecutive rows more than 0.5 s apart.
    BadRotation
        A rotation with orthogonality defect above 0.1.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise NonMonotoneTime(f"{path}: empty log")
        if [h.strip() for h in header] != SENSOR_LOG_HEADER:
            raise ValueError(f"{path}: header must be {','.join(SENSOR_LOG_HEADER)}")
        frames = [frame_from_row([float(x) for x in row]) for row in reader if row]
    return validate_frames(frames)


def validate_frames(frames: Sequence[MeasurementFrame]) -> list[MeasurementFrame]:
    if not frames:
        raise NonMonotoneTime("empty log")
    frames = list(frames)
    for prev, cur in zip(frames, frames[1:]):
        if not cur.t > prev.t:
            raise NonMonotoneTime(f"time not strictly increasing at t = {cur.t}")
        if cur.t - prev.t > MAX_GAP:
            raise GapTooLarge(f"gap of {cur.t - prev.t:.3g} s before t = {cur.t}")
    for m in frames:
        d = orthogonality_defect(m.R)
        if d > ORTH_ERROR:
            raise BadRotation(f"rotation at t = {m.t} has orthogonality defect {d:.3g}")
        if d > ORTH_WARN:
            log.warning("rotation at t = %s has orthogonality defect %.3g", m.t, d)
    return frames


def _estimate_values(run: ObserverRun, k: int) -> list[float]:
    return list(run.states[k].to_vector())


def _p_eigs(run: ObserverRun, k: int) -> list[float | None]:
    if run.P is None:
        return [None, None]
    ev = np.linalg.eigvalsh(run.P[k])
    return [ev[0], ev[-1]]


def _error_values(r: ErrorRecord) -> list[float | None]:
    return [r.norm_E_R, r.norm_e_p, r.norm_e_v, r.norm_e_omega, r.norm_e_a, r.V1, r.V2]


def write_sim_trace(path: str | Path, traj: Trajectory, run: ObserverRun) -> None:
    """One row per integration step (states after the step)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIM_TRACE_HEADER)
        for k in range(1, len(run.states)):
            s = traj.truth[k]
            values = [
                traj.times[k], *np.ravel(s.R), *s.p, *s.v,
                *frame_values(traj.frames[k]),
                *_estimate_values(run, k),
                *_error_values(run.records[k]),
                *_p_eigs(run, k),
            ]
            w.writerow(map(fmt, values))


def write_replay_trace(path: str | Path, frames: Sequence[MeasurementFrame], run: ObserverRun) -> None:
    """One row per observer output time; measurement columns hold the frame
    at that time."""
    by_t = {m.t: m for m in frames}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPLAY_TRACE_HEADER)
        for k in range(1, len(run.states)):
            m = by_t[run.times[k]]
            w.writerow(map(fmt, [run.times[k], *frame_values(m), *_estimate_values(run, k), *_p_eigs(run, k)]))


def read_trace(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header and float array (empty cells become NaN)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) if x else np.nan for x in row] for row in reader]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))
