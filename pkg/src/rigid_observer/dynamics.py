"""Rigid-body truth simulator, inertial sensor models and landmark-based pose
measurements."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .geometry import (
    TOL_ORTH_MEASURED,
    check_point_set,
    exp_so3,
    hat,
    nearest_rotation,
    project_se3,
    pseudo_inverse,
)

Array = NDArray[np.float64]
VecFn = Callable[[float], Array]

GRAVITY = np.array([0.0, 0.0, -9.81])

# Columns are the 8 vertices of [-1, 1]^3.
CUBE_LANDMARKS = np.vstack(
    [
        np.array(np.meshgrid([-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], indexing="ij")).reshape(3, -1),
        np.ones(8),
    ]
)


@dataclass(frozen=True)
class TruthState:
    R: Array
    p: Array
    v: Array


@dataclass(frozen=True)
class MeasurementFrame:
    t: float
    R: Array
    p: Array
    omega: Array
    a: Array


@dataclass(frozen=True)
class SignalSpec:
    """Angular velocity (rad/s) and body-frame acceleration (m/s^2) as
    functions of time, with a user-supplied bound on ``|omega(t)|``."""

    angular_velocity: VecFn
    body_acceleration: VecFn
    omega_bound_c: float
    name: str = "custom"

    def sup_omega(self, t_end: float, dt: float) -> float:
        """Dense-sampled ``sup |omega(t)|`` on ``[0, t_end]`` at ``dt / 10``."""
        n = int(np.ceil(10 * t_end / dt)) + 1
        return max(float(np.linalg.norm(self.angular_velocity(t))) for t in np.linspace(0.0, t_end, n))

    def check_bound(self, t_end: float, dt: float) -> bool:
        return self.sup_omega(t_end, dt) <= self.omega_bound_c


def benchmark_signals() -> SignalSpec:
    """The rotation/translation excitation used for the reference experiment.

    ``omega(t) = (-sin 10t, cos 10t, 0.6 sin 5t)``,
    ``a(t) = (cos 0.5t, sin 0.5t, cos t)``.  ``|omega| <= sqrt(1.36)``.
    """

    def omega(t: float) -> Array:
        return np.array([-np.sin(10.0 * t), np.cos(10.0 * t), 0.6 * np.sin(5.0 * t)])

    def acc(t: float) -> Array:
        return np.array([np.cos(0.5 * t), np.sin(0.5 * t), np.cos(t)])

    return SignalSpec(omega, acc, omega_bound_c=float(np.sqrt(1.36)), name="benchmark")


@dataclass(frozen=True)
class Sinusoid:
    """Per-axis sum of sinusoids: ``offset + sum_j amp_j sin(freq_j t + phase_j)``.

    ``terms`` holds one list of ``(amp, freq, phase)`` triples per axis.
    """

    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    terms: tuple[tuple[tuple[float, float, float], ...], ...] = ((), (), ())

    def __call__(self, t: float) -> Array:
        out = np.array(self.offset, dtype=float)
        for axis, axis_terms in enumerate(self.terms):
            for amp, freq, phase in axis_terms:
                out[axis] += amp * np.sin(freq * t + phase)
        return out

    def amplitude_bound(self) -> float:
        per_axis = [abs(o) + sum(abs(a) for a, _, _ in ts) for o, ts in zip(self.offset, self.terms)]
        return float(np.linalg.norm(per_axis))


def sinusoid_signals(omega: Sinusoid, acc: Sinusoid, omega_bound_c: float | None = None) -> SignalSpec:
    c = omega.amplitude_bound() if omega_bound_c is None else omega_bound_c
    return SignalSpec(omega, acc, omega_bound_c=c, name="sinusoid")


@dataclass(frozen=True)
class SensorSpec:
    b_omega: Array = field(default_factory=lambda: np.zeros(3))
    b_a: Array = field(default_factory=lambda: np.zeros(3))
    noise: float = 0.0
    landmarks: Array = field(default_factory=lambda: CUBE_LANDMARKS.copy())
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.noise < 0:
            raise ValueError("noise amplitude must be non-negative")
        check_point_set(self.landmarks)


@dataclass
class NoiseStreams:
    """Independent counter-based (Philox) generators, one per sensor channel."""

    gyro: np.random.Generator
    accel: np.random.Generator
    landmark: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "NoiseStreams":
        children = np.random.SeedSequence(seed).spawn(3)
        gens = [np.random.Generator(np.random.Philox(s)) for s in children]
        return cls(*gens)


def initial_truth() -> TruthState:
    """``R(0) = exp(-pi/3 e3^), p(0) = v(0) = 0``."""
    return TruthState(exp_so3([0.0, 0.0, -np.pi / 3]), np.zeros(3), np.zeros(3))


def _truth_rhs(R: Array, v: Array, omega: Array, acc: Array, g: Array) -> tuple[Array, Array, Array]:
    return R @ hat(omega), v, g + R @ acc


def step_truth(s: TruthState, sig: SignalSpec, g: ArrayLike, t: float, dt: float) -> TruthState:
    """Advance the rigid body one RK4 step of length `dt` starting at time `t`.

    The rotation is re-projected onto SO(3) after the step.
    """
    g = np.asarray(g, dtype=float)
    w0, wh, w1 = (sig.angular_velocity(t), sig.angular_velocity(t + 0.5 * dt), sig.angular_velocity(t + dt))
    a0, ah, a1 = (sig.body_acceleration(t), sig.body_acceleration(t + 0.5 * dt), sig.body_acceleration(t + dt))
    R, p, v = s.R, s.p, s.v
    h = 0.5 * dt

    dR1, dp1, dv1 = _truth_rhs(R, v, w0, a0, g)
    dR2, dp2, dv2 = _truth_rhs(R + h * dR1, v + h * dv1, wh, ah, g)
    dR3, dp3, dv3 = _truth_rhs(R + h * dR2, v + h * dv2, wh, ah, g)
    dR4, dp4, dv4 = _truth_rhs(R + dt * dR3, v + dt * dv3, w1, a1, g)

    c = dt / 6.0
    R_new = R + c * (dR1 + 2.0 * dR2 + 2.0 * dR3 + dR4)
    p_new = p + c * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4)
    v_new = v + c * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
    return TruthState(nearest_rotation(R_new), p_new, v_new)


def synth_landmark_body(
    s: TruthState, landmarks: ArrayLike, noise: float, rng: np.random.Generator | None = None
) -> Array:
    """Homogeneous body-frame landmark coordinates ``R^T (p_i - p)`` plus noise."""
    b = check_point_set(landmarks)
    r = np.empty_like(b)
    r[:3] = s.R.T @ (b[:3] - s.p[:, None])
    if noise > 0.0:
        r[:3] += noise * rng.standard_normal((3, b.shape[1]))
    r[3] = 1.0
    return r


def reconstruct_pose(r: ArrayLike, b: ArrayLike, b_pinv: Array | None = None) -> tuple[Array, Array]:
    """World-frame pose ``(R_m, p_m)`` from body-frame landmark observations.

    ``r b^+`` estimates the world-to-body transform ``[R^T, -R^T p; 0, 1]``;
    after projecting it onto SE(3) the result is inverted.  Pass `b_pinv`
    to reuse a precomputed pseudo-inverse of the landmark matrix.
    """
    if b_pinv is None:
        b_pinv = pseudo_inverse(b)
    Rt, t = project_se3(np.asarray(r, dtype=float) @ b_pinv)
    R = Rt.T
    return R, -R @ t


def corrupt_inertial(
    omega: ArrayLike, a: ArrayLike, spec: SensorSpec, streams: NoiseStreams | None = None
) -> tuple[Array, Array]:
    """Biased, noisy gyro and accelerometer readings."""
    omega_m = np.asarray(omega, dtype=float) + spec.b_omega
    a_m = np.asarray(a, dtype=float) + spec.b_a
    if spec.noise > 0.0:
        omega_m = omega_m + spec.noise * streams.gyro.standard_normal(3)
        a_m = a_m + spec.noise * streams.accel.standard_normal(3)
    return omega_m, a_m


class Sensor:
    """Produces measurement frames from truth states.

    Holds the landmark pseudo-inverse and the noise streams so that a full
    run draws from one reproducible sequence per channel.
    """

    def __init__(self, spec: SensorSpec, sig: SignalSpec, seed: int | None = None) -> None:
        self.spec = spec
        self.sig = sig
        self.b_pinv = pseudo_inverse(spec.landmarks)
        self.streams = NoiseStreams.from_seed(spec.rng_seed if seed is None else seed)

    def measure(self, s: TruthState, t: float) -> MeasurementFrame:
        r = synth_landmark_body(s, self.spec.landmarks, self.spec.noise, self.streams.landmark)
        R_m, p_m = reconstruct_pose(r, self.spec.landmarks, self.b_pinv)
        omega_m, a_m = corrupt_inertial(
            self.sig.angular_velocity(t), self.sig.body_acceleration(t), self.spec, self.streams
        )
        return MeasurementFrame(t, R_m, p_m, omega_m, a_m)


def frame_from_row(row: Sequence[float]) -> MeasurementFrame:
    """Build a frame from ``t, r11..r33, px, py, pz, wx, wy, wz, ax, ay, az``."""
    row = np.asarray(row, dtype=float)
    if row.shape != (19,):
        raise ValueError(f"expected 19 values per row, got {row.shape}")
    return MeasurementFrame(float(row[0]), row[1:10].reshape(3, 3), row[10:13], row[13:16], row[16:19])


def orthogonality_defect(R: ArrayLike) -> float:
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def is_measured_rotation(R: ArrayLike) -> bool:
    return orthogonality_defect(R) <= TOL_ORTH_MEASURED
