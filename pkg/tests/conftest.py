import numpy as np
import pytest

from rigid_observer.dynamics import GRAVITY, SensorSpec, benchmark_signals, step_truth
from rigid_observer.simulation import generate_trajectory, run_observer

B_OMEGA = np.array([-1.0, 1.0, 5.0])
B_A = np.array([1.0, -5.0, 1.0])
T_END = 15.0
DT = 1e-3

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sig():
    return benchmark_signals()


@pytest.fixture(scope="session")
def clean_traj(sig):
    """Noise-free reference trajectory (15 s, dt = 1e-3)."""
    return generate_trajectory(sig, SensorSpec(B_OMEGA, B_A, 0.0), DT, T_END, GRAVITY)


@pytest.fixture(scope="session")
def clean_runs(clean_traj):
    return {kind: run_observer(clean_traj, kind) for kind in ("constant", "riccati")}


@pytest.fixture(scope="session")
def truth_mid_rotations(clean_traj, sig):
    """True rotation at each step midpoint, from independent half steps."""
    g = clean_traj.g
    return [
        step_truth(s, sig, g, k * clean_traj.dt, 0.5 * clean_traj.dt).R
        for k, s in enumerate(clean_traj.truth[:-1])
    ]


# Error systems written out independently of the observer code.  Layout:
# (E_R, e_p, e_v, e_omega, e_a) [+ P] -- the order of ObserverState.to_vector.

def _skew_vee(M):
    return 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])


def _cross_mat(w):
    return np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])


def const_error_rhs(e, R, k):
    k1, k2, k3, k4, k5 = k
    E = e[:9].reshape(3, 3)
    ep, ev, ew, ea = e[9:12], e[12:15], e[15:18], e[18:21]
    return np.concatenate([
        (-R @ _cross_mat(ew) - k1 * E).ravel(),
        ev - k3 * ep,
        -R @ ea - k4 * ep,
        k2 * _skew_vee(R.T @ E),
        k5 * R.T @ ep,
    ])


def riccati_error_rhs(z, R, k1, k2, Q, V):
    E = z[:9].reshape(3, 3)
    ep, ev, ew, ea = z[9:12], z[12:15], z[15:18], z[18:21]
    P = z[21:].reshape(9, 9)
    A = np.zeros((9, 9))
    A[0:3, 3:6] = np.eye(3)
    A[3:6, 6:9] = -R
    C = np.hstack([np.eye(3), np.zeros((3, 6))])
    x = np.concatenate([ep, ev, ea])
    dx = (A - P @ C.T @ Q @ C) @ x
    dP = A @ P + P @ A.T - P @ C.T @ Q @ C @ P + V
    return np.concatenate([
        (-R @ _cross_mat(ew) - k1 * E).ravel(),
        dx[0:3],
        dx[3:6],
        k2 * _skew_vee(R.T @ E),
        dx[6:9],
        dP.ravel(),
    ])


def integrate_error_system(rhs, e0, Rs, Rmids, dt):
    """Classical RK4 with the rotation sampled at t, t + dt/2, t + dt."""
    out = [e0]
    e = e0
    for k in range(len(Rs) - 1):
        R0, Rh, R1 = Rs[k], Rmids[k], Rs[k + 1]
        a = rhs(e, R0)
        b = rhs(e + 0.5 * dt * a, Rh)
        c = rhs(e + 0.5 * dt * b, Rh)
        d = rhs(e + dt * c, R1)
        e = e + dt / 6 * (a + 2 * b + 2 * c + d)
        out.append(e)
    return np.array(out)


def truth_minus_observer(traj, run):
    return np.array([
        np.concatenate([s.R.ravel(), s.p, s.v, traj.b_omega, traj.b_a]) - o.to_vector()
        for s, o in zip(traj.truth, run.states)
    ])
