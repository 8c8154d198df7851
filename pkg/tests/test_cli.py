import json

import numpy as np
import pytest

from rigid_observer import cli
from rigid_observer.config import ConfigInvalid, RunConfig, from_text, load, parse_terms, to_text
from rigid_observer.dynamics import MeasurementFrame, SensorSpec, benchmark_signals
from rigid_observer.logio import (
    SENSOR_LOG_HEADER,
    GapTooLarge,
    NonMonotoneTime,
    BadRotation,
    read_sensor_log,
    read_trace,
    write_sensor_log,
)
from rigid_observer.observer_riccati import LostPositivity
from rigid_observer.simulation import generate_trajectory


def test_config_defaults_reference_values():
    cfg = RunConfig()
    g = cfg.const_gains()
    assert (g.k1, g.k2, g.k3, g.k4, g.k5) == (1.0, 1.0, 3.4, 5.5, 1.3)
    rs = cfg.riccati_state()
    np.testing.assert_array_equal(rs.P, np.eye(9))
    np.testing.assert_array_equal(rs.V, 0.1 * np.eye(9))
    np.testing.assert_array_equal(rs.Q, np.eye(3))
    assert cfg.t_end == 15.0 and cfg.dt == 1e-3 and cfg.noise == 0.01


@pytest.mark.parametrize(
    "cfg",
    [
        RunConfig(),
        RunConfig(mode="replay", observer="riccati", log="x.csv", add_bias=(10.0, 10.0, 10.0), hold="midpoint"),
        RunConfig(
            signal_preset="sinusoid",
            omega_offset=(0.1, 0.0, 0.0),
            omega_terms=(((1.0, 2.0, 0.5),), (), ((0.3, 1.0, 0.0), (0.1, 7.0, 1.0))),
            acc_terms=((), ((1.0, 0.5, 0.0),), ()),
            omega_bound=2.5,
            c=2.0,
            const_v2=True,
            seed=17,
        ),
    ],
)
def test_config_round_trip(cfg):
    assert from_text(to_text(cfg)) == cfg


def test_config_errors(tmp_path):
    with pytest.raises(ConfigInvalid):
        from_text("[run]\ndt = -1\n")
    with pytest.raises(ConfigInvalid):
        from_text("[run]\nbogus = 1\n")
    with pytest.raises(ConfigInvalid):
        from_text("[sensor]\nb_a = 1, 2\n")
    with pytest.raises(ConfigInvalid):
        from_text("[run]\nobserver = kalman\n")
    with pytest.raises(ConfigInvalid):
        load(tmp_path / "missing.ini")
    with pytest.raises(ConfigInvalid):
        parse_terms("x: 1 2 | y:")


def test_config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\nt_end = 0.5\nobserver = constant\n[gains.constant]\nk3 = 10\n")
    cfg = load(path)
    assert cfg.t_end == 0.5 and cfg.observer == "constant" and cfg.k3 == 10.0


def test_sinusoid_config_signals():
    cfg = from_text("[signals]\npreset = sinusoid\n[signals.omega]\nterms = x: 1 2 0 | y: | z: 0.5 1 0\n")
    sig = cfg.signals()
    np.testing.assert_allclose(sig.angular_velocity(0.3), [np.sin(0.6), 0, 0.5 * np.sin(0.3)])
    assert sig.omega_bound_c == pytest.approx(np.hypot(1, 0.5))


def _frames(ts, R=np.eye(3)):
    return [MeasurementFrame(t, R, np.zeros(3), np.zeros(3), np.zeros(3)) for t in ts]


def test_sensor_log_round_trip(tmp_path):
    traj = generate_trajectory(benchmark_signals(), SensorSpec(noise=0.01), 1e-3, 0.05)
    path = tmp_path / "log.csv"
    write_sensor_log(path, traj.frames)
    assert path.read_text().splitlines()[0] == ",".join(SENSOR_LOG_HEADER)
    back = read_sensor_log(path)
    for a, b in zip(traj.frames, back):
        assert a.t == b.t
        assert np.array_equal(a.R, b.R) and np.array_equal(a.p, b.p)
        assert np.array_equal(a.omega, b.omega) and np.array_equal(a.a, b.a)


def test_sensor_log_validation(tmp_path, caplog):
    with pytest.raises(NonMonotoneTime):
        cli.run_replay(RunConfig(mode="replay"), frames=[], out_dir=tmp_path)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(NonMonotoneTime):
        read_sensor_log(empty)
    header_only = tmp_path / "header.csv"
    header_only.write_text(",".join(SENSOR_LOG_HEADER) + "\n")
    with pytest.raises(NonMonotoneTime):
        read_sensor_log(header_only)
    path = tmp_path / "log.csv"
    write_sensor_log(path, _frames([0.0, 0.1, 0.1]))
    with pytest.raises(NonMonotoneTime):
        read_sensor_log(path)
    write_sensor_log(path, _frames([0.0, 0.1, 0.7]))
    with pytest.raises(GapTooLarge):
        read_sensor_log(path)
    write_sensor_log(path, _frames([0.0, 0.1], R=np.diag([1.0, 1.0, 1.5])))
    with pytest.raises(BadRotation):
        read_sensor_log(path)
    write_sensor_log(path, _frames([0.0, 0.1], R=np.diag([1.0, 1.0, 1.01])))
    assert len(read_sensor_log(path)) == 2
    assert "orthogonality defect" in caplog.text


def test_check_gains_outputs():
    text = cli.run_check_gains(RunConfig(k3=10, k4=40, k5=2, c=1.0))
    assert "in K(c): yes" in text
    rep = json.loads(cli.run_check_gains(RunConfig(c=1.0), "json"))
    assert rep["in_K"] is False
    assert "k3^2 - 2*k4 - 2*k5^2 > 0" in rep["violated_conditions"]
    rep = json.loads(cli.run_check_gains(RunConfig(k3=0, k4=0, k5=0, c=1.0), "json"))
    assert {"k5 > c", "k3 > 0"} <= set(rep["violated_conditions"])
    csv_text = cli.run_check_gains(RunConfig(k3=10, k4=40, k5=2, c=1.0), "csv")
    header, row = csv_text.splitlines()
    assert dict(zip(header.split(","), row.split(",")))["in_K"] == "True"


def test_check_gains_main(capsys):
    assert cli.main(["check-gains", "--k3", "10", "--k4", "40", "--k5", "2", "--c", "1", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["in_K"] is True


def test_simulate_one_step(tmp_path):
    cfg = RunConfig(t_end=0.001)
    cli.run_simulation(cfg, tmp_path)
    for kind in ("constant", "riccati"):
        lines = (tmp_path / f"trace_{kind}.csv").read_text().splitlines()
        assert len(lines) == 2
    assert len((tmp_path / "sensor_log.csv").read_text().splitlines()) == 4


def test_simulate_deterministic(tmp_path):
    cfg = RunConfig(t_end=0.2)
    cli.run_simulation(cfg, tmp_path / "a")
    cli.run_simulation(cfg, tmp_path / "b")
    for name in ("trace_constant.csv", "trace_riccati.csv", "sensor_log.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    cli.run_simulation(RunConfig(t_end=0.2, seed=1), tmp_path / "c")
    assert (tmp_path / "a" / "sensor_log.csv").read_bytes() != (tmp_path / "c" / "sensor_log.csv").read_bytes()


def test_simulate_trace_columns(tmp_path):
    cli.run_simulation(RunConfig(t_end=0.05, observer="riccati"), tmp_path)
    header, data = read_trace(tmp_path / "trace_riccati.csv")
    assert data.shape == (50, len(header))
    assert np.all(data[:, header.index("P_min_eig")] > 0)
    assert not np.isnan(data[:, header.index("V2")]).any()
    header, data = read_trace(tmp_path / "trace_riccati.csv")
    np.testing.assert_allclose(data[-1, 0], 0.05)


def test_replay_simulate_closure(tmp_path):
    """Measurements written by simulate, replayed with midpoint sampling,
    reproduce the simulated observer trajectory."""
    cli.run_simulation(RunConfig(t_end=1.0), tmp_path / "sim")
    cfg = RunConfig(mode="replay", log=str(tmp_path / "sim" / "sensor_log.csv"), hold="midpoint")
    cli.run_replay(cfg, out_dir=tmp_path / "rep")
    for kind in ("constant", "riccati"):
        h1, sim = read_trace(tmp_path / "sim" / f"trace_{kind}.csv")
        h2, rep = read_trace(tmp_path / "rep" / f"replay_{kind}.csv")
        assert sim.shape[0] == rep.shape[0]
        i, j = h1.index("Rbar11"), h2.index("Rbar11")
        np.testing.assert_allclose(rep[:, j:j + 21], sim[:, i:i + 21], atol=1e-9, rtol=0)
        i, j = h1.index("Rm11"), h2.index("Rm11")
        np.testing.assert_array_equal(rep[:, j:j + 18], sim[:, i:i + 18])


def test_replay_midpoint_needs_odd_count(tmp_path):
    cfg = RunConfig(mode="replay", hold="midpoint")
    with pytest.raises(ValueError):
        cli.run_replay(cfg, frames=_frames([0.0, 0.1, 0.2, 0.3]), out_dir=tmp_path)
    with pytest.raises(ValueError):
        cli.run_replay(cfg, frames=_frames([0.0, 0.01, 0.2]), out_dir=tmp_path)


def test_replay_zoh_substeps(tmp_path):
    cfg = RunConfig(mode="replay", observer="constant", max_step=0.01)
    frames = _frames([0.0, 0.1, 0.25])
    summary = cli.run_replay(cfg, frames=frames, out_dir=tmp_path)
    header, data = read_trace(tmp_path / "replay_constant.csv")
    np.testing.assert_allclose(data[:, 0], [0.1, 0.25])
    assert "constant" in summary["observers"]


def test_replay_missing_log(tmp_path):
    with pytest.raises(ConfigInvalid):
        cli.run_replay(RunConfig(mode="replay", log=str(tmp_path / "nope.csv")), out_dir=tmp_path)
    assert cli.main(["replay", "--log", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2


def test_main_simulate_and_replay(tmp_path, capsys):
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--t-end", "0.2", "--observer", "constant", "--out", str(out), "--seed", "3"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["seed"] == 3 and list(summary["observers"]) == ["constant"]
    rep = tmp_path / "rep"
    args = ["replay", "--log", str(out / "sensor_log.csv"), "--observer", "riccati", "--add-bias", "10,10,10",
            "--out", str(rep)]
    assert cli.main(args) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["add_bias"] == [10.0, 10.0, 10.0]
    assert (rep / "replay_riccati.csv").exists()


def test_main_batch(tmp_path, capsys):
    assert cli.main(["simulate", "--t-end", "0.05", "--batch", "3", "--seed", "5", "--out", str(tmp_path)]) == 0
    summaries = json.loads(capsys.readouterr().out)
    assert [s["seed"] for s in summaries] == [5, 6, 7]
    assert (tmp_path / "seed_7" / "trace_riccati.csv").exists()


def test_lost_positivity_surfaces_timestamp(tmp_path, capsys):
    cfg_path = tmp_path / "bad.ini"
    cfg_path.write_text("[run]\nt_end = 0.1\ndt = 0.01\nobserver = riccati\n[gains.riccati]\nq_scale = 1e6\n")
    assert cli.main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path)]) == 2
    assert "t = 0.01" in capsys.readouterr().err
    with pytest.raises(LostPositivity):
        cli.run_simulation(cli.config_mod.load(cfg_path), tmp_path)
