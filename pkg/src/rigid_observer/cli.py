"""Command-line entry point: ``rigid-observer simulate|replay|check-gains``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config as config_mod
from .config import ConfigInvalid, RunConfig, parse_vec
from .diagnostics import InsufficientData, fit_exponential_rate, is_converged, summarize_bias
from .logio import (
    read_sensor_log,
    validate_frames,
    write_replay_trace,
    write_sensor_log,
    write_sim_trace,
)
from .observer_const import FeasibilityReport, check_gains
from .simulation import ObserverRun, generate_trajectory, replay_observer, run_observer, shift_frames

log = logging.getLogger("rigid_observer")


def _bias_summary(run: ObserverRun, tail_fraction: float) -> dict:
    bw, ba = run.bias_series()
    mw, dw = summarize_bias(bw, tail_fraction)
    ma, da = summarize_bias(ba, tail_fraction)
    return {
        "bias_omega_mean": mw.tolist(),
        "bias_omega_max_dev": dw,
        "bias_omega_converged": is_converged(mw, dw),
        "bias_a_mean": ma.tolist(),
        "bias_a_max_dev": da,
        "bias_a_converged": is_converged(ma, da),
    }


def _rate(series, window) -> tuple[float, float]:
    try:
        s = fit_exponential_rate(series, window)
    except InsufficientData:
        return float("nan"), float("nan")
    return s.fitted_rate, s.fit_r2


def run_simulation(cfg: RunConfig, out_dir: str | Path | None = None) -> dict:
    """Simulate truth and the selected observer(s); write traces and a summary.

    Files: ``trace_<observer>.csv`` (one row per step), ``sensor_log.csv``
    (measurements on the half-step grid, replayable with ``hold = midpoint``)
    and ``summary.json``.
    """
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    sig = cfg.signals()
    traj = generate_trajectory(sig, cfg.sensor(), cfg.dt, cfg.t_end, np.array(cfg.gravity), seed=cfg.seed)
    write_sensor_log(out / "sensor_log.csv", traj.log_frames())
    window = (0.5 * cfg.t_end, cfg.t_end)
    summary: dict = {"t_end": float(traj.times[-1]), "seed": cfg.seed, "observers": {}}
    for kind in cfg.observers:
        run = run_observer(traj, kind, cfg.const_gains(), cfg.riccati_state(), const_v2=cfg.const_v2)
        write_sim_trace(out / f"trace_{kind}.csv", traj, run)
        final = run.records[-1]
        rate, r2 = _rate([(r.t, r.total) for r in run.records], window)
        summary["observers"][kind] = {
            "final_errors": {k: v for k, v in asdict(final).items() if k != "t"},
            "fitted_rate": rate,
            "fit_r2": r2,
            "window": list(window),
            **_bias_summary(run, cfg.tail_fraction),
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def run_replay(cfg: RunConfig, frames=None, out_dir: str | Path | None = None) -> dict:
    """Replay a sensor log through the selected observer(s).

    ``cfg.add_bias`` is added to both the gyro and accelerometer channels
    before replaying.
    """
    if frames is None:
        if not cfg.log:
            raise ConfigInvalid("replay needs a sensor log ([replay] log or --log)")
        if not Path(cfg.log).is_file():
            raise ConfigInvalid(f"sensor log not found: {cfg.log}")
        frames = read_sensor_log(cfg.log)
    else:
        frames = validate_frames(frames)
    if any(cfg.add_bias):
        frames = shift_frames(frames, cfg.add_bias)
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    t0, t1 = frames[0].t, frames[-1].t
    window = (t0 + 0.5 * (t1 - t0), t1)
    summary: dict = {"add_bias": list(cfg.add_bias), "hold": cfg.hold, "observers": {}}
    for kind in cfg.observers:
        run = replay_observer(
            frames, kind, np.array(cfg.gravity), cfg.const_gains(), cfg.riccati_state(),
            hold=cfg.hold, max_step=cfg.max_step,
        )
        write_replay_trace(out / f"replay_{kind}.csv", frames, run)
        bias = _bias_summary(run, cfg.tail_fraction)
        # distance of the stacked bias estimate from its tail mean
        target = np.concatenate([bias["bias_omega_mean"], bias["bias_a_mean"]])
        dev = [
            (t, float(np.linalg.norm(np.concatenate([s.b_omega, s.b_a]) - target)))
            for t, s in zip(run.times, run.states)
        ]
        rate, r2 = _rate(dev, window)
        summary["observers"][kind] = {"fitted_rate": rate, "fit_r2": r2, "window": list(window), **bias}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def report_dict(r: FeasibilityReport) -> dict:
    return {
        "k3": r.k3, "k4": r.k4, "k5": r.k5, "c": r.c,
        "in_K": r.in_K,
        "Y_min_eig": r.Y_min_eig,
        "Z_min_eig": r.Z_min_eig,
        "Y_Z_positive_definite": r.satisfies_lmi,
        "violated_conditions": r.violated_conditions,
    }


def format_report(r: FeasibilityReport) -> str:
    lines = [
        f"gains (k3, k4, k5) = ({r.k3:g}, {r.k4:g}, {r.k5:g}), c = {r.c:g}",
        f"in K(c): {'yes' if r.in_K else 'no'}",
    ]
    for name, val in r.condition_values.items():
        mark = "ok  " if val > 0 else "FAIL"
        lines.append(f"  [{mark}] {name}   (value {val:.6g})")
    lines.append(f"lambda_min(Y) = {r.Y_min_eig:.6g}, lambda_min(Z) = {r.Z_min_eig:.6g}")
    lines.append(f"Y > 0 and Z > 0: {'yes' if r.satisfies_lmi else 'no'}")
    return "\n".join(lines)


def run_check_gains(cfg: RunConfig, fmt: str = "text") -> str:
    c = cfg.c if cfg.c is not None else cfg.signals().omega_bound_c
    r = check_gains(cfg.k3, cfg.k4, cfg.k5, c)
    if fmt == "json":
        return json.dumps(report_dict(r))
    if fmt == "csv":
        d = report_dict(r)
        d["violated_conditions"] = ";".join(d["violated_conditions"])
        return ",".join(d) + "\n" + ",".join(str(v) for v in d.values())
    return format_report(r)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rigid-observer", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key-value config file")
        sp.add_argument("--observer", choices=config_mod.OBSERVER_CHOICES)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")

    sim = sub.add_parser("simulate", help="simulate truth, sensors and observers")
    common(sim)
    sim.add_argument("--noise", type=float, help="sensor noise standard deviation")
    sim.add_argument("--t-end", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--batch", type=int, default=1, help="run N consecutive seeds in parallel")

    rep = sub.add_parser("replay", help="replay a sensor log")
    common(rep)
    rep.add_argument("--log", help="sensor log CSV")
    rep.add_argument("--add-bias", type=parse_vec, metavar="X,Y,Z")
    rep.add_argument("--hold", choices=config_mod.HOLD_MODES)

    chk = sub.add_parser("check-gains", help="check (k3, k4, k5) against K(c)")
    chk.add_argument("--config")
    chk.add_argument("--k3", type=float)
    chk.add_argument("--k4", type=float)
    chk.add_argument("--k5", type=float)
    chk.add_argument("--c", type=float)
    chk.add_argument("--format", choices=("text", "json", "csv"), default="text")
    return p


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = config_mod.load(args.config) if args.config else RunConfig()
    overrides = {"mode": args.command}
    for attr, field_name in (
        ("observer", "observer"), ("seed", "seed"), ("out", "output"), ("noise", "noise"),
        ("t_end", "t_end"), ("dt", "dt"), ("log", "log"), ("add_bias", "add_bias"),
        ("hold", "hold"), ("k3", "k3"), ("k4", "k4"), ("k5", "k5"), ("c", "c"),
    ):
        val = getattr(args, attr, None)
        if val is not None:
            overrides[field_name] = val
    return replace(cfg, **overrides)


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        if args.command == "check-gains":
            print(run_check_gains(cfg, args.format))
        elif args.command == "simulate":
            if args.batch > 1:
                seeds = [cfg.seed + i for i in range(args.batch)]
                jobs = [(replace(cfg, seed=s), Path(cfg.output) / f"seed_{s}") for s in seeds]
                with ThreadPoolExecutor() as pool:
                    summaries = list(pool.map(lambda job: run_simulation(*job), jobs))
                print(json.dumps(summaries, indent=2))
            else:
                print(json.dumps(run_simulation(cfg), indent=2))
        else:
            print(json.dumps(run_replay(cfg), indent=2))
    except (ConfigInvalid, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
