"""Run configuration: INI-style key/value text with dotted section names.

Every key has a default; the defaults reproduce the reference experiment
(15 s horizon, dt = 1e-3, gains 1, 1, 3.4, 5.5, 1.3 and P(0) = I, V = 0.1 I,
Q = I).  See ``README.md`` for the full key list.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .dynamics import CUBE_LANDMARKS, SensorSpec, SignalSpec, Sinusoid, benchmark_signals, sinusoid_signals
from .observer_const import ConstGains
from .observer_riccati import RiccatiState

MODES = ("simulate", "replay", "check-gains")
OBSERVER_CHOICES = ("constant", "riccati", "both")
HOLD_MODES = ("zoh", "midpoint")


class ConfigInvalid(ValueError):
    pass


Vec = tuple[float, float, float]
Terms = tuple[tuple[tuple[float, float, float], ...], ...]


@dataclass(frozen=True)
class RunConfig:
    mode: str = "simulate"
    observer: str = "both"
    dt: float = 1e-3
    t_end: float = 15.0
    seed: int = 0
    output: str = "out"
    gravity: Vec = (0.0, 0.0, -9.81)

    signal_preset: str = "benchmark"
    omega_offset: Vec = (0.0, 0.0, 0.0)
    omega_terms: Terms = ((), (), ())
    acc_offset: Vec = (0.0, 0.0, 0.0)
    acc_terms: Terms = ((), (), ())
    omega_bound: float | None = None

    b_omega: Vec = (-1.0, 1.0, 5.0)
    b_a: Vec = (1.0, -5.0, 1.0)
    noise: float = 0.01

    k1: float = 1.0
    k2: float = 1.0
    k3: float = 3.4
    k4: float = 5.5
    k5: float = 1.3
    c: float | None = None

    riccati_k1: float = 1.0
    riccati_k2: float = 1.0
    p0_scale: float = 1.0
    v_scale: float = 0.1
    q_scale: float = 1.0

    log: str | None = None
    add_bias: Vec = (0.0, 0.0, 0.0)
    hold: str = "zoh"
    max_step: float = 1e-2

    tail_fraction: float = 0.2
    const_v2: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}")
        if self.observer not in OBSERVER_CHOICES:
            raise ConfigInvalid(f"observer must be one of {OBSERVER_CHOICES}")
        if self.hold not in HOLD_MODES:
            raise ConfigInvalid(f"hold must be one of {HOLD_MODES}")
        if not self.dt > 0 or not self.t_end > 0 or not self.max_step > 0:
            raise ConfigInvalid("dt, t_end and max_step must be positive")
        if self.noise < 0:
            raise ConfigInvalid("noise must be non-negative")
        if self.signal_preset not in ("benchmark", "sinusoid"):
            raise ConfigInvalid(f"unknown signal preset {self.signal_preset!r}")
        if not 0 < self.tail_fraction <= 1:
            raise ConfigInvalid("tail_fraction must be in (0, 1]")

    @property
    def observers(self) -> tuple[str, ...]:
        return ("constant", "riccati") if self.observer == "both" else (self.observer,)

    def signals(self) -> SignalSpec:
        if self.signal_preset == "benchmark":
            sig = benchmark_signals()
            if self.omega_bound is not None:
                sig = SignalSpec(sig.angular_velocity, sig.body_acceleration, self.omega_bound, sig.name)
            return sig
        return sinusoid_signals(
            Sinusoid(self.omega_offset, self.omega_terms),
            Sinusoid(self.acc_offset, self.acc_terms),
            self.omega_bound,
        )

    def sensor(self) -> SensorSpec:
        return SensorSpec(np.array(self.b_omega), np.array(self.b_a), self.noise, CUBE_LANDMARKS.copy(), self.seed)

    def const_gains(self) -> ConstGains:
        c = self.c if self.c is not None else self.signals().omega_bound_c
        try:
            return ConstGains(self.k1, self.k2, self.k3, self.k4, self.k5, c)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc

    def riccati_state(self) -> RiccatiState:
        if min(self.p0_scale, self.v_scale, self.q_scale) <= 0:
            raise ConfigInvalid("Riccati scales must be positive")
        try:
            return RiccatiState(
                self.p0_scale * np.eye(9), self.q_scale * np.eye(3), self.v_scale * np.eye(9),
                self.riccati_k1, self.riccati_k2,
            )
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc


# (section, key) for every RunConfig field
_LAYOUT: dict[str, tuple[str, str]] = {
    "mode": ("run", "mode"),
    "observer": ("run", "observer"),
    "dt": ("run", "dt"),
    "t_end": ("run", "t_end"),
    "seed": ("run", "seed"),
    "output": ("run", "output"),
    "gravity": ("run", "gravity"),
    "signal_preset": ("signals", "preset"),
    "omega_offset": ("signals.omega", "offset"),
    "omega_terms": ("signals.omega", "terms"),
    "acc_offset": ("signals.acceleration", "offset"),
    "acc_terms": ("signals.acceleration", "terms"),
    "omega_bound": ("signals", "omega_bound"),
    "b_omega": ("sensor", "b_omega"),
    "b_a": ("sensor", "b_a"),
    "noise": ("sensor", "noise"),
    "k1": ("gains.constant", "k1"),
    "k2": ("gains.constant", "k2"),
    "k3": ("gains.constant", "k3"),
    "k4": ("gains.constant", "k4"),
    "k5": ("gains.constant", "k5"),
    "c": ("gains.constant", "c"),
    "riccati_k1": ("gains.riccati", "k1"),
    "riccati_k2": ("gains.riccati", "k2"),
    "p0_scale": ("gains.riccati", "p0_scale"),
    "v_scale": ("gains.riccati", "v_scale"),
    "q_scale": ("gains.riccati", "q_scale"),
    "log": ("replay", "log"),
    "add_bias": ("replay", "add_bias"),
    "hold": ("replay", "hold"),
    "max_step": ("replay", "max_step"),
    "tail_fraction": ("diagnostics", "tail_fraction"),
    "const_v2": ("diagnostics", "const_v2"),
}


def parse_vec(text: str) -> Vec:
    parts = [float(x) for x in text.replace(" ", "").split(",") if x]
    if len(parts) != 3:
        raise ConfigInvalid(f"expected three comma-separated numbers, got {text!r}")
    return tuple(parts)  # type: ignore[return-value]


def parse_terms(text: str) -> Terms:
    """``x: amp freq phase, amp freq phase | y: ... | z: ...`` -> per-axis triples.

    Axes are separated by ``|``; an axis may be empty.
    """
    axes = text.split("|")
    if len(axes) != 3:
        raise ConfigInvalid(f"sinusoid terms need three '|'-separated axes, got {text!r}")
    out = []
    for axis in axes:
        axis = axis.split(":", 1)[-1].strip()
        triples = []
        for chunk in filter(None, (c.strip() for c in axis.split(","))):
            vals = [float(x) for x in chunk.split()]
            if len(vals) != 3:
                raise ConfigInvalid(f"sinusoid term must be 'amp freq phase', got {chunk!r}")
            triples.append(tuple(vals))
        out.append(tuple(triples))
    return tuple(out)  # type: ignore[return-value]


def _fmt_terms(terms: Terms) -> str:
    return " | ".join(
        f"{ax}: " + ", ".join(" ".join(repr(float(v)) for v in tr) for tr in axis)
        for ax, axis in zip("xyz", terms)
    )


def _format(name: str, value) -> str:
    if value is None:
        return ""
    if name.endswith("_terms"):
        return _fmt_terms(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name: str, text: str):
    f = {f.name: f for f in fields(RunConfig)}[name]
    text = text.strip()
    typ = str(f.type)
    if text == "" and "None" in typ:
        return None
    try:
        if name.endswith("_terms"):
            return parse_terms(text)
        if typ.startswith("Vec"):
            return parse_vec(text)
        if typ == "bool":
            return {"true": True, "false": False, "1": True, "0": False}[text.lower()]
        if typ == "int":
            return int(text)
        if typ.startswith("float"):
            return float(text)
    except (ValueError, KeyError) as exc:
        raise ConfigInvalid(f"bad value for {name}: {text!r}") from exc
    return text


def from_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalid(str(exc)) from exc
    known = {(s, k) for s, k in _LAYOUT.values()}
    for section in cp.sections():
        for key in cp[section]:
            if (section, key) not in known:
                raise ConfigInvalid(f"unknown key [{section}] {key}")
    kwargs = {}
    for name, (section, key) in _LAYOUT.items():
        if cp.has_option(section, key):
            kwargs[name] = _parse(name, cp.get(section, key))
    return RunConfig(**kwargs)


def to_text(cfg: RunConfig) -> str:
    sections: dict[str, list[str]] = {}
    for name, (section, key) in _LAYOUT.items():
        sections.setdefault(section, []).append(f"{key} = {_format(name, getattr(cfg, name))}")
    return "\n".join(f"[{s}]\n" + "\n".join(lines) + "\n" for s, lines in sections.items())


def load(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid(f"config file not found: {path}")
    return from_text(path.read_text())
