"""Run configuration: sectioned key-value files read with ``configparser``.

Example::

    [system]
    mass = 1
    omega = 1
    coupling = position

    [environment]
    gamma0 = 0.1
    cutoff = 20
    n = 1
    temperature = 0.35
    method = exact

    [initial]
    kind = entangled
    r = 0.15
    phi_minus = 0.5

    [run]
    t_max = 40
    dt_out = 0.05
    workers = 4

    [sweep]
    r = range(0, 3, 0.25)
    T = logspace(0.1, 500, 40)

    [output]
    directory = out
    format = csv

Sweep values accept a comma-separated list, ``range(start, stop, step)``
(stop included when it lands on the grid) or ``logspace(lo, hi, count)``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .gaussian_core import CouplingKind, InitialStateKind

_SCHEMA: dict[str, dict[str, str]] = {
    "system": {"mass": "float", "omega": "float", "coupling": "str"},
    "environment": {"gamma0": "float", "cutoff": "float", "n": "float", "temperature": "float", "method": "str"},
    "initial": {"kind": "str", "r": "float", "phi_minus": "float"},
    "run": {"t_max": "float", "dt_out": "float", "workers": "int", "seed": "int"},
    "sweep": {"r": "grid", "T": "grid", "phi_minus": "grid"},
    "output": {"directory": "str", "format": "str"},
}

METHODS = ("exact", "second_order")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    mass: float = 1.0
    omega: float = 1.0
    coupling: CouplingKind = CouplingKind.POSITION
    gamma0: float = 0.1
    cutoff: float = 20.0
    n: float = 1.0
    temperature: float = 0.0
    method: str = "exact"
    kind: InitialStateKind = InitialStateKind.TWO_MODE_SQUEEZED
    r: float = 1.0
    phi_minus: float = 0.5
    t_max: float = 20.0
    dt_out: float = 0.1
    workers: int = 1
    seed: int = 0
    sweep_r: tuple[float, ...] = (0.0, 0.5, 1.0)
    sweep_T: tuple[float, ...] = (0.1, 1.0, 10.0)
    sweep_phi_minus: tuple[float, ...] = field(default=())
    directory: str = "."
    format: str = "csv"

    def validated(self) -> "RunConfig":
        checks = [
            (self.mass > 0, "system.mass must be > 0"),
            (self.omega > 0, "system.omega must be > 0"),
            (self.gamma0 >= 0, "environment.gamma0 must be >= 0"),
            (self.cutoff > self.omega, "environment.cutoff must exceed system.omega"),
            (self.n > 0, "environment.n must be > 0"),
            (self.temperature >= 0, "environment.temperature must be >= 0"),
            (self.method in METHODS, f"environment.method must be one of {', '.join(METHODS)}"),
            (self.phi_minus >= 0.5, "initial.phi_minus must be >= 0.5"),
            (self.t_max > 0, "run.t_max must be > 0"),
            (self.dt_out > 0, "run.dt_out must be > 0"),
            (self.dt_out <= self.t_max, "run.dt_out must not exceed run.t_max"),
            (self.workers >= 1, "run.workers must be a positive integer"),
            (len(self.sweep_r) > 0, "sweep.r must not be empty"),
            (len(self.sweep_T) > 0, "sweep.T must not be empty"),
            (all(T >= 0 for T in self.sweep_T), "sweep.T values must be >= 0"),
            (all(p >= 0.5 for p in self.sweep_phi_minus), "sweep.phi_minus values must be >= 0.5"),
            (self.format in FORMATS, f"output.format must be one of {', '.join(FORMATS)}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self


def parse_grid(text: str) -> tuple[float, ...]:
    text = text.strip()
    m = re.fullmatch(r"(range|logspace)\((.*)\)", text)
    if m is None:
        try:
            return tuple(float(x) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise ConfigError(f"cannot parse grid {text!r}") from exc
    try:
        args = [float(x) for x in m.group(2).split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc
    if len(args) != 3:
        raise ConfigError(f"{m.group(1)} takes three arguments, got {len(args)}")
    a, b, c = args
    if m.group(1) == "range":
        if c <= 0 or b < a:
            raise ConfigError("range needs step > 0 and stop >= start")
        count = int(np.floor((b - a) / c + 1e-9)) + 1
        return tuple(float(x) for x in np.round(a + c * np.arange(count), 12))
    if a <= 0 or b <= a or c < 1 or c != int(c):
        raise ConfigError("logspace needs 0 < lo < hi and an integer count >= 1")
    return tuple(float(x) for x in np.geomspace(a, b, int(c)))


def _convert(section: str, key: str, kind: str, raw: str):
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "grid":
            return parse_grid(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {kind}") from exc


_FIELD = {("sweep", "r"): "sweep_r", ("sweep", "T"): "sweep_T", ("sweep", "phi_minus"): "sweep_phi_minus",
          ("environment", "temperature"): "temperature"}


def apply(cfg: RunConfig, section: str, key: str, raw: str) -> RunConfig:
    schema = _SCHEMA.get(section)
    if schema is None:
        raise ConfigError(f"unknown section [{section}]")
    if key not in schema:
        raise ConfigError(f"unknown key {section}.{key}")
    value = _convert(section, key, schema[key], raw)
    name = _FIELD.get((section, key), key)
    if name == "coupling":
        try:
            value = CouplingKind(value)
        except ValueError as exc:
            raise ConfigError(f"system.coupling must be position or symmetric, got {value!r}") from exc
    if name == "kind":
        try:
            value = InitialStateKind(value)
        except ValueError as exc:
            raise ConfigError(f"initial.kind must be separable or entangled, got {value!r}") from exc
    return replace(cfg, **{name: value})


def load(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Read ``path`` (if given), then apply ``section.key=value`` overrides."""
    cfg = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        for section in parser.sections():
            for key, raw in parser.items(section):
                cfg = apply(cfg, section, key, raw)
    for item in overrides or []:
        lhs, sep, raw = item.partition("=")
        section, dot, key = lhs.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        cfg = apply(cfg, section, key, raw)
    return cfg.validated()
