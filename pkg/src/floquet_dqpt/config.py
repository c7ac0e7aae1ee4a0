"""Run configuration: flat ``key = value`` files with angles in units of pi."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

RANGE_MODES = ("reduced", "full")


@dataclass(frozen=True)
class SweepSpec:
    """Rectangular grid over ``(J_x/pi, J_y/pi)``; bounds are inclusive."""

    jx: tuple
    jy: tuple

    def values(self):
        return _axis(*self.jx), _axis(*self.jy)

    def points(self):
        xs, ys = self.values()
        return [(float(x), float(y)) for x in xs for y in ys]

    def text(self):
        return {"sweep_jx": _fmt_range(self.jx), "sweep_jy": _fmt_range(self.jy)}


def _axis(start, stop, step):
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # rounding keeps grid values like 1.1, 2.1 exact in decimal
    return np.round(start + step * np.arange(count), 12)


def _fmt_range(r):
    return ":".join(repr(float(x)) for x in r)


def _parse_range(key, text):
    parts = text.split(":")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(f"{key}: expected start:stop:step, got {text!r}") from None
    if len(vals) == 1:
        vals = (vals[0], vals[0], 1.0)
    if len(vals) != 3:
        raise ConfigurationError(f"{key}: expected start:stop:step, got {text!r}")
    start, stop, step = vals
    if step <= 0 or stop < start:
        raise ConfigurationError(f"{key}: empty sweep range {text!r}")
    if start <= 0:
        raise ConfigurationError(f"{key}: amplitudes must be positive")
    return vals


@dataclass(frozen=True)
class RunConfig:
    jx_over_pi: float = 0.5
    jy_over_pi: float = 1.1
    band: int = -1
    k_count: int = 300
    s_count: int = 2000
    periods: int = 1
    dtop_range: str = "reduced"
    dtop_k_count: int = 1200
    cusp_threshold: float = 20.0
    out: str = "out"
    sweep: SweepSpec | None = None
    workers: int = 1

    def __post_init__(self):
        validate(self)

    @property
    def J_x(self) -> float:
        return self.jx_over_pi * math.pi

    @property
    def J_y(self) -> float:
        return self.jy_over_pi * math.pi

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if f.name == "sweep":
                continue
            val = getattr(self, f.name)
            lines.append(f"{f.name} = {val!r}" if isinstance(val, float) else f"{f.name} = {val}")
        if self.sweep is not None:
            for key, val in self.sweep.text().items():
                lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "sweep"}
        if self.sweep is not None:
            out.update(self.sweep.text())
        return out


_INT_KEYS = {"band", "k_count", "s_count", "periods", "dtop_k_count", "workers"}
_FLOAT_KEYS = {"jx_over_pi", "jy_over_pi", "cusp_threshold"}
_STR_KEYS = {"dtop_range", "out"}
_SWEEP_KEYS = {"sweep_jx", "sweep_jy"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _SWEEP_KEYS


def validate(cfg: RunConfig):
    if not (cfg.jx_over_pi > 0 and cfg.jy_over_pi > 0) or not (
            math.isfinite(cfg.jx_over_pi) and math.isfinite(cfg.jy_over_pi)):
        raise ConfigurationError("quench amplitudes must be positive")
    if cfg.band not in (1, -1):
        raise ConfigurationError(f"band must be +1 or -1, got {cfg.band}")
    for name in ("k_count", "s_count", "dtop_k_count"):
        if getattr(cfg, name) < 2:
            raise ConfigurationError(f"{name} must be at least 2")
    if cfg.periods < 1:
        raise ConfigurationError("periods must be at least 1")
    if cfg.workers < 1:
        raise ConfigurationError("workers must be at least 1")
    if cfg.dtop_range not in RANGE_MODES:
        raise ConfigurationError(f"dtop_range must be one of {RANGE_MODES}")
    if not cfg.cusp_threshold > 0:
        raise ConfigurationError("cusp_threshold must be positive")


def parse_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        values[key] = val
    return values


def build(values: dict) -> RunConfig:
    """Build a :class:`RunConfig` from string (or typed) values."""
    kwargs = {}
    sweep = {}
    for key, val in values.items():
        if val is None:
            continue
        if key not in KNOWN_KEYS:
            raise ConfigurationError(f"unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(val)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(val)
            elif key in _STR_KEYS:
                kwargs[key] = str(val)
            else:
                sweep[key] = _parse_range(key, str(val))
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"{key}: cannot parse {val!r}") from None
    if sweep:
        if set(sweep) != _SWEEP_KEYS:
            raise ConfigurationError("sweep needs both sweep_jx and sweep_jy")
        kwargs["sweep"] = SweepSpec(jx=sweep["sweep_jx"], jy=sweep["sweep_jy"])
    return RunConfig(**kwargs)


def load(path) -> dict:
    try:
        return parse_text(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None


def from_text(text: str) -> RunConfig:
    return build(parse_text(text))


def with_point(cfg: RunConfig, jx: float, jy: float) -> RunConfig:
    return dataclasses.replace(cfg, jx_over_pi=float(jx), jy_over_pi=float(jy), sweep=None)
