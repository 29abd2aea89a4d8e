"""Flat ``key = value`` run configuration shared by every CLI command.

Precedence, lowest to highest: built-in defaults, the ``--config`` file,
``--set key=value`` flags, then the dedicated flags (``--seed``,
``--method``). Lines starting with ``#`` are comments.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Mapping

from .decomp import SiftConfig
from .pipeline import DecompositionSettings, WindowSpec, canonical_method
from .pso import SwarmConfig
from .svr import SVRHyperparams
from .wavesim import SeaStateConfig, VesselConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    method: str = "ceemdan_pso_svm"
    # sea state and vessel
    wave_height: float = 5.0
    wind_speed: float = 10.0
    natural_frequency: float = 1.57
    damping_ratio: float = 0.06
    correction: float = 0.4
    vessel_speed: float = 15.0
    heading: float = 0.0
    dt: float = 0.1
    samples: int = 943
    # sifting and CEEMDAN
    sd_threshold: float = 0.2
    max_sift_iterations: int = 100
    boundary_extrema: int = 2
    noise_scale: float = 0.005
    ensemble_size: int = 100
    # particle swarm
    particles: int = 10
    c1: float = 1.5
    c2: float = 1.7
    iterations: int = 200
    inertia: float = 0.8
    velocity_min: float = -10.0
    velocity_max: float = 10.0
    log2_c_min: float = -5.0
    log2_c_max: float = 15.0
    log2_sigma_min: float = -15.0
    log2_sigma_max: float = 3.0
    folds: int = 3
    # regression
    tube: float = 0.01
    svr_tolerance: float = 1e-3
    svr_max_iter: int = 10_000
    baseline_c: float = 16.0
    baseline_sigma: float = 1.0
    # framing
    embedding: int = 10
    horizon: int = 1
    train_count: int = 661

    def __post_init__(self):
        try:
            object.__setattr__(self, "method", canonical_method(self.method))
            self.sea(), self.vessel(), self.settings(), self.swarm(), self.window(), self.baseline()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.samples < 1 or self.train_count < 1 or self.folds < 2 or self.svr_max_iter < 1:
            raise ConfigError("samples, train_count, svr_max_iter must be >= 1 and folds >= 2")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not (self.dt > 0 and self.tube >= 0 and self.svr_tolerance > 0):
            raise ConfigError("dt and svr_tolerance must be > 0, tube >= 0")

    # typed views for the modules
    def sea(self) -> SeaStateConfig:
        return SeaStateConfig(self.wave_height, self.wind_speed)

    def vessel(self) -> VesselConfig:
        return VesselConfig(self.natural_frequency, self.damping_ratio, self.correction,
                            self.vessel_speed, self.heading)

    def sift(self) -> SiftConfig:
        return SiftConfig(self.sd_threshold, self.max_sift_iterations, self.boundary_extrema)

    def settings(self) -> DecompositionSettings:
        s = DecompositionSettings(self.sift(), self.noise_scale, self.ensemble_size)
        s.ceemdan_config(self.seed)  # validates noise_scale and ensemble_size
        return s

    def swarm(self) -> SwarmConfig:
        return SwarmConfig(self.particles, self.c1, self.c2, self.iterations, self.inertia,
                           (self.velocity_min, self.velocity_max),
                           ((self.log2_c_min, self.log2_c_max),
                            (self.log2_sigma_min, self.log2_sigma_max)),
                           self.seed)

    def window(self) -> WindowSpec:
        return WindowSpec(self.embedding, self.horizon)

    def baseline(self) -> SVRHyperparams:
        return SVRHyperparams(self.baseline_c, self.baseline_sigma, self.tube)

    def with_overrides(self, values: Mapping[str, object]) -> "RunConfig":
        return from_mapping(values, base=self)

    def to_text(self) -> str:
        return "".join(f"{k} = {_format(v)}\n" for k, v in asdict(self).items())


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _format(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _coerce(key: str, raw) -> object:
    kind = _TYPES[key]
    if not isinstance(raw, str):
        return raw
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw.strip()


def from_mapping(values: Mapping[str, object], base: RunConfig = RunConfig()) -> RunConfig:
    unknown = sorted(set(values) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return replace(base, **{k: _coerce(k, v) for k, v in values.items()})


def parse_pairs(lines: Iterable[str], source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (p.strip() for p in text.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        out[key] = value
    return out


def load(path: str | Path, base: RunConfig = RunConfig()) -> RunConfig:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return from_mapping(parse_pairs(fh, str(path)), base)


def loads(text: str, base: RunConfig = RunConfig()) -> RunConfig:
    return from_mapping(parse_pairs(text.splitlines()), base)
