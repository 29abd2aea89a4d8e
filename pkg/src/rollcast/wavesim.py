"""Synthetic roll motion from a wave energy spectrum.

The chain is: ITTC wave spectrum sampled on a band grid, rescaled into an
encounter spectrum for a moving vessel, multiplied by the squared gain of
a second-order roll response, then turned into a time series by summing
cosines with random phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import rng

GRAVITY = 9.8
WAVE, ENCOUNTER, RESPONSE = "wave", "encounter", "response"


class DegenerateEncounterError(ValueError):
    """The encounter denominator is non-positive at some frequency."""


@dataclass(frozen=True)
class SeaStateConfig:
    significant_wave_height: float = 5.0
    wind_speed: float = 10.0
    gravity: float = GRAVITY

    def __post_init__(self):
        if not self.significant_wave_height > 0:
            raise ValueError("significant_wave_height must be > 0")
        if self.gravity != GRAVITY:
            raise ValueError(f"gravity is fixed at {GRAVITY} m/s^2")


@dataclass(frozen=True)
class VesselConfig:
    natural_frequency: float = 1.57
    damping_ratio: float = 0.06
    correction: float = 0.4
    speed: float = 15.0
    heading_angle: float = 0.0  # degrees

    def __post_init__(self):
        for name in ("natural_frequency", "damping_ratio", "correction"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def heading_rad(self) -> float:
        return math.radians(self.heading_angle)


@dataclass(frozen=True)
class SpectralLineSet:
    """Discretized spectrum on a uniform frequency grid.

    ``frequencies`` in rad/s, ``densities`` in m^2 s, ``phases`` in rad.
    """

    frequencies: np.ndarray
    densities: np.ndarray
    phases: np.ndarray
    delta_omega: float
    kind: str = WAVE

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float)
        s = np.asarray(self.densities, dtype=float)
        p = np.asarray(self.phases, dtype=float)
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "densities", s)
        object.__setattr__(self, "phases", p)
        if not (w.shape == s.shape == p.shape) or w.ndim != 1:
            raise ValueError("frequencies, densities and phases must be 1-D and equal length")
        if self.kind not in (WAVE, ENCOUNTER, RESPONSE):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if w.size and np.any(w <= 0):
            raise ValueError("frequencies must be > 0")
        if w.size > 1:
            gaps = np.diff(w)
            if np.any(gaps <= 0):
                raise ValueError("frequencies must be strictly increasing")
            if np.max(np.abs(gaps - self.delta_omega)) > 1e-12 * max(self.delta_omega, w[-1]):
                raise ValueError("frequency gaps must equal delta_omega")
        if np.any(s < 0):
            raise ValueError("densities must be >= 0")
        if np.any((p < 0) | (p >= 2 * np.pi)):
            raise ValueError("phases must lie in [0, 2*pi)")

    def __len__(self) -> int:
        return self.frequencies.size

    def with_random_phases(self, seed: int) -> "SpectralLineSet":
        """Copy with one uniform [0, 2pi) phase per line drawn from ``seed``."""
        return replace(self, phases=draw_phases(len(self), seed))


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    dt: float = 0.1
    seed: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("a time series needs at least one sample")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not np.all(np.isfinite(v)):
            raise ValueError("time series values must be finite")

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt


def draw_phases(n: int, seed: int) -> np.ndarray:
    phases = rng.stream(seed, rng.PHASES).uniform(0.0, 2 * np.pi, size=n)
    # uniform() is half-open but guard against rounding up to 2pi
    return np.where(phases >= 2 * np.pi, 0.0, phases)


def ittc_spectrum(omega, sea: SeaStateConfig):
    """ITTC two-parameter wave spectrum, density in m^2 s.

    Accepts a scalar or an array of frequencies (rad/s, all > 0).
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("omega must be > 0")
    g = sea.gravity
    h = sea.significant_wave_height
    with np.errstate(over="ignore", under="ignore"):
        s = 0.74 / w**5 * np.exp(-(g**2) / (6.28**2 * h * w**2))
    # tiny omega gives 0 * inf; the exponential wins the limit
    s = np.where(np.isfinite(s), s, 0.0)
    return float(s) if s.ndim == 0 else s


def sampling_band(sea: SeaStateConfig) -> tuple[float, float, float]:
    """(omega_min, omega_max, delta_omega) for the sea state's wave-height row."""
    h = sea.significant_wave_height
    if not h > 0:
        raise ValueError("significant_wave_height must be > 0")
    if h <= 2.5:
        return 0.3, 3.0, 0.1
    if h <= 5.0:
        return 0.25, 2.5, 0.08
    return 0.1, 1.7, 0.06


def band_grid(omega_min: float, omega_max: float, delta_omega: float) -> np.ndarray:
    """Grid points omega_min + k*delta_omega for k >= 1, up to omega_max inclusive.

    The band is open at its lower edge, so k starts at 1.
    """
    count = int(math.floor((omega_max - omega_min) / delta_omega + 1e-9))
    return omega_min + delta_omega * np.arange(1, count + 1)


def wave_lines(sea: SeaStateConfig) -> SpectralLineSet:
    """Sample the ITTC spectrum on the band grid for ``sea`` (zero phases)."""
    lo, hi, dw = sampling_band(sea)
    w = band_grid(lo, hi, dw)
    return SpectralLineSet(w, ittc_spectrum(w, sea), np.zeros_like(w), dw, WAVE)


def encounter_spectrum(lines: SpectralLineSet, vessel: VesselConfig,
                       sea: SeaStateConfig) -> SpectralLineSet:
    """Rescale wave densities by 1 / (1 + 2 w v cos(beta) / g), keeping the w grid."""
    if lines.kind != WAVE:
        raise ValueError(f"expected a wave spectrum, got {lines.kind!r}")
    w = lines.frequencies
    cos_b = math.cos(vessel.heading_rad)
    # cos(90 deg) is 6e-17, not 0; snap so the beam-sea case is an exact identity
    if abs(cos_b) < 1e-15:
        cos_b = 0.0
    denom = 1.0 + 2.0 * w * vessel.speed * cos_b / sea.gravity
    bad = np.flatnonzero(denom <= 0)
    if bad.size:
        raise DegenerateEncounterError(
            f"encounter denominator {denom[bad[0]]:.6g} <= 0 at omega={w[bad[0]]:.6g} rad/s")
    dens = lines.densities if np.all(denom == 1.0) else lines.densities / denom
    return replace(lines, densities=dens, kind=ENCOUNTER)


def response_gain(omega, vessel: VesselConfig):
    """Squared magnitude of the roll frequency response chi / (1 - L^2 + 2i mu L)."""
    lam = np.asarray(omega, dtype=float) / vessel.natural_frequency
    mu = vessel.damping_ratio
    gain = vessel.correction**2 / ((1.0 - lam**2) ** 2 + (2.0 * mu * lam) ** 2)
    return float(gain) if gain.ndim == 0 else gain


def sway_response_spectrum(lines: SpectralLineSet, vessel: VesselConfig) -> SpectralLineSet:
    if lines.kind != ENCOUNTER:
        raise ValueError(f"expected an encounter spectrum, got {lines.kind!r}")
    return replace(lines, densities=lines.densities * response_gain(lines.frequencies, vessel),
                   kind=RESPONSE)


def spectral_moment0(lines: SpectralLineSet) -> float:
    if len(lines) == 0:
        raise ValueError("empty spectrum")
    return float(np.sum(lines.densities) * lines.delta_omega)


def amplitudes(lines: SpectralLineSet) -> np.ndarray:
    if np.any(lines.densities < 0):
        raise ValueError("negative spectral density")
    return np.sqrt(2.0 * lines.densities * lines.delta_omega)


def synthesize_series(lines: SpectralLineSet, duration_samples: int, dt: float = 0.1,
                      seed: Optional[int] = None) -> TimeSeries:
    """Harmonic superposition Y(t_j) = sum_k a_k cos(w_k t_j + eps_k), t_j = j*dt.

    When ``seed`` is given the phases are drawn from it, one per line;
    otherwise the phases stored on ``lines`` are used.
    """
    if len(lines) == 0:
        raise ValueError("empty spectrum")
    if duration_samples < 1:
        raise ValueError("duration_samples must be >= 1")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    amp = amplitudes(lines)
    phases = lines.phases if seed is None else draw_phases(len(lines), seed)
    t = np.arange(duration_samples) * dt
    values = np.zeros(duration_samples)
    # accumulate line by line: avoids an (n_samples x n_lines) temporary and
    # keeps the summation order fixed
    for a, w, eps in zip(amp, lines.frequencies, phases):
        values += a * np.cos(w * t + eps)
    return TimeSeries(values, dt, seed)


def roll_lines(sea: SeaStateConfig, vessel: VesselConfig) -> SpectralLineSet:
    """Response spectrum for ``vessel`` in ``sea`` on the sea state's band grid."""
    return sway_response_spectrum(encounter_spectrum(wave_lines(sea), vessel, sea), vessel)


def simulate_roll(sea: Optional[SeaStateConfig] = None, vessel: Optional[VesselConfig] = None,
                  samples: int = 943, dt: float = 0.1, seed: int = 0) -> TimeSeries:
    """Full pipeline: defaults give the sea-state-6, 943-sample roll record."""
    sea = sea or SeaStateConfig()
    vessel = vessel or VesselConfig()
    return synthesize_series(roll_lines(sea, vessel), samples, dt, seed)
