"""Empirical mode decomposition and CEEMDAN.

EMD sifting uses natural cubic spline envelopes through the maxima and the
minima, with a few extrema mirrored about each end of the record to tame
the spline at the boundaries. CEEMDAN averages first EMD modes over an
ensemble of noise-perturbed copies of the running residual.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import rng
from .wavesim import TimeSeries

logger = logging.getLogger(__name__)

EMD, CEEMDAN = "emd", "ceemdan"

# Hard cap on extracted modes; a 1e6-sample record yields about 20.
MAX_MODES = 64


class NotSiftableError(ValueError):
    """Signal has too few extrema to build upper and lower envelopes."""


class IntegrityError(ValueError):
    pass


@dataclass(frozen=True)
class SiftConfig:
    sd_threshold: float = 0.2
    max_sift_iterations: int = 100
    boundary_extrema: int = 2

    def __post_init__(self):
        if not self.sd_threshold > 0:
            raise ValueError("sd_threshold must be > 0")
        if self.max_sift_iterations < 1:
            raise ValueError("max_sift_iterations must be >= 1")
        if self.boundary_extrema < 1:
            raise ValueError("boundary_extrema must be >= 1")


@dataclass(frozen=True)
class CeemdanConfig:
    noise_scale: float = 0.005
    ensemble_size: int = 100
    seed: int = 0
    sift: SiftConfig = field(default_factory=SiftConfig)

    def __post_init__(self):
        if not self.noise_scale > 0:
            raise ValueError("noise_scale must be > 0")
        if self.ensemble_size < 2:
            raise ValueError("ensemble_size must be >= 2")


@dataclass
class IMFDecomposition:
    """Modes (rows of ``modes``, highest frequency first) plus the residual."""

    modes: np.ndarray
    residual: np.ndarray
    dt: float
    method: str
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.residual = np.asarray(self.residual, dtype=float)
        self.modes = np.asarray(self.modes, dtype=float).reshape(-1, self.residual.size)

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    def components(self) -> np.ndarray:
        """Modes followed by the residual, shape (n_modes + 1, n)."""
        return np.vstack([self.modes, self.residual[None, :]])

    def mode_series(self) -> list[TimeSeries]:
        return [TimeSeries(m, self.dt) for m in self.modes]


def find_extrema(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of interior local maxima and minima.

    Flat runs continue the preceding trend, so a plateau counts once, at
    its last sample.
    """
    d = np.sign(np.diff(x))
    nz = np.flatnonzero(d)
    if nz.size == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    # forward-fill zeros with the previous nonzero slope, back-fill a leading run
    idx = np.maximum.accumulate(np.where(d != 0, np.arange(d.size), -1))
    idx[idx < 0] = nz[0]
    s = d[idx]
    change = np.flatnonzero(s[:-1] != s[1:]) + 1
    maxima = change[s[change - 1] > 0]
    minima = change[s[change - 1] < 0]
    return maxima, minima


def count_zero_crossings(x: np.ndarray) -> int:
    s = np.sign(x)
    s = s[s != 0]
    return int(np.count_nonzero(s[:-1] != s[1:]))


def is_siftable(x: np.ndarray) -> bool:
    maxima, minima = find_extrema(x)
    return maxima.size >= 1 and minima.size >= 1 and maxima.size + minima.size >= 3


def _envelope(x, ext, nbsym, endpoint_beats):
    """Natural spline through x[ext] plus mirrored extrema at both ends."""
    n = x.size
    t = np.arange(n, dtype=float)
    left = ext[:nbsym][::-1]
    right = ext[-nbsym:][::-1]
    pts_t = [-t[left], t[ext], 2 * t[-1] - t[right]]
    pts_v = [x[left], x[ext], x[right]]
    # when an endpoint overshoots the nearest extremum it becomes a knot itself
    if endpoint_beats(x[0], x[ext[0]]):
        pts_t.insert(1, [0.0])
        pts_v.insert(1, [x[0]])
    if endpoint_beats(x[-1], x[ext[-1]]):
        pts_t.insert(-1, [t[-1]])
        pts_v.insert(-1, [x[-1]])
    tt = np.concatenate(pts_t)
    vv = np.concatenate(pts_v)
    return CubicSpline(tt, vv, bc_type="natural")(t)


def _mean_envelope(x, maxima, minima, nbsym):
    upper = _envelope(x, maxima, nbsym, np.greater)
    lower = _envelope(x, minima, nbsym, np.less)
    return 0.5 * (upper + lower)


def _sift(x: np.ndarray, cfg: SiftConfig) -> np.ndarray:
    if not is_siftable(x):
        raise NotSiftableError("signal needs at least one maximum, one minimum and three extrema")
    h = x.copy()
    for _ in range(cfg.max_sift_iterations):
        maxima, minima = find_extrema(h)
        if maxima.size == 0 or minima.size == 0 or maxima.size + minima.size < 3:
            break
        h_new = h - _mean_envelope(h, maxima, minima, cfg.boundary_extrema)
        power = np.dot(h, h)
        if power == 0.0:
            break
        sd = np.dot(h - h_new, h - h_new) / power
        h = h_new
        if sd < cfg.sd_threshold and _imf_counts_ok(h):
            break
    return h


def _imf_counts_ok(h: np.ndarray) -> bool:
    """Extrema and zero-crossing counts differ by at most one."""
    mx, mn = find_extrema(h)
    return abs(mx.size + mn.size - count_zero_crossings(h)) <= 1


def sift_one_imf(signal: TimeSeries, cfg: SiftConfig = SiftConfig()) -> tuple[TimeSeries, TimeSeries]:
    """Sift the highest-frequency IMF out of ``signal``.

    Returns ``(imf, residue)`` with ``residue = signal - imf`` exactly.
    Raises :class:`NotSiftableError` if envelopes cannot be formed.
    """
    x = signal.values
    if x.size < 4:
        raise ValueError("sifting needs at least 4 samples")
    imf = _sift(x, cfg)
    return TimeSeries(imf, signal.dt), TimeSeries(x - imf, signal.dt)


def _emd_modes(x: np.ndarray, cfg: SiftConfig, max_modes: int = MAX_MODES) -> tuple[list, np.ndarray]:
    modes = []
    residue = x.copy()
    while len(modes) < max_modes and is_siftable(residue):
        imf = _sift(residue, cfg)
        if not np.any(imf):
            break
        modes.append(imf)
        residue = residue - imf
    return modes, residue


def emd(signal: TimeSeries, cfg: SiftConfig = SiftConfig()) -> IMFDecomposition:
    """Plain EMD: extract IMFs until the residue can no longer be sifted."""
    x = signal.values
    if x.size < 4:
        raise ValueError("EMD needs at least 4 samples")
    modes, residue = _emd_modes(x, cfg)
    return IMFDecomposition(np.array(modes).reshape(-1, x.size), residue, signal.dt, EMD,
                            {"sift": asdict(cfg)})


def extract_kth_mode(signal: TimeSeries, k: int, cfg: SiftConfig = SiftConfig()) -> TimeSeries:
    """The k-th IMF (1-based) of EMD(signal), or zeros if EMD yields fewer."""
    if k < 1:
        raise ValueError("k must be >= 1")
    modes, _ = _emd_modes(signal.values, cfg, max_modes=k)
    if len(modes) < k:
        return TimeSeries(np.zeros(len(signal)), signal.dt)
    return TimeSeries(modes[k - 1], signal.dt)


def _first_mode(x: np.ndarray, cfg: SiftConfig) -> np.ndarray:
    return _sift(x, cfg) if is_siftable(x) else np.zeros_like(x)


class _NoiseModes:
    """EMD modes of each ensemble member's white noise, computed on demand."""

    def __init__(self, n: int, cfg: CeemdanConfig):
        self.n = n
        self.cfg = cfg
        self._modes: list[Optional[list]] = [None] * cfg.ensemble_size

    def noise(self, i: int) -> np.ndarray:
        return rng.stream(self.cfg.seed, rng.CEEMDAN_NOISE, i).standard_normal(self.n)

    def mode(self, i: int, k: int) -> np.ndarray:
        """E_k(v^i), 1-based; zeros once the noise runs out of modes."""
        if self._modes[i] is None:
            self._modes[i], _ = _emd_modes(self.noise(i), self.cfg.sift)
        modes = self._modes[i]
        return modes[k - 1] if k <= len(modes) else np.zeros(self.n)


def ceemdan(signal: TimeSeries, cfg: CeemdanConfig = CeemdanConfig()) -> IMFDecomposition:
    """Complete ensemble EMD with adaptive noise.

    Stage 1 averages the first EMD mode of ``x + w * v_i`` over the
    ensemble. Stage k averages the first mode of ``r_{k-1} + w * E_{k-1}(v_i)``
    where ``E_j`` is the j-th EMD mode. The residual telescopes,
    ``r_k = r_{k-1} - C_k``, so modes plus residual rebuild the input.
    The noise amplitude ``w`` is ``noise_scale * std(x)`` at every stage.
    """
    if cfg.ensemble_size < 2:
        raise ValueError("ensemble_size must be >= 2")
    x = signal.values
    if x.size < 4:
        raise ValueError("CEEMDAN needs at least 4 samples")
    n = x.size
    amp = cfg.noise_scale * float(np.std(x))
    noise = _NoiseModes(n, cfg)
    members = range(cfg.ensemble_size)

    modes = []
    residual = x.copy()
    if amp > 0:
        acc = np.zeros(n)
        for i in members:
            acc += _first_mode(x + amp * noise.noise(i), cfg.sift)
        c = acc / cfg.ensemble_size
        modes.append(c)
        residual = x - c

    while len(modes) < MAX_MODES and is_siftable(residual):
        k = len(modes) + 1
        if amp > 0:
            acc = np.zeros(n)
            for i in members:
                acc += _first_mode(residual + amp * noise.mode(i, k - 1), cfg.sift)
            c = acc / cfg.ensemble_size
        else:
            c = _sift(residual, cfg.sift)
        if not np.any(c):
            break
        modes.append(c)
        residual = residual - c
        logger.debug("ceemdan stage %d done", k)

    config = asdict(cfg)
    return IMFDecomposition(np.array(modes).reshape(-1, n), residual, signal.dt, CEEMDAN, config)


def reconstruct(d: IMFDecomposition) -> TimeSeries:
    """Element-wise sum of every mode and the residual."""
    if d.modes.ndim != 2 or d.modes.shape[1] != d.residual.size:
        raise IntegrityError("modes and residual lengths differ")
    if d.residual.size == 0:
        raise IntegrityError("empty decomposition")
    return TimeSeries(d.modes.sum(axis=0) + d.residual, d.dt)
