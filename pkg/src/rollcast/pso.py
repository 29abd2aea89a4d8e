"""Particle swarm search over SVR hyperparameters.

Positions live in log2 space: coordinate 0 is log2(C), coordinate 1 is
log2(sigma). Fitness is minimized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng
from .svr import SVRHyperparams, TOLERANCE, MAX_ITER, kernel_from_sq, solve_dual, sq_distances

LOG2_C_BOUNDS = (-5.0, 15.0)
LOG2_SIGMA_BOUNDS = (-15.0, 3.0)

Fitness = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class SwarmConfig:
    particle_count: int = 10
    c1: float = 1.5
    c2: float = 1.7
    max_iterations: int = 200
    inertia: float = 0.8
    velocity_bounds: tuple[float, float] = (-10.0, 10.0)
    position_bounds: tuple[tuple[float, float], ...] = (LOG2_C_BOUNDS, LOG2_SIGMA_BOUNDS)
    seed: int = 0
    # extra sub-stream key, e.g. the component index in a hybrid model
    stream_key: tuple[int, ...] = ()

    def __post_init__(self):
        if self.particle_count < 1:
            raise ValueError("particle_count must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        lo, hi = self.velocity_bounds
        if lo > hi:
            raise ValueError("velocity_bounds must satisfy low <= high")
        for lo, hi in self.position_bounds:
            if lo > hi:
                raise ValueError("position_bounds must satisfy low <= high")

    @property
    def dimensions(self) -> int:
        return len(self.position_bounds)

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        b = np.asarray(self.position_bounds, dtype=float)
        return b[:, 0], b[:, 1]


@dataclass
class SwarmState:
    positions: np.ndarray
    velocities: np.ndarray
    pbest: np.ndarray
    pbest_fitness: np.ndarray
    gbest: np.ndarray
    gbest_fitness: float
    iteration: int = 0
    generator: np.random.Generator = field(default=None, repr=False)


def _evaluate(fitness: Fitness, positions: np.ndarray) -> np.ndarray:
    out = np.empty(positions.shape[0])
    for i, p in enumerate(positions):
        f = float(fitness(p.copy()))
        out[i] = f if np.isfinite(f) else np.inf
    return out


def initialize(cfg: SwarmConfig, fitness: Fitness) -> SwarmState:
    """Uniform positions inside the box, uniform velocities inside the velocity range."""
    gen = rng.stream(cfg.seed, rng.SWARM, *cfg.stream_key)
    lo, hi = cfg.bounds_arrays()
    n, d = cfg.particle_count, cfg.dimensions
    x = lo + (hi - lo) * gen.random((n, d))
    vlo, vhi = cfg.velocity_bounds
    v = vlo + (vhi - vlo) * gen.random((n, d))
    f = _evaluate(fitness, x)
    best = int(np.argmin(f))
    return SwarmState(x, v, x.copy(), f, x[best].copy(), float(f[best]), 0, gen)


def step(state: SwarmState, cfg: SwarmConfig, fitness: Fitness) -> SwarmState:
    """One velocity/position update followed by personal and global best updates.

    Non-finite fitness values count as +inf and are never adopted.
    """
    gen = state.generator
    n, d = state.positions.shape
    x = state.positions
    # r1 then r2, drawn per particle in particle order from the swarm's stream
    r = gen.random((n, 2, d))
    r1, r2 = r[:, 0, :], r[:, 1, :]
    v = (cfg.inertia * state.velocities
         + cfg.c1 * r1 * (state.pbest - x)
         + cfg.c2 * r2 * (state.gbest - x))
    v = np.clip(v, *cfg.velocity_bounds)
    lo, hi = cfg.bounds_arrays()
    x = np.clip(x + v, lo, hi)

    f = _evaluate(fitness, x)
    pbest = state.pbest.copy()
    pbest_f = state.pbest_fitness.copy()
    better = f < pbest_f
    pbest[better] = x[better]
    pbest_f[better] = f[better]
    gbest, gbest_f = state.gbest, state.gbest_fitness
    best = int(np.argmin(pbest_f))
    if pbest_f[best] < gbest_f:
        gbest, gbest_f = pbest[best].copy(), float(pbest_f[best])
    return SwarmState(x, v, pbest, pbest_f, gbest, gbest_f, state.iteration + 1, gen)


@dataclass(frozen=True)
class SwarmResult:
    best_position: np.ndarray
    best_fitness: float
    trace: np.ndarray  # gbest fitness after each iteration


def optimize(cfg: SwarmConfig, fitness: Fitness) -> SwarmResult:
    state = initialize(cfg, fitness)
    trace = np.empty(cfg.max_iterations)
    for k in range(cfg.max_iterations):
        state = step(state, cfg, fitness)
        trace[k] = state.gbest_fitness
    return SwarmResult(state.gbest.copy(), state.gbest_fitness, trace)


def decode(position: Sequence[float]) -> tuple[float, float]:
    """log2-space position -> (C, sigma)."""
    p = np.asarray(position, dtype=float)
    return float(2.0 ** p[0]), float(2.0 ** p[1])


def fold_slices(n_samples: int, folds: int) -> list[slice]:
    """Contiguous chronological blocks; the first ``n % folds`` get one extra sample."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n_samples < folds:
        raise ValueError(f"{n_samples} samples cannot fill {folds} folds")
    sizes = np.full(folds, n_samples // folds)
    sizes[: n_samples % folds] += 1
    edges = np.concatenate([[0], np.cumsum(sizes)])
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


class CrossValidatedFitness:
    """Mean held-out RMSE of an SVR over chronological folds.

    Squared distances between all rows are computed once; each call only
    rescales them into a kernel for the decoded sigma.
    """

    def __init__(self, inputs, targets, folds: int = 3, tube: float = 0.01,
                 tol: float = TOLERANCE, max_iter: int = MAX_ITER):
        self.x = np.asarray(inputs, dtype=float)
        self.y = np.asarray(targets, dtype=float).ravel()
        if self.x.shape[0] != self.y.size:
            raise ValueError("inputs and targets differ in length")
        self.slices = fold_slices(self.y.size, folds)
        self.tube = tube
        self.tol = tol
        self.max_iter = max_iter
        self.d2 = sq_distances(self.x, self.x)
        self.evaluations = 0

    def __call__(self, position) -> float:
        C, sigma = decode(position)
        hp = SVRHyperparams(C, sigma, self.tube)
        K = kernel_from_sq(self.d2, sigma)
        n = self.y.size
        errs = []
        for held in self.slices:
            train = np.concatenate([np.arange(0, held.start), np.arange(held.stop, n)])
            sol = solve_dual(K[np.ix_(train, train)], self.y[train], hp, self.tol, self.max_iter)
            pred = K[held][:, train] @ sol.beta + sol.bias
            errs.append(np.sqrt(np.mean((pred - self.y[held]) ** 2)))
        self.evaluations += 1
        return float(np.mean(errs))


def cv_fitness(dataset, folds: int, position) -> float:
    """Fitness of one position: mean held-out RMSE over ``folds`` chronological blocks."""
    inputs, targets = dataset
    return CrossValidatedFitness(inputs, targets, folds)(position)


def sphere(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))
