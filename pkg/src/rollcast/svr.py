"""Epsilon-insensitive support vector regression with a Gaussian kernel.

The dual is solved in the 2n-variable form used by LIBSVM: variables
``a[:n]`` are the multipliers of the upper tube constraints (sign +1) and
``a[n:]`` those of the lower ones (sign -1). The regression weights are
``beta = a[:n] - a[n:]`` and ``f(x) = sum_i beta_i K(x_i, x) + b``.

Pairs are chosen by maximal violation with second-order selection of the
partner (Fan, Chen & Lin 2005); each pair update solves the two-variable
subproblem exactly, so the dual objective never decreases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

logger = logging.getLogger(__name__)

TOLERANCE = 1e-3
MAX_ITER = 10_000
_TAU = 1e-12


@dataclass(frozen=True)
class SVRHyperparams:
    penalty: float = 16.0
    kernel_width: float = 1.0
    tube: float = 0.01

    def __post_init__(self):
        if not self.penalty > 0:
            raise ValueError("penalty C must be > 0")
        if not self.kernel_width > 0:
            raise ValueError("kernel_width sigma must be > 0")
        if not self.tube >= 0:
            raise ValueError("tube epsilon must be >= 0")


@dataclass(frozen=True)
class SVRModel:
    """A trained regressor. Only rows with nonzero dual weight are kept."""

    support_inputs: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    hyperparams: SVRHyperparams
    n_features: int
    support_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    converged: bool = True
    iterations: int = 0
    violation: float = 0.0
    objective_trace: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        sv = np.asarray(self.support_inputs, dtype=float).reshape(-1, self.n_features)
        object.__setattr__(self, "support_inputs", sv)
        object.__setattr__(self, "dual_coeffs", np.asarray(self.dual_coeffs, dtype=float))
        object.__setattr__(self, "support_indices", np.asarray(self.support_indices, dtype=int))
        if self.dual_coeffs.shape != (sv.shape[0],):
            raise ValueError("one dual coefficient per support row required")

    def predict(self, x) -> np.ndarray:
        return predict_many(self, x)


def sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at 0."""
    d = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


def kernel_from_sq(d2: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-d2 / (2.0 * sigma * sigma))


def rbf_kernel(x, x2, sigma: float) -> float:
    """Gaussian kernel exp(-|x - x2|^2 / (2 sigma^2))."""
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {x2.size}")
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    diff = x - x2
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma * sigma)))


@njit(cache=True)
def _smo(K, z, eps, C, tol, max_iter, record):
    # au: multipliers with sign +1 (a[:n]), al: sign -1 (a[n:]); Gu, Gl their gradients
    n = z.shape[0]
    au = np.zeros(n)
    al = np.zeros(n)
    Gu = np.empty(n)
    Gl = np.empty(n)
    for t in range(n):
        Gu[t] = eps - z[t]
        Gl[t] = eps + z[t]
    trace = np.empty(max_iter + 1 if record else 0)
    if record:
        trace[0] = 0.0
    it = 0
    gap = 0.0
    while True:
        # i: most violating member of I_up, as (index, sign)
        gmax = -np.inf
        i = -1
        si = 1.0
        for t in range(n):
            if au[t] < C and -Gu[t] >= gmax:
                gmax = -Gu[t]
                i = t
                si = 1.0
        for t in range(n):
            if al[t] > 0 and Gl[t] >= gmax:
                gmax = Gl[t]
                i = t
                si = -1.0
        gmax2 = -np.inf
        j = -1
        sj = 1.0
        obj_min = np.inf
        if i >= 0:
            Ki = K[i]
            kii = Ki[i]
            for t in range(n):
                quad = kii + K[t, t] - 2.0 * Ki[t]
                if quad <= 0:
                    quad = _TAU
                if au[t] > 0:
                    g = Gu[t]
                    if g >= gmax2:
                        gmax2 = g
                    diff = gmax + g
                    if diff > 0:
                        od = -(diff * diff) / quad
                        if od <= obj_min:
                            obj_min = od
                            j = t
                            sj = 1.0
                if al[t] < C:
                    g = -Gl[t]
                    if g >= gmax2:
                        gmax2 = g
                    diff = gmax + g
                    if diff > 0:
                        od = -(diff * diff) / quad
                        if od <= obj_min:
                            obj_min = od
                            j = t
                            sj = -1.0
        gap = gmax + gmax2
        if i < 0 or j < 0 or gap < tol or it >= max_iter:
            break

        ai = au[i] if si > 0 else al[i]
        aj = au[j] if sj > 0 else al[j]
        gi = Gu[i] if si > 0 else Gl[i]
        gj = Gu[j] if sj > 0 else Gl[j]
        old_ai = ai
        old_aj = aj
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = _TAU
        if si != sj:
            delta = (-gi - gj) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            delta = (gi - gj) / quad
            tot = ai + aj
            ai -= delta
            aj += delta
            if tot > C:
                if ai > C:
                    ai = C
                    aj = tot - C
                if aj > C:
                    aj = C
                    ai = tot - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = tot
                if ai < 0:
                    ai = 0.0
                    aj = tot
        if si > 0:
            au[i] = ai
        else:
            al[i] = ai
        if sj > 0:
            au[j] = aj
        else:
            al[j] = aj
        # beta changes by si*dai at row i and sj*daj at row j
        ci = si * (ai - old_ai)
        cj = sj * (aj - old_aj)
        Ki = K[i]
        Kj = K[j]
        for t in range(n):
            d = Ki[t] * ci + Kj[t] * cj
            Gu[t] += d
            Gl[t] -= d
        it += 1
        if record:
            obj = 0.0
            for t in range(n):
                obj += au[t] * (Gu[t] + eps - z[t]) + al[t] * (Gl[t] + eps + z[t])
            trace[it] = -0.5 * obj

    # bias from free variables, else the middle of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(n):
        yg = Gu[t]
        if au[t] >= C:
            lb = max(lb, yg)
        elif au[t] <= 0:
            ub = min(ub, yg)
        else:
            nfree += 1
            sfree += yg
        yg = -Gl[t]
        if al[t] >= C:
            ub = min(ub, yg)
        elif al[t] <= 0:
            lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    rho = sfree / nfree if nfree > 0 else 0.5 * (ub + lb)
    beta = au - al
    if record:
        trace = trace[: it + 1]
    return beta, -rho, it, max(gap, 0.0), trace


@dataclass(frozen=True)
class DualSolution:
    beta: np.ndarray
    bias: float
    iterations: int
    violation: float
    converged: bool
    trace: Optional[np.ndarray]


def solve_dual(K: np.ndarray, targets: np.ndarray, hp: SVRHyperparams,
               tol: float = TOLERANCE, max_iter: int = MAX_ITER,
               record: bool = False) -> DualSolution:
    """Run SMO on a precomputed kernel matrix."""
    K = np.ascontiguousarray(K, dtype=float)
    z = np.ascontiguousarray(targets, dtype=float)
    beta, bias, it, gap, trace = _smo(K, z, float(hp.tube), float(hp.penalty),
                                      float(tol), int(max_iter), bool(record))
    converged = gap < tol
    return DualSolution(beta, float(bias), int(it), float(gap), converged,
                        trace if record else None)


def _as_rows(inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def train(inputs, targets, hp: SVRHyperparams, tol: float = TOLERANCE,
          max_iter: int = MAX_ITER, record: bool = False) -> SVRModel:
    """Fit an epsilon-SVR. Hitting ``max_iter`` yields a usable model with
    ``converged=False``."""
    x = _as_rows(inputs)
    y = np.asarray(targets, dtype=float).ravel()
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    if x.shape[0] != y.size:
        raise ValueError(f"{x.shape[0]} input rows but {y.size} targets")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    K = kernel_from_sq(sq_distances(x, x), hp.kernel_width)
    sol = solve_dual(K, y, hp, tol, max_iter, record)
    if not sol.converged:
        logger.info("SVR stopped after %d pair updates, KKT gap %.3g", sol.iterations, sol.violation)
    keep = np.flatnonzero(sol.beta != 0.0)
    return SVRModel(x[keep], sol.beta[keep], sol.bias, hp, x.shape[1], keep,
                    sol.converged, sol.iterations, sol.violation, sol.trace)


def predict_many(model: SVRModel, inputs) -> np.ndarray:
    x = _as_rows(inputs)
    if x.shape[1] != model.n_features:
        raise ValueError(f"input has {x.shape[1]} features, model expects {model.n_features}")
    if model.dual_coeffs.size == 0:
        return np.full(x.shape[0], model.bias)
    K = kernel_from_sq(sq_distances(x, model.support_inputs), model.hyperparams.kernel_width)
    return K @ model.dual_coeffs + model.bias


def predict(model: SVRModel, x) -> float:
    """f(x) = sum_i beta_i K(x_i, x) + b for a single input row."""
    row = np.asarray(x, dtype=float).ravel()
    if row.size != model.n_features:
        raise ValueError(f"input has {row.size} features, model expects {model.n_features}")
    return float(predict_many(model, row[None, :])[0])


def full_dual_coeffs(model: SVRModel, n_samples: int) -> np.ndarray:
    beta = np.zeros(n_samples)
    beta[model.support_indices] = model.dual_coeffs
    return beta


def kkt_violations(beta: np.ndarray, residuals: np.ndarray, C: float, eps: float) -> np.ndarray:
    """Per-sample distance from the KKT conditions, in target units.

    ``residuals`` are y - f(x). Free weights need |r| = eps on the matching
    side, bounded weights need |r| >= eps, zero weights need |r| <= eps.
    """
    r = residuals
    at_zero = np.abs(beta) <= 1e-12 * C
    at_upper = beta >= C * (1 - 1e-12)
    at_lower = beta <= -C * (1 - 1e-12)
    free_pos = ~at_zero & ~at_upper & (beta > 0)
    free_neg = ~at_zero & ~at_lower & (beta < 0)
    v = np.zeros_like(r)
    v[at_zero] = np.maximum(0.0, np.abs(r[at_zero]) - eps)
    v[free_pos] = np.abs(r[free_pos] - eps)
    v[free_neg] = np.abs(r[free_neg] + eps)
    v[at_upper] = np.maximum(0.0, eps - r[at_upper])
    v[at_lower] = np.maximum(0.0, r[at_lower] + eps)
    return v


def kkt_report(model: SVRModel, inputs, targets) -> float:
    """Largest KKT violation of ``model`` over its training data."""
    x = _as_rows(inputs)
    y = np.asarray(targets, dtype=float).ravel()
    beta = full_dual_coeffs(model, y.size)
    r = y - predict_many(model, x)
    hp = model.hyperparams
    return float(np.max(kkt_violations(beta, r, hp.penalty, hp.tube), initial=0.0))


def dual_objective(beta: np.ndarray, K: np.ndarray, targets: np.ndarray, eps: float) -> float:
    """Dual value -1/2 b'Kb - eps*sum|b| + y'b (|b| = a + a* at the optimum)."""
    return float(-0.5 * beta @ K @ beta - eps * np.abs(beta).sum() + targets @ beta)
