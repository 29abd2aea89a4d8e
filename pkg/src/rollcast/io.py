"""CSV series files and the plain-text model artifact."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .decomp import IMFDecomposition, SiftConfig
from .pipeline import (ComponentModel, DecompositionSettings, HybridModel, NormalizationParams,
                       WindowSpec, canonical_method, uses_ceemdan)
from .svr import SVRHyperparams, SVRModel
from .wavesim import TimeSeries

MODEL_MAGIC = "rollcast-model"
MODEL_VERSION = 1


class ParseError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------- CSV

def write_table(path: str | Path, header: Sequence[str], columns: Sequence[Iterable[float]]) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_series(path: str | Path, series: TimeSeries) -> None:
    write_table(path, ("t", "value"), (series.times, series.values))


def read_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header plus float matrix; malformed rows raise ParseError naming the line."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header line") from None
        if not header or any(not h for h in header):
            raise ParseError(f"{path}:1: malformed header")
        try:
            float(header[0])
        except ValueError:
            pass
        else:
            raise ParseError(f"{path}:1: missing header line")
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
            if not all(np.isfinite(vals)):
                raise ParseError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def read_series(path: str | Path, column: str | None = None, default_dt: float = 0.1) -> TimeSeries:
    """Read a ``t,value`` (or ``t,actual,...``) file. ``dt`` comes from the t column."""
    header, data = read_table(path)
    if column is None:
        column = next((c for c in ("value", "actual") if c in header), header[-1])
    if column not in header:
        raise ParseError(f"{path}: no column {column!r} in header {header}")
    values = data[:, header.index(column)]
    dt = default_dt
    if header[0] == "t" and data.shape[0] > 1:
        dt = float(data[1, 0] - data[0, 0])
        if not dt > 0:
            raise ParseError(f"{path}:3: t column must increase")
    return TimeSeries(values, dt)


def write_predictions(path: str | Path, times, actual, predicted) -> None:
    write_table(path, ("t", "actual", "predicted"), (times, actual, predicted))


def read_predictions(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    header, data = read_table(path)
    missing = {"t", "actual", "predicted"} - set(header)
    if missing:
        raise ParseError(f"{path}: missing column(s) {sorted(missing)}")
    col = header.index
    return data[:, col("t")], data[:, col("actual")], data[:, col("predicted")]


# ---------------------------------------------------------------- model artifact

def _kv(out: TextIO, key: str, value) -> None:
    if isinstance(value, bool):
        value = "true" if value else "false"
    elif isinstance(value, float):
        value = fmt(value)
    out.write(f"{key} = {value}\n")


def write_model(path: str | Path, model: HybridModel) -> None:
    d = model.decomposition
    s = model.settings
    with open(path, "w", encoding="utf-8") as out:
        out.write(f"{MODEL_MAGIC} {MODEL_VERSION}\n")
        _kv(out, "method", model.method)
        _kv(out, "seed", model.seed)
        _kv(out, "embedding", model.window.embedding)
        _kv(out, "horizon", model.window.horizon)
        _kv(out, "train_count", model.train_count)
        _kv(out, "tube", float(model.tube))
        _kv(out, "folds", model.folds)
        _kv(out, "sd_threshold", float(s.sift.sd_threshold))
        _kv(out, "max_sift_iterations", s.sift.max_sift_iterations)
        _kv(out, "boundary_extrema", s.sift.boundary_extrema)
        _kv(out, "noise_scale", float(s.noise_scale))
        _kv(out, "ensemble_size", s.ensemble_size)
        _kv(out, "dt", float(d.dt))
        _kv(out, "samples", d.residual.size)
        _kv(out, "components", model.n_components)
        out.write("[decomposition]\n")
        for row in d.components():
            out.write(" ".join(fmt(v) for v in row) + "\n")
        for k, rec in enumerate(model.components):
            out.write(f"[component {k}]\n")
            hp = rec.hyperparams
            if rec.is_constant:
                _kv(out, "kind", "constant")
                _kv(out, "constant", float(rec.constant))
            else:
                _kv(out, "kind", "svr")
                _kv(out, "norm_min", float(rec.norm.min))
                _kv(out, "norm_max", float(rec.norm.max))
            _kv(out, "penalty", float(hp.penalty))
            _kv(out, "kernel_width", float(hp.kernel_width))
            _kv(out, "tube", float(hp.tube))
            _kv(out, "tuned", rec.tuned)
            if rec.cv_fitness is not None:
                _kv(out, "cv_fitness", float(rec.cv_fitness))
            if rec.is_constant:
                continue
            m = rec.svr_model
            _kv(out, "bias", float(m.bias))
            _kv(out, "n_features", m.n_features)
            _kv(out, "converged", m.converged)
            _kv(out, "iterations", m.iterations)
            _kv(out, "violation", float(m.violation))
            _kv(out, "supports", m.dual_coeffs.size)
            out.write("# index dual_coeff inputs...\n")
            for idx, beta, row in zip(m.support_indices, m.dual_coeffs, m.support_inputs):
                out.write(f"{idx} {fmt(beta)} " + " ".join(fmt(v) for v in row) + "\n")
        out.write("end\n")


class _Lines:
    def __init__(self, path: Path):
        self.path = path
        self.lines = path.read_text(encoding="utf-8").splitlines()
        self.pos = 0

    def next(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line and not line.startswith("#"):
                return line
        raise ModelFormatError(f"{self.path}: unexpected end of file")

    def error(self, msg: str) -> ModelFormatError:
        return ModelFormatError(f"{self.path}:{self.pos}: {msg}")

    def kv(self, key: str) -> str:
        line = self.next()
        k, sep, v = line.partition("=")
        if not sep or k.strip() != key:
            raise self.error(f"expected '{key} = ...', got {line!r}")
        return v.strip()

    def peek_key(self) -> str:
        save = self.pos
        line = self.next()
        self.pos = save
        return line.partition("=")[0].strip()


def _bool(s: str) -> bool:
    if s not in ("true", "false"):
        raise ModelFormatError(f"expected true/false, got {s!r}")
    return s == "true"


def read_model(path: str | Path) -> HybridModel:
    """Load a model written by :func:`write_model`; other versions are refused."""
    src = _Lines(Path(path))
    head = src.next().split()
    if len(head) != 2 or head[0] != MODEL_MAGIC:
        raise src.error(f"not a {MODEL_MAGIC} file")
    if head[1] != str(MODEL_VERSION):
        raise src.error(f"model format version {head[1]} is not supported "
                        f"(this build reads version {MODEL_VERSION})")
    try:
        method = canonical_method(src.kv("method"))
        seed = int(src.kv("seed"))
        window = WindowSpec(int(src.kv("embedding")), int(src.kv("horizon")))
        train_count = int(src.kv("train_count"))
        tube = float(src.kv("tube"))
        folds = int(src.kv("folds"))
        sift = SiftConfig(float(src.kv("sd_threshold")), int(src.kv("max_sift_iterations")),
                          int(src.kv("boundary_extrema")))
        settings = DecompositionSettings(sift, float(src.kv("noise_scale")),
                                         int(src.kv("ensemble_size")))
        dt = float(src.kv("dt"))
        samples = int(src.kv("samples"))
        n_comp = int(src.kv("components"))
        if src.next() != "[decomposition]":
            raise src.error("expected [decomposition]")
        comps = np.array([[float(v) for v in src.next().split()] for _ in range(n_comp)])
        if comps.shape != (n_comp, samples):
            raise src.error(f"decomposition must be {n_comp} rows of {samples} values")
        records = []
        for k in range(n_comp):
            if src.next() != f"[component {k}]":
                raise src.error(f"expected [component {k}]")
            kind = src.kv("kind")
            if kind == "constant":
                constant = float(src.kv("constant"))
                norm = None
            elif kind == "svr":
                norm = NormalizationParams(float(src.kv("norm_min")), float(src.kv("norm_max")))
            else:
                raise src.error(f"unknown component kind {kind!r}")
            hp = SVRHyperparams(float(src.kv("penalty")), float(src.kv("kernel_width")),
                                float(src.kv("tube")))
            tuned = _bool(src.kv("tuned"))
            cv = float(src.kv("cv_fitness")) if src.peek_key() == "cv_fitness" else None
            if kind == "constant":
                records.append(ComponentModel(None, None, hp, tuned, constant, cv))
                continue
            bias = float(src.kv("bias"))
            n_features = int(src.kv("n_features"))
            if n_features != window.embedding:
                raise src.error(f"n_features {n_features} != embedding {window.embedding}")
            converged = _bool(src.kv("converged"))
            iterations = int(src.kv("iterations"))
            violation = float(src.kv("violation"))
            n_sv = int(src.kv("supports"))
            idx = np.empty(n_sv, dtype=int)
            beta = np.empty(n_sv)
            rows = np.empty((n_sv, n_features))
            for r in range(n_sv):
                parts = src.next().split()
                if len(parts) != n_features + 2:
                    raise src.error(f"support row needs {n_features + 2} fields")
                idx[r] = int(parts[0])
                beta[r] = float(parts[1])
                rows[r] = [float(v) for v in parts[2:]]
            model = SVRModel(rows, beta, bias, hp, n_features, idx, converged, iterations,
                             violation)
            records.append(ComponentModel(norm, model, hp, tuned, None, cv))
        if src.next() != "end":
            raise src.error("expected end marker")
    except ModelFormatError:
        raise
    except ValueError as exc:
        raise src.error(str(exc)) from exc
    decomposition = IMFDecomposition(comps[:-1], comps[-1], dt,
                                     "ceemdan" if uses_ceemdan(method) else "emd")
    return HybridModel(method, window, train_count, records, decomposition, settings, seed,
                       tube, folds)


def write_decomposition(out_dir: str | Path, d: IMFDecomposition) -> list[Path]:
    """One ``t,value`` CSV per mode (``mode_01.csv`` ...) plus ``residual.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, mode in enumerate(d.modes, 1):
        p = out_dir / f"mode_{k:02d}.csv"
        write_series(p, TimeSeries(mode, d.dt))
        paths.append(p)
    p = out_dir / "residual.csv"
    write_series(p, TimeSeries(d.residual, d.dt))
    paths.append(p)
    return paths
