"""Command-line interface: ``rollcast <command> [options]``."""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import config as cfgmod
from . import io, pipeline, wavesim
from .config import ConfigError, RunConfig

log = logging.getLogger("rollcast")


def _fail(msg: str) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(1)


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, io.ParseError, io.ModelFormatError) as exc:
            _fail(str(exc))
        except OSError as exc:
            _fail(f"I/O error: {exc}")
        except ValueError as exc:
            _fail(str(exc))
    return wrapper


def _resolve(config_path, sets, seed, method) -> RunConfig:
    cfg = cfgmod.load(config_path) if config_path else RunConfig()
    overrides = {}
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    if seed is not None:
        overrides["seed"] = seed
    if method is not None:
        overrides["method"] = method
    return cfg.with_overrides(overrides)


def common(with_method: bool = False):
    def deco(fn):
        opts = [
            click.option("--config", "config_path", type=click.Path(dir_okay=False),
                         help="key = value config file."),
            click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
                         help="Override one config key; repeatable."),
            click.option("--seed", type=int, default=None, help="Master seed."),
        ]
        if with_method:
            opts.append(click.option(
                "--method", default=None,
                type=click.Choice(["ceemdan-pso-svm", "emd-pso-svm", "ceemdan-svm"]),
                help="Hybrid model variant."))
        for opt in reversed(opts):
            fn = opt(fn)
        return fn
    return deco


def data_option(fn):
    fn = click.option("--simulate", is_flag=True,
                      help="Use the simulated roll series from the config (default when "
                           "--data is absent).")(fn)
    return click.option("--data", "data_path", type=click.Path(dir_okay=False),
                        help="Input series CSV (t,value).")(fn)


def _series(cfg: RunConfig, data_path, simulate: bool) -> wavesim.TimeSeries:
    if data_path and simulate:
        raise ConfigError("give either --data or --simulate, not both")
    if data_path:
        return io.read_series(data_path, default_dt=cfg.dt)
    return wavesim.simulate_roll(cfg.sea(), cfg.vessel(), cfg.samples, cfg.dt, cfg.seed)


@click.group()
@click.option("-v", "--verbose", count=True, help="More logging on stderr.")
def main(verbose):
    """Simulate vessel roll and forecast it with decomposition + SVR hybrids."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


@main.command("show-config")
@common(with_method=True)
@_guard
def show_config(config_path, sets, seed, method):
    """Print the resolved configuration as key = value lines."""
    click.echo(_resolve(config_path, sets, seed, method).to_text(), nl=False)


@main.command()
@common()
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_guard
def simulate(config_path, sets, seed, out):
    """Write the simulated roll series as t,value CSV."""
    cfg = _resolve(config_path, sets, seed, None)
    series = wavesim.simulate_roll(cfg.sea(), cfg.vessel(), cfg.samples, cfg.dt, cfg.seed)
    io.write_series(out, series)


@main.command()
@common(with_method=True)
@data_option
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Directory for mode_XX.csv and residual.csv.")
@_guard
def decompose(config_path, sets, seed, method, data_path, simulate, out):
    """Decompose a series (EMD for emd-pso-svm, otherwise CEEMDAN)."""
    cfg = _resolve(config_path, sets, seed, method)
    series = _series(cfg, data_path, simulate)
    d = pipeline.decompose(series, cfg.method, cfg.settings(), cfg.seed)
    paths = io.write_decomposition(out, d)
    click.echo(f"{d.n_modes} modes + residual -> {Path(out)} ({len(paths)} files)")


def _train(cfg: RunConfig, series) -> pipeline.HybridModel:
    return pipeline.train_hybrid(series, cfg.method, cfg.window(), cfg.swarm(), cfg.settings(),
                                 cfg.train_count, cfg.seed, cfg.tube, cfg.folds, cfg.baseline(),
                                 tol=cfg.svr_tolerance, max_iter=cfg.svr_max_iter)


@main.command()
@common(with_method=True)
@data_option
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Model file.")
@_guard
def train(config_path, sets, seed, method, data_path, simulate, out):
    """Train a hybrid model and save it as a text artifact."""
    cfg = _resolve(config_path, sets, seed, method)
    model = _train(cfg, _series(cfg, data_path, simulate))
    io.write_model(out, model)
    click.echo(f"{model.method}: {model.n_components} components -> {out}")


@main.command()
@common()
@data_option
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_guard
def predict(config_path, sets, seed, data_path, simulate, model_path, out):
    """One-step forecasts over the model's test range, as t,actual,predicted."""
    cfg = _resolve(config_path, sets, seed, None)
    model = io.read_model(model_path)
    series = _series(cfg, data_path, simulate)
    if len(series) <= model.train_count:
        raise ValueError(f"series has {len(series)} samples but the model was trained on the "
                         f"first {model.train_count}; nothing left to predict")
    pred = pipeline.forecast(model, series)
    io.write_predictions(out, series.times[model.train_count:],
                         series.values[model.train_count:], pred.values)


def _metrics_line(name: str, r: pipeline.MetricsReport) -> str:
    return ",".join([name] + [io.fmt(v) for v in r.as_row()])


METRIC_HEADER = "method,mae,mape,mse,rmse,smape"


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False),
              help="t,actual,predicted CSV.")
@click.option("--out", type=click.Path(dir_okay=False), help="Also write the metrics CSV here.")
@_guard
def evaluate(data_path, out):
    """Print MAE, MAPE, MSE, RMSE and SMAPE of a prediction file."""
    _, actual, predicted = io.read_predictions(data_path)
    r = pipeline.metrics(actual, predicted)
    for name, v in zip(("mae", "mape", "mse", "rmse", "smape"), r.as_row()):
        click.echo(f"{name} = {io.fmt(v)}")
    if r.mape_excluded or r.smape_excluded:
        click.echo(f"excluded samples: mape {r.mape_excluded}, smape {r.smape_excluded}",
                   err=True)
    if out:
        Path(out).write_text(METRIC_HEADER + "\n" + _metrics_line(Path(data_path).stem, r) + "\n",
                             encoding="utf-8")


@main.command()
@common()
@data_option
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Metric table CSV; prediction files are written beside it.")
@_guard
def compare(config_path, sets, seed, data_path, simulate, out):
    """Train and score all three hybrids on the same split and seed."""
    cfg = _resolve(config_path, sets, seed, None)
    series = _series(cfg, data_path, simulate)
    result = pipeline.compare(series, cfg.window(), cfg.swarm(), cfg.settings(), cfg.seed,
                              cfg.train_count, cfg.tube, cfg.folds, cfg.baseline(),
                              tol=cfg.svr_tolerance, max_iter=cfg.svr_max_iter)
    out = Path(out)
    lines = [METRIC_HEADER]
    for name, run in result.runs.items():
        lines.append(_metrics_line(name, run.report))
        pred_path = out.with_name(f"{out.stem}_{name}.csv")
        io.write_predictions(pred_path, run.times, run.actual, run.predicted)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        click.echo(line)
    for other, gain in result.improvements().items():
        click.echo(f"MAE improvement of {pipeline.CEEMDAN_PSO_SVM} over {other}: "
                   f"{100 * gain:.2f}%")


if __name__ == "__main__":
    main()
