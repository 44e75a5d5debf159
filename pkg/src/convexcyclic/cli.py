"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 epsilon oracle miss.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import ConfigError, ConvexCyclicError, InvalidArgument, NumericalError, OracleMiss
from .experiment import PRESET_NAMES, ExperimentConfig, emit_report, run_experiment

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ORACLE_MISS = 4


def _load_json(value: str, name: str):
    """Inline JSON, or the contents of a JSON file when ``value`` names one."""
    path = Path(value)
    try:
        text = path.read_text() if path.is_file() else value
    except OSError as exc:
        raise ConfigError(name, str(exc)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(name, f"not valid JSON: {exc}") from exc


def common_options(f):
    options = [
        click.option("--spec", help="Operator spec as inline JSON or a JSON file."),
        click.option("--preset", help=f"Named operator preset: {', '.join(PRESET_NAMES)}."),
        click.option("--seed-vector", help="Seed vector x as JSON, entries numbers or [re, im]."),
        click.option("--N", "N", type=int, help="Orbit horizon."),
        click.option("--tol", type=float, help="Distance tolerance."),
        click.option("--targets", help="JSON list of target vectors (inline or file)."),
        click.option("--rng-seed", type=int, default=0, show_default=True),
        click.option("--out", default="-", show_default=True, help="Output path; '-' for stdout."),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def _run(command: str, *, spec, preset, seed_vector, rng_seed, out, fmt, **params):
    try:
        operator = _load_json(spec, "spec") if spec else None
        seed = _load_json(seed_vector, "seed_vector") if seed_vector else None
        if params.get("targets") is not None:
            params["targets"] = _load_json(params["targets"], "targets")
        if params.get("functional") is not None:
            params["functional"] = _load_json(params["functional"], "functional")
        params = {k: v for k, v in params.items() if v is not None}
        config = ExperimentConfig(command, operator, seed, params, preset, rng_seed)
        report = run_experiment(config)
        text = emit_report(report, fmt, out)
    except (ConfigError, InvalidArgument) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OracleMiss as exc:
        click.echo(f"oracle miss: {exc}", err=True)
        sys.exit(EXIT_ORACLE_MISS)
    except (NumericalError, ConvexCyclicError) as exc:
        click.echo(f"numerical error in {command}: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    if out in (None, "-"):
        click.echo(text, nl=False)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Numerical experiments on convex-cyclic operators."""


@main.command()
@common_options
@click.option("--field", type=click.Choice(["complex", "real"]), default="complex", show_default=True)
def classify(**kw):
    """Run every gate and spectral criterion on the operator."""
    _run("classify", **kw)


@main.command()
@common_options
@click.option("--functional", required=True, help="Functional representative f as a JSON vector.")
def probe(**kw):
    """Hahn-Banach probe: trace Re <T^n x, f> for n = 0..N."""
    _run("probe", **kw)


@main.command()
@common_options
@click.option("--family", help="Restrict to a family: cesaro, pkc:c or monomial:N.")
@click.option("--max-iter", type=int, help="Frank-Wolfe iteration cap per target.")
@click.option("--workers", type=int, help="Thread pool size for multiple targets.")
def approx(**kw):
    """Distance from each target to the convex hull of x, Tx, ..., T^N x."""
    _run("approx", **kw)


@main.command()
@common_options
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--horizon", type=int, default=256, show_default=True)
@click.option("--mock", is_flag=True, help="Use the mock epsilon oracle instead of the orbit.")
@click.option("--dim", type=int, help="Target dimension for --mock runs without an operator.")
def epsilon(**kw):
    """Epsilon-greedy average of orbit points approximating a target."""
    _run("epsilon", **kw)


@main.command()
@common_options
@click.option("--m", "m", type=int, default=1, show_default=True)
@click.option("--p", "p", type=float, default=2.0, show_default=True)
@click.option("--samples", type=int, default=100, show_default=True)
def defect(**kw):
    """(m, p)-isometry defect at the seed, on samples, and the seminorm estimate."""
    _run("defect", **kw)


@main.command()
@common_options
@click.option("--poly", help="Also apply a convex polynomial: cesaro:n, pkc:k:c or a0,a1,...")
def orbit(**kw):
    """Print x, Tx, ..., T^N x."""
    _run("orbit", **kw)


@main.command()
@click.argument("name")
@click.option("--rng-seed", type=int, default=0, show_default=True)
@click.option("--out", default="-", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
def preset(name, rng_seed, out, fmt):
    """Run the canned analysis for a named preset."""
    _run("preset", spec=None, preset=name, seed_vector=None, rng_seed=rng_seed, out=out, fmt=fmt)


if __name__ == "__main__":
    main()
