"""Command line front end: ``curvlab run | list-manifolds | verify-all``.

Exit codes: 0 when every record passes or is measured, 1 when any record
fails, 2 for an unreadable or invalid config.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from .config import parse_config
from .errors import ConfigError
from .models import REGISTRY

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _apply_thread_cap():
    # Cap BLAS pools as well as our own workers; must happen before heavy imports.
    cap = os.environ.get("CURVLAB_THREADS")
    if cap and cap.isdigit() and int(cap) > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.version_option(package_name="curvlab")
def main():
    """Curvature positivity and Bochner-identity laboratory."""
    _apply_thread_cap()


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
              help="Experiment config file.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here.")
@click.option("--csv-dir", type=click.Path(file_okay=False), default=None,
              help="Also write one CSV table per scan into this directory.")
def run(config_path, seed, out, csv_dir):
    """Run the checks selected in a config file."""
    try:
        text = Path(config_path).read_text()
    except OSError as exc:
        click.echo(f"config error: cannot read {config_path}: {exc.strerror}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        for e in exc.errors:
            click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    if seed is not None:
        if seed < 0:
            click.echo("config error: --seed must be >= 0", err=True)
            sys.exit(EXIT_CONFIG)
        cfg = cfg.with_seed(seed)

    from .runner import run as run_config

    report = run_config(cfg)
    _emit(report.render(), out)
    if csv_dir:
        report.write_tables(csv_dir)
    sys.exit(report.exit_code)


@main.command("list-manifolds")
def list_manifolds():
    """Built-in manifold models."""
    width = max(len(k) for k in REGISTRY)
    for name, (_, desc) in REGISTRY.items():
        click.echo(f"{name:<{width}}  {desc}")


@main.command("verify-all")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here.")
@click.option("--quiet", is_flag=True, help="Suppress per-criterion progress on stderr.")
def verify_all_cmd(seed, out, quiet):
    """Run the built-in acceptance suite."""
    from .verify import verify_all

    def progress(rec):
        if not quiet:
            click.echo(f"{rec.name}: {rec.status}", err=True)

    report = verify_all(seed, progress)
    _emit(report.render(), out)
    sys.exit(report.exit_code)


if __name__ == "__main__":  # pragma: no cover
    main()
