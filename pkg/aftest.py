#!/usr/bin/env python3
"""
Activation function lab CLI - compare ReLU, Leaky ReLU and ALReLU
Usage:
    python aftest.py run configs/blobs.json
    python aftest.py gradcheck --seed 0 --trials 1000
    python aftest.py stress configs/stress.json
"""

import sys

import click
from colorama import init
from dotenv import load_dotenv

from afnet.errors import AfnetError, ConfigError
from afnet.experiment import load_config, run_experiment, run_stress
from afnet.gradcheck import check_activations, run_model_checks
from afnet.reporter import (
    print_cv_report,
    print_gradcheck_report,
    print_stress_report,
    write_run_outputs,
    write_stress_outputs,
)
from config.settings import DEFAULT_SEED, GRADCHECK_TRIALS

load_dotenv()
init(autoreset=True)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _fail(message: str, code: int):
    click.echo(click.style(f"✗ Error: {message}", fg="red"), err=True)
    sys.exit(code)


def _load(config_path):
    try:
        return load_config(config_path)
    except ConfigError as e:
        _fail(f"invalid config {config_path}: {e}", EXIT_USAGE)


@click.group()
@click.option("--quiet", is_flag=True, help="Suppress progress output")
@click.pass_context
def cli(ctx, quiet):
    """Activation function comparison and gradient checks"""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = not quiet


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", type=click.Path(file_okay=False), help="Where summary.json and table.csv go")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Parallel fold runs")
@click.pass_context
def run(ctx, config_path, output_dir, workers):
    """Cross-validate every configured activation and print the comparison table"""
    config = _load(config_path)
    verbose = ctx.obj["verbose"]
    out = config.resolve_output_dir(output_dir)

    try:
        summary = run_experiment(config, workers=workers, verbose=verbose)
        paths = write_run_outputs(summary, out)
    except ConfigError as e:
        _fail(str(e), EXIT_USAGE)
    except (AfnetError, OSError) as e:
        _fail(str(e), EXIT_FAILURE)

    print_cv_report(summary)
    if verbose:
        for path in paths.values():
            click.echo(f"📄 Report: {path}")


@cli.command()
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--trials", type=int, default=GRADCHECK_TRIALS, show_default=True, help="Random points per activation")
@click.pass_context
def gradcheck(ctx, seed, trials):
    """Finite-difference check of activation derivatives and model backprop"""
    if trials < 1:
        _fail("nothing to check: --trials must be at least 1", EXIT_USAGE)

    if ctx.obj["verbose"]:
        click.echo("🔍 Checking activation derivatives and tiny models...")
    activation_checks = check_activations(trials, seed)
    model_checks = run_model_checks(seed)
    print_gradcheck_report(activation_checks, model_checks)

    failed = [c.activation for c in activation_checks if not c.passed]
    failed += [c.name for c in model_checks if not c.passed]
    if failed:
        _fail(f"gradient check failed for: {', '.join(failed)}", EXIT_FAILURE)
    click.echo(click.style("✓ All gradients within tolerance", fg="green"))


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", type=click.Path(file_okay=False), help="Where stress.csv goes")
@click.pass_context
def stress(ctx, config_path, output_dir):
    """Count dead units per epoch from a hostile (large negative bias) start"""
    config = _load(config_path)
    verbose = ctx.obj["verbose"]
    out = config.resolve_output_dir(output_dir)

    try:
        result = run_stress(config, verbose=verbose)
        path = write_stress_outputs(result, out)
    except ConfigError as e:
        _fail(str(e), EXIT_USAGE)
    except (AfnetError, OSError) as e:
        _fail(str(e), EXIT_FAILURE)

    print_stress_report(result)
    if verbose:
        click.echo(f"📄 Report: {path}")


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
