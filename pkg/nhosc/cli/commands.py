"""CLI commands for nhosc."""

import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

import typer
from pydantic import ValidationError

from nhosc.cli.tasks import run_scenario
from nhosc.core.observables import state_distance
from nhosc.core.parameters import ParameterSet, pt_classify
from nhosc.core.serialization import dumps, loads
from nhosc.formatters.reports import read_wavefunction
from nhosc.shared.config import get_config
from nhosc.shared.exceptions import ConfigError, NhoscError
from nhosc.shared.models import Scenario

app = typer.Typer(help="nhosc - exact and numerical propagation of non-Hermitian oscillators")

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_TASK_FAILURE = 1
EXIT_CONFIG_ERROR = 2

LOG_FORMAT = "[%(name)s] %(levelname)s %(message)s"


def configure_logging(verbose: bool = False) -> None:
    """Configure the root logger once; --verbose forces DEBUG."""
    level = logging.DEBUG if verbose else getattr(logging, get_config().log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level")):
    """Configure logging for every command."""
    configure_logging(verbose)


def load_scenario(path: Path) -> Scenario:
    """
    Read and validate a scenario file.

    Raises:
        ConfigError: If the file is missing, not JSON, or violates the schema
    """
    try:
        raw = loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    try:
        return Scenario.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e
    except NhoscError as e:
        raise ConfigError(f"{path}: {e}") from e


def _run_worker(path: str, out_dir: str, verbose: bool) -> Tuple[str, List[str], List[str]]:
    """Process-pool entry point: run one scenario file, return (name, failures, artifacts)."""
    configure_logging(verbose)
    scenario = load_scenario(Path(path))
    outcome = run_scenario(scenario, Path(out_dir) / scenario.name)
    return outcome.name, [str(f) for f in outcome.failures], [str(a) for a in outcome.artifacts]


@app.command()
def run(
    scenarios: List[Path] = typer.Argument(..., help="Scenario JSON files"),
    out: Path = typer.Option(Path("results"), "--out", "-o", help="Output directory"),
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Scenario files run concurrently"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level"),
):
    """Run scenario files and write their reports; exit 0 pass, 1 tolerance failure, 2 config error."""
    if verbose:
        configure_logging(True)

    try:
        loaded = [load_scenario(path) for path in scenarios]
    except ConfigError as e:
        typer.echo(f"ConfigError: {e}", err=True)
        raise typer.Exit(EXIT_CONFIG_ERROR)

    names = [s.name for s in loaded]
    if len(set(names)) != len(names):
        typer.echo(f"ConfigError: scenario names must be unique, got {names}", err=True)
        raise typer.Exit(EXIT_CONFIG_ERROR)

    results: List[Tuple[str, List[str], List[str]]] = []
    if jobs > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_worker, str(p), str(out), verbose) for p in scenarios]
            results = [f.result() for f in futures]
    else:
        for scenario in loaded:
            outcome = run_scenario(scenario, out / scenario.name)
            results.append((outcome.name, [str(f) for f in outcome.failures], [str(a) for a in outcome.artifacts]))

    failed = False
    for name, failures, artifacts in results:
        if failures:
            failed = True
            typer.echo(f"✗ {name}: {len(failures)} task failure(s)")
            for failure in failures:
                typer.echo(f"  TaskFailure: {failure}", err=True)
        else:
            typer.echo(f"✓ {name}: {len(artifacts)} artifacts in {out / name}")

    raise typer.Exit(EXIT_TASK_FAILURE if failed else EXIT_PASS)


@app.command()
def compare(
    first: Path = typer.Argument(..., help="Wavefunction dump (CSV)"),
    reference: Path = typer.Argument(..., help="Reference dump on the same grid and time"),
):
    """Print L2, L∞ and phase-aligned distances between two wavefunction dumps."""
    try:
        a, meta_a = read_wavefunction(first)
        b, meta_b = read_wavefunction(reference)
        if a.t != b.t:
            logger.warning("dumps are at different times: %s vs %s", a.t, b.t)
        distance = state_distance(a, b)
    except (OSError, ValueError, NhoscError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(EXIT_CONFIG_ERROR)
    typer.echo(dumps(distance.as_dict(), indent=True))


@app.command("pt-check")
def pt_check(
    params_file: Path = typer.Argument(..., help="ParameterSet JSON file"),
    window: float = typer.Option(..., "--window", "-T", help="Half-width T of the window [-T, T]"),
    samples: Optional[int] = typer.Option(None, "--samples", "-n", help="Sample times in (0, T]"),
):
    """Classify the PT symmetry of a parameter profile."""
    try:
        params = ParameterSet.model_validate(loads(params_file.read_text()))
        result = pt_classify(params, window, samples)
    except (OSError, ValueError, NhoscError) as e:
        typer.echo(f"ConfigError: {e}", err=True)
        raise typer.Exit(EXIT_CONFIG_ERROR)
    typer.echo(dumps({
        "verdict": result.verdict.value,
        "evidence": result.evidence,
        "offender": result.offender,
        "window": window,
    }, indent=True))


if __name__ == "__main__":
    app()
