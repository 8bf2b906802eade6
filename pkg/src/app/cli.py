"""Command-line interface for prolate spectrum reproduction."""

import math
from pathlib import Path
from typing import List, Optional, Tuple

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from .adapters.storage import LocalStorageAdapter
from .core.config import settings
from .core.reproduction import query as run_query
from .core.reproduction import run_figure, run_table, sweep as run_sweep
from .core.validation import SUITES, validate_all
from .shared.errors import DomainError, ValidityError
from .shared.logging import setup_logging
from .shared.models import LambdaMethod, QueryRecord, ReproReport, TableId, ValidationSummary

app = typer.Typer(
    name="prolate-spectrum",
    help="Eigenvalues of the time-frequency limiting operator: oracles, approximations and table reproduction"
)
# Summaries go to stderr; stdout carries CSV/JSON only
console = Console(stderr=True)
storage = LocalStorageAdapter()

EXIT_FAILED = 1
EXIT_DOMAIN = 2
FIGURE_DEFAULT_MULTIPLES = (10, 20, 30)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        typer.echo(text, nl=not text.endswith("\n"))
    else:
        storage.save_text(text, out)
        console.print(f"[green]Wrote {out}[/green]")


def _spinner(description: str) -> Progress:
    progress = Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
        transient=True
    )
    progress.add_task(description, total=None)
    return progress


def _domain_exit(e: Exception) -> None:
    console.print(f"[red]Error: {e}[/red]")
    raise typer.Exit(EXIT_DOMAIN)


def _parse_tolerances(values: List[str]) -> dict:
    tolerances = {}
    for item in values:
        column, sep, value = item.partition("=")
        try:
            if not sep:
                raise ValueError(item)
            tolerances[column.strip()] = float(value)
        except ValueError:
            console.print(f"[red]Tolerance must look like column=value, got '{item}'[/red]")
            raise typer.Exit(EXIT_FAILED)
    return tolerances


@app.command()
def table(
    number: int = typer.Argument(..., min=1, max=3, help="Table number (1, 2 or 3)"),
    no_oracle: bool = typer.Option(False, "--no-oracle", help="Skip the oracle columns"),
    tolerance: List[str] = typer.Option([], "--tolerance", "-t", help="Override a tolerance, e.g. mu=2e-3"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write output to this file"),
    json_output: bool = typer.Option(False, "--json", help="JSON instead of CSV"),
    digits: int = typer.Option(settings.digits, "--digits", min=1, max=17, help="Significant digits"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output")
):
    """Recompute a published table and compare it with the reference values."""

    setup_logging(level="DEBUG" if verbose else settings.log_level)

    table_id = TableId(f"table{number}")
    tolerances = _parse_tolerances(tolerance)
    console.print(f"[bold blue]Reproducing {table_id.value}[/bold blue]")

    try:
        with _spinner(f"Computing {table_id.value}..."):
            report = run_table(table_id, with_oracle=not no_oracle, tolerances=tolerances, storage=storage)
    except (DomainError, ValidityError) as e:
        _domain_exit(e)

    _emit(storage.render_json(report) if json_output else storage.render_csv(report, digits), out)
    _display_report(report)
    if not report.passed:
        raise typer.Exit(EXIT_FAILED)


@app.command()
def figure(
    number: int = typer.Argument(..., min=1, max=2, help="Figure number (1 or 2)"),
    c: Optional[float] = typer.Option(None, "--c", help="Bandwidth; defaults to 10pi, 20pi and 30pi"),
    n_max: Optional[int] = typer.Option(None, "--n-max", min=0, help="Largest index (default ceil(2c/pi) + 40)"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write output to this file"),
    json_output: bool = typer.Option(False, "--json", help="JSON instead of CSV"),
    digits: int = typer.Option(settings.digits, "--digits", min=1, max=17, help="Significant digits"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output")
):
    """Plot-ready per-n data for a figure: oracle and approximate log eigenvalues."""

    setup_logging(level="DEBUG" if verbose else settings.log_level)

    figure_id = TableId(f"figure{number}")
    bandwidths = [c] if c is not None else [k * math.pi for k in FIGURE_DEFAULT_MULTIPLES]

    try:
        reports = []
        for bandwidth in bandwidths:
            if bandwidth <= 0.0:
                raise DomainError(f"bandwidth must be positive, got {bandwidth}")
            ns = range(0, n_max + 1) if n_max is not None else None
            with _spinner(f"Computing {figure_id.value} at c={bandwidth:g}..."):
                reports.append(run_figure(figure_id, bandwidth, ns))
    except (DomainError, ValidityError) as e:
        _domain_exit(e)

    report = ReproReport(
        table_id=figure_id,
        rows=[row for r in reports for row in r.rows],
        tolerances=reports[0].tolerances,
        columns=reports[0].columns,
        elapsed_seconds=sum(r.elapsed_seconds for r in reports),
    )
    _emit(storage.render_json(report) if json_output else storage.render_csv(report, digits), out)
    _display_report(report)
    if not report.passed:
        raise typer.Exit(EXIT_FAILED)


@app.command()
def query(
    n: int = typer.Option(..., "--n", min=0, help="Eigenvalue index"),
    c: float = typer.Option(..., "--c", help="Bandwidth (c > 0)"),
    tier: Optional[LambdaMethod] = typer.Option(None, "--tier", help="Force one eigenvalue tier"),
    log_domain: bool = typer.Option(False, "--log-domain", help="Print natural logs of small quantities"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write output to this file"),
    json_output: bool = typer.Option(False, "--json", help="JSON instead of CSV"),
    digits: int = typer.Option(settings.digits, "--digits", min=1, max=17, help="Significant digits"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output")
):
    """Evaluate the oracles and every approximation at one (n, c)."""

    setup_logging(level="DEBUG" if verbose else settings.log_level)

    try:
        with _spinner(f"Evaluating n={n}, c={c:g}..."):
            record = run_query(n, c, tier)
    except (DomainError, ValidityError, ValidationError) as e:
        _domain_exit(e)

    if json_output:
        text = storage.render_json(record)
    else:
        lines = ["quantity,value"]
        lines += [f"{name},{value}" for name, value in _query_rows(record, log_domain, digits)]
        text = "\n".join(lines) + "\n"
    _emit(text, out)
    _display_query(record)


@app.command()
def validate(
    suite: List[str] = typer.Option([], "--suite", "-s", help=f"Suite to run: {', '.join(SUITES)}"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write output to this file"),
    json_output: bool = typer.Option(False, "--json", help="Machine-readable results"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output")
):
    """Run the invariant suites; the exit code is 2 + the number of failing suites."""

    setup_logging(level="DEBUG" if verbose else settings.log_level)

    unknown = [name for name in suite if name not in SUITES]
    if unknown:
        console.print(f"[red]Unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}[/red]")
        raise typer.Exit(EXIT_FAILED)

    summary = validate_all(suite or None)
    if json_output:
        _emit(storage.render_json(summary), out)
    elif out is not None:
        _emit("\n".join(f"{s.name},{s.checks},{len(s.failures)},{s.passed}" for s in summary.suites) + "\n", out)
    _display_validation(summary)
    if summary.failing:
        raise typer.Exit(min(125, EXIT_DOMAIN + summary.failing))


@app.command()
def sweep(
    c: float = typer.Option(..., "--c", help="Bandwidth (c > 0)"),
    n_from: int = typer.Option(..., "--n-from", min=0, help="First index"),
    n_to: int = typer.Option(..., "--n-to", min=0, help="Last index"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write output to this file"),
    json_output: bool = typer.Option(False, "--json", help="JSON instead of CSV"),
    digits: int = typer.Option(settings.digits, "--digits", min=1, max=17, help="Significant digits"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output")
):
    """Oracle and approximation values for every n in a range at one bandwidth."""

    setup_logging(level="DEBUG" if verbose else settings.log_level)

    try:
        if c <= 0.0:
            raise DomainError(f"bandwidth must be positive, got {c}")
        if n_to < n_from:
            raise DomainError(f"empty range {n_from}..{n_to}")
        with _spinner(f"Sweeping n={n_from}..{n_to} at c={c:g}..."):
            report = run_sweep(c, n_from, n_to)
    except (DomainError, ValidityError) as e:
        _domain_exit(e)

    _emit(storage.render_json(report) if json_output else storage.render_csv(report, digits), out)
    _display_report(report)


def _format(value: Optional[float], digits: int) -> str:
    if value is None:
        return ""
    return f"{value:.{digits - 1}e}"


def _query_rows(record: QueryRecord, log_domain: bool, digits: int) -> List[Tuple[str, str]]:
    """Name/value pairs; log quantities are exponentiated unless log_domain is set."""
    bundle = record.bundle
    plain = [
        ("n", str(record.point.n)),
        ("c", _format(record.point.c, digits)),
        ("chi", _format(record.chi, digits)),
        ("sqrt_q", _format(record.sqrt_q, digits)),
        ("psi1_sq", _format(record.psi1_sq, digits)),
        ("kappa_observed", _format(record.kappa_observed, digits)),
        ("sqrt_q_tilde", _format(bundle.sqrt_q_tilde, digits)),
        ("chi_tilde", _format(bundle.chi_tilde, digits)),
        ("psi1_sq_estimate", _format(bundle.psi1_sq_estimate, digits)),
        ("kappa_proxy", _format(bundle.kappa_proxy, digits)),
    ]
    logs = [
        ("lambda", record.log_lambda),
        ("lambda_tilde", bundle.log_lambda_tilde),
        ("lambda_hat", bundle.log_lambda_hat),
        ("lambda_widom", bundle.log_lambda_widom),
        ("mu", record.log_mu),
        ("mu_hat", bundle.log_mu_hat),
    ]
    rows = list(plain)
    for name, log_value in logs:
        if log_domain:
            rows.append((f"ln_{name}", _format(log_value, digits)))
        else:
            rows.append((name, _format(None if log_value is None else math.exp(log_value), digits)))
    rows.append(("lambda_method", record.lambda_method.value if record.lambda_method else ""))
    rows.append(("mu_hat_rel_deviation", _format(record.mu_hat_rel_deviation, digits)))
    rows += [(f"flag_{k}", str(v).lower()) for k, v in record.flags.items()]
    return rows


def _display_report(report: ReproReport):
    """Display a pass/fail summary of a reproduced table or figure."""

    failed = [row for row in report.rows if not row.passed]
    status = "[green]PASS[/green]" if report.passed else "[red]FAIL[/red]"
    summary = f"""
[bold]{report.table_id.value}[/bold]: {status}
Rows: {len(report.rows)}
Failed rows: {len(failed)}
Elapsed: {report.elapsed_seconds:.1f}s
    """
    console.print(Panel(summary.strip(), title="Reproduction"))

    if failed:
        failures = Table(title="Failed rows")
        failures.add_column("Row", style="cyan")
        failures.add_column("Reason", style="red")
        for row in failed[:20]:
            failures.add_row(row.label, row.reason or "")
        console.print(failures)
        if len(failed) > 20:
            console.print(f"[dim]... and {len(failed) - 20} more[/dim]")


def _display_query(record: QueryRecord):
    """Display validity flags and any per-tier errors of a query."""

    flags = Table(title=f"Flags at {record.point}")
    flags.add_column("Condition", style="cyan")
    flags.add_column("Holds", style="green")
    for name, value in record.flags.items():
        flags.add_row(name, "[green]yes[/green]" if value else "[yellow]no[/yellow]")
    console.print(flags)

    for stage, message in record.errors.items():
        console.print(f"[yellow]{stage}: {message}[/yellow]")


def _display_validation(summary: ValidationSummary):
    """Display the pass/fail matrix of the invariant suites."""

    matrix = Table(title="Invariant suites")
    matrix.add_column("Suite", style="cyan")
    matrix.add_column("Checks", justify="right")
    matrix.add_column("Failures", justify="right")
    matrix.add_column("Time", justify="right")
    matrix.add_column("Status")
    for s in summary.suites:
        status = "[green]PASS[/green]" if s.passed else "[red]FAIL[/red]"
        matrix.add_row(s.name, str(s.checks), str(len(s.failures)), f"{s.elapsed_seconds:.1f}s", status)
    console.print(matrix)

    for s in summary.suites:
        if s.error:
            console.print(f"[red]{s.name} aborted: {s.error}[/red]")
        for failure in s.failures[:10]:
            console.print(f"[red]{s.name}: {failure}[/red]")


if __name__ == "__main__":
    app()
