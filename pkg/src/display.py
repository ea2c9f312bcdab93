"""Table formatting and display utilities."""

from rich.console import Console
from rich.table import Table

from models import (
    CapacityPayload,
    DiscoveryPayload,
    FlowQualityPayload,
    IterationResult,
    RunReport,
)
from plots import Comparison

# Table column widths
COL_WIDTH_INDEX = 6
COL_WIDTH_VALUE = 14
COL_WIDTH_STAT = 12

console = Console()


def format_value(value: float | None, unit: str) -> str:
    """Human scale for seconds, plain digits for everything else."""
    if value is None:
        return "[dim]n/a[/]"
    if unit == "s":
        if abs(value) < 1e-3:
            return f"{value * 1e6:.1f} µs"
        if abs(value) < 1:
            return f"{value * 1e3:.3f} ms"
        return f"{value:.3f} s"
    if unit == "fraction":
        return f"{value * 100:.2f}%"
    if unit == "count":
        return f"{value:.0f}"
    return f"{value:,.1f} {unit}"


def iteration_line(result: IterationResult, unit: str) -> str:
    """One-line progress note for a finished iteration."""
    tag = " [dim](warm-up)[/]" if result.warmup else ""
    if result.failed:
        return f"❌ Iteration {result.index}{tag}: [red]{result.error}[/]"
    return (
        f"✅ Iteration {result.index}{tag}: "
        f"[bold green]{format_value(result.headline, unit)}[/]"
    )


def print_report(report: RunReport, show_iterations: bool = True) -> None:
    """Print a summary table and, optionally, the per-iteration table."""
    unit = report.unit
    table = Table(
        title=f"📈 {report.plan.mode.value} results for '{report.label}'",
        show_header=True,
    )
    table.add_column("Metric", style="bold")
    table.add_column("Value", style="bold")

    table.add_row("Controller", ", ".join(report.plan.controller_endpoints))
    table.add_row("Switches", f"[bold blue]{report.n_switches}[/]")
    measured = report.summaries
    failed = sum(summary.failed for summary in measured)
    table.add_row(
        "Measured iterations",
        f"{len(measured)}" + (f" [red]({failed} failed)[/]" if failed else ""),
    )
    overall = report.overall
    if overall is None:
        table.add_row(report.metric, "[red]no successful iteration[/]")
    else:
        table.add_row(f"{report.metric} mean", format_value(overall.mean, unit))
        table.add_row("stddev", format_value(overall.stddev, unit))
        spread = (overall.min, overall.max)
        table.add_row("min / max", " / ".join(format_value(v, unit) for v in spread))
        tail = (overall.p50, overall.p95, overall.p99)
        table.add_row("p50 / p95 / p99", " / ".join(format_value(v, unit) for v in tail))
    for label, value in _mode_details(report):
        table.add_row(label, value)
    console.print(table)

    if show_iterations and measured:
        _print_iterations(report)


def _mode_details(report: RunReport) -> list[tuple[str, str]]:
    """A few mode-specific totals over the measured iterations."""
    payloads = [
        it.payload
        for it in report.iterations
        if not it.warmup and it.payload is not None
    ]
    details: list[tuple[str, str]] = []
    flows = [p for p in payloads if isinstance(p, FlowQualityPayload)]
    if flows:
        sent = sum(p.sent for p in flows)
        received = sum(p.received for p in flows)
        missed = sum(p.missed for p in flows)
        totals = f"{sent} / {received} / {missed}"
        details.append(("Flows sent / received / missed", totals))
    discoveries = [p for p in payloads if isinstance(p, DiscoveryPayload)]
    if discoveries:
        last = discoveries[-1]
        size = f"{last.switches} switches, {last.links} directed links"
        details.append(("Topology", size))
    capacities = [p for p in payloads if isinstance(p, CapacityPayload)]
    if any(p.reached_hard_cap for p in capacities):
        details.append(("Hard cap", "[yellow]reached[/]"))
    return details


def _print_iterations(report: RunReport) -> None:
    unit = report.unit
    table = Table(title="🔁 Measured iterations", show_header=True)
    table.add_column("#", width=COL_WIDTH_INDEX, style="dim")
    table.add_column(report.metric, width=COL_WIDTH_VALUE, justify="right")
    for name in ("n", "mean", "p50", "p99"):
        table.add_column(name, width=COL_WIDTH_STAT, justify="right")
    for summary in report.summaries:
        if summary.failed:
            table.add_row(str(summary.index), "[red]failed[/]", "", "", "", "")
            continue
        stats = summary.stats
        sample_unit = "s" if unit in ("s", "fraction") else unit
        cells = ["", "", "", ""]
        if stats is not None:
            cells = [str(stats.n)] + [
                format_value(v, sample_unit) for v in (stats.mean, stats.p50, stats.p99)
            ]
        table.add_row(str(summary.index), format_value(summary.value, unit), *cells)
    console.print(table)


def comparison_table(comparison: Comparison) -> Table:
    """Switch counts down, one column per controller."""
    table = Table(
        title=f"⚖️  {comparison.mode}: {comparison.metric}",
        show_header=True,
    )
    table.add_column("Switches", style="bold")
    for label in comparison.labels:
        table.add_column(label, justify="right")
    for n in comparison.switch_counts:
        table.add_row(
            str(n),
            *(
                format_value(comparison.value(label, n), comparison.unit)
                for label in comparison.labels
            ),
        )
    return table


def print_comparison(comparison: Comparison) -> None:
    console.print(comparison_table(comparison))
    if comparison.chart is not None:
        console.print(f"📊 [dim]Chart saved to:[/] [cyan]{comparison.chart}[/]")
