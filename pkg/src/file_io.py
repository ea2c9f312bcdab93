"""Report persistence: JSON and CSV writers and the JSON loader."""

import csv
import io
import re
from enum import StrEnum
from pathlib import Path

from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel

from errors import IoFailure
from models import RunReport, Stats

console = Console()

CSV_COLUMNS = [
    "iteration",
    "value",
    "n",
    "min",
    "max",
    "mean",
    "stddev",
    "p50",
    "p95",
    "p99",
]
STAT_FIELDS = CSV_COLUMNS[3:]


class ReportFormat(StrEnum):
    JSON = "json"
    CSV = "csv"


def _number(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _stat_cells(stats: Stats | None) -> list[str]:
    if stats is None:
        return [""] * (1 + len(STAT_FIELDS))
    return [str(stats.n)] + [_number(getattr(stats, name)) for name in STAT_FIELDS]


def render_json(report: RunReport) -> str:
    return report.model_dump_json(indent=2) + "\n"


def render_csv(report: RunReport) -> str:
    """One row per measured iteration, fixed column order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for summary in report.summaries:
        writer.writerow(
            [summary.index, _number(summary.value), *_stat_cells(summary.stats)]
        )
    return buffer.getvalue()


def report_stem(report: RunReport) -> str:
    safe_label = re.sub(r"[^A-Za-z0-9_.-]+", "_", report.label)
    timestamp = report.environment.started_at.strftime("%Y%m%d_%H%M%S")
    return f"{report.plan.mode.value}_{safe_label}_{report.n_switches}sw_{timestamp}"


def write_report(
    report: RunReport, fmt: ReportFormat, out_dir: Path, stem: str | None = None
) -> Path:
    """Write ``report`` as JSON or CSV into ``out_dir``; returns the file path."""
    text = render_json(report) if fmt is ReportFormat.JSON else render_csv(report)
    path = out_dir / f"{stem or report_stem(report)}.{fmt.value}"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as error:
        raise IoFailure(f"cannot write {path}: {error}") from error
    return path


def save_report(report: RunReport, out_dir: Path) -> list[Path]:
    """Save JSON and CSV side by side and announce them."""
    paths = [write_report(report, fmt, out_dir) for fmt in ReportFormat]
    console.print(
        Panel.fit(
            "💾 [bold green]Saved results:[/]\n\n"
            f"📄 Report: [cyan]{paths[0]}[/]\n"
            f"📊 Iterations: [cyan]{paths[1]}[/]",
            title="[bold green]Results Saved[/]",
            border_style="green",
        )
    )
    return paths


def load_report(path: Path) -> RunReport:
    """Load a JSON report written by ``write_report``."""
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as error:
        raise IoFailure(f"cannot read {path}: {error}") from error
    try:
        return RunReport.model_validate_json(text)
    except ValidationError as error:
        raise IoFailure(f"{path} is not a valid report: {error}") from error
