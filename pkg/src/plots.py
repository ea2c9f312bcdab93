"""Cross-controller comparison: grouped bar charts and their data."""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from errors import IncomparablePlans, IoFailure  # noqa: E402
from models import RunReport  # noqa: E402

BAR_GROUP_WIDTH = 0.8


@dataclass
class Comparison:
    """Headline values of several runs, keyed by (controller label, switch count)."""

    mode: str
    metric: str
    unit: str
    labels: list[str] = field(default_factory=list)
    switch_counts: list[int] = field(default_factory=list)
    values: dict[tuple[str, int], float | None] = field(default_factory=dict)
    chart: Path | None = None

    def value(self, label: str, n_switches: int) -> float | None:
        return self.values.get((label, n_switches))


def build_comparison(reports: list[RunReport], metric: str | None = None) -> Comparison:
    """Group reports by controller and switch count.

    All reports must share a mode and, when given, ``metric``. Runs repeated
    for the same controller and switch count keep the last one.
    """
    if not reports:
        raise IncomparablePlans("nothing to compare")
    modes = {report.plan.mode for report in reports}
    if len(modes) > 1:
        raise IncomparablePlans(
            f"reports mix modes: {', '.join(sorted(m.value for m in modes))}"
        )
    first = reports[0]
    if metric is not None and metric != first.metric:
        raise IncomparablePlans(
            f"{first.plan.mode.value} reports measure {first.metric}, not {metric}"
        )

    comparison = Comparison(
        mode=first.plan.mode.value, metric=first.metric, unit=first.unit
    )
    for report in reports:
        if report.label not in comparison.labels:
            comparison.labels.append(report.label)
        if report.n_switches not in comparison.switch_counts:
            comparison.switch_counts.append(report.n_switches)
        mean = report.overall.mean if report.overall is not None else None
        comparison.values[report.label, report.n_switches] = mean
    comparison.switch_counts.sort()
    return comparison


def render_chart(comparison: Comparison, path: Path) -> Path:
    """Bars grouped by switch count, one bar per controller, saved as SVG."""
    groups = comparison.switch_counts
    width = BAR_GROUP_WIDTH / max(1, len(comparison.labels))
    fig, ax = plt.subplots(figsize=(max(6.0, 1.5 * len(groups) + 2), 5))
    try:
        for offset, label in enumerate(comparison.labels):
            shift = (offset - (len(comparison.labels) - 1) / 2) * width
            xs = [i + shift for i in range(len(groups))]
            heights = [comparison.value(label, n) or 0.0 for n in groups]
            ax.bar(xs, heights, width=width, label=label)
        ax.set_xticks(range(len(groups)))
        ax.set_xticklabels([str(n) for n in groups])
        ax.set_xlabel("Number of switches")
        ax.set_ylabel(f"{comparison.metric} ({comparison.unit})")
        ax.set_title(f"{comparison.mode}: {comparison.metric}")
        ax.legend()
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as error:
        raise IoFailure(f"cannot write {path}: {error}") from error
    finally:
        plt.close(fig)
    return path


def compare(
    reports: list[RunReport], metric: str | None = None, out_dir: Path | None = None
) -> Comparison:
    """Build the comparison and, with ``out_dir``, render its bar chart."""
    comparison = build_comparison(reports, metric)
    if out_dir is not None:
        name = f"compare_{comparison.mode}_{comparison.metric}.svg"
        comparison.chart = render_chart(comparison, out_dir / name)
    return comparison
