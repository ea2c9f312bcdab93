#!/usr/bin/env python3
"""
sdnbench

Benchmark harness for OpenFlow controllers. Emulated switch fleets drive
latency, throughput, path provisioning, topology discovery, failover,
session capacity and flow-quality measurements; results go to JSON/CSV.
"""

import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import click
import typer
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress
from rich.table import Table

from benchmarks.runner import run_benchmark
from config import (
    BenchSettings,
    CliOptions,
    Preset,
    build_plan,
    load_config,
    oracle_behavior,
    parse_sweep,
    parse_topology_flag,
    setup_logging,
)
from display import iteration_line, print_comparison, print_report
from errors import (
    BenchError,
    ConfigError,
    ConflictingOptions,
    ControllerUnreachable,
    MeasurementError,
    NoBackupEndpoint,
    SessionError,
    TopologyError,
    TrafficError,
    UnknownFlag,
)
from file_io import load_report, save_report
from models import (
    METRICS,
    BenchmarkPlan,
    IterationResult,
    LatencyVariant,
    Mode,
    OracleRole,
    PathInstall,
    RunReport,
    TopologyChoice,
    TopologyPlan,
)
from plots import compare
from reference.controller import ReferenceController
from report import all_failed, build_report, environment_info
from topology import Topology, build
from traffic import ProfileKind, Schedule

logger = logging.getLogger(__name__)

console = Console()
app = typer.Typer(
    no_args_is_help=True,
    rich_markup_mode="rich",
    help="[bold blue]sdnbench[/] - OpenFlow controller benchmark harness",
)
report_app = typer.Typer(no_args_is_help=True, help="Inspect and compare saved reports.")
app.add_typer(report_app, name="report")

# What a command hands back to ``run``.
Outcome = BaseException | BenchmarkPlan | RunReport | list[RunReport] | int | None

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_UNREACHABLE = 2
EXIT_CONFIG = 3
EXIT_MEASUREMENT = 4

BENCHMARK_COMMANDS: list[tuple[str, Mode, str]] = [
    ("latency", Mode.LATENCY, "Per-request response latency of the controller."),
    ("throughput", Mode.THROUGHPUT, "Sustained responses per second across the fleet."),
    ("path-provision", Mode.PATH_PROVISION, "Time to install a path between host pairs."),
    ("discovery", Mode.TOPOLOGY_DISCOVERY, "Time until every link has been probed."),
    (
        "topology-change",
        Mode.TOPOLOGY_CHANGE,
        "Discovery followed by a link removal; re-probe time is mandatory.",
    ),
    ("failover", Mode.FAILOVER, "Switchover time from primary to backup controller."),
    ("capacity", Mode.SESSION_CAPACITY, "Concurrent switch sessions the controller holds."),
    ("flow-quality", Mode.FLOW_QUALITY, "Missed flows under a steady flow arrival rate."),
    ("rtt", Mode.RTT, "Echo round-trip time between switches and controller."),
]


def _parse_only(ctx: typer.Context) -> bool:
    return isinstance(ctx.obj, dict) and bool(ctx.obj.get("parse_only"))


def sweep_plans(plan: BenchmarkPlan, counts: list[int] | None) -> list[BenchmarkPlan]:
    """One plan per switch count; without a sweep, just ``plan``."""
    if counts is None:
        return [plan]
    fixed = plan.topology.kind is not TopologyChoice.LINEAR or plan.topology.switches
    if fixed:
        raise ConflictingOptions(
            "--sweep-switches needs a linear topology sized by --switches",
            "--sweep-switches",
        )
    return [plan.model_copy(update={"n_switches": n}) for n in counts]


def run_plan(plan: BenchmarkPlan, settings: BenchSettings, out_dir: Path) -> RunReport:
    """Run one plan with a progress bar, then print and save its report."""
    unit = METRICS[plan.mode][1]
    environment = environment_info(settings.app_version)
    with Progress(console=console, transient=True) as progress:
        task = progress.add_task(
            f"[cyan]{plan.mode.value} with {plan.n_switches} switches...", total=plan.loops
        )

        def on_iteration(result: IterationResult) -> None:
            # Failed iterations are reported by the benchmark itself.
            if not result.failed:
                progress.console.print(iteration_line(result, unit))
            progress.advance(task)

        iterations = asyncio.run(run_benchmark(plan, progress=on_iteration))

    report = build_report(plan, iterations, environment)
    print_report(report)
    save_report(report, out_dir)
    return report


def run_benchmark_command(ctx: typer.Context, mode: Mode, options: CliOptions) -> Outcome:
    settings = BenchSettings()
    config = load_config(options.config) if options.config is not None else None
    plan = build_plan(mode, options, config, settings)
    counts = parse_sweep(options.sweep_switches) if options.sweep_switches else None
    plans = sweep_plans(plan, counts)
    if _parse_only(ctx):
        return plan

    setup_logging(settings.log_level, options.verbose)
    config_dir = config.report.out_dir if config is not None else None
    out_dir = options.out_dir or config_dir or settings.out_dir

    console.print(
        Panel.fit(
            f"[bold blue]📡 {mode.value}[/]\n\n"
            f"[dim]Controller: {', '.join(plan.controller_endpoints)} "
            f"({plan.label})[/]",
            title="[bold blue]sdnbench[/]",
            border_style="blue",
        )
    )
    reports = [run_plan(each, settings, out_dir) for each in plans]
    if len(reports) > 1:
        print_comparison(compare(reports, out_dir=out_dir))
    return reports


def _register(name: str, mode: Mode, summary: str) -> None:
    def command(
        ctx: typer.Context,
        controller: Optional[list[str]] = typer.Option(
            None, "--controller", "-c", help="Controller endpoint host:port (repeatable)"
        ),
        config: Optional[Path] = typer.Option(None, "--config", help="TOML config file"),
        switches: Optional[int] = typer.Option(
            None, "--switches", "-s", help="Number of emulated switches [default: 16]"
        ),
        loops: Optional[int] = typer.Option(
            None, "--loops", "-l", help="Iterations including warm-up [default: 20]"
        ),
        duration: Optional[float] = typer.Option(
            None, "--duration", "-d", help="Seconds per iteration [default: 300]"
        ),
        delay: Optional[float] = typer.Option(
            None, "--delay", help="Seconds between iterations [default: 2]"
        ),
        warmup: Optional[int] = typer.Option(
            None, "--warmup", help="Warm-up iterations excluded from stats [default: 1]"
        ),
        preset: Optional[Preset] = typer.Option(None, "--preset", help="Parameter preset"),
        profile: Optional[ProfileKind] = typer.Option(
            None, "--profile", help="Traffic profile [default: tcp]"
        ),
        packet_length: Optional[int] = typer.Option(
            None, "--packet-length", help="Frame length in bytes [default: 64]"
        ),
        macs: Optional[int] = typer.Option(
            None, "--macs", help="Host MACs per switch [default: 64]"
        ),
        rate: Optional[float] = typer.Option(
            None, "--rate", help="Flow arrivals per second [default: 100]"
        ),
        schedule: Optional[Schedule] = typer.Option(
            None, "--schedule", help="Arrival process override"
        ),
        timeout: Optional[float] = typer.Option(
            None, "--timeout", help="Response timeout in seconds [default: 2]"
        ),
        topology: Optional[str] = typer.Option(
            None, "--topology", help="single, linear, ofnet or tree:DEPTH,FANOUT"
        ),
        of_version: Optional[list[str]] = typer.Option(
            None, "--of-version", help="Offered OpenFlow version, 1.0 or 1.3 (repeatable)"
        ),
        strict: bool = typer.Option(
            False, "--strict", help="Only count responses naming the injected buffer"
        ),
        seed: Optional[int] = typer.Option(None, "--seed", help="Random seed [default: 0]"),
        label: Optional[str] = typer.Option(None, "--label", help="Controller label"),
        out_dir: Optional[Path] = typer.Option(
            None, "--out-dir", "-o", help="Report directory [default: results]"
        ),
        sweep_switches: Optional[str] = typer.Option(
            None, "--sweep-switches", help="Run once per switch count, e.g. 1,2,4,8"
        ),
        verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
        variant: Optional[LatencyVariant] = typer.Option(
            None, "--variant", help="latency: serial or pipelined"
        ),
        pipeline_depth: Optional[int] = typer.Option(
            None, "--pipeline-depth", help="latency: requests in flight per switch"
        ),
        sync: bool = typer.Option(
            False, "--sync", help="latency/throughput: use synchronous echo requests"
        ),
        pairs: Optional[int] = typer.Option(
            None, "--pairs", help="path-provision: host pairs per iteration [default: 10]"
        ),
        no_link_removal: bool = typer.Option(
            False, "--no-link-removal", help="discovery: skip the link removal phase"
        ),
        step: Optional[int] = typer.Option(
            None, "--step", help="capacity: sessions added per step [default: 50]"
        ),
        hard_cap: Optional[int] = typer.Option(
            None, "--hard-cap", help="capacity: stop at this many sessions [default: 5000]"
        ),
        interval: Optional[float] = typer.Option(
            None, "--interval", help="flow-quality: bucket width in seconds [default: 1]"
        ),
    ) -> Outcome:
        options = CliOptions(
            controller=controller or None,
            config=config,
            switches=switches,
            loops=loops,
            duration=duration,
            delay=delay,
            warmup=warmup,
            preset=preset,
            profile=profile,
            packet_length=packet_length,
            macs=macs,
            rate=rate,
            schedule=schedule,
            timeout=timeout,
            topology=topology,
            of_version=of_version or None,
            strict=strict or None,
            seed=seed,
            label=label,
            out_dir=out_dir,
            sweep_switches=sweep_switches,
            verbose=verbose,
            variant=variant,
            pipeline_depth=pipeline_depth,
            sync=sync or None,
            pairs=pairs,
            no_link_removal=no_link_removal or None,
            step=step,
            hard_cap=hard_cap,
            interval=interval,
        )
        return run_benchmark_command(ctx, mode, options)

    command.__doc__ = summary
    app.command(name, help=summary)(command)


for _name, _mode, _summary in BENCHMARK_COMMANDS:
    _register(_name, _mode, _summary)


def refctl_topology(
    topology: str | None, switches: int | None, macs: int | None
) -> Topology | None:
    if topology is None and switches is None:
        return None
    fields = parse_topology_flag(topology) if topology is not None else {}
    if macs is not None:
        fields["hosts_per_switch"] = macs
    try:
        return build(TopologyPlan.model_validate(fields).to_spec(switches or 16))
    except TopologyError as error:
        raise ConfigError(str(error), "--topology") from None


async def _serve_for(
    controller: ReferenceController, listen: str, duration: float | None
) -> None:
    host, _, port = listen.rpartition(":")
    await controller.serve(host.strip("[]") or "127.0.0.1", int(port or 0))
    console.print(
        Panel.fit(
            f"[bold green]🧪 Reference controller listening on {controller.endpoint}[/]\n\n"
            f"[dim]path install: {controller.behavior.path_install.value}, "
            f"role: {controller.behavior.role.value}[/]",
            title="[bold green]refctl[/]",
            border_style="green",
        )
    )
    try:
        if duration:
            await asyncio.sleep(duration)
        else:
            await asyncio.Event().wait()
    finally:
        await controller.close()


def controller_stats_table(controller: ReferenceController) -> Table:
    table = Table(title="🧮 Reference controller counters", show_header=True)
    table.add_column("Counter", style="bold")
    table.add_column("Value", justify="right")
    for name, value in vars(controller.stats).items():
        table.add_row(name.replace("_", " "), str(value))
    table.add_row("discovered links", str(len(controller.links)))
    return table


@app.command("refctl")
def refctl(
    ctx: typer.Context,
    listen: str = typer.Option("127.0.0.1:6653", "--listen", help="Listen address host:port"),
    service_delay: Optional[float] = typer.Option(
        None, "--service-delay", help="Seconds before each response"
    ),
    rate_cap: Optional[float] = typer.Option(
        None, "--rate-cap", help="Responses per second, token bucket"
    ),
    drop_every: Optional[int] = typer.Option(
        None, "--drop-every", help="Drop one of every N PacketIns per session"
    ),
    sweep_period: Optional[float] = typer.Option(
        None, "--sweep-period", help="Seconds between LLDP discovery sweeps"
    ),
    path_install: Optional[PathInstall] = typer.Option(
        None, "--path-install", help="How flows are installed [default: ingress]"
    ),
    per_hop_delay: Optional[float] = typer.Option(
        None, "--per-hop-delay", help="hop_by_hop: seconds per installed hop"
    ),
    role: Optional[OracleRole] = typer.Option(None, "--role", help="primary or backup"),
    first_response_delay: Optional[float] = typer.Option(
        None, "--first-response-delay", help="backup: hold messages this many seconds"
    ),
    session_cap: Optional[int] = typer.Option(
        None, "--session-cap", help="Close connections beyond this many sessions"
    ),
    topology: Optional[str] = typer.Option(
        None, "--topology", help="Known topology for hop_by_hop installs"
    ),
    switches: Optional[int] = typer.Option(None, "--switches", help="Topology size"),
    macs: Optional[int] = typer.Option(None, "--macs", help="Host MACs per switch"),
    duration: Optional[float] = typer.Option(
        None, "--duration", help="Stop after this many seconds instead of on Ctrl-C"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> Outcome:
    """Run the embedded reference controller until interrupted."""
    behavior = oracle_behavior(
        service_delay=service_delay,
        rate_cap=rate_cap,
        drop_every_nth=drop_every,
        discovery_sweep_period=sweep_period,
        path_install=path_install,
        per_hop_delay=per_hop_delay,
        role=role,
        first_response_delay=first_response_delay,
        session_cap=session_cap,
    )
    known = refctl_topology(topology, switches, macs)
    if _parse_only(ctx):
        return None

    setup_logging(BenchSettings().log_level, verbose)
    controller = ReferenceController(behavior=behavior, topology=known)
    try:
        asyncio.run(_serve_for(controller, listen, duration))
    except KeyboardInterrupt:
        console.print("🛑 [yellow]Stopped[/]")
    console.print(controller_stats_table(controller))
    return EXIT_OK


@report_app.command("show")
def report_show(
    ctx: typer.Context,
    paths: list[Path] = typer.Argument(..., help="JSON report files"),
    brief: bool = typer.Option(False, "--brief", "-b", help="Skip the iteration table"),
) -> Outcome:
    """Print saved reports."""
    if _parse_only(ctx):
        return None
    reports = [load_report(path) for path in paths]
    for report in reports:
        print_report(report, show_iterations=not brief)
    return EXIT_OK


@report_app.command("compare")
def report_compare(
    ctx: typer.Context,
    paths: list[Path] = typer.Argument(..., help="JSON reports of one mode"),
    metric: Optional[str] = typer.Option(None, "--metric", help="Expected headline metric"),
    out_dir: Optional[Path] = typer.Option(
        None, "--out-dir", "-o", help="Write a comparison chart here"
    ),
) -> Outcome:
    """Tabulate and chart saved reports side by side."""
    if _parse_only(ctx):
        return None
    reports = [load_report(path) for path in paths]
    print_comparison(compare(reports, metric=metric, out_dir=out_dir))
    return EXIT_OK


@report_app.command("schema")
def report_schema(ctx: typer.Context) -> Outcome:
    """Print the JSON schema of saved reports."""
    if _parse_only(ctx):
        return None
    console.print_json(json.dumps(RunReport.model_json_schema()))
    return EXIT_OK


def exit_code(outcome: Outcome) -> int:
    """Map a finished or aborted invocation to the process exit status."""
    match outcome:
        case bool():
            return EXIT_OK
        case int():
            return outcome
        case ControllerUnreachable():
            return EXIT_UNREACHABLE
        case ConfigError() | TopologyError() | TrafficError() | NoBackupEndpoint():
            return EXIT_CONFIG
        case click.UsageError():
            return EXIT_CONFIG
        case MeasurementError() | SessionError():
            return EXIT_MEASUREMENT
        case BaseException():
            return EXIT_FAILURE
        case RunReport():
            return EXIT_MEASUREMENT if all_failed(outcome) else EXIT_OK
        case list():
            failed = any(all_failed(report) for report in outcome)
            return EXIT_MEASUREMENT if failed else EXIT_OK
    return EXIT_OK


def _invoke(argv: list[str], obj: dict[str, bool] | None) -> Outcome:
    command = typer.main.get_command(app)
    try:
        outcome: Outcome = command.main(
            args=argv, prog_name="sdnbench", standalone_mode=False, obj=obj
        )
    except click.NoSuchOption as error:
        raise UnknownFlag(error.format_message()) from None
    except click.UsageError as error:
        raise ConfigError(error.format_message()) from None
    return outcome


def parse_invocation(argv: list[str]) -> BenchmarkPlan:
    """Resolve a benchmark command line into its plan without running it."""
    outcome = _invoke(argv, {"parse_only": True})
    if not isinstance(outcome, BenchmarkPlan):
        raise ConfigError("not a benchmark subcommand", argv[0] if argv else None)
    return outcome


def run(argv: list[str] | None = None) -> int:
    """Entry point: run the command line and return the exit status."""
    try:
        outcome = _invoke(sys.argv[1:] if argv is None else argv, None)
    except click.Abort:
        console.print("🛑 [yellow]Interrupted[/]")
        return EXIT_FAILURE
    except BenchError as error:
        outcome = error
    except Exception as error:
        logger.exception("unexpected failure")
        outcome = error
    if isinstance(outcome, BaseException):
        console.print(f"❌ [bold red]{type(outcome).__name__}:[/] {outcome}")
    return exit_code(outcome)


if __name__ == "__main__":
    sys.exit(run())
