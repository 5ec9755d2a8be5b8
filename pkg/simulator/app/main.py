# main.py
"""Command-line surface: demo | bench | depth | attack | compare."""

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional

import coloredlogs
import typer
from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.table import Table

from .config import DEFAULT_REPETITIONS, DEFAULT_SEED, DEFAULT_THRESHOLD, LEDGER_URL, LOG_LEVEL
from .errors import Dao2Error
from .protocol.faults import FaultScenario, fired_as_expected, inject_fault
from .protocol.ledger import Ledger, LedgerStore
from .protocol.parties import setup_dao
from .protocol.session import run_transfer
from .protocol.types import DaoRole, TransferMode
from .schemas import DEPTH_CHECKPOINTS, BenchConfig, DemoReport, LedgerEntryView
from .services.bench import run_baseline_compare, run_bench, run_depth

logger = logging.getLogger(__name__)

app = typer.Typer(help="Threshold stealth-transfer simulator.", no_args_is_help=True, add_completion=False)
console = Console()


class OutputFormat(str, Enum):
    TABLE = "table"
    JSON = "json"


SeedOption = typer.Option(DEFAULT_SEED, "--seed", envvar="DAO2_SEED", help="Seed for every random draw.")
OutputOption = typer.Option(OutputFormat.TABLE, "--output", "-o", help="table or json.")
OutFileOption = typer.Option(None, "--out", help="Also write the JSON result to this file.")


@app.callback()
def main(log_level: str = typer.Option(LOG_LEVEL, "--log-level", help="Logging level.")):
    coloredlogs.install(level=log_level.upper(), fmt="%(asctime)s %(name)s %(levelname)s %(message)s")


# ---------------------------
# Output helpers
# ---------------------------
def _emit(report: BaseModel, output: OutputFormat, out: Optional[Path], render: Callable[[BaseModel], None]):
    payload = report.model_dump_json(indent=2, exclude_none=True)
    if out is not None:
        out.write_text(payload + "\n")
    if output is OutputFormat.JSON:
        typer.echo(payload)
    else:
        render(report)


def _fail(exc: Dao2Error) -> None:
    console.print(f"[bold red]{type(exc).__name__}[/bold red]: {exc}")
    raise typer.Exit(code=1)


def _ledger_view(entry) -> LedgerEntryView:
    tx = entry.transcript
    return LedgerEntryView(
        entry_id=entry.entry_id,
        status=entry.status.value,
        mode=tx.mode.value,
        dest=tx.dest.to_bytes().hex(),
        tag=tx.tag.tag.hex(),
        label=tx.label.xi.hex() if tx.label is not None else None,
        payment_sig=tx.payment_sig.to_bytes().hex(),
        spend_sig=tx.spend_sig.to_bytes().hex() if tx.spend_sig is not None else None,
    )


# ---------------------------
# demo
# ---------------------------
def _render_demo(report: DemoReport) -> None:
    console.print(f"[bold]Transfer[/bold] n1={report.n1} n2={report.n2} t={report.t} mode={report.mode} seed={report.seed}")
    for step in report.steps:
        console.print(f"  • {step}")
    table = Table(title="Ledger")
    for col in ("id", "status", "mode", "destination", "tag"):
        table.add_column(col)
    for e in report.ledger:
        table.add_row(str(e.entry_id), e.status, e.mode, e.dest[:20] + "…", e.tag)
    console.print(table)
    if report.comm is not None:
        c = report.comm
        console.print(
            f"bytes: dkd={c.dkd_bytes} dsag_sender={c.dsag_sender_bytes} sig={c.sig_bytes} "
            f"dsag_receiver={c.dsag_receiver_bytes} total={c.total} (raw {c.raw_bytes})"
        )


@app.command()
def demo(
    n1: int = typer.Option(3, "--n1", help="Sender DAO size."),
    n2: int = typer.Option(3, "--n2", help="Receiver DAO size."),
    t: int = typer.Option(DEFAULT_THRESHOLD, "--t", help="Threshold for both DAOs."),
    mode: TransferMode = typer.Option(TransferMode.ANONYMOUS, "--mode"),
    seed: int = SeedOption,
    output: OutputFormat = OutputOption,
    out: Optional[Path] = OutFileOption,
    ledger_url: Optional[str] = typer.Option(LEDGER_URL, "--ledger-url", help="SQLAlchemy URL for ledger persistence."),
    stress: bool = typer.Option(False, "--stress", help="Run per-party work on a thread pool."),
):
    """Set up both DAOs and run one full transfer."""
    if t < 1 or t > n1 or t > n2:
        raise typer.BadParameter(f"need 1 <= t <= min(n1, n2), got t={t}, n1={n1}, n2={n2}")

    rng = random.Random(seed)
    store = LedgerStore.from_url(ledger_url) if ledger_url else None
    ledger = Ledger(store)
    executor = ThreadPoolExecutor(max_workers=max(n1, n2)) if stress else None
    try:
        sender = setup_dao(DaoRole.SENDER, n1, t, rng)
        receiver = setup_dao(DaoRole.RECEIVER, n2, t, rng)
        result = run_transfer(sender, receiver, ledger, rng, mode=mode, executor=executor)
    except Dao2Error as exc:
        _fail(exc)
    finally:
        if executor is not None:
            executor.shutdown()

    phase1, phase2 = result.phase1, result.phase2
    state = receiver.current_state()
    steps = [
        f"1.1 descriptor issued for tag {phase1.descriptor.tag.tag.hex()}",
        "1.2 destination formed by S1=" + str(phase1.contributors) if mode is TransferMode.ANONYMOUS
        else "1.2 skipped (plain mode, recipient is the child key)",
        f"1.3 payment signed by T1={phase1.signers}, entry {phase1.entry.entry_id} confirmed",
        f"2.1-2.2 ownership detected by S2={phase2.contributors}",
        f"2.3 spend signed by T2={phase2.signers}, receiver DAO at epoch {state.epoch}",
    ]
    report = DemoReport(
        n1=n1,
        n2=n2,
        t=t,
        mode=mode.value,
        seed=seed,
        steps=steps,
        ledger=[_ledger_view(e) for e in ledger.entries()],
        messages=phase1.bus.records(),
        comm=result.comm,
        receiver_state={
            "epoch": str(state.epoch),
            "aggregate_pub": state.aggregate_pub.to_bytes().hex(),
            "chaincode": state.chaincode.hex(),
        },
    )
    _emit(report, output, out, _render_demo)


# ---------------------------
# bench
# ---------------------------
def _render_bench(report) -> None:
    timing = Table(title=f"Module timings, median of {report.config.repetitions} (ms)")
    for col in ("n", "DKD", "DSAG-sender", "DSAG-receiver", "Sign", "Phase I", "Phase II", "Total", "reference DSAG-s"):
        timing.add_column(col, justify="right")
    for r in report.rows:
        ref = f"{r.reference_ms['dsag_sender']:.2f}" if r.reference_ms else "-"
        tm = r.timings
        timing.add_row(
            str(r.n), f"{tm.dkd_ms:.2f}", f"{tm.dsag_sender_ms:.2f}", f"{tm.dsag_receiver_ms:.2f}",
            f"{tm.sign_ms:.2f}", f"{r.phase1_ms:.2f}", f"{r.phase2_ms:.2f}", f"{r.total_ms:.2f}", ref,
        )
    console.print(timing)

    comm = Table(title="Communication per transfer (bytes)")
    for col in ("n", "DKD", "DSAG-sender", "Signatures", "DSAG-receiver", "Total", "Raw"):
        comm.add_column(col, justify="right")
    for r in report.rows:
        c = r.comm
        comm.add_row(
            str(r.n), str(c.dkd_bytes), str(c.dsag_sender_bytes), str(c.sig_bytes),
            str(c.dsag_receiver_bytes), str(c.total), str(c.raw_bytes),
        )
    console.print(comm)
    console.print(
        f"R² DSAG-sender={report.dsag_sender_fit.r_squared:.3f} "
        f"DSAG-receiver={report.dsag_receiver_fit.r_squared:.3f} total={report.total_fit.r_squared:.3f}; "
        f"sign max/min={report.sign_ratio:.2f}"
    )


@app.command()
def bench(
    n_values: Optional[List[int]] = typer.Option(None, "--n", help="DAO sizes (repeatable)."),
    t: int = typer.Option(DEFAULT_THRESHOLD, "--t"),
    repetitions: int = typer.Option(DEFAULT_REPETITIONS, "--repetitions", "-r"),
    seed: int = SeedOption,
    output: OutputFormat = OutputOption,
    out: Optional[Path] = OutFileOption,
):
    """Per-module timings, communication bytes and scaling diagnostics."""
    try:
        fields = dict(t=t, repetitions=repetitions, seed=seed, output=output.value)
        if n_values:
            fields["n_values"] = list(n_values)
        config = BenchConfig(**fields)
    except ValidationError as exc:
        raise typer.BadParameter(str(exc)) from exc
    try:
        report = run_bench(config)
    except Dao2Error as exc:
        _fail(exc)
    _emit(report, output, out, _render_bench)


# ---------------------------
# depth
# ---------------------------
def _render_depth(report) -> None:
    table = Table(title=f"Per-derivation cost, n={report.n} t={report.t} (ms)")
    table.add_column("depth", justify="right")
    table.add_column("median step", justify="right")
    for p in report.points:
        table.add_row(str(p.depth), f"{p.per_step_ms:.3f}")
    console.print(table)
    console.print(
        f"mean={report.mean_ms:.3f} ms (reference {report.reference_mean_ms}) flatness={report.flatness_ratio:.2f} "
        f"states identical={report.states_identical} key changed={report.key_changed}"
    )


@app.command()
def depth(
    depth: int = typer.Option(max(DEPTH_CHECKPOINTS), "--depth"),
    n: int = typer.Option(7, "--n"),
    t: int = typer.Option(DEFAULT_THRESHOLD, "--t"),
    seed: int = SeedOption,
    output: OutputFormat = OutputOption,
    out: Optional[Path] = OutFileOption,
):
    """Advance the receiver DAO through many epochs and time each step."""
    if depth < 1:
        raise typer.BadParameter("depth must be >= 1")
    if t < 1 or t > n:
        raise typer.BadParameter(f"need 1 <= t <= n, got t={t}, n={n}")
    try:
        report = run_depth(depth, n, t, seed)
    except Dao2Error as exc:
        _fail(exc)
    _emit(report, output, out, _render_depth)


# ---------------------------
# attack
# ---------------------------
def _render_attack(outcome) -> None:
    if not outcome.detected:
        console.print("no fault detected")
    else:
        verb = "rejected" if outcome.detection in ("SubThreshold", "TagConsumed") else "detected"
        culprit = f" (party {outcome.culprit})" if outcome.culprit is not None else ""
        console.print(f"{outcome.detection} {verb}{culprit}")
    console.print(f"completed={outcome.completed} honest states consistent={outcome.honest_states_consistent}")


@app.command()
def attack(
    scenario: FaultScenario = typer.Option(..., "--scenario"),
    n: int = typer.Option(3, "--n"),
    t: int = typer.Option(DEFAULT_THRESHOLD, "--t"),
    seed: int = SeedOption,
    output: OutputFormat = OutputOption,
    out: Optional[Path] = OutFileOption,
):
    """Run one fault scenario; exits 0 only if the expected detection fired."""
    try:
        outcome = inject_fault(scenario, seed=seed, n=n, t=t)
    except Dao2Error as exc:
        _fail(exc)
    except ValueError as exc:
        raise typer.BadParameter(str(exc)) from exc
    _emit(outcome, output, out, _render_attack)
    if not fired_as_expected(outcome):
        raise typer.Exit(code=1)


# ---------------------------
# compare
# ---------------------------
def _render_compare(report) -> None:
    table = Table(title="Computation cost per transfer (ms)")
    for col in ("n", "t", "Standard SA", "Plain TS", "Threshold SA", "premium"):
        table.add_column(col, justify="right")
    for r in report.rows:
        table.add_row(
            str(r.n), str(r.t), f"{r.standard_sa_ms:.2f}", f"{r.plain_ts_ms:.2f}",
            f"{r.threshold_sa_ms:.2f}", f"{r.premium:.1f}x" if r.premium is not None else "-",
        )
    console.print(table)


@app.command()
def compare(
    repetitions: int = typer.Option(DEFAULT_REPETITIONS, "--repetitions", "-r"),
    seed: int = SeedOption,
    output: OutputFormat = OutputOption,
    out: Optional[Path] = OutFileOption,
):
    """Standard stealth payment vs. plain threshold signing vs. the full transfer."""
    if repetitions < 1:
        raise typer.BadParameter("repetitions must be >= 1")
    try:
        report = run_baseline_compare(seed, repetitions)
    except Dao2Error as exc:
        _fail(exc)
    _emit(report, output, out, _render_compare)


if __name__ == "__main__":
    app()
