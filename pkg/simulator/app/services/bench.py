# File: app/services/bench.py
"""
Timing sweeps and scaling diagnostics.

Timings wrap only the cryptographic work of each module (no bus, no
serialization) with a monotonic clock; each figure is the median of
``repetitions`` runs. Communication figures come from a real anonymous
session's bus transcript.
"""

import logging
import random
import time
from typing import Callable, List, Sequence

import numpy as np
from scipy.stats import linregress

from ..crypto.dkd import DerivationTag, derive_chain, derive_child_public, derive_child_share
from ..crypto.dsag import (
    StealthLabel,
    aggregate_shared_secret,
    detect,
    make_destination,
    receiver_partial_dh,
    recover_one_time_share,
    sender_partial_dh,
    stealth_offset,
    verify_one_time_shares,
)
from ..crypto.tsig import schnorr_sign, ts_sign
from ..protocol.ledger import Ledger
from ..protocol.parties import Dao, setup_dao
from ..protocol.session import run_transfer
from ..protocol.types import DaoRole
from ..schemas import (
    DEPTH_CHECKPOINTS,
    REFERENCE_MODULE_MS,
    BaselineReport,
    BaselineRow,
    BenchConfig,
    BenchReport,
    BenchRow,
    CommBreakdown,
    DepthPoint,
    DepthReport,
    LinearFit,
    ModuleTimings,
)

logger = logging.getLogger(__name__)

DEPTH_WINDOW = 10
COMPARE_N_VALUES = (1, 3, 7, 15)


def median_ms(fn: Callable[[], object], repetitions: int) -> float:
    samples = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - start) * 1000.0)
    return float(np.median(samples))


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    if len(set(xs)) < 2:
        return LinearFit(slope=0.0, intercept=float(np.mean(ys)), r_squared=1.0)
    fit = linregress(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    return LinearFit(slope=float(fit.slope), intercept=float(fit.intercept), r_squared=float(fit.rvalue ** 2))


def _daos(n: int, t: int, rng: random.Random):
    return setup_dao(DaoRole.SENDER, n, t, rng), setup_dao(DaoRole.RECEIVER, n, t, rng)


# ---------------------------
# Per-module timings
# ---------------------------
def _time_dkd(receiver: Dao, rng: random.Random, repetitions: int) -> float:
    """Step 1.1 as run: the coordinator derives, every party re-derives to cross-check."""
    states = [receiver.party(j).derivation for j in receiver.indices]

    def step():
        tag = DerivationTag.random(rng)
        for state in states:
            derive_child_public(state, tag)

    return median_ms(step, repetitions)


def _time_dsag_sender(sender: Dao, receiver: Dao, rng: random.Random, repetitions: int) -> float:
    members = sender.indices
    shares = [sender.party(i).signing_share for i in members]
    child = derive_child_public(receiver.party(1).derivation, DerivationTag.random(rng))

    def step():
        partials = [sender_partial_dh(s, child.child_pub, rng, True) for s in shares]
        shared = aggregate_shared_secret(partials, members, sender.t, require_openings=True)
        make_destination(shared, child.child_pub, StealthLabel.random(rng), child.tag)

    return median_ms(step, repetitions)


def _time_dsag_receiver(sender: Dao, receiver: Dao, rng: random.Random, repetitions: int) -> float:
    members = receiver.indices
    tag = DerivationTag.random(rng)
    pending = {}
    for j in members:
        parent = receiver.party(j).derivation
        pending[j] = derive_child_share(parent, derive_child_public(parent, tag))
    head = pending[members[0]]
    sender_key = sender.signing_key(sender.indices)
    sender_partials = [
        sender_partial_dh(sender_key.share_for(i), head.aggregate_pub, rng) for i in sender.indices
    ]
    shared = aggregate_shared_secret(sender_partials, sender.indices, sender.t)
    label = StealthLabel.random(rng)
    candidate = make_destination(shared, head.aggregate_pub, label, tag)

    def step():
        partials = [receiver_partial_dh(pending[j].my_share, sender.public_key) for j in members]
        recv_shared = aggregate_shared_secret(partials, members, receiver.t)
        if not detect(candidate, head.aggregate_pub, recv_shared):
            raise RuntimeError("benchmark destination was not detected")
        rho = stealth_offset(recv_shared, label)
        one_time = [recover_one_time_share(pending[j].my_share, rho) for j in members]
        verify_one_time_shares({s.index: s.public for s in one_time}, members, candidate.dest, receiver.t)

    return median_ms(step, repetitions)


def _time_sign(sender: Dao, rng: random.Random, repetitions: int) -> float:
    signers = sender.indices[: sender.t]
    key = sender.signing_key(signers)
    message = rng.randbytes(32)
    return median_ms(lambda: ts_sign(message, key, signers, rng), repetitions)


def measure_modules(n: int, t: int, repetitions: int, seed: int) -> ModuleTimings:
    rng = random.Random(seed * 1009 + n)
    sender, receiver = _daos(n, t, rng)
    return ModuleTimings(
        dkd_ms=_time_dkd(receiver, rng, repetitions),
        dsag_sender_ms=_time_dsag_sender(sender, receiver, rng, repetitions),
        dsag_receiver_ms=_time_dsag_receiver(sender, receiver, rng, repetitions),
        sign_ms=_time_sign(sender, rng, repetitions),
    )


def measure_comm(n: int, t: int, seed: int) -> CommBreakdown:
    rng = random.Random(seed * 7919 + n)
    sender, receiver = _daos(n, t, rng)
    return run_transfer(sender, receiver, Ledger(), rng, commit_open=True).comm


def run_bench(config: BenchConfig) -> BenchReport:
    rows: List[BenchRow] = []
    for n in config.n_values:
        timings = measure_modules(n, config.t, config.repetitions, config.seed)
        rows.append(
            BenchRow(
                n=n,
                timings=timings,
                phase1_ms=timings.phase1_ms,
                phase2_ms=timings.phase2_ms,
                total_ms=timings.phase1_ms + timings.phase2_ms,
                comm=measure_comm(n, config.t, config.seed),
                reference_ms=REFERENCE_MODULE_MS.get(n),
            )
        )
        logger.info("bench: n=%d done", n)

    ns = [r.n for r in rows]
    signs = [r.timings.sign_ms for r in rows]
    return BenchReport(
        config=config,
        rows=rows,
        dsag_sender_fit=linear_fit(ns, [r.timings.dsag_sender_ms for r in rows]),
        dsag_receiver_fit=linear_fit(ns, [r.timings.dsag_receiver_ms for r in rows]),
        total_fit=linear_fit(ns, [r.total_ms for r in rows]),
        sign_ratio=max(signs) / min(signs),
    )


# ---------------------------
# Derivation depth
# ---------------------------
def run_depth(depth: int, n: int = 7, t: int = 2, seed: int = 0) -> DepthReport:
    """
    Advance every receiver party ``depth`` epochs, timing each step for the
    whole DAO. Checkpoint figures are medians over the preceding window.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    rng = random.Random(seed)
    receiver = setup_dao(DaoRole.RECEIVER, n, t, rng)
    initial_key = receiver.current_state().aggregate_pub
    states = {j: receiver.party(j).derivation for j in receiver.indices}

    warm_tag = DerivationTag.random(rng)
    for state in states.values():
        derive_chain(state, [warm_tag])

    per_step: List[float] = []
    for _ in range(depth):
        tag = DerivationTag.random(rng)
        start = time.perf_counter()
        for j in states:
            states[j] = derive_chain(states[j], [tag])
        per_step.append((time.perf_counter() - start) * 1000.0)

    for j, state in states.items():
        receiver.party(j).adopt(state)

    checkpoints = sorted({d for d in DEPTH_CHECKPOINTS if d <= depth} | {depth})
    points = []
    for d in checkpoints:
        window = per_step[max(0, d - DEPTH_WINDOW):d]
        points.append(DepthPoint(depth=d, per_step_ms=float(np.median(window))))
    values = [p.per_step_ms for p in points]

    fingerprints = {state.fingerprint() for state in states.values()}
    return DepthReport(
        depth=depth,
        n=n,
        t=t,
        points=points,
        mean_ms=float(np.mean(per_step)),
        flatness_ratio=max(values) / min(values),
        states_identical=len(fingerprints) == 1,
        key_changed=receiver.current_state().aggregate_pub != initial_key,
    )


# ---------------------------
# Baseline comparison
# ---------------------------
def _standard_sa_ms(seed: int, repetitions: int) -> float:
    """Single-user stealth payment plus a single-key spend signature."""
    rng = random.Random(seed)
    sender, receiver = _daos(1, 1, rng)
    a = sender.party(1).signing_share
    b_state = receiver.party(1).derivation

    def step():
        tag = DerivationTag.random(rng)
        child = derive_child_public(b_state, tag)
        b_child = derive_child_share(b_state, child).my_share
        shared = aggregate_shared_secret([sender_partial_dh(a, child.child_pub, commit_open=False)], [1])
        label = StealthLabel.random(rng)
        dest = make_destination(shared, child.child_pub, label, tag)
        rho = stealth_offset(shared, label)
        d = recover_one_time_share(b_child, rho)
        schnorr_sign(d.secret, dest.dest.to_bytes(), rng)

    return median_ms(step, repetitions)


def _plain_ts_ms(n: int, t: int, seed: int, repetitions: int) -> float:
    rng = random.Random(seed + n)
    sender = setup_dao(DaoRole.SENDER, n, t, rng)
    signers = sender.indices[:t]
    key = sender.signing_key(signers)
    message = rng.randbytes(32)
    return median_ms(lambda: ts_sign(message, key, signers, rng), repetitions)


def run_baseline_compare(seed: int, repetitions: int, n_values: Sequence[int] = COMPARE_N_VALUES) -> BaselineReport:
    """Standard stealth payment, plain threshold signing and a full transfer, per n."""
    standard = _standard_sa_ms(seed, repetitions)
    rows = []
    for n in n_values:
        t = min(2, n)
        timings = measure_modules(n, t, repetitions, seed)
        total = timings.phase1_ms + timings.phase2_ms
        plain = _plain_ts_ms(n, t, seed, repetitions)
        rows.append(
            BaselineRow(
                n=n,
                t=t,
                standard_sa_ms=standard,
                plain_ts_ms=plain,
                threshold_sa_ms=total,
                premium=total / plain if plain > 0 else None,
            )
        )
    return BaselineReport(rows=rows)
