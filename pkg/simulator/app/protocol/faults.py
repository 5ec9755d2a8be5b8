# File: app/protocol/faults.py
"""
Scripted fault scenarios. Each one builds fresh DAOs from a seed, injects one
kind of misbehaviour, and records what the honest parties detected and
whether they still finished (or aborted) with consistent state.
"""

import logging
import random
from enum import Enum
from typing import Callable, Dict, Optional

from ..config import DEFAULT_SEED
from ..crypto.group import Scalar
from ..errors import Dao2Error, DivergentDerivation
from ..schemas import FaultOutcome
from ..wire import decode_complaint, encode_complaint
from .bus import MessageBus
from .ledger import Ledger
from .parties import Dao, setup_dao
from .session import Adversary, phase1_run, phase2_run, run_transfer
from .types import DaoRole, PayloadKind

logger = logging.getLogger(__name__)

CORRUPT_PARTY = 2


class FaultScenario(str, Enum):
    NONE = "none"
    BAD_DKG_SHARE = "bad-dkg-share"
    BAD_DH_OPENING = "bad-dh-opening"
    BAD_ONE_TIME_SHARE = "bad-one-time-share"
    BAD_PARTIAL_SIGNATURE = "bad-partial-signature"
    SUB_THRESHOLD_SIGN = "sub-threshold-sign"
    REUSED_TAG = "reused-tag"
    MISMATCHED_DERIVATION_STATE = "mismatched-derivation-state"


EXPECTED_DETECTION: Dict[FaultScenario, str] = {
    FaultScenario.NONE: "none",
    FaultScenario.BAD_DKG_SHARE: "Complaint",
    FaultScenario.BAD_DH_OPENING: "InconsistentContribution",
    FaultScenario.BAD_ONE_TIME_SHARE: "InconsistentShares",
    FaultScenario.BAD_PARTIAL_SIGNATURE: "MisbehavingSigner",
    FaultScenario.SUB_THRESHOLD_SIGN: "SubThreshold",
    FaultScenario.REUSED_TAG: "TagConsumed",
    FaultScenario.MISMATCHED_DERIVATION_STATE: "DivergentDerivation",
}

_SIGNING_KINDS = (PayloadKind.SIG_ROUND_1, PayloadKind.SIG_ROUND_2, PayloadKind.SIGNATURE)


def expected_detection(scenario: FaultScenario) -> str:
    return EXPECTED_DETECTION[scenario]


def fired_as_expected(outcome: FaultOutcome) -> bool:
    expected = EXPECTED_DETECTION[FaultScenario(outcome.scenario)]
    if expected == "none":
        return not outcome.detected and outcome.completed
    return outcome.detected and outcome.detection == expected and outcome.honest_states_consistent


def _states_consistent(receiver: Dao) -> bool:
    try:
        receiver.current_state()
    except DivergentDerivation:
        return False
    return True


def _setup(n: int, t: int, rng: random.Random, corrupt=None):
    sender = setup_dao(DaoRole.SENDER, n, t, rng, corrupt)
    receiver = setup_dao(DaoRole.RECEIVER, n, t, rng)
    return sender, receiver, Ledger()


def _without(dao: Dao, culprit: int):
    return [i for i in dao.indices if i != culprit]


# ---------------------------
# Scenarios
# ---------------------------
def _none(n, t, rng) -> FaultOutcome:
    sender, receiver, ledger = _setup(n, t, rng)
    run_transfer(sender, receiver, ledger, rng, commit_open=True)
    return FaultOutcome(
        scenario=FaultScenario.NONE.value,
        detected=False,
        detection="none",
        completed=True,
        honest_states_consistent=_states_consistent(receiver),
    )


def _bad_dkg_share(n, t, rng) -> FaultOutcome:
    def corrupt(dealer: int, recipient: int, share: Scalar) -> Scalar:
        if dealer == CORRUPT_PARTY and recipient == 1:
            return share + Scalar(1)
        return share

    sender, receiver, ledger = _setup(n, t, rng, corrupt)
    setup_bus = MessageBus("setup", rng)
    for complaint in sender.complaints:
        setup_bus.publish(DaoRole.SENDER, complaint.complainer, encode_complaint(complaint))
    named = {decode_complaint(m.payload).dealer for m in setup_bus.collect(PayloadKind.COMPLAINT)}
    run_transfer(sender, receiver, ledger, rng, commit_open=True)
    culprit = min(named) if named else None
    return FaultOutcome(
        scenario=FaultScenario.BAD_DKG_SHARE.value,
        detected=bool(named),
        detection="Complaint" if named else "none",
        culprit=culprit,
        completed=True,
        honest_states_consistent=_states_consistent(receiver),
        detail=f"dealers excluded from the key: {sorted(sender.excluded)}",
    )


def _bad_dh_opening(n, t, rng) -> FaultOutcome:
    sender, receiver, ledger = _setup(n, t, rng)
    try:
        phase1_run(sender, receiver, ledger, rng, adversary=Adversary(bad_dh_opening=CORRUPT_PARTY), commit_open=True)
    except Dao2Error as exc:
        culprit = getattr(exc, "index", None)
        # A fresh subset without the culprit finishes the transfer.
        retry = phase1_run(sender, receiver, ledger, rng, contributors=_without(sender, culprit), commit_open=True)
        phase2_run(receiver, ledger, retry.entry.entry_id, rng)
        return FaultOutcome(
            scenario=FaultScenario.BAD_DH_OPENING.value,
            detected=True,
            detection=type(exc).__name__,
            culprit=culprit,
            completed=True,
            honest_states_consistent=_states_consistent(receiver),
            detail=str(exc),
        )
    return _undetected(FaultScenario.BAD_DH_OPENING, receiver)


def _bad_one_time_share(n, t, rng) -> FaultOutcome:
    sender, receiver, ledger = _setup(n, t, rng)
    first = phase1_run(sender, receiver, ledger, rng, commit_open=True)
    entry_id = first.entry.entry_id
    adversary = Adversary(bad_one_time_share=CORRUPT_PARTY)
    try:
        phase2_run(receiver, ledger, entry_id, rng, adversary=adversary)
    except Dao2Error as exc:
        detection = type(exc).__name__
        culprit = None
        try:
            phase2_run(receiver, ledger, entry_id, rng, adversary=adversary, per_share_check=True)
        except Dao2Error as named:
            culprit = getattr(named, "index", None)
        completed = False
        if culprit is not None:
            completed = phase2_run(receiver, ledger, entry_id, rng, contributors=_without(receiver, culprit)) is not None
        return FaultOutcome(
            scenario=FaultScenario.BAD_ONE_TIME_SHARE.value,
            detected=True,
            detection=detection,
            culprit=culprit,
            completed=completed,
            honest_states_consistent=_states_consistent(receiver),
            detail=str(exc),
        )
    return _undetected(FaultScenario.BAD_ONE_TIME_SHARE, receiver)


def _bad_partial_signature(n, t, rng) -> FaultOutcome:
    sender, receiver, ledger = _setup(n, t, rng)
    try:
        phase1_run(sender, receiver, ledger, rng, adversary=Adversary(bad_signer=CORRUPT_PARTY), commit_open=True)
    except Dao2Error as exc:
        culprit = getattr(exc, "index", None)
        honest = _without(sender, culprit)
        retry = phase1_run(sender, receiver, ledger, rng, signers=honest[:t], commit_open=True)
        phase2_run(receiver, ledger, retry.entry.entry_id, rng)
        return FaultOutcome(
            scenario=FaultScenario.BAD_PARTIAL_SIGNATURE.value,
            detected=True,
            detection=type(exc).__name__,
            culprit=culprit,
            completed=True,
            honest_states_consistent=_states_consistent(receiver),
            detail=str(exc),
        )
    return _undetected(FaultScenario.BAD_PARTIAL_SIGNATURE, receiver)


def _sub_threshold_sign(n, t, rng) -> FaultOutcome:
    sender, receiver, ledger = _setup(n, t, rng)
    bus = MessageBus("sub-threshold", rng)
    try:
        phase1_run(sender, receiver, ledger, rng, signers=sender.indices[: t - 1], commit_open=True, bus=bus)
    except Dao2Error as exc:
        produced = sum(m.raw_len for m in bus.messages if m.kind in _SIGNING_KINDS)
        return FaultOutcome(
            scenario=FaultScenario.SUB_THRESHOLD_SIGN.value,
            detected=True,
            detection=type(exc).__name__,
            completed=False,
            honest_states_consistent=_states_consistent(receiver),
            signature_bytes_produced=produced,
            detail=str(exc),
        )
    return _undetected(FaultScenario.SUB_THRESHOLD_SIGN, receiver)


def _reused_tag(n, t, rng) -> FaultOutcome:
    sender, receiver, ledger = _setup(n, t, rng)
    first = run_transfer(sender, receiver, ledger, rng, commit_open=True)
    before = receiver.current_state().fingerprint()
    try:
        phase1_run(sender, receiver, ledger, rng, tag=first.phase1.descriptor.tag, commit_open=True)
    except Dao2Error as exc:
        unchanged = receiver.current_state().fingerprint() == before
        return FaultOutcome(
            scenario=FaultScenario.REUSED_TAG.value,
            detected=True,
            detection=type(exc).__name__,
            completed=True,
            honest_states_consistent=_states_consistent(receiver) and unchanged,
            detail=str(exc),
        )
    return _undetected(FaultScenario.REUSED_TAG, receiver)


def _mismatched_derivation_state(n, t, rng) -> FaultOutcome:
    sender, receiver, ledger = _setup(n, t, rng)
    bus = MessageBus("divergent", rng)
    try:
        phase1_run(
            sender, receiver, ledger, rng,
            adversary=Adversary(divergent_tag_party=CORRUPT_PARTY), commit_open=True, bus=bus,
        )
    except Dao2Error as exc:
        dsag_started = any(m.kind is PayloadKind.DH_COMMITMENT or m.kind is PayloadKind.DH_OPENING for m in bus.messages)
        return FaultOutcome(
            scenario=FaultScenario.MISMATCHED_DERIVATION_STATE.value,
            detected=True,
            detection=type(exc).__name__,
            culprit=getattr(exc, "index", None),
            completed=False,
            honest_states_consistent=_states_consistent(receiver) and not dsag_started,
            detail=str(exc),
        )
    return _undetected(FaultScenario.MISMATCHED_DERIVATION_STATE, receiver)


def _undetected(scenario: FaultScenario, receiver: Dao) -> FaultOutcome:
    logger.warning("fault %s went undetected", scenario.value)
    return FaultOutcome(
        scenario=scenario.value,
        detected=False,
        detection="none",
        completed=True,
        honest_states_consistent=_states_consistent(receiver),
    )


_RUNNERS: Dict[FaultScenario, Callable[[int, int, random.Random], FaultOutcome]] = {
    FaultScenario.NONE: _none,
    FaultScenario.BAD_DKG_SHARE: _bad_dkg_share,
    FaultScenario.BAD_DH_OPENING: _bad_dh_opening,
    FaultScenario.BAD_ONE_TIME_SHARE: _bad_one_time_share,
    FaultScenario.BAD_PARTIAL_SIGNATURE: _bad_partial_signature,
    FaultScenario.SUB_THRESHOLD_SIGN: _sub_threshold_sign,
    FaultScenario.REUSED_TAG: _reused_tag,
    FaultScenario.MISMATCHED_DERIVATION_STATE: _mismatched_derivation_state,
}


def inject_fault(
    scenario: FaultScenario,
    seed: int = DEFAULT_SEED,
    n: int = 3,
    t: int = 2,
    rng: Optional[random.Random] = None,
) -> FaultOutcome:
    """
    Run one scenario on fresh n-party DAOs. Party 2 is the corrupted one, so
    recovery scenarios need n - 1 >= t honest parties.
    """
    scenario = FaultScenario(scenario)
    if n < 2 or t < 1 or n - 1 < t:
        raise ValueError(f"fault scenarios need n >= 2 and n - 1 >= t >= 1, got n={n}, t={t}")
    rng = rng or random.Random(seed)
    outcome = _RUNNERS[scenario](n, t, rng)
    if outcome.detected:
        logger.warning("fault %s: %s detected", scenario.value, outcome.detection)
    return outcome
