# File: app/protocol/session.py
"""
End-to-end orchestration of one transfer.

Phase I (sender DAO):
  1.1  a receiver coordinator derives the child key for a fresh tag and hands
       the descriptor over; every receiver party re-derives it and compares
  1.2  S1 jointly computes Ω = a·B^(k) behind commit-open and forms D^(k)
  1.3  T1 signs the payment under A; the ledger validates and confirms it

Phase II (receiver DAO):
  2.1  every party derives its child share; S2 computes Ω' = b^(k)·A and
       tests ownership (a miss is skipped silently)
  2.2  S2 shifts child shares by ρ and checks the one-time public shares
  2.3  T2 ⊆ S2 signs the spend under D^(k); every party moves to the child
       state, consumes the tag and erases the one-time material
"""

import logging
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional

from ..config import COMMIT_OPEN
from ..crypto.dkd import DerivationState, DerivationTag, derive_child_public, derive_child_share
from ..crypto.dsag import (
    OneTimeShare,
    PartialDH,
    StealthDestination,
    StealthLabel,
    aggregate_shared_secret,
    detect,
    make_destination,
    one_time_share_set,
    receiver_partial_dh,
    recover_one_time_share,
    sender_partial_dh,
    stealth_offset,
    verify_one_time_shares,
)
from ..crypto.group import GroupPoint, RandomSource, Scalar
from ..crypto.sharing import ShareSet
from ..crypto.tsig import (
    NonceCommitment,
    PartialSignature,
    Signature,
    SigningSession,
    aggregate_nonce,
    aggregate_signature,
    challenge,
    check_signer_set,
)
from ..errors import (
    DivergentDerivation,
    DomainError,
    IncompleteTranscript,
    LedgerError,
    PaymentOutstanding,
    SubThreshold,
)
from ..schemas import CommBreakdown
from ..wire import (
    account_session,
    decode_descriptor,
    decode_dh_commitment,
    decode_dh_opening,
    decode_point,
    decode_scalar,
    decode_session_constants,
    decode_signature,
    encode_descriptor,
    encode_dh_commitment,
    encode_dh_opening,
    encode_nonce_commitment,
    encode_partial_signature,
    encode_payment,
    encode_point,
    encode_session_constants,
    encode_signature,
    encode_spend,
)
from .bus import MessageBus
from .ledger import Ledger
from .parties import Dao, IssuedDescriptor
from .types import (
    BusMessage,
    ChainTranscript,
    DaoRole,
    LedgerEntry,
    LedgerStatus,
    PayloadKind,
    SessionDescriptor,
    TransferMode,
)

logger = logging.getLogger(__name__)


@dataclass
class Adversary:
    """Scripted misbehaviour for one session. Fields name the corrupted party."""

    bad_dh_opening: Optional[int] = None
    bad_one_time_share: Optional[int] = None
    bad_signer: Optional[int] = None
    bad_signer_dao: DaoRole = DaoRole.SENDER
    divergent_tag_party: Optional[int] = None


@dataclass(frozen=True)
class RecoveryView:
    entry_id: int
    rho: Scalar
    shared_secret: GroupPoint
    one_time: Dict[int, OneTimeShare]
    dest: GroupPoint


SessionObserver = Callable[[RecoveryView], None]


@dataclass
class Phase1Result:
    session_id: str
    entry: LedgerEntry
    descriptor: SessionDescriptor
    bus: MessageBus
    contributors: List[int]
    signers: List[int]


@dataclass
class Phase2Result:
    session_id: str
    entry: LedgerEntry
    spend_sig: Signature
    state: DerivationState
    bus: MessageBus
    contributors: List[int]
    signers: List[int]


@dataclass
class TransferResult:
    phase1: Phase1Result
    phase2: Optional[Phase2Result]
    comm: Optional[CommBreakdown] = None


@dataclass
class ScanReport:
    owned: List[int] = field(default_factory=list)
    excluded: Dict[int, str] = field(default_factory=dict)


# ---------------------------
# Helpers
# ---------------------------
def _map(executor, fn, items):
    """Per-party work; a thread pool gives the same results as the plain loop."""
    items = list(items)
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


def _fork_rngs(rng: RandomSource, members: Iterable[int]) -> Dict[int, random.Random]:
    return {i: random.Random(rng.randbytes(16)) for i in members}


def _choose(requested: Optional[Iterable[int]], pool: List[int], threshold: int, dao: Dao) -> List[int]:
    members = sorted(requested) if requested is not None else list(pool)
    if len(set(members)) != len(members):
        raise DomainError(f"duplicate party indices in {members}")
    for i in members:
        dao.party(i)
    if len(members) < threshold:
        raise SubThreshold(len(members), threshold)
    return members


def _signers(requested: Optional[Iterable[int]], pool: List[int], threshold: int, dao: Dao) -> List[int]:
    if requested is None:
        return _choose(pool[:threshold], pool, threshold, dao)
    return _choose(requested, pool, threshold, dao)


def _new_bus(rng: RandomSource) -> MessageBus:
    return MessageBus(rng.randbytes(8).hex(), rng)


def _flip_tag(tag: DerivationTag) -> DerivationTag:
    return DerivationTag(bytes([tag.tag[0] ^ 0x01]) + tag.tag[1:])


def _only(bus: MessageBus, kind: PayloadKind, dao: DaoRole, since: int) -> BusMessage:
    batch = bus.collect(kind, dao, since=since)
    if len(batch) != 1:
        raise IncompleteTranscript(f"expected one {kind.value} message in this run, found {len(batch)}")
    return batch[0]


def bus_sign(
    bus: MessageBus,
    role: DaoRole,
    key: ShareSet,
    signers: List[int],
    message: bytes,
    rng: RandomSource,
    adversary: Optional[Adversary] = None,
) -> Signature:
    """Two signing rounds over the bus, then the aggregated signature is broadcast."""
    members = check_signer_set(signers, key)
    start = bus.mark()
    sessions = {i: SigningSession(key.share_for(i), message, members, rng) for i in members}
    for i in members:
        bus.publish(role, i, encode_nonce_commitment(sessions[i].commit()))

    commitments: Dict[int, NonceCommitment] = {}
    for msg in bus.collect(PayloadKind.SIG_ROUND_1, role, since=start):
        if msg.sender in sessions:
            commitments[msg.sender] = NonceCommitment(msg.sender, decode_point(msg.payload))
    R = aggregate_nonce(commitments.values())
    e = challenge(R, key.aggregate, message)

    for i in members:
        partial = sessions[i].respond(R, e)
        if adversary is not None and adversary.bad_signer == i and adversary.bad_signer_dao is role:
            partial = PartialSignature(i, partial.s_i + Scalar(1))
        bus.publish(role, i, encode_partial_signature(partial))

    partials = [
        PartialSignature(msg.sender, decode_scalar(msg.payload))
        for msg in bus.collect(PayloadKind.SIG_ROUND_2, role, since=start)
        if msg.sender in sessions
    ]
    sig = aggregate_signature(R, partials, commitments, key, e)
    bus.publish(role, members[0], encode_signature(sig))
    return decode_signature(_only(bus, PayloadKind.SIGNATURE, role, start).payload)


def cross_check_derivation(
    receiver: Dao,
    descriptor: SessionDescriptor,
    adversary: Optional[Adversary] = None,
) -> None:
    """Every receiver party recomputes (B^(k), cc^(k)) and compares with the broadcast."""
    for j in receiver.indices:
        tag = descriptor.tag
        if adversary is not None and adversary.divergent_tag_party == j:
            tag = _flip_tag(tag)
        mine = derive_child_public(receiver.party(j).derivation, tag)
        if mine.child_pub != descriptor.child_pub or mine.child_cc != descriptor.chaincode:
            logger.warning("step 1.1: party %d derived a different child key", j)
            raise DivergentDerivation(j, "recomputed child key differs from the broadcast descriptor")


# ---------------------------
# Phase I
# ---------------------------
def phase1_run(
    sender: Dao,
    receiver: Dao,
    ledger: Ledger,
    rng: RandomSource,
    mode: TransferMode = TransferMode.ANONYMOUS,
    amount: int = 0,
    contributors: Optional[Iterable[int]] = None,
    signers: Optional[Iterable[int]] = None,
    tag: Optional[DerivationTag] = None,
    adversary: Optional[Adversary] = None,
    commit_open: bool = COMMIT_OPEN,
    executor=None,
    bus: Optional[MessageBus] = None,
) -> Phase1Result:
    bus = bus or _new_bus(rng)
    start = bus.mark()

    # Step 1.1
    coordinator = receiver.party(receiver.indices[0])
    parent = coordinator.derivation
    outstanding = receiver.unredeemed_payment(parent.epoch)
    if outstanding is not None:
        # One unredeemed payment per receiver epoch.
        raise PaymentOutstanding(outstanding.entry_id)
    tag = tag or DerivationTag.random(rng)
    child = derive_child_public(parent, tag)
    descriptor = SessionDescriptor(child.child_pub, child.child_cc, tag)
    bus.publish(DaoRole.RECEIVER, coordinator.index, encode_descriptor(descriptor))
    cross_check_derivation(receiver, descriptor, adversary)
    receiver.issued[tag.tag] = IssuedDescriptor(descriptor, parent.epoch)
    handed = decode_descriptor(_only(bus, PayloadKind.DESCRIPTOR, DaoRole.RECEIVER, start).payload)
    logger.info("step 1.1: descriptor for epoch %d issued", parent.epoch + 1)

    epoch = parent.epoch + 1
    # Both gates run before any secret-dependent message is produced.
    s1: List[int] = []
    if mode is TransferMode.ANONYMOUS:
        s1 = _choose(contributors, sender.indices, sender.t, sender)
    t1 = _signers(signers, s1 or sender.indices, sender.t, sender)
    try:
        if mode is TransferMode.PLAIN:
            dest, label = handed.child_pub, None
        else:
            dest, label = _sender_dsag(sender, handed, s1, rng, commit_open, adversary, executor, bus)

        # Step 1.3
        payment_message = encode_payment(mode, dest, amount, handed.tag, label)
        payment_sig = bus_sign(bus, DaoRole.SENDER, sender.signing_key(t1), t1, payment_message, rng, adversary)
        transcript = ChainTranscript(
            mode=mode,
            payment_message=payment_message,
            payment_sig=payment_sig,
            dest=dest,
            tag=handed.tag,
            label=label,
            amount=amount,
        )
        entry = ledger.submit(sender.public_key, transcript)
        ledger.confirm(entry.entry_id)
        receiver.issued[handed.tag.tag] = replace(receiver.issued[handed.tag.tag], entry=entry)
        logger.info("step 1.3: payment signed by %s and confirmed as entry %d", t1, entry.entry_id)
    finally:
        for i in s1:
            sender.party(i).erase_session(epoch)

    return Phase1Result(bus.session_id, entry, handed, bus, s1, t1)


def _sender_dsag(
    sender: Dao,
    descriptor: SessionDescriptor,
    s1: List[int],
    rng: RandomSource,
    commit_open: bool,
    adversary: Optional[Adversary],
    executor,
    bus: MessageBus,
):
    """Step 1.2: commit, open, aggregate, sample ξ and form the destination."""
    start = bus.mark()
    rngs = _fork_rngs(rng, s1)

    def contribute(i: int) -> PartialDH:
        party = sender.party(i)
        partial = sender_partial_dh(party.signing_share, descriptor.child_pub, rngs[i], commit_open)
        party.partial_term = partial.term
        return partial

    partials = _map(executor, contribute, s1)
    if commit_open:
        for p in partials:
            bus.publish(DaoRole.SENDER, p.index, encode_dh_commitment(p))
    for p in partials:
        opened = p
        if adversary is not None and adversary.bad_dh_opening == p.index:
            opened = replace(p, term=p.term + GroupPoint.generator())
        bus.publish(DaoRole.SENDER, p.index, encode_dh_opening(opened))

    commitments = {
        msg.sender: decode_dh_commitment(msg.payload)
        for msg in bus.collect(PayloadKind.DH_COMMITMENT, DaoRole.SENDER, since=start)
    }
    received = []
    for msg in bus.collect(PayloadKind.DH_OPENING, DaoRole.SENDER, since=start):
        term, nonce = decode_dh_opening(msg.payload)
        if commit_open:
            received.append(PartialDH(msg.sender, term, commitments.get(msg.sender), nonce))
        else:
            received.append(PartialDH(msg.sender, term))
    shared = aggregate_shared_secret(received, s1, sender.t, require_openings=commit_open)
    for i in s1:
        sender.party(i).shared_secret = shared

    bus.publish(DaoRole.SENDER, s1[0], encode_session_constants(StealthLabel.random(rng), descriptor.tag))
    label, _ = decode_session_constants(_only(bus, PayloadKind.SESSION_CONSTANTS, DaoRole.SENDER, start).payload)
    destination = make_destination(shared, descriptor.child_pub, label, descriptor.tag)
    logger.info("step 1.2: destination formed by %d contributors", len(s1))
    return destination.dest, label


# ---------------------------
# Phase II
# ---------------------------
def phase2_run(
    receiver: Dao,
    ledger: Ledger,
    entry_id: int,
    rng: RandomSource,
    contributors: Optional[Iterable[int]] = None,
    signers: Optional[Iterable[int]] = None,
    adversary: Optional[Adversary] = None,
    observer: Optional[SessionObserver] = None,
    per_share_check: bool = False,
    executor=None,
    bus: Optional[MessageBus] = None,
) -> Optional[Phase2Result]:
    """Returns None when the entry is not addressed to this DAO."""
    entry = ledger.get(entry_id)
    if entry.status is not LedgerStatus.CONFIRMED:
        raise LedgerError(f"entry {entry_id} is {entry.status.value}; only confirmed entries can be redeemed")
    tx = entry.transcript
    bus = bus or _new_bus(rng)
    s2 = _choose(contributors, receiver.indices, receiver.t, receiver)
    t2 = _signers(signers, s2, receiver.t, receiver)
    if not set(t2) <= set(s2):
        raise DomainError(f"redeeming signers {t2} must be drawn from the recovery set {s2}")

    redeemed = False
    epoch = None
    try:
        # Step 2.1
        def reconstruct(j: int) -> DerivationState:
            party = receiver.party(j)
            child = derive_child_public(party.derivation, tx.tag)
            party.pending = derive_child_share(party.derivation, child)
            return party.pending

        pending = dict(zip(receiver.indices, _map(executor, reconstruct, receiver.indices)))
        head = pending[receiver.indices[0]]
        child_pub, epoch = head.aggregate_pub, head.epoch

        if tx.mode is TransferMode.PLAIN:
            if tx.dest != child_pub:
                logger.info("step 2.1: entry %d is not addressed to this DAO, skipped", entry_id)
                return None
            key = ShareSet(
                n=receiver.n,
                t=receiver.t,
                shares={j: pending[j].my_share for j in t2},
                public_shares=head.public_shares,
                aggregate=child_pub,
            )
        else:
            key = _receiver_dsag(
                receiver, entry, pending, s2, adversary, observer, per_share_check, executor, bus
            )
            if key is None:
                logger.info("step 2.1: entry %d is not addressed to this DAO, skipped", entry_id)
                return None

        # Step 2.3
        spend_message = encode_spend(tx.dest, tx.amount, tx.tag)
        spend_sig = bus_sign(bus, DaoRole.RECEIVER, key, t2, spend_message, rng, adversary)
        ledger.mark_spent(entry_id, spend_message, spend_sig)
        for j in receiver.indices:
            party = receiver.party(j)
            party.adopt(party.pending.consume(tx.tag))
        redeemed = True
    finally:
        for j in receiver.indices:
            party = receiver.party(j)
            if redeemed:
                party.erase_session(epoch)
            else:
                party.clear_transient()

    state = receiver.current_state()
    logger.info("step 2.3: entry %d spent, receiver DAO at epoch %d", entry_id, state.epoch)
    return Phase2Result(bus.session_id, entry, spend_sig, state, bus, s2, t2)


def _receiver_dsag(
    receiver: Dao,
    entry: LedgerEntry,
    pending: Dict[int, DerivationState],
    s2: List[int],
    adversary: Optional[Adversary],
    observer: Optional[SessionObserver],
    per_share_check: bool,
    executor,
    bus: MessageBus,
) -> Optional[ShareSet]:
    """Steps 2.1(b-c) and 2.2. Returns the one-time signing key, or None on a miss."""
    start = bus.mark()
    tx = entry.transcript
    head = pending[receiver.indices[0]]

    def partial(j: int) -> PartialDH:
        party = receiver.party(j)
        result = receiver_partial_dh(pending[j].my_share, entry.payer)
        party.partial_term = result.term
        return result

    for p in _map(executor, partial, s2):
        bus.publish(DaoRole.RECEIVER, p.index, encode_point(PayloadKind.RECEIVER_DH, p.term))
    received = [
        PartialDH(msg.sender, decode_point(msg.payload))
        for msg in bus.collect(PayloadKind.RECEIVER_DH, DaoRole.RECEIVER, since=start)
    ]
    shared = aggregate_shared_secret(received, s2, receiver.t)
    if not detect(StealthDestination(tx.dest, tx.tag, tx.label), head.aggregate_pub, shared):
        return None

    rho = stealth_offset(shared, tx.label)

    def recover(j: int) -> OneTimeShare:
        party = receiver.party(j)
        party.shared_secret = shared
        party.rho = rho
        party.one_time = recover_one_time_share(pending[j].my_share, rho)
        return party.one_time

    shares = _map(executor, recover, s2)
    for s in shares:
        public = s.public
        if adversary is not None and adversary.bad_one_time_share == s.index:
            public = public + GroupPoint.generator()
        bus.publish(DaoRole.RECEIVER, s.index, encode_point(PayloadKind.RECEIVER_SHARE, public))
    publics = {
        msg.sender: decode_point(msg.payload)
        for msg in bus.collect(PayloadKind.RECEIVER_SHARE, DaoRole.RECEIVER, since=start)
    }
    verify_one_time_shares(
        publics,
        s2,
        tx.dest,
        receiver.t,
        child_publics=head.public_shares if per_share_check else None,
        rho=rho if per_share_check else None,
    )
    logger.info("step 2.2: one-time shares of %s verified against the destination", s2)

    if observer is not None:
        observer(RecoveryView(entry.entry_id, rho, shared, {s.index: s for s in shares}, tx.dest))
    return one_time_share_set(shares, receiver.n, receiver.t, tx.dest)


# ---------------------------
# Scanning and full transfers
# ---------------------------
def scan_ledger(receiver: Dao, ledger: Ledger, contributors: Optional[Iterable[int]] = None) -> ScanReport:
    """Test every unspent entry against every live descriptor of the receiver DAO."""
    state = receiver.current_state()
    s2 = _choose(contributors, receiver.indices, receiver.t, receiver)
    descriptors = receiver.live_descriptors()

    child_shares = {}
    for desc in descriptors:
        shares = {}
        for j in s2:
            parent = receiver.party(j).derivation
            shares[j] = derive_child_share(parent, derive_child_public(parent, desc.tag)).my_share
        child_shares[desc.tag.tag] = shares

    secrets: Dict[tuple, GroupPoint] = {}
    report = ScanReport()
    for entry in ledger.visible():
        tx = entry.transcript
        if state.is_consumed(tx.tag):
            report.excluded[entry.entry_id] = f"TagConsumed: {tx.tag.tag.hex()}"
            continue
        for desc in descriptors:
            if tx.mode is TransferMode.PLAIN:
                owned = tx.dest == desc.child_pub
            else:
                cache_key = (desc.tag.tag, entry.payer.to_bytes())
                if cache_key not in secrets:
                    partials = [receiver_partial_dh(s, entry.payer) for s in child_shares[desc.tag.tag].values()]
                    secrets[cache_key] = aggregate_shared_secret(partials, s2, receiver.t)
                candidate = StealthDestination(tx.dest, tx.tag, tx.label)
                owned = detect(candidate, desc.child_pub, secrets[cache_key])
            if owned:
                report.owned.append(entry.entry_id)
                break
    logger.info("scan: %d owned, %d excluded", len(report.owned), len(report.excluded))
    return report


def run_transfer(
    sender: Dao,
    receiver: Dao,
    ledger: Ledger,
    rng: RandomSource,
    mode: TransferMode = TransferMode.ANONYMOUS,
    amount: int = 0,
    s1: Optional[Iterable[int]] = None,
    s2: Optional[Iterable[int]] = None,
    t1: Optional[Iterable[int]] = None,
    t2: Optional[Iterable[int]] = None,
    observer: Optional[SessionObserver] = None,
    commit_open: bool = COMMIT_OPEN,
    executor=None,
) -> TransferResult:
    """Phase I then Phase II on one shared bus, with byte accounting for anonymous runs."""
    phase1 = phase1_run(
        sender, receiver, ledger, rng,
        mode=mode, amount=amount, contributors=s1, signers=t1,
        commit_open=commit_open, executor=executor,
    )
    phase2 = phase2_run(
        receiver, ledger, phase1.entry.entry_id, rng,
        contributors=s2, signers=t2, observer=observer,
        executor=executor, bus=phase1.bus,
    )
    comm = None
    if mode is TransferMode.ANONYMOUS and phase2 is not None:
        comm = account_session(phase1.bus.messages, sender.n)
    return TransferResult(phase1, phase2, comm)
