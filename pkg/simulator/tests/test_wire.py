import random

import pytest

from app.crypto.dkd import DerivationTag
from app.crypto.dsag import StealthDestination, StealthLabel
from app.crypto.group import GroupPoint, Scalar, base_mul
from app.crypto.sharing import Complaint
from app.errors import DecodeError, DomainError, IncompleteTranscript
from app.protocol.bus import MessageBus
from app.protocol.ledger import Ledger
from app.protocol.parties import setup_dao
from app.protocol.session import run_transfer
from app.protocol.types import BusMessage, DaoRole, PayloadKind, SessionDescriptor, TransferMode
from app.schemas import SWEEP_N_VALUES
from app.wire import (
    DESCRIPTOR_LEN,
    DESTINATION_LEN,
    LEDGER_ENTRY_LEN,
    PAYMENT_LEN,
    SESSION_CONSTANTS_LEN,
    SPEND_LEN,
    account_session,
    decode_complaint,
    decode_descriptor,
    decode_destination,
    decode_ledger_entry,
    decode_payment,
    decode_signature,
    decode_spend,
    encode_complaint,
    encode_descriptor,
    encode_destination,
    encode_ledger_entry,
    encode_payment,
    encode_point,
    encode_session_constants,
    encode_spend,
)

SENDER_SERIES = {3: 243, 5: 373, 7: 503, 10: 698, 15: 1023, 20: 1348}
RECEIVER_SERIES = {3: 198, 5: 330, 7: 462, 10: 660, 15: 990, 20: 1320}


def _transfer(n, seed=7, mode=TransferMode.ANONYMOUS, commit_open=True):
    rng = random.Random(seed)
    sender = setup_dao(DaoRole.SENDER, n, 2, rng)
    receiver = setup_dao(DaoRole.RECEIVER, n, 2, rng)
    ledger = Ledger()
    return run_transfer(sender, receiver, ledger, rng, mode=mode, amount=42, commit_open=commit_open), ledger


def test_fixed_layout_sizes():
    assert DESCRIPTOR_LEN == 81
    assert SESSION_CONSTANTS_LEN == 48
    assert DESTINATION_LEN == 81
    assert PAYMENT_LEN == 91
    assert SPEND_LEN == 58
    assert LEDGER_ENTRY_LEN == 314


def test_descriptor_layout(rng):
    desc = SessionDescriptor(base_mul(Scalar(9)), rng.randbytes(32), DerivationTag(bytes(range(16))))
    obj = encode_descriptor(desc)
    assert obj.raw_len == obj.accounted_len == 81
    assert obj.payload[:33] == base_mul(Scalar(9)).to_bytes()
    assert obj.payload[-16:] == bytes(range(16))
    assert decode_descriptor(obj.payload) == desc
    with pytest.raises(DecodeError):
        decode_descriptor(obj.payload[:-1])


def test_session_constants_are_label_then_tag(rng):
    label, tag = StealthLabel.random(rng), DerivationTag.random(rng)
    obj = encode_session_constants(label, tag)
    assert obj.payload == label.xi + tag.tag


def test_destination_layout(rng):
    dest = StealthDestination(base_mul(Scalar(5)), DerivationTag.random(rng), StealthLabel.random(rng))
    data = encode_destination(dest)
    assert len(data) == 81
    assert decode_destination(data) == dest


def test_payment_encoding_modes(rng):
    tag, label = DerivationTag.random(rng), StealthLabel.random(rng)
    recipient = base_mul(Scalar(11))
    anon = encode_payment(TransferMode.ANONYMOUS, recipient, 1000, tag, label)
    plain = encode_payment(TransferMode.PLAIN, recipient, 1000, tag, None)
    assert len(anon) == len(plain) == 91
    assert anon[:2] == b"P\x00" and plain[:2] == b"P\x01"
    assert plain[-32:] == bytes(32)
    fields = decode_payment(anon)
    assert (fields.mode, fields.recipient, fields.amount, fields.tag, fields.label) == (
        TransferMode.ANONYMOUS, recipient, 1000, tag, label,
    )
    assert decode_payment(plain).label is None

    with pytest.raises(DomainError):
        encode_payment(TransferMode.PLAIN, recipient, 1, tag, label)
    with pytest.raises(DomainError):
        encode_payment(TransferMode.ANONYMOUS, recipient, 1, tag, None)
    with pytest.raises(DomainError):
        encode_payment(TransferMode.ANONYMOUS, recipient, -1, tag, label)


@pytest.mark.parametrize("offset,value", [(0, b"X"), (1, b"\x07")])
def test_payment_decode_rejects_bad_header(offset, value, rng):
    data = bytearray(encode_payment(TransferMode.ANONYMOUS, base_mul(Scalar(3)), 1, DerivationTag.random(rng), StealthLabel.random(rng)))
    data[offset:offset + 1] = value
    with pytest.raises(DecodeError):
        decode_payment(bytes(data))


def test_plain_payment_with_nonzero_label_is_rejected(rng):
    data = bytearray(encode_payment(TransferMode.PLAIN, base_mul(Scalar(3)), 1, DerivationTag.random(rng), None))
    data[-1] = 1
    with pytest.raises(DecodeError):
        decode_payment(bytes(data))


def test_spend_layout(rng):
    tag = DerivationTag.random(rng)
    data = encode_spend(base_mul(Scalar(4)), 77, tag)
    assert len(data) == 58 and data[:1] == b"S"
    spend = decode_spend(data)
    assert (spend.source, spend.amount, spend.tag) == (base_mul(Scalar(4)), 77, tag)


def test_complaint_layout():
    obj = encode_complaint(Complaint(dealer=2, complainer=5))
    assert obj.payload == b"\x00\x02\x00\x05"
    assert decode_complaint(obj.payload) == Complaint(2, 5)


def test_point_messages_are_limited_to_point_kinds():
    with pytest.raises(DomainError):
        encode_point(PayloadKind.DESCRIPTOR, GroupPoint.generator())


def test_ledger_entry_layout_before_and_after_spend():
    result, ledger = _transfer(3)
    entry = ledger.get(result.phase1.entry.entry_id)
    data = encode_ledger_entry(entry)
    assert len(data) == 314
    assert data[0] == 2
    decoded = decode_ledger_entry(data, entry.entry_id)
    assert decoded.transcript == entry.transcript
    assert decoded.status is entry.status

    corrupted = bytearray(data)
    corrupted[1 + 33 + 91 + 65] = 9
    with pytest.raises(DecodeError):
        decode_ledger_entry(bytes(corrupted), entry.entry_id)


def test_accounting_at_three_members():
    result, _ = _transfer(3)
    comm = result.comm
    assert (comm.dkd_bytes, comm.dsag_sender_bytes, comm.sig_bytes, comm.dsag_receiver_bytes) == (81, 243, 128, 198)
    assert comm.total == 650
    assert comm.raw_bytes > comm.total


@pytest.mark.slow
@pytest.mark.parametrize("n", SWEEP_N_VALUES)
def test_accounting_series(n):
    comm = _transfer(n, seed=n).comm
    assert comm.dkd_bytes == 81
    assert comm.sig_bytes == 128
    assert comm.dsag_sender_bytes == 65 * n + 48 == SENDER_SERIES[n]
    assert comm.dsag_receiver_bytes == 66 * n == RECEIVER_SERIES[n]


def test_accounting_without_commitments_drops_only_commitment_bytes():
    comm = _transfer(3, commit_open=False)[0].comm
    assert comm.dsag_sender_bytes == 243 - 3 * 32
    assert comm.dkd_bytes == 81 and comm.dsag_receiver_bytes == 198


def test_accounting_needs_every_required_kind():
    result, _ = _transfer(3)
    messages = [m for m in result.phase1.bus.messages if m.kind is not PayloadKind.RECEIVER_SHARE]
    with pytest.raises(IncompleteTranscript):
        account_session(messages, 3)
    with pytest.raises(DomainError):
        account_session(result.phase1.bus.messages, 0)


def test_bus_collect_is_a_seeded_permutation():
    def fill(seed):
        bus = MessageBus("s", random.Random(seed))
        for i in range(1, 9):
            bus.publish(DaoRole.SENDER, i, encode_point(PayloadKind.RECEIVER_DH, base_mul(Scalar(i))))
        return bus

    first = [m.sender for m in fill(5).collect(PayloadKind.RECEIVER_DH)]
    again = [m.sender for m in fill(5).collect(PayloadKind.RECEIVER_DH)]
    assert first == again
    assert sorted(first) == list(range(1, 9))
    bus = fill(5)
    assert bus.collect(PayloadKind.RECEIVER_DH, DaoRole.RECEIVER) == []
    assert all(isinstance(m, BusMessage) for m in bus.messages)
    assert [r.sender for r in bus.records()] == list(range(1, 9))


def test_bus_collect_since_a_mark_skips_earlier_messages():
    bus = MessageBus("s", random.Random(1))
    bus.publish(DaoRole.SENDER, 1, encode_point(PayloadKind.RECEIVER_DH, base_mul(Scalar(1))))
    start = bus.mark()
    assert start == 1
    bus.publish(DaoRole.SENDER, 2, encode_point(PayloadKind.RECEIVER_DH, base_mul(Scalar(2))))
    assert [m.sender for m in bus.collect(PayloadKind.RECEIVER_DH, since=start)] == [2]
    assert len(bus.collect(PayloadKind.RECEIVER_DH)) == 2


def test_descriptor_corpus_round_trips():
    r = random.Random(1000)
    for _ in range(1000):
        desc = SessionDescriptor(base_mul(Scalar.random(r)), r.randbytes(32), DerivationTag.random(r))
        assert decode_descriptor(encode_descriptor(desc).payload) == desc


def test_signature_broadcasts_decode_to_the_ledger_signatures():
    result, ledger = _transfer(3)
    sigs = [decode_signature(m.payload) for m in result.phase1.bus.messages if m.kind is PayloadKind.SIGNATURE]
    tx = ledger.get(1).transcript
    assert sigs == [tx.payment_sig, tx.spend_sig]
    with pytest.raises(DecodeError):
        decode_signature(bytes(64))
