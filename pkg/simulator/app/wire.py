# File: app/wire.py
"""
Canonical fixed-layout encodings for every protocol object, and the byte
accounting that turns a session's bus transcript into a CommBreakdown.

Every layout has a static size. Decoders check the length first and then
reject non-canonical points, unreduced scalars and unknown enum bytes.
``accounted_len`` is the size counted for communication parity; it differs
from the raw size only for DH openings (the 32-byte opening nonce is sent but
not counted) and for signatures (65 bytes sent, 64 counted).
"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

from .crypto.dkd import CHAINCODE_LEN, TAG_LEN, DerivationTag
from .crypto.dsag import COMMITMENT_LEN, LABEL_LEN, NONCE_LEN, PartialDH, StealthDestination, StealthLabel
from .crypto.group import POINT_LEN, SCALAR_LEN, GroupPoint, Scalar
from .crypto.sharing import Complaint
from .crypto.tsig import SIGNATURE_ACCOUNTED_LEN, SIGNATURE_LEN, NonceCommitment, PartialSignature, Signature
from .errors import DecodeError, DomainError, IncompleteTranscript
from .protocol.types import (
    BusMessage,
    ChainTranscript,
    LedgerEntry,
    LedgerStatus,
    PayloadKind,
    SessionDescriptor,
    TransferMode,
)
from .schemas import CommBreakdown

DESCRIPTOR_LEN = POINT_LEN + CHAINCODE_LEN + TAG_LEN
SESSION_CONSTANTS_LEN = LABEL_LEN + TAG_LEN
DH_OPENING_LEN = POINT_LEN + NONCE_LEN
DESTINATION_LEN = POINT_LEN + TAG_LEN + LABEL_LEN
AMOUNT_LEN = 8
COMPLAINT_LEN = 4

PAYMENT_PREFIX = b"P"
SPEND_PREFIX = b"S"
PAYMENT_LEN = 1 + 1 + POINT_LEN + AMOUNT_LEN + TAG_LEN + LABEL_LEN
SPEND_LEN = 1 + POINT_LEN + AMOUNT_LEN + TAG_LEN
LEDGER_ENTRY_LEN = 1 + POINT_LEN + PAYMENT_LEN + SIGNATURE_LEN + 1 + SPEND_LEN + SIGNATURE_LEN

_MODE_BYTES = {TransferMode.ANONYMOUS: 0, TransferMode.PLAIN: 1}
_STATUS_BYTES = {LedgerStatus.PENDING: 0, LedgerStatus.CONFIRMED: 1, LedgerStatus.SPENT: 2}
_ZERO_LABEL = bytes(LABEL_LEN)

ACCOUNTED_LEN: Dict[PayloadKind, int] = {
    PayloadKind.DESCRIPTOR: DESCRIPTOR_LEN,
    PayloadKind.DH_COMMITMENT: COMMITMENT_LEN,
    PayloadKind.DH_OPENING: POINT_LEN,
    PayloadKind.SESSION_CONSTANTS: SESSION_CONSTANTS_LEN,
    PayloadKind.RECEIVER_DH: POINT_LEN,
    PayloadKind.RECEIVER_SHARE: POINT_LEN,
    PayloadKind.SIG_ROUND_1: POINT_LEN,
    PayloadKind.SIG_ROUND_2: SCALAR_LEN,
    PayloadKind.SIGNATURE: SIGNATURE_ACCOUNTED_LEN,
    PayloadKind.COMPLAINT: COMPLAINT_LEN,
}


@dataclass(frozen=True)
class EncodedObject:
    kind: PayloadKind
    payload: bytes
    accounted_len: int

    @property
    def raw_len(self) -> int:
        return len(self.payload)


def _wrap(kind: PayloadKind, payload: bytes) -> EncodedObject:
    return EncodedObject(kind, payload, ACCOUNTED_LEN[kind])


def _expect_len(data: bytes, expected: int, what: str) -> None:
    if len(data) != expected:
        raise DecodeError(f"{what} must be {expected} bytes, got {len(data)}")


# ---------------------------
# Session descriptor and constants
# ---------------------------
def encode_descriptor(desc: SessionDescriptor) -> EncodedObject:
    """encode(B) ∥ cc ∥ id, 81 bytes."""
    return _wrap(PayloadKind.DESCRIPTOR, desc.child_pub.to_bytes() + desc.chaincode + desc.tag.tag)


def decode_descriptor(data: bytes) -> SessionDescriptor:
    _expect_len(data, DESCRIPTOR_LEN, "session descriptor")
    child_pub = GroupPoint.from_bytes(data[:POINT_LEN])
    chaincode = data[POINT_LEN:POINT_LEN + CHAINCODE_LEN]
    tag = DerivationTag(data[POINT_LEN + CHAINCODE_LEN:])
    return SessionDescriptor(child_pub, chaincode, tag)


def encode_session_constants(label: StealthLabel, tag: DerivationTag) -> EncodedObject:
    """ξ ∥ id, 48 bytes."""
    return _wrap(PayloadKind.SESSION_CONSTANTS, label.xi + tag.tag)


def decode_session_constants(data: bytes) -> Tuple[StealthLabel, DerivationTag]:
    _expect_len(data, SESSION_CONSTANTS_LEN, "session constants")
    return StealthLabel(data[:LABEL_LEN]), DerivationTag(data[LABEL_LEN:])


# ---------------------------
# DSAG messages
# ---------------------------
def encode_dh_commitment(partial: PartialDH) -> EncodedObject:
    if partial.commitment is None:
        raise DomainError(f"party {partial.index} has no commitment to send")
    return _wrap(PayloadKind.DH_COMMITMENT, partial.commitment)


def decode_dh_commitment(data: bytes) -> bytes:
    _expect_len(data, COMMITMENT_LEN, "DH commitment")
    return bytes(data)


def encode_dh_opening(partial: PartialDH) -> EncodedObject:
    """encode(Ω_i) ∥ r_i; only the point is accounted."""
    nonce = partial.opening_nonce if partial.opening_nonce is not None else bytes(NONCE_LEN)
    return _wrap(PayloadKind.DH_OPENING, partial.term.to_bytes() + nonce)


def decode_dh_opening(data: bytes) -> Tuple[GroupPoint, bytes]:
    _expect_len(data, DH_OPENING_LEN, "DH opening")
    return GroupPoint.from_bytes(data[:POINT_LEN]), bytes(data[POINT_LEN:])


def encode_point(kind: PayloadKind, point: GroupPoint) -> EncodedObject:
    """receiver-dh, receiver-share and sig-round-1 all carry one compressed point."""
    if kind not in (PayloadKind.RECEIVER_DH, PayloadKind.RECEIVER_SHARE, PayloadKind.SIG_ROUND_1):
        raise DomainError(f"{kind.value} does not carry a single point")
    return _wrap(kind, point.to_bytes())


def decode_point(data: bytes) -> GroupPoint:
    _expect_len(data, POINT_LEN, "point")
    return GroupPoint.from_bytes(data)


def encode_nonce_commitment(commitment: NonceCommitment) -> EncodedObject:
    return encode_point(PayloadKind.SIG_ROUND_1, commitment.R_i)


def encode_partial_signature(partial: PartialSignature) -> EncodedObject:
    return _wrap(PayloadKind.SIG_ROUND_2, partial.s_i.to_bytes())


def decode_scalar(data: bytes) -> Scalar:
    return Scalar.from_bytes(data)


def encode_signature(sig: Signature) -> EncodedObject:
    return _wrap(PayloadKind.SIGNATURE, sig.to_bytes())


def decode_signature(data: bytes) -> Signature:
    return Signature.from_bytes(data)


def encode_complaint(complaint: Complaint) -> EncodedObject:
    return _wrap(
        PayloadKind.COMPLAINT,
        complaint.dealer.to_bytes(2, "big") + complaint.complainer.to_bytes(2, "big"),
    )


def decode_complaint(data: bytes) -> Complaint:
    _expect_len(data, COMPLAINT_LEN, "complaint")
    return Complaint(int.from_bytes(data[:2], "big"), int.from_bytes(data[2:], "big"))


# ---------------------------
# On-chain objects
# ---------------------------
def encode_destination(dest: StealthDestination) -> bytes:
    """encode(D) ∥ id ∥ ξ, the public metadata of one output."""
    return dest.dest.to_bytes() + dest.tag.tag + dest.label.xi


def decode_destination(data: bytes) -> StealthDestination:
    _expect_len(data, DESTINATION_LEN, "stealth destination")
    point = GroupPoint.from_bytes(data[:POINT_LEN])
    tag = DerivationTag(data[POINT_LEN:POINT_LEN + TAG_LEN])
    return StealthDestination(point, tag, StealthLabel(data[POINT_LEN + TAG_LEN:]))


@dataclass(frozen=True)
class PaymentFields:
    mode: TransferMode
    recipient: GroupPoint
    amount: int
    tag: DerivationTag
    label: Optional[StealthLabel]


@dataclass(frozen=True)
class SpendFields:
    source: GroupPoint
    amount: int
    tag: DerivationTag


def _amount_bytes(amount: int) -> bytes:
    if not 0 <= amount < 1 << (8 * AMOUNT_LEN):
        raise DomainError(f"amount {amount} does not fit in {AMOUNT_LEN} bytes")
    return amount.to_bytes(AMOUNT_LEN, "big")


def encode_payment(
    mode: TransferMode,
    recipient: GroupPoint,
    amount: int,
    tag: DerivationTag,
    label: Optional[StealthLabel],
) -> bytes:
    if (mode is TransferMode.PLAIN) != (label is None):
        raise DomainError("plain payments carry no label; anonymous payments need one")
    return (
        PAYMENT_PREFIX
        + bytes([_MODE_BYTES[mode]])
        + recipient.to_bytes()
        + _amount_bytes(amount)
        + tag.tag
        + (label.xi if label is not None else _ZERO_LABEL)
    )


def decode_payment(data: bytes) -> PaymentFields:
    _expect_len(data, PAYMENT_LEN, "payment message")
    if data[:1] != PAYMENT_PREFIX:
        raise DecodeError("payment message has the wrong prefix")
    modes = {v: k for k, v in _MODE_BYTES.items()}
    if data[1] not in modes:
        raise DecodeError(f"unknown transfer mode byte 0x{data[1]:02x}")
    mode = modes[data[1]]
    pos = 2
    recipient = GroupPoint.from_bytes(data[pos:pos + POINT_LEN])
    pos += POINT_LEN
    amount = int.from_bytes(data[pos:pos + AMOUNT_LEN], "big")
    pos += AMOUNT_LEN
    tag = DerivationTag(data[pos:pos + TAG_LEN])
    pos += TAG_LEN
    raw_label = data[pos:]
    if mode is TransferMode.PLAIN:
        if raw_label != _ZERO_LABEL:
            raise DecodeError("plain payment must carry a zero label field")
        label = None
    else:
        label = StealthLabel(raw_label)
    return PaymentFields(mode, recipient, amount, tag, label)


def encode_spend(source: GroupPoint, amount: int, tag: DerivationTag) -> bytes:
    return SPEND_PREFIX + source.to_bytes() + _amount_bytes(amount) + tag.tag


def decode_spend(data: bytes) -> SpendFields:
    _expect_len(data, SPEND_LEN, "spend message")
    if data[:1] != SPEND_PREFIX:
        raise DecodeError("spend message has the wrong prefix")
    source = GroupPoint.from_bytes(data[1:1 + POINT_LEN])
    amount = int.from_bytes(data[1 + POINT_LEN:1 + POINT_LEN + AMOUNT_LEN], "big")
    return SpendFields(source, amount, DerivationTag(data[1 + POINT_LEN + AMOUNT_LEN:]))


def encode_ledger_entry(entry: LedgerEntry) -> bytes:
    tx = entry.transcript
    if tx.spend_message is not None and tx.spend_sig is not None:
        spend = b"\x01" + tx.spend_message + tx.spend_sig.to_bytes()
    else:
        spend = b"\x00" + bytes(SPEND_LEN + SIGNATURE_LEN)
    return (
        bytes([_STATUS_BYTES[entry.status]])
        + entry.payer.to_bytes()
        + tx.payment_message
        + tx.payment_sig.to_bytes()
        + spend
    )


def decode_ledger_entry(data: bytes, entry_id: int) -> LedgerEntry:
    _expect_len(data, LEDGER_ENTRY_LEN, "ledger entry")
    statuses = {v: k for k, v in _STATUS_BYTES.items()}
    if data[0] not in statuses:
        raise DecodeError(f"unknown ledger status byte 0x{data[0]:02x}")
    pos = 1
    payer = GroupPoint.from_bytes(data[pos:pos + POINT_LEN])
    pos += POINT_LEN
    payment_message = bytes(data[pos:pos + PAYMENT_LEN])
    payment = decode_payment(payment_message)
    pos += PAYMENT_LEN
    payment_sig = Signature.from_bytes(data[pos:pos + SIGNATURE_LEN])
    pos += SIGNATURE_LEN
    has_spend = data[pos]
    pos += 1
    spend_message: Optional[bytes] = None
    spend_sig: Optional[Signature] = None
    if has_spend == 1:
        spend_message = bytes(data[pos:pos + SPEND_LEN])
        decode_spend(spend_message)
        spend_sig = Signature.from_bytes(data[pos + SPEND_LEN:])
    elif has_spend == 0:
        if any(data[pos:]):
            raise DecodeError("empty spend slot must be zero-filled")
    else:
        raise DecodeError(f"spend flag must be 0 or 1, got {has_spend}")

    transcript = ChainTranscript(
        mode=payment.mode,
        payment_message=payment_message,
        payment_sig=payment_sig,
        dest=payment.recipient,
        tag=payment.tag,
        label=payment.label,
        amount=payment.amount,
        spend_message=spend_message,
        spend_sig=spend_sig,
    )
    return LedgerEntry(entry_id, payer, transcript, statuses[data[0]])


# ---------------------------
# Byte accounting
# ---------------------------
_DKD_KINDS = (PayloadKind.DESCRIPTOR,)
_SENDER_KINDS = (PayloadKind.DH_COMMITMENT, PayloadKind.DH_OPENING, PayloadKind.SESSION_CONSTANTS)
_SIG_KINDS = (PayloadKind.SIGNATURE,)
_RECEIVER_KINDS = (PayloadKind.RECEIVER_DH, PayloadKind.RECEIVER_SHARE)
_COUNTED = _DKD_KINDS + _SENDER_KINDS + _SIG_KINDS + _RECEIVER_KINDS
# Commitments are absent when the commit-open layer is switched off.
_REQUIRED = tuple(k for k in _COUNTED if k is not PayloadKind.DH_COMMITMENT)


def account_session(messages: Iterable[BusMessage], n: int) -> CommBreakdown:
    """
    Sum accounted lengths per protocol component. Signing-round traffic is
    left out of the comparison figures, and so are complaints.
    """
    if n < 1:
        raise DomainError(f"DAO size must be >= 1, got {n}")
    accounted: Dict[PayloadKind, int] = defaultdict(int)
    raw: Dict[PayloadKind, int] = defaultdict(int)
    seen = set()
    for msg in messages:
        seen.add(msg.kind)
        accounted[msg.kind] += msg.accounted_len
        raw[msg.kind] += msg.raw_len

    missing = [k.value for k in _REQUIRED if k not in seen]
    if missing:
        raise IncompleteTranscript(f"transcript lacks {', '.join(missing)}")

    dkd = sum(accounted[k] for k in _DKD_KINDS)
    sender = sum(accounted[k] for k in _SENDER_KINDS)
    sig = sum(accounted[k] for k in _SIG_KINDS)
    receiver = sum(accounted[k] for k in _RECEIVER_KINDS)
    return CommBreakdown(
        n=n,
        dkd_bytes=dkd,
        dsag_sender_bytes=sender,
        sig_bytes=sig,
        dsag_receiver_bytes=receiver,
        total=dkd + sender + sig + receiver,
        raw_bytes=sum(raw[k] for k in _COUNTED),
    )
