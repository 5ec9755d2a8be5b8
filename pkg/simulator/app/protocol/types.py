# File: app/protocol/types.py
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..crypto.dkd import DerivationTag
from ..crypto.dsag import StealthLabel
from ..crypto.group import GroupPoint
from ..crypto.tsig import Signature
from ..errors import LedgerError


class DaoRole(str, Enum):
    SENDER = "sender"
    RECEIVER = "receiver"


class TransferMode(str, Enum):
    ANONYMOUS = "anonymous"
    PLAIN = "plain"


class LedgerStatus(str, Enum):
    PENDING = "pending"
    CONFIRMED = "confirmed"
    SPENT = "spent"

    @property
    def rank(self) -> int:
        return _STATUS_ORDER.index(self)


_STATUS_ORDER = [LedgerStatus.PENDING, LedgerStatus.CONFIRMED, LedgerStatus.SPENT]


class PayloadKind(str, Enum):
    DESCRIPTOR = "descriptor"
    DH_COMMITMENT = "dh-commitment"
    DH_OPENING = "dh-opening"
    SESSION_CONSTANTS = "session-constants"
    RECEIVER_DH = "receiver-dh"
    RECEIVER_SHARE = "receiver-share"
    SIG_ROUND_1 = "sig-round-1"
    SIG_ROUND_2 = "sig-round-2"
    SIGNATURE = "signature"
    COMPLAINT = "complaint"


@dataclass(frozen=True)
class SessionDescriptor:
    """δ^(k) = (B^(k), cc^(k), id^(k)), handed off-chain from receiver to sender."""

    child_pub: GroupPoint
    chaincode: bytes
    tag: DerivationTag


@dataclass(frozen=True)
class ChainTranscript:
    """τ_chain^(k): everything a chain observer sees for one transfer."""

    mode: TransferMode
    payment_message: bytes
    payment_sig: Signature
    dest: GroupPoint
    tag: DerivationTag
    label: Optional[StealthLabel]
    amount: int = 0
    spend_message: Optional[bytes] = None
    spend_sig: Optional[Signature] = None


@dataclass(frozen=True)
class BusMessage:
    session_id: str
    dao: DaoRole
    sender: int
    kind: PayloadKind
    payload: bytes
    accounted_len: int

    @property
    def raw_len(self) -> int:
        return len(self.payload)


@dataclass
class LedgerEntry:
    """A simulated on-chain record; ``status`` only ever moves forward."""

    entry_id: int
    payer: GroupPoint
    transcript: ChainTranscript
    status: LedgerStatus = LedgerStatus.PENDING

    def advance(self, status: LedgerStatus) -> None:
        if status.rank <= self.status.rank:
            raise LedgerError(f"entry {self.entry_id}: cannot move from {self.status.value} to {status.value}")
        self.status = status
