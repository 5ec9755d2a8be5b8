# File: app/protocol/ledger.py
"""
Simulated chain: validates and confirms payments, records redemptions, and
optionally appends every status change to a SQL store.
"""

import logging
from dataclasses import replace
from typing import Dict, List, Optional

from sqlalchemy.orm import sessionmaker

from ..crypto.group import GroupPoint
from ..crypto.tsig import Signature, ts_verify
from ..database import make_session_factory
from ..errors import DecodeError, LedgerError
from ..models import LedgerRecord
from ..wire import decode_ledger_entry, decode_payment, decode_spend, encode_ledger_entry
from .types import ChainTranscript, LedgerEntry, LedgerStatus

logger = logging.getLogger(__name__)


class LedgerStore:
    """Append-only persistence: one row per status change, never updated."""

    def __init__(self, session_factory: sessionmaker):
        self._session_factory = session_factory

    @classmethod
    def from_url(cls, url: str) -> "LedgerStore":
        return cls(make_session_factory(url))

    def append(self, entry: LedgerEntry) -> None:
        db = self._session_factory()
        try:
            db.add(
                LedgerRecord(
                    entry_id=entry.entry_id,
                    status=entry.status.value,
                    encoded=encode_ledger_entry(entry),
                )
            )
            db.commit()
        finally:
            db.close()

    def replay(self) -> Dict[int, LedgerEntry]:
        """Latest decoded entry per id, in insertion order."""
        db = self._session_factory()
        try:
            rows = db.query(LedgerRecord).order_by(LedgerRecord.id).all()
            latest: Dict[int, LedgerEntry] = {}
            for row in rows:
                latest[row.entry_id] = decode_ledger_entry(bytes(row.encoded), row.entry_id)
            return latest
        finally:
            db.close()


class Ledger:
    def __init__(self, store: Optional[LedgerStore] = None):
        self._entries: Dict[int, LedgerEntry] = {}
        self._next_id = 1
        self.store = store

    def _record(self, entry: LedgerEntry) -> None:
        if self.store is not None:
            self.store.append(entry)

    def get(self, entry_id: int) -> LedgerEntry:
        try:
            return self._entries[entry_id]
        except KeyError:
            raise LedgerError(f"unknown ledger entry {entry_id}") from None

    def entries(self) -> List[LedgerEntry]:
        return [self._entries[i] for i in sorted(self._entries)]

    def visible(self) -> List[LedgerEntry]:
        """Entries a receiver may still claim."""
        return [e for e in self.entries() if e.status is not LedgerStatus.SPENT]

    def submit(self, payer: GroupPoint, transcript: ChainTranscript) -> LedgerEntry:
        try:
            payment = decode_payment(transcript.payment_message)
        except DecodeError as exc:
            raise LedgerError(f"malformed payment message: {exc}") from exc
        if (
            payment.recipient != transcript.dest
            or payment.tag != transcript.tag
            or payment.label != transcript.label
            or payment.mode is not transcript.mode
        ):
            raise LedgerError("payment message does not match the transcript fields")
        entry = LedgerEntry(self._next_id, payer, transcript)
        self._entries[entry.entry_id] = entry
        self._next_id += 1
        self._record(entry)
        logger.info("ledger: entry %d submitted", entry.entry_id)
        return entry

    def confirm(self, entry_id: int) -> LedgerEntry:
        entry = self.get(entry_id)
        tx = entry.transcript
        if not ts_verify(entry.payer, tx.payment_message, tx.payment_sig):
            logger.warning("ledger: entry %d rejected, payment signature invalid", entry_id)
            raise LedgerError(f"entry {entry_id}: payment signature does not verify under the payer key")
        entry.advance(LedgerStatus.CONFIRMED)
        self._record(entry)
        logger.info("ledger: entry %d confirmed", entry_id)
        return entry

    def mark_spent(self, entry_id: int, spend_message: bytes, spend_sig: Signature) -> LedgerEntry:
        entry = self.get(entry_id)
        if entry.status is not LedgerStatus.CONFIRMED:
            raise LedgerError(f"entry {entry_id} is {entry.status.value}, only confirmed entries can be spent")
        tx = entry.transcript
        try:
            spend = decode_spend(spend_message)
        except DecodeError as exc:
            raise LedgerError(f"malformed spend message: {exc}") from exc
        if spend.source != tx.dest or spend.tag != tx.tag:
            raise LedgerError(f"entry {entry_id}: spend message refers to another output")
        if not ts_verify(tx.dest, spend_message, spend_sig):
            logger.warning("ledger: entry %d spend rejected, signature invalid", entry_id)
            raise LedgerError(f"entry {entry_id}: spend signature does not verify under the destination")
        entry.transcript = replace(tx, spend_message=spend_message, spend_sig=spend_sig)
        entry.advance(LedgerStatus.SPENT)
        self._record(entry)
        logger.info("ledger: entry %d spent", entry_id)
        return entry
