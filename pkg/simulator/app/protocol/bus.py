# File: app/protocol/bus.py
import threading
from typing import List, Optional

from ..crypto.group import RandomSource
from ..schemas import MessageRecord
from ..wire import EncodedObject
from .types import BusMessage, DaoRole, PayloadKind


class MessageBus:
    """
    Authenticated broadcast channel for one session.

    Messages are immutable and kept in publish order. ``collect`` hands them
    out in a shuffled order drawn from the session rng, so consumers never
    rely on arrival order and a fixed seed still replays bit for bit.
    """

    def __init__(self, session_id: str, rng: RandomSource):
        self.session_id = session_id
        self._rng = rng
        self._lock = threading.Lock()
        self._messages: List[BusMessage] = []

    def publish(self, dao: DaoRole, sender: int, obj: EncodedObject) -> BusMessage:
        msg = BusMessage(self.session_id, dao, sender, obj.kind, obj.payload, obj.accounted_len)
        with self._lock:
            self._messages.append(msg)
        return msg

    def mark(self) -> int:
        """Position of the next message; pass it to ``collect`` as ``since``."""
        with self._lock:
            return len(self._messages)

    def collect(self, kind: PayloadKind, dao: Optional[DaoRole] = None, since: int = 0) -> List[BusMessage]:
        with self._lock:
            batch = [m for m in self._messages[since:] if m.kind is kind and (dao is None or m.dao is dao)]
        order = list(range(len(batch)))
        for i in range(len(order) - 1, 0, -1):
            j = self._rng.randrange(0, i + 1)
            order[i], order[j] = order[j], order[i]
        return [batch[i] for i in order]

    @property
    def messages(self) -> List[BusMessage]:
        with self._lock:
            return list(self._messages)

    def records(self) -> List[MessageRecord]:
        return [
            MessageRecord(
                session_id=m.session_id,
                dao=m.dao.value,
                sender=m.sender,
                kind=m.kind.value,
                raw_len=m.raw_len,
                accounted_len=m.accounted_len,
                payload_hex=m.payload.hex(),
            )
            for m in self.messages
        ]
