from datetime import datetime, timezone

from sqlalchemy import Column, DateTime, Integer, LargeBinary, String

from .database import Base


def _now():
    return datetime.now(timezone.utc)


class LedgerRecord(Base):
    __tablename__ = "ledger_records"

    id = Column(Integer, primary_key=True, index=True)
    entry_id = Column(Integer, index=True, nullable=False)
    status = Column(String(16), nullable=False)
    encoded = Column(LargeBinary, nullable=False)  # canonical LedgerEntry bytes
    recorded_at = Column(DateTime, default=_now)
