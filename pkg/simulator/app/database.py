from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

Base = declarative_base()


def make_session_factory(url: str, echo: bool = False) -> sessionmaker:
    """Engine + tables + session factory for the append-only ledger store."""
    engine = create_engine(url, echo=echo, future=True)
    Base.metadata.create_all(bind=engine)
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)
