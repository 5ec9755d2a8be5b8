# File: conftest.py
import os
import random
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from app.protocol.ledger import Ledger  # noqa: E402
from app.protocol.parties import setup_dao  # noqa: E402
from app.protocol.types import DaoRole  # noqa: E402


@pytest.fixture
def rng():
    return random.Random(2024)


@pytest.fixture
def make_daos():
    """Factory: (sender, receiver, ledger) for the given sizes and seed."""

    def _make(n1=3, n2=3, t=2, seed=2024):
        r = random.Random(seed)
        sender = setup_dao(DaoRole.SENDER, n1, t, r)
        receiver = setup_dao(DaoRole.RECEIVER, n2, t, r)
        return sender, receiver, Ledger(), r

    return _make
