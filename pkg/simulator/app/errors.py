# File: app/errors.py
"""Exception hierarchy shared by every layer of the simulator."""

from typing import Optional


class Dao2Error(Exception):
    """Base class for all protocol and encoding failures."""


class DomainError(Dao2Error, ValueError):
    """A precondition on an argument was violated."""


class DecodeError(Dao2Error, ValueError):
    """Bytes do not form a canonical encoding of the expected kind."""


class TagConsumed(Dao2Error):
    def __init__(self, tag: bytes):
        super().__init__(f"derivation tag {tag.hex()} already consumed")
        self.tag = tag


class SubThreshold(Dao2Error):
    def __init__(self, size: int, threshold: int):
        super().__init__(f"{size} participants is below threshold {threshold}")
        self.size = size
        self.threshold = threshold


class DegenerateSession(Dao2Error):
    """The shared secret or a session key collapsed to the identity."""


class InconsistentShares(Dao2Error):
    """The Lagrange sum of one-time public shares does not match the destination."""


class IncompleteTranscript(Dao2Error):
    pass


class LedgerError(Dao2Error):
    pass


class NonceReused(Dao2Error):
    pass


class PaymentOutstanding(Dao2Error):
    """A confirmed payment to the current epoch has not been redeemed yet."""

    def __init__(self, entry_id: int):
        super().__init__(f"entry {entry_id} pays the current receiver epoch and is still unspent")
        self.entry_id = entry_id


class _PartyError(Dao2Error):
    label = "party"

    def __init__(self, index: int, detail: Optional[str] = None):
        message = f"{self.label} {index}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.index = index


class InconsistentContribution(_PartyError):
    label = "opening does not match commitment for party"


class MisbehavingParty(_PartyError):
    label = "inconsistent one-time share from party"


class MisbehavingSigner(_PartyError):
    label = "invalid partial signature from signer"


class DivergentDerivation(_PartyError):
    label = "derivation state diverged at party"
