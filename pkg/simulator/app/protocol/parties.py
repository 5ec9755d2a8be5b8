# File: app/protocol/parties.py
"""Party state machines and organization setup."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from ..crypto.dkd import CHAINCODE_LEN, DerivationState
from ..crypto.dsag import OneTimeShare
from ..crypto.group import GroupPoint, RandomSource, Scalar
from ..crypto.sharing import Complaint, Share, ShareSet, ShareTamper, run_dkg
from ..errors import DivergentDerivation, DomainError
from .types import DaoRole, LedgerEntry, LedgerStatus, SessionDescriptor

logger = logging.getLogger(__name__)


@dataclass
class PartyState:
    """
    Private state of one DAO member.

    The long-lived part is the signing share and, for receivers, the
    derivation state. Everything below ``erased_epochs`` is per-session
    material and is dropped by ``erase_session``.
    """

    dao: DaoRole
    index: int
    signing_share: Share
    derivation: Optional[DerivationState] = None
    erased_epochs: Set[int] = field(default_factory=set)

    partial_term: Optional[GroupPoint] = None
    shared_secret: Optional[GroupPoint] = None
    rho: Optional[Scalar] = None
    one_time: Optional[OneTimeShare] = None
    pending: Optional[DerivationState] = None

    def adopt(self, state: DerivationState) -> None:
        if state.my_share is None or state.my_share.index != self.index:
            raise DomainError(f"party {self.index} cannot adopt a state without its own share")
        self.derivation = state
        self.signing_share = state.my_share

    def clear_transient(self) -> None:
        self.partial_term = None
        self.shared_secret = None
        self.rho = None
        self.one_time = None
        self.pending = None

    def erase_session(self, epoch: int) -> None:
        self.clear_transient()
        self.erased_epochs.add(epoch)

    def serialize(self) -> bytes:
        """Byte dump of every field, for the erasure audit."""
        out = bytearray()
        out += self.dao.value.encode() + self.index.to_bytes(2, "big")
        out += self.signing_share.value.to_bytes()
        for state in (self.derivation, self.pending):
            if state is None:
                continue
            out += state.epoch.to_bytes(4, "big") + state.aggregate_pub.to_bytes() + state.chaincode
            for j in sorted(state.public_shares):
                out += state.public_shares[j].to_bytes()
            if state.my_share is not None:
                out += state.my_share.value.to_bytes()
            for tag in sorted(state.consumed_tags):
                out += tag
        for epoch in sorted(self.erased_epochs):
            out += epoch.to_bytes(4, "big")
        for point in (self.partial_term, self.shared_secret):
            if point is not None:
                out += point.to_bytes(allow_identity=True)
        if self.rho is not None:
            out += self.rho.to_bytes()
        if self.one_time is not None:
            out += self.one_time.secret.to_bytes() + self.one_time.public.to_bytes()
        return bytes(out)


@dataclass(frozen=True)
class IssuedDescriptor:
    descriptor: SessionDescriptor
    parent_epoch: int
    entry: Optional[LedgerEntry] = None


@dataclass
class Dao:
    role: DaoRole
    n: int
    t: int
    public_key: GroupPoint
    public_shares: Dict[int, GroupPoint]
    parties: Dict[int, PartyState]
    complaints: Tuple[Complaint, ...] = ()
    excluded: frozenset = frozenset()
    issued: Dict[bytes, IssuedDescriptor] = field(default_factory=dict)

    @property
    def indices(self) -> List[int]:
        return sorted(self.parties)

    def party(self, index: int) -> PartyState:
        try:
            return self.parties[index]
        except KeyError:
            raise DomainError(f"{self.role.value} DAO has no party {index}") from None

    def signing_key(self, members: List[int]) -> ShareSet:
        """Long-term key restricted to the secret shares of ``members``."""
        return ShareSet(
            n=self.n,
            t=self.t,
            shares={i: self.party(i).signing_share for i in members},
            public_shares=self.public_shares,
            aggregate=self.public_key,
        )

    def current_state(self) -> DerivationState:
        """Public derivation view, after checking every receiver agrees on it."""
        if self.role is not DaoRole.RECEIVER:
            raise DomainError("only the receiver DAO keeps a derivation state")
        views = {i: self.party(i).derivation for i in self.indices}
        first = views[self.indices[0]]
        for i, state in views.items():
            if state.fingerprint() != first.fingerprint():
                raise DivergentDerivation(i)
        return first.public_view()

    def live_descriptors(self) -> List[SessionDescriptor]:
        state = self.current_state()
        return [
            issued.descriptor
            for issued in self.issued.values()
            if issued.parent_epoch == state.epoch and not state.is_consumed(issued.descriptor.tag)
        ]

    def unredeemed_payment(self, epoch: int) -> Optional[LedgerEntry]:
        """A confirmed, unspent payment to a descriptor issued at ``epoch``, if any."""
        for issued in self.issued.values():
            if issued.parent_epoch != epoch or issued.entry is None:
                continue
            if issued.entry.status is LedgerStatus.CONFIRMED:
                return issued.entry
        return None

    def serialize_parties(self) -> bytes:
        return b"".join(self.parties[i].serialize() for i in self.indices)


def setup_dao(
    role: DaoRole,
    n: int,
    t: int,
    rng: RandomSource,
    corrupt: Optional[ShareTamper] = None,
) -> Dao:
    """Feldman DKG for the organization; receivers also get an epoch-0 derivation state."""
    outcome = run_dkg(n, t, rng, corrupt)
    key = outcome.share_set
    parties = {i: PartyState(role, i, key.share_for(i)) for i in range(1, n + 1)}

    if role is DaoRole.RECEIVER:
        root_chaincode = rng.randbytes(CHAINCODE_LEN)
        for i, party in parties.items():
            party.derivation = DerivationState(
                epoch=0,
                aggregate_pub=key.aggregate,
                chaincode=root_chaincode,
                public_shares=dict(key.public_shares),
                my_share=party.signing_share,
            )

    logger.info("setup: %s DAO ready (n=%d, t=%d)", role.value, n, t)
    return Dao(
        role=role,
        n=n,
        t=t,
        public_key=key.aggregate,
        public_shares=dict(key.public_shares),
        parties=parties,
        complaints=outcome.complaints,
        excluded=outcome.excluded,
    )
