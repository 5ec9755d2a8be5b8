# File: app/crypto/dsag.py
"""
Distributed stealth-address generation.

Sender side: each member of S1 computes Ω_i = a_i·B^(k), optionally behind a
hash commitment; the Lagrange sum Ω = a·B^(k) seeds ρ = H(Ω ∥ ξ) and the
one-time destination D = B^(k) + ρ·G.

Receiver side: each member of S2 computes Ω'_j = b_j^(k)·A; the sum equals Ω,
which lets the organization detect the output and shift its child shares by ρ
into one-time shares d_j = b_j^(k) + ρ.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from ..errors import (
    DecodeError,
    DegenerateSession,
    DomainError,
    InconsistentContribution,
    InconsistentShares,
    MisbehavingParty,
    SubThreshold,
)
from .dkd import DerivationTag
from .group import GroupPoint, RandomSource, Scalar, base_mul, hash_to_scalar, sha256
from .sharing import Share, ShareSet, reconstruct_in_exponent

logger = logging.getLogger(__name__)

LABEL_LEN = 32
NONCE_LEN = 32
COMMITMENT_LEN = 32


@dataclass(frozen=True)
class StealthLabel:
    xi: bytes

    def __post_init__(self):
        if len(self.xi) != LABEL_LEN:
            raise DecodeError(f"stealth label must be {LABEL_LEN} bytes, got {len(self.xi)}")

    @classmethod
    def random(cls, rng: RandomSource) -> "StealthLabel":
        return cls(rng.randbytes(LABEL_LEN))


@dataclass(frozen=True)
class StealthDestination:
    dest: GroupPoint
    tag: DerivationTag
    label: StealthLabel

    def __post_init__(self):
        self.dest.require_non_identity("stealth destination")


@dataclass(frozen=True)
class PartialDH:
    index: int
    term: GroupPoint
    commitment: Optional[bytes] = None
    opening_nonce: Optional[bytes] = None


@dataclass(frozen=True)
class OneTimeShare:
    index: int
    secret: Scalar
    public: GroupPoint

    def as_share(self) -> Share:
        return Share(self.index, self.secret)


def commit_term(term: GroupPoint, nonce: bytes) -> bytes:
    """Com(Ω_i; r_i) = SHA-256(encode(Ω_i) ∥ r_i)."""
    return sha256(term.to_bytes(allow_identity=True) + nonce)


def _partial(my_share: Share, other_pub: GroupPoint, rng: Optional[RandomSource], commit_open: bool) -> PartialDH:
    other_pub.require_non_identity("counterparty public key")
    term = other_pub.multiply(my_share.value)
    if not commit_open:
        return PartialDH(my_share.index, term)
    if rng is None:
        raise DomainError("commit-open needs a randomness source for the opening nonce")
    nonce = rng.randbytes(NONCE_LEN)
    return PartialDH(my_share.index, term, commit_term(term, nonce), nonce)


def sender_partial_dh(
    my_share: Share,
    child_pub: GroupPoint,
    rng: Optional[RandomSource] = None,
    commit_open: bool = True,
) -> PartialDH:
    """Ω_i = a_i·B^(k), committed when ``commit_open`` is set."""
    return _partial(my_share, child_pub, rng, commit_open)


def receiver_partial_dh(my_child_share: Share, sender_pub: GroupPoint) -> PartialDH:
    """Ω'_j = b_j^(k)·A. Receivers broadcast in the clear."""
    return _partial(my_child_share, sender_pub, None, False)


def verify_opening(partial: PartialDH) -> None:
    if partial.commitment is None or partial.opening_nonce is None:
        raise InconsistentContribution(partial.index, "missing commitment or opening")
    if commit_term(partial.term, partial.opening_nonce) != partial.commitment:
        raise InconsistentContribution(partial.index)


def aggregate_shared_secret(
    partials: Iterable[PartialDH],
    subset: Sequence[int],
    threshold: int = 1,
    require_openings: bool = False,
) -> GroupPoint:
    """Ω = Σ_{i∈S} λ_{i,S}·Ω_i, combined in ascending index order."""
    members = sorted(subset)
    if len(members) < threshold:
        raise SubThreshold(len(members), threshold)
    by_index = {p.index: p for p in partials}
    missing = [i for i in members if i not in by_index]
    if missing:
        raise DomainError(f"no partial term from parties {missing}")
    for i in members:
        if require_openings or by_index[i].commitment is not None:
            verify_opening(by_index[i])
    return reconstruct_in_exponent({i: by_index[i].term for i in members})


def stealth_offset(shared_secret: GroupPoint, label: StealthLabel) -> Scalar:
    """ρ = H(encode(Ω) ∥ ξ)."""
    return hash_to_scalar(shared_secret.to_bytes() + label.xi)


def make_destination(
    shared_secret: GroupPoint,
    child_pub: GroupPoint,
    label: StealthLabel,
    tag: DerivationTag,
) -> StealthDestination:
    if shared_secret.is_identity():
        raise DegenerateSession("shared secret is the identity; the setup is broken")
    child_pub.require_non_identity("child public key")
    rho = stealth_offset(shared_secret, label)
    return StealthDestination(child_pub + base_mul(rho), tag, label)


def detect(candidate: StealthDestination, child_pub: GroupPoint, recv_shared_secret: GroupPoint) -> bool:
    """True iff B^(k) + H(Ω' ∥ ξ)·G equals the candidate destination."""
    if recv_shared_secret.is_identity() or child_pub.is_identity():
        return False
    rho = stealth_offset(recv_shared_secret, candidate.label)
    return child_pub + base_mul(rho) == candidate.dest


def recover_one_time_share(my_child_share: Share, rho: Scalar) -> OneTimeShare:
    secret = my_child_share.value + rho
    return OneTimeShare(my_child_share.index, secret, base_mul(secret))


def verify_one_time_shares(
    publics: Mapping[int, GroupPoint],
    subset: Sequence[int],
    dest: GroupPoint,
    threshold: int = 1,
    child_publics: Optional[Mapping[int, GroupPoint]] = None,
    rho: Optional[Scalar] = None,
) -> None:
    """
    Check D == Σ λ_{j,S}·D_j. The aggregate check only says that something
    is wrong; passing ``child_publics`` and ``rho`` turns on the per-share
    check D_j == B_j + ρ·G, which names the first inconsistent party.
    """
    members = sorted(subset)
    if len(members) < threshold:
        raise SubThreshold(len(members), threshold)
    missing = [j for j in members if j not in publics]
    if missing:
        logger.warning("dsag: no one-time public share from parties %s", missing)
        raise InconsistentShares(f"no one-time public share from parties {missing}")
    if child_publics is not None:
        if rho is None:
            raise DomainError("per-share verification needs the offset")
        unknown = [j for j in members if j not in child_publics]
        if unknown:
            raise DomainError(f"no child public share for parties {unknown}")
        shift = base_mul(rho)
        for j in members:
            if publics[j] != child_publics[j] + shift:
                logger.warning("dsag: one-time public share of party %d is inconsistent", j)
                raise MisbehavingParty(j)
    if reconstruct_in_exponent({j: publics[j] for j in members}) != dest:
        logger.warning("dsag: one-time shares over %s do not reconstruct the destination", members)
        raise InconsistentShares(f"Lagrange sum over {members} does not equal the destination")


def one_time_share_set(
    shares: Iterable[OneTimeShare],
    n: int,
    t: int,
    dest: GroupPoint,
) -> ShareSet:
    """Package recovered one-time shares as a signing key under D^(k)."""
    items = list(shares)
    return ShareSet(
        n=n,
        t=t,
        shares={s.index: s.as_share() for s in items},
        public_shares={s.index: s.public for s in items},
        aggregate=dest,
    )
