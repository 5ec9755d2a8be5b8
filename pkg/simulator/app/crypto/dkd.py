# File: app/crypto/dkd.py
"""
Distributed key derivation.

A receiver organization's extended key moves along a linear chain of epochs.
Each step adds a public offset ω, derived with HMAC-SHA512 from the parent
key, the parent chaincode and a fresh 16-byte tag, to every share, every
public share and the aggregate key. No step ever needs more than one share.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import FrozenSet, Iterable, Mapping, Optional, Tuple

from cryptography.hazmat.primitives import hashes, hmac

from ..errors import DecodeError, DomainError, TagConsumed
from .group import GroupPoint, RandomSource, Scalar, base_mul
from .sharing import Share

logger = logging.getLogger(__name__)

TAG_LEN = 16
CHAINCODE_LEN = 32


@dataclass(frozen=True)
class DerivationTag:
    tag: bytes

    def __post_init__(self):
        if len(self.tag) != TAG_LEN:
            raise DecodeError(f"derivation tag must be {TAG_LEN} bytes, got {len(self.tag)}")

    @classmethod
    def random(cls, rng: RandomSource) -> "DerivationTag":
        return cls(rng.randbytes(TAG_LEN))

    def __repr__(self) -> str:
        return f"DerivationTag({self.tag.hex()})"


@dataclass(frozen=True)
class ChildKey:
    """Public result of one derivation step: (B^(k), cc^(k), ω^(k)) for a tag."""

    child_pub: GroupPoint
    child_cc: bytes
    offset: Scalar
    tag: DerivationTag


@dataclass(frozen=True)
class DerivationState:
    epoch: int
    aggregate_pub: GroupPoint
    chaincode: bytes
    public_shares: Mapping[int, GroupPoint]
    my_share: Optional[Share] = None
    consumed_tags: FrozenSet[bytes] = field(default_factory=frozenset)

    def __post_init__(self):
        if len(self.chaincode) != CHAINCODE_LEN:
            raise DomainError(f"chaincode must be {CHAINCODE_LEN} bytes")
        if self.epoch < 0:
            raise DomainError("epoch must be non-negative")

    def is_consumed(self, tag: DerivationTag) -> bool:
        return tag.tag in self.consumed_tags

    def consume(self, tag: DerivationTag) -> "DerivationState":
        return replace(self, consumed_tags=self.consumed_tags | {tag.tag})

    def public_view(self) -> "DerivationState":
        return replace(self, my_share=None)

    def fingerprint(self) -> Tuple[int, bytes, bytes]:
        """(epoch, B, cc): what honest parties must agree on bit for bit."""
        return self.epoch, self.aggregate_pub.to_bytes(), self.chaincode


def derive_offset(parent_pub: GroupPoint, parent_cc: bytes, tag: DerivationTag) -> Tuple[Scalar, bytes]:
    """(ω, cc') = HMAC-SHA512(cc, encode(B) ∥ id); ω is the first half reduced mod q."""
    parent_pub.require_non_identity("parent public key")
    mac = hmac.HMAC(parent_cc, hashes.SHA512())
    mac.update(parent_pub.to_bytes() + tag.tag)
    digest = mac.finalize()
    return Scalar(int.from_bytes(digest[:32], "big")), digest[32:]


def derive_child_public(parent: DerivationState, tag: DerivationTag) -> ChildKey:
    """B^(k) = B^(k−1) + ω·G. Needs only public state, so senders can run it too."""
    if parent.is_consumed(tag):
        raise TagConsumed(tag.tag)
    offset, child_cc = derive_offset(parent.aggregate_pub, parent.chaincode, tag)
    child_pub = parent.aggregate_pub + base_mul(offset)
    return ChildKey(child_pub, child_cc, offset, tag)


def derive_child_share(parent: DerivationState, child: ChildKey) -> DerivationState:
    """b_j += ω, every B_j += ω·G, B += ω·G, epoch += 1. The parent is left untouched."""
    if parent.my_share is None:
        raise DomainError("derive_child_share needs a party that holds a share")
    shift = base_mul(child.offset)
    share = Share(parent.my_share.index, parent.my_share.value + child.offset)
    publics = {j: p + shift for j, p in parent.public_shares.items()}
    return DerivationState(
        epoch=parent.epoch + 1,
        aggregate_pub=parent.aggregate_pub + shift,
        chaincode=child.child_cc,
        public_shares=publics,
        my_share=share,
        consumed_tags=parent.consumed_tags,
    )


def advance(parent: DerivationState, tag: DerivationTag) -> DerivationState:
    """One full epoch step for a share holder: derive, apply, consume the tag."""
    child = derive_child_public(parent, tag)
    return derive_child_share(parent, child).consume(tag)


def derive_chain(state: DerivationState, tags: Iterable[DerivationTag]) -> DerivationState:
    for tag in tags:
        state = advance(state, tag)
    return state
