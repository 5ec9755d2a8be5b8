# File: app/crypto/tsig.py
"""
Two-round threshold Schnorr signatures over secp256k1.

Round 1: signer i samples k_i and publishes R_i = k_i·G; R = Σ λ_{i,T}·R_i.
Round 2: e = H(encode(R) ∥ encode(X) ∥ m); signer i publishes
s_i = k_i + e·x_i; s = Σ λ_{i,T}·s_i. Then s·G = R + e·X.

The same code signs under a long-term key A and under any additively derived
key (a DKD child B^(k) or a one-time destination D^(k)) without re-keying.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional

from ..errors import DecodeError, DomainError, MisbehavingSigner, NonceReused, SubThreshold
from .group import POINT_LEN, SCALAR_LEN, GroupPoint, RandomSource, Scalar, base_mul, hash_to_scalar
from .sharing import Share, ShareSet, lagrange_coeff, reconstruct_in_exponent, run_dkg

logger = logging.getLogger(__name__)

SIGNATURE_LEN = POINT_LEN + SCALAR_LEN
SIGNATURE_ACCOUNTED_LEN = 64


@dataclass(frozen=True)
class Signature:
    R: GroupPoint
    s: Scalar

    def to_bytes(self) -> bytes:
        return self.R.to_bytes() + self.s.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        if len(data) != SIGNATURE_LEN:
            raise DecodeError(f"signature must be {SIGNATURE_LEN} bytes, got {len(data)}")
        return cls(GroupPoint.from_bytes(data[:POINT_LEN]), Scalar.from_bytes(data[POINT_LEN:]))


@dataclass(frozen=True)
class NonceCommitment:
    index: int
    R_i: GroupPoint


@dataclass(frozen=True)
class PartialSignature:
    index: int
    s_i: Scalar


def challenge(R: GroupPoint, pub: GroupPoint, message: bytes) -> Scalar:
    return hash_to_scalar(R.to_bytes() + pub.to_bytes() + message)


class SigningSession:
    """
    One signer's state for one message. The nonce share is single-use: after
    ``respond`` it is overwritten and a second response is refused.
    """

    def __init__(self, share: Share, message: bytes, signer_set: Iterable[int], rng: RandomSource):
        self.index = share.index
        self.message = message
        self.signer_set = sorted(signer_set)
        if self.index not in self.signer_set:
            raise DomainError(f"signer {self.index} is not in signer set {self.signer_set}")
        self._share: Optional[Share] = share
        self._nonce: Optional[Scalar] = Scalar.random(rng)
        self.nonce_commitment = base_mul(self._nonce)
        self.R: Optional[GroupPoint] = None
        self.e: Optional[Scalar] = None

    def commit(self) -> NonceCommitment:
        return NonceCommitment(self.index, self.nonce_commitment)

    def respond(self, R: GroupPoint, e: Scalar) -> PartialSignature:
        if self._nonce is None or self._share is None:
            raise NonceReused(f"signer {self.index} already produced a partial signature")
        s_i = self._nonce + e * self._share.value
        self.R, self.e = R, e
        self._nonce = None
        self._share = None
        return PartialSignature(self.index, s_i)

    @property
    def spent(self) -> bool:
        return self._nonce is None


def aggregate_nonce(commitments: Iterable[NonceCommitment]) -> GroupPoint:
    return reconstruct_in_exponent({c.index: c.R_i for c in commitments})


def verify_partial(
    partial: PartialSignature,
    commitment: NonceCommitment,
    public_share: GroupPoint,
    e: Scalar,
) -> bool:
    """s_i·G == R_i + e·X_i."""
    return base_mul(partial.s_i) == commitment.R_i + public_share.multiply(e)


def aggregate_signature(
    R: GroupPoint,
    partials: Iterable[PartialSignature],
    commitments: Dict[int, NonceCommitment],
    key: ShareSet,
    e: Scalar,
) -> Signature:
    items = sorted(partials, key=lambda p: p.index)
    subset = [p.index for p in items]
    for p in items:
        if not verify_partial(p, commitments[p.index], key.public_for(p.index), e):
            logger.warning("tsig: partial signature from signer %d failed verification", p.index)
            raise MisbehavingSigner(p.index)
    s = Scalar(0)
    for p in items:
        s = s + lagrange_coeff(p.index, subset) * p.s_i
    return Signature(R, s)


def check_signer_set(signers: Iterable[int], key: ShareSet) -> List[int]:
    members = sorted(signers)
    if len(members) < key.t:
        raise SubThreshold(len(members), key.t)
    if len(set(members)) != len(members):
        raise DomainError(f"duplicate signer indices in {members}")
    for i in members:
        key.public_for(i)
    return members


PartialTamper = Callable[[int, Scalar], Scalar]


def ts_keygen(n: int, t: int, rng: RandomSource, corrupt=None) -> ShareSet:
    """({x_i}, X) ← KeyGen(n, t) via the Feldman DKG."""
    return run_dkg(n, t, rng, corrupt).share_set


def ts_sign(
    message: bytes,
    key: ShareSet,
    signers: Iterable[int],
    rng: RandomSource,
    corrupt: Optional[PartialTamper] = None,
) -> Signature:
    """
    In-process driver for both rounds. The threshold gate runs before any
    session, so a sub-threshold set never produces signing material.
    """
    members = check_signer_set(signers, key)
    sessions = [SigningSession(key.share_for(i), message, members, rng) for i in members]
    commitments = {s.index: s.commit() for s in sessions}
    R = aggregate_nonce(commitments.values())
    e = challenge(R, key.aggregate, message)
    partials = []
    for session in sessions:
        partial = session.respond(R, e)
        if corrupt is not None:
            partial = PartialSignature(partial.index, corrupt(partial.index, partial.s_i))
        partials.append(partial)
    return aggregate_signature(R, partials, commitments, key, e)


def ts_verify(pub: GroupPoint, message: bytes, sig: Signature) -> bool:
    """s·G == R + H(encode(R) ∥ encode(X) ∥ m)·X."""
    if pub.is_identity() or sig.R.is_identity():
        return False
    e = challenge(sig.R, pub, message)
    return base_mul(sig.s) == sig.R + pub.multiply(e)


def schnorr_sign(secret: Scalar, message: bytes, rng: RandomSource) -> Signature:
    """Single-key Schnorr under the same challenge framing."""
    k = Scalar.random(rng)
    R = base_mul(k)
    e = challenge(R, base_mul(secret), message)
    return Signature(R, k + e * secret)
