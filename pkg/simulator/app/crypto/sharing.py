# File: app/crypto/sharing.py
"""
Shamir sharing over Z_q, Lagrange interpolation at zero, and a Feldman
verifiable DKG used as the threshold setup for both organizations.

Party indices run 1..n; evaluation point 0 holds the secret.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..errors import DomainError
from .group import ORDER, GroupPoint, RandomSource, Scalar, base_mul, point_sum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Share:
    index: int
    value: Scalar

    def __post_init__(self):
        if self.index < 1:
            raise DomainError(f"share index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class Polynomial:
    """f(x) = c_0 + c_1 x + ... + c_{t-1} x^{t-1} over Z_q."""

    coefficients: Tuple[Scalar, ...]

    @classmethod
    def random(cls, constant: Scalar, degree: int, rng: RandomSource) -> "Polynomial":
        rest = tuple(Scalar.random(rng) for _ in range(degree))
        return cls((constant,) + rest)

    @property
    def constant(self) -> Scalar:
        return self.coefficients[0]

    def evaluate(self, x: int) -> Scalar:
        acc = 0
        for coeff in reversed(self.coefficients):
            acc = (acc * x + coeff.value) % ORDER
        return Scalar(acc)

    def commitments(self) -> "FeldmanCommitments":
        return FeldmanCommitments(tuple(base_mul(c) for c in self.coefficients))


@dataclass(frozen=True)
class FeldmanCommitments:
    coeff_commits: Tuple[GroupPoint, ...]

    @property
    def threshold(self) -> int:
        return len(self.coeff_commits)

    def evaluate(self, index: int) -> GroupPoint:
        """Σ_k index^k · C_k, the public image of the dealt share for ``index``."""
        total = GroupPoint.identity()
        for power, commit in enumerate(self.coeff_commits):
            total = total + commit.multiply(Scalar(pow(index, power)))
        return total


@dataclass(frozen=True)
class ShareSet:
    """
    A threshold sharing with its public images.

    ``shares`` may be partial: a single party's view holds one entry, the
    simulator's combined view holds all n.
    """

    n: int
    t: int
    shares: Mapping[int, Share]
    public_shares: Mapping[int, GroupPoint]
    aggregate: GroupPoint

    @property
    def indices(self) -> List[int]:
        return sorted(self.public_shares)

    def share_for(self, index: int) -> Share:
        try:
            return self.shares[index]
        except KeyError:
            raise DomainError(f"no secret share held for party {index}") from None

    def public_for(self, index: int) -> GroupPoint:
        try:
            return self.public_shares[index]
        except KeyError:
            raise DomainError(f"unknown party index {index}") from None


def _check_distinct(indices: Sequence[int]) -> None:
    if len(set(indices)) != len(indices):
        raise DomainError(f"duplicate party indices in {sorted(indices)}")
    for i in indices:
        if i < 1:
            raise DomainError(f"party index must be >= 1, got {i}")


@lru_cache(maxsize=4096)
def _lagrange_at_zero(i: int, subset: frozenset) -> int:
    num, den = 1, 1
    for j in subset:
        if j == i:
            continue
        num = num * j % ORDER
        den = den * (j - i) % ORDER
    return num * pow(den, -1, ORDER) % ORDER


def lagrange_coeff(i: int, subset: Iterable[int]) -> Scalar:
    """λ_{i,S} = Π_{j∈S, j≠i} j / (j − i)."""
    members = list(subset)
    _check_distinct(members)
    if i not in members:
        raise DomainError(f"index {i} is not in subset {sorted(members)}")
    return Scalar(_lagrange_at_zero(i, frozenset(members)))


def _validate_params(n: int, t: int) -> None:
    if n < 1:
        raise DomainError(f"party count must be >= 1, got {n}")
    if t < 1 or t > n:
        raise DomainError(f"threshold must satisfy 1 <= t <= n, got t={t}, n={n}")


def share_secret(secret: Scalar, n: int, t: int, rng: RandomSource) -> ShareSet:
    _validate_params(n, t)
    poly = Polynomial.random(secret, t - 1, rng)
    return share_set_from_polynomial(poly, n)


def share_set_from_polynomial(poly: Polynomial, n: int) -> ShareSet:
    t = len(poly.coefficients)
    _validate_params(n, t)
    shares = {j: Share(j, poly.evaluate(j)) for j in range(1, n + 1)}
    publics = {j: base_mul(s.value) for j, s in shares.items()}
    return ShareSet(n, t, shares, publics, base_mul(poly.constant))


def reconstruct(shares: Sequence[Share]) -> Scalar:
    if not shares:
        raise DomainError("cannot reconstruct from an empty share list")
    indices = [s.index for s in shares]
    _check_distinct(indices)
    total = Scalar(0)
    for share in shares:
        total = total + lagrange_coeff(share.index, indices) * share.value
    return total


def reconstruct_in_exponent(points: Mapping[int, GroupPoint]) -> GroupPoint:
    """Σ λ_{i,S}·P_i over S = points.keys(), summed in ascending index order."""
    if not points:
        raise DomainError("cannot interpolate an empty point set")
    subset = sorted(points)
    return point_sum(points[i].multiply(lagrange_coeff(i, subset)) for i in subset)


# ---------------------------
# Feldman DKG
# ---------------------------

@dataclass(frozen=True)
class DkgContribution:
    dealer: int
    shares: Mapping[int, Scalar]
    commitments: FeldmanCommitments


@dataclass(frozen=True)
class Complaint:
    dealer: int
    complainer: int


@dataclass(frozen=True)
class DkgOutcome:
    share_set: ShareSet
    complaints: Tuple[Complaint, ...]
    excluded: frozenset


ShareTamper = Callable[[int, int, Scalar], Scalar]


def dkg_round(party_id: int, n: int, t: int, rng: RandomSource) -> DkgContribution:
    """One dealer's contribution: a random degree t−1 polynomial evaluated at 1..n."""
    _validate_params(n, t)
    poly = Polynomial.random(Scalar.random(rng), t - 1, rng)
    dealt = {j: poly.evaluate(j) for j in range(1, n + 1)}
    return DkgContribution(party_id, dealt, poly.commitments())


def dkg_verify(share: Scalar, recipient: int, commitments: FeldmanCommitments) -> bool:
    """Feldman check s_ij·G == Σ_k j^k·C_k."""
    return base_mul(share) == commitments.evaluate(recipient)


def dkg_finalize(
    n: int,
    t: int,
    received: Mapping[int, Mapping[int, Scalar]],
    commitments: Mapping[int, FeldmanCommitments],
    excluded: Iterable[int] = (),
) -> ShareSet:
    """
    Combine the contributions of every non-excluded dealer.

    ``received[j][dealer]`` is what party j got from ``dealer``; the result
    holds x_j = Σ s_{dealer,j} and public shares computed from commitments.
    """
    _validate_params(n, t)
    banned = set(excluded)
    qualified = sorted(d for d in commitments if d not in banned)
    if not qualified:
        raise DomainError("every dealer was excluded; no key can be formed")
    for dealer in qualified:
        if commitments[dealer].threshold != t:
            raise DomainError(f"dealer {dealer} committed to {commitments[dealer].threshold} coefficients, expected {t}")

    shares: Dict[int, Share] = {}
    for j in range(1, n + 1):
        if j not in received:
            continue
        total = Scalar(0)
        for dealer in qualified:
            total = total + received[j][dealer]
        shares[j] = Share(j, total)

    publics = {
        j: point_sum(commitments[d].evaluate(j) for d in qualified)
        for j in range(1, n + 1)
    }
    aggregate = point_sum(commitments[d].coeff_commits[0] for d in qualified)
    return ShareSet(n, t, shares, publics, aggregate)


def run_dkg(n: int, t: int, rng: RandomSource, corrupt: Optional[ShareTamper] = None) -> DkgOutcome:
    """
    Run all n parties through deal, verify, complain and finalize.

    ``corrupt(dealer, recipient, share)`` may alter a share in transit.
    Complaints are broadcast; any dealer named by a complaint is excluded.
    """
    contributions = [dkg_round(d, n, t, rng) for d in range(1, n + 1)]

    received: Dict[int, Dict[int, Scalar]] = {j: {} for j in range(1, n + 1)}
    complaints: List[Complaint] = []
    for contrib in contributions:
        for j in range(1, n + 1):
            share = contrib.shares[j]
            if corrupt is not None:
                share = corrupt(contrib.dealer, j, share)
            received[j][contrib.dealer] = share
            if not dkg_verify(share, j, contrib.commitments):
                logger.warning("dkg: party %d complains about dealer %d", j, contrib.dealer)
                complaints.append(Complaint(contrib.dealer, j))

    excluded = frozenset(c.dealer for c in complaints)
    share_set = dkg_finalize(
        n, t, received, {c.dealer: c.commitments for c in contributions}, excluded
    )
    logger.info("dkg: n=%d t=%d finished, %d dealer(s) excluded", n, t, len(excluded))
    return DkgOutcome(share_set, tuple(complaints), excluded)
