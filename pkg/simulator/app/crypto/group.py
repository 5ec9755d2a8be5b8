# File: app/crypto/group.py
"""
Prime-order group arithmetic over secp256k1.

Scalars live in Z_q and points in the secp256k1 group. Both are immutable
values with canonical encodings: 32-byte big-endian scalars and 33-byte
compressed SEC1 points. The identity point exists for intermediate sums but
has no wire encoding.
"""

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Protocol

from ecdsa import SECP256k1
from ecdsa.ellipticcurve import INFINITY, PointJacobi
from ecdsa.errors import MalformedPointError

from ..errors import DecodeError, DomainError

CURVE = SECP256k1.curve
ORDER = SECP256k1.order
FIELD_PRIME = CURVE.p()

SCALAR_LEN = 32
POINT_LEN = 33

_GENERATOR = SECP256k1.generator
_IDENTITY_BYTES = bytes(POINT_LEN)


class RandomSource(Protocol):
    """Anything shaped like ``random.Random`` (seeded) or ``secrets.SystemRandom``."""

    def randrange(self, start: int, stop: int = ...) -> int: ...

    def randbytes(self, n: int) -> bytes: ...


@dataclass(frozen=True)
class Scalar:
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % ORDER)

    @classmethod
    def random(cls, rng: RandomSource) -> "Scalar":
        return cls(rng.randrange(1, ORDER))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Scalar":
        if len(data) != SCALAR_LEN:
            raise DecodeError(f"scalar must be {SCALAR_LEN} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= ORDER:
            raise DecodeError("scalar encoding is not reduced mod q")
        return cls(value)

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_LEN, "big")

    def is_zero(self) -> bool:
        return self.value == 0

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise DomainError("zero has no inverse mod q")
        return Scalar(pow(self.value, -1, ORDER))

    def __add__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.value + other.value)

    def __sub__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.value - other.value)

    def __neg__(self) -> "Scalar":
        return Scalar(-self.value)

    def __mul__(self, other):
        if isinstance(other, Scalar):
            return Scalar(self.value * other.value)
        if isinstance(other, GroupPoint):
            return other.multiply(self)
        return NotImplemented

    def __repr__(self) -> str:
        return f"Scalar(0x{self.value:064x})"


@dataclass(frozen=True, eq=False)
class GroupPoint:
    """A secp256k1 group element; ``point is None`` is the identity."""

    point: Optional[PointJacobi] = None

    @classmethod
    def identity(cls) -> "GroupPoint":
        return cls(None)

    @classmethod
    def generator(cls) -> "GroupPoint":
        return cls(_GENERATOR)

    @classmethod
    def _wrap(cls, raw) -> "GroupPoint":
        if raw is INFINITY or raw == INFINITY:
            return cls(None)
        return cls(raw)

    @classmethod
    def from_bytes(cls, data: bytes) -> "GroupPoint":
        if len(data) != POINT_LEN:
            raise DecodeError(f"point must be {POINT_LEN} bytes, got {len(data)}")
        if data[0] not in (2, 3):
            raise DecodeError(f"unsupported point prefix 0x{data[0]:02x}")
        if int.from_bytes(data[1:], "big") >= FIELD_PRIME:
            raise DecodeError("x coordinate is not reduced mod p")
        try:
            raw = PointJacobi.from_bytes(
                CURVE, data, valid_encodings=("compressed",), order=ORDER
            )
        except (MalformedPointError, ValueError) as exc:
            raise DecodeError(f"not a curve point: {exc}") from exc
        return cls._wrap(raw)

    def is_identity(self) -> bool:
        return self.point is None

    @cached_property
    def _encoded(self) -> bytes:
        if self.point is None:
            return _IDENTITY_BYTES
        return bytes(self.point.to_bytes("compressed"))

    def to_bytes(self, allow_identity: bool = False) -> bytes:
        if self.point is None and not allow_identity:
            raise DomainError("the identity point has no canonical encoding")
        return self._encoded

    def require_non_identity(self, what: str = "point") -> "GroupPoint":
        if self.point is None:
            raise DomainError(f"{what} must not be the identity")
        return self

    def multiply(self, scalar: Scalar) -> "GroupPoint":
        if self.point is None or scalar.value == 0:
            return GroupPoint(None)
        return GroupPoint._wrap(self.point * scalar.value)

    def __add__(self, other: "GroupPoint") -> "GroupPoint":
        if self.point is None:
            return other
        if other.point is None:
            return self
        return GroupPoint._wrap(self.point + other.point)

    def __neg__(self) -> "GroupPoint":
        if self.point is None:
            return self
        return GroupPoint(-self.point)

    def __sub__(self, other: "GroupPoint") -> "GroupPoint":
        return self + (-other)

    def __rmul__(self, other):
        if isinstance(other, Scalar):
            return self.multiply(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupPoint):
            return NotImplemented
        return self._encoded == other._encoded

    def __hash__(self) -> int:
        return hash(self._encoded)

    def __repr__(self) -> str:
        if self.point is None:
            return "GroupPoint(identity)"
        return f"GroupPoint({self._encoded.hex()})"


def scalar_add(a: Scalar, b: Scalar) -> Scalar:
    return a + b


def scalar_mul(a: Scalar, b: Scalar) -> Scalar:
    return a * b


def scalar_inv(a: Scalar) -> Scalar:
    return a.inverse()


def point_add(p: GroupPoint, q: GroupPoint) -> GroupPoint:
    return p + q


def point_mul(s: Scalar, p: GroupPoint) -> GroupPoint:
    return p.multiply(s)


def base_mul(s: Scalar) -> GroupPoint:
    if s.value == 0:
        return GroupPoint(None)
    return GroupPoint._wrap(_GENERATOR * s.value)


def point_sum(points: Iterable[GroupPoint]) -> GroupPoint:
    total = GroupPoint(None)
    for p in points:
        total = total + p
    return total


def hash_to_scalar(data: bytes) -> Scalar:
    """H: SHA-256 of ``data`` read big-endian and reduced mod q."""
    return Scalar(int.from_bytes(hashlib.sha256(data).digest(), "big"))


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()

