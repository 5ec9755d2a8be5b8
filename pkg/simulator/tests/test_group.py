import pytest

from app.crypto.group import (
    FIELD_PRIME,
    ORDER,
    POINT_LEN,
    GroupPoint,
    Scalar,
    base_mul,
    hash_to_scalar,
    point_add,
    point_mul,
    point_sum,
    scalar_add,
    scalar_inv,
    scalar_mul,
)
from app.errors import DecodeError, DomainError

G_HEX = "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"
G2_HEX = "02c6047f9441ed7d6d3045406e95c07cd85c778e4b8cef3ca7abac09b95c709ee5"
G3_HEX = "02f9308a019258c31049344f85f89d5229b531c845836f99b08601f113bce036f9"
SHA256_EMPTY = 0xE3B0C44298FC1C149AFBF4C8996FB92427AE41E4649B934CA495991B7852B855


def test_generator_encodings_match_known_vectors():
    assert base_mul(Scalar(1)).to_bytes().hex() == G_HEX
    assert base_mul(Scalar(2)).to_bytes().hex() == G2_HEX
    assert base_mul(Scalar(3)).to_bytes().hex() == G3_HEX
    assert GroupPoint.generator() == GroupPoint.from_bytes(bytes.fromhex(G_HEX))


def test_point_round_trip_and_arithmetic(rng):
    for _ in range(20):
        a, b = Scalar.random(rng), Scalar.random(rng)
        P = base_mul(a)
        assert GroupPoint.from_bytes(P.to_bytes()) == P
        assert point_add(base_mul(a), base_mul(b)) == base_mul(a + b)
        assert point_mul(b, P) == base_mul(a * b)
        assert P - P == GroupPoint.identity()


def test_scalar_reduction_and_field_ops():
    assert Scalar(ORDER + 5) == Scalar(5)
    assert scalar_add(Scalar(ORDER - 1), Scalar(2)) == Scalar(1)
    assert scalar_mul(Scalar(7), scalar_inv(Scalar(7))) == Scalar(1)
    assert -Scalar(1) == Scalar(ORDER - 1)
    assert Scalar(ORDER).is_zero() and not Scalar(1).is_zero()
    with pytest.raises(DomainError):
        Scalar(0).inverse()


def test_scalar_decode_rejects_unreduced_and_bad_length():
    with pytest.raises(DecodeError):
        Scalar.from_bytes(ORDER.to_bytes(32, "big"))
    with pytest.raises(DecodeError):
        Scalar.from_bytes(bytes(31))
    assert Scalar.from_bytes((ORDER - 1).to_bytes(32, "big")) == Scalar(ORDER - 1)


def test_identity_has_no_wire_encoding():
    ident = GroupPoint.identity()
    assert ident.is_identity()
    assert base_mul(Scalar(0)).is_identity()
    with pytest.raises(DomainError):
        ident.to_bytes()
    assert ident.to_bytes(allow_identity=True) == bytes(POINT_LEN)
    with pytest.raises(DecodeError):
        GroupPoint.from_bytes(bytes(POINT_LEN))


@pytest.mark.parametrize(
    "data",
    [
        bytes.fromhex(G_HEX)[:-1],
        b"\x04" + bytes.fromhex(G_HEX)[1:],
        b"\x02" + FIELD_PRIME.to_bytes(32, "big"),
        b"\x03" + (FIELD_PRIME + 1).to_bytes(32, "big"),
    ],
)
def test_point_decode_rejects_non_canonical(data):
    with pytest.raises(DecodeError):
        GroupPoint.from_bytes(data)


def test_point_decode_rejects_x_off_curve():
    x = 1
    while pow((x ** 3 + 7) % FIELD_PRIME, (FIELD_PRIME - 1) // 2, FIELD_PRIME) == 1:
        x += 1
    with pytest.raises(DecodeError):
        GroupPoint.from_bytes(b"\x02" + x.to_bytes(32, "big"))


def test_point_sum_matches_pairwise_adds(rng):
    scalars = [Scalar.random(rng) for _ in range(5)]
    total = Scalar(0)
    for s in scalars:
        total = total + s
    assert point_sum(base_mul(s) for s in scalars) == base_mul(total)
    assert point_sum([]) == GroupPoint.identity()


def test_hash_to_scalar_is_sha256_reduced():
    assert hash_to_scalar(b"").value == SHA256_EMPTY % ORDER
    assert hash_to_scalar(b"dao2") != hash_to_scalar(b"dao3")


@pytest.mark.slow
def test_encodings_round_trip_for_many_random_values(rng):
    for _ in range(10_000):
        s = Scalar.random(rng)
        assert Scalar.from_bytes(s.to_bytes()) == s
        P = base_mul(s)
        assert GroupPoint.from_bytes(P.to_bytes()) == P
