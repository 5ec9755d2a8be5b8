import pytest

from app.crypto.group import Scalar, base_mul
from app.crypto.tsig import Signature, ts_verify
from app.protocol.degenerate import degenerate_single_user, oracle_schnorr, oracle_verify


def _assert_equivalent(seed):
    report = degenerate_single_user(seed)
    assert report.destinations_equal
    assert report.offsets_equal
    assert report.one_time_keys_equal
    assert report.pipeline_signature_valid
    assert report.oracle_signature_valid
    assert report.equivalent


@pytest.mark.parametrize("seed", [0, 1, 2024])
def test_single_member_daos_match_the_plain_stealth_payment(seed):
    _assert_equivalent(seed)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100))
def test_single_member_equivalence_holds_for_every_seed(seed):
    _assert_equivalent(seed)


def test_oracle_signature_verifies_in_the_pipeline():
    secret = 0xC0FFEE
    pub = base_mul(Scalar(secret))
    R_bytes, s = oracle_schnorr(secret, b"spend", 12345)
    assert oracle_verify(pub.to_bytes(), b"spend", R_bytes, s)
    assert not oracle_verify(pub.to_bytes(), b"spent", R_bytes, s)
    assert ts_verify(pub, b"spend", Signature.from_bytes(R_bytes + s.to_bytes(32, "big")))
