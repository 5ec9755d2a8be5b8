import itertools

import pytest

from app.crypto.dkd import (
    DerivationState,
    DerivationTag,
    advance,
    derive_chain,
    derive_child_public,
    derive_child_share,
    derive_offset,
)
from app.crypto.group import GroupPoint, Scalar, base_mul
from app.crypto.sharing import reconstruct, share_secret
from app.errors import DecodeError, DomainError, TagConsumed

ZERO_CC = bytes(32)

GOLDEN = [
    (
        bytes(range(16)),
        0x94084661D2B3235B7477F9D551391C262F2C4D6FE456174991120CD56F9885F2,
        "61027d0683cabe875e1c27d410c1f509bde4296ffa07b9743d7f630b96b9458d",
    ),
    (
        bytes(range(16, 32)),
        0x4A7EB50F2CFA52FA0CE13DF006EE78A09C5133E85C49488288C5F1834AC0FA62,
        "826b8003cb1855f06833cb06800008f664fdc92b487a346cf4a76c8bcdb6bf54",
    ),
]


def _party_states(n, t, rng):
    secret = Scalar.random(rng)
    key = share_secret(secret, n, t, rng)
    cc = rng.randbytes(32)
    states = {
        j: DerivationState(0, key.aggregate, cc, dict(key.public_shares), key.share_for(j))
        for j in key.indices
    }
    return secret, states


@pytest.mark.parametrize("tag,offset,child_cc", GOLDEN)
def test_offset_golden_vectors(tag, offset, child_cc):
    omega, cc = derive_offset(GroupPoint.generator(), ZERO_CC, DerivationTag(tag))
    assert omega.value == offset
    assert cc.hex() == child_cc


def test_tag_length_is_enforced():
    with pytest.raises(DecodeError):
        DerivationTag(bytes(15))


def test_identity_parent_is_rejected():
    state = DerivationState(0, GroupPoint.identity(), ZERO_CC, {})
    with pytest.raises(DomainError):
        derive_child_public(state, DerivationTag(bytes(16)))


def test_child_key_tracks_shares(rng):
    secret, states = _party_states(4, 2, rng)
    tag = DerivationTag.random(rng)
    child = derive_child_public(states[1], tag)
    assert child.child_pub == base_mul(secret + child.offset)

    children = {j: derive_child_share(s, child) for j, s in states.items()}
    for subset in itertools.combinations(children, 2):
        shares = [children[j].my_share for j in subset]
        assert base_mul(reconstruct(shares)) == child.child_pub
    for j, state in children.items():
        assert state.epoch == 1
        assert state.aggregate_pub == child.child_pub
        assert state.chaincode == child.child_cc
        assert state.public_shares[j] == base_mul(state.my_share.value)
    # parents stay untouched
    assert states[1].epoch == 0
    assert states[1].aggregate_pub == base_mul(secret)


def test_all_parties_agree_after_a_chain(rng):
    _, states = _party_states(3, 2, rng)
    tags = [DerivationTag.random(rng) for _ in range(25)]
    finals = {j: derive_chain(s, tags) for j, s in states.items()}
    assert len({f.fingerprint() for f in finals.values()}) == 1
    assert all(f.epoch == 25 for f in finals.values())
    assert len(finals[1].consumed_tags) == 25


def test_consumed_tag_is_refused(rng):
    _, states = _party_states(3, 2, rng)
    tag = DerivationTag.random(rng)
    child_state = advance(states[1], tag)
    assert child_state.is_consumed(tag)
    with pytest.raises(TagConsumed):
        derive_child_public(child_state, tag)
    with pytest.raises(TagConsumed):
        derive_chain(states[1], [tag, tag])


def test_public_view_drops_the_share(rng):
    _, states = _party_states(3, 2, rng)
    view = states[2].public_view()
    assert view.my_share is None
    assert view.fingerprint() == states[2].fingerprint()
    with pytest.raises(DomainError):
        derive_child_share(view, derive_child_public(view, DerivationTag.random(rng)))
