import itertools

import pytest

from app.crypto.dkd import DerivationState, DerivationTag, derive_child_public, derive_child_share
from app.crypto.dsag import (
    PartialDH,
    StealthLabel,
    aggregate_shared_secret,
    commit_term,
    detect,
    make_destination,
    one_time_share_set,
    receiver_partial_dh,
    recover_one_time_share,
    sender_partial_dh,
    stealth_offset,
    verify_one_time_shares,
    verify_opening,
)
from app.crypto.group import GroupPoint, Scalar, base_mul
from app.crypto.sharing import reconstruct, share_secret
from app.crypto.tsig import ts_sign, ts_verify
from app.errors import (
    DecodeError,
    DegenerateSession,
    DomainError,
    InconsistentContribution,
    InconsistentShares,
    MisbehavingParty,
    SubThreshold,
)


@pytest.fixture
def keys(rng):
    a = Scalar.random(rng)
    b = Scalar.random(rng)
    sender = share_secret(a, 4, 2, rng)
    receiver = share_secret(b, 4, 2, rng)
    root = DerivationState(0, receiver.aggregate, rng.randbytes(32), dict(receiver.public_shares))
    child = derive_child_public(root, DerivationTag.random(rng))
    children = {
        j: derive_child_share(
            DerivationState(0, receiver.aggregate, root.chaincode, dict(receiver.public_shares), receiver.share_for(j)),
            child,
        )
        for j in receiver.indices
    }
    return a, b, sender, child, children


def test_sender_and_receiver_reach_the_same_secret(keys, rng):
    a, b, sender, child, children = keys
    b_child = b + child.offset
    for s1 in itertools.combinations(sender.indices, 2):
        partials = [sender_partial_dh(sender.share_for(i), child.child_pub, rng) for i in s1]
        assert aggregate_shared_secret(partials, s1, 2, require_openings=True) == child.child_pub.multiply(a)
    for s2 in itertools.combinations(children, 3):
        partials = [receiver_partial_dh(children[j].my_share, sender.aggregate) for j in s2]
        assert aggregate_shared_secret(partials, s2, 2) == sender.aggregate.multiply(b_child)


def test_destination_detection_and_one_time_key(keys, rng):
    a, b, sender, child, children = keys
    shared = child.child_pub.multiply(a)
    label = StealthLabel.random(rng)
    dest = make_destination(shared, child.child_pub, label, child.tag)
    rho = stealth_offset(shared, label)
    assert dest.dest == child.child_pub + base_mul(rho)
    assert detect(dest, child.child_pub, shared)
    assert not detect(dest, child.child_pub, shared + GroupPoint.generator())
    assert not detect(dest, child.child_pub, GroupPoint.identity())

    one_time = [recover_one_time_share(children[j].my_share, rho) for j in (1, 3)]
    verify_one_time_shares({s.index: s.public for s in one_time}, [1, 3], dest.dest, 2)
    assert base_mul(reconstruct([s.as_share() for s in one_time])) == dest.dest
    assert reconstruct([s.as_share() for s in one_time]) == b + child.offset + rho

    key = one_time_share_set(one_time, 4, 2, dest.dest)
    sig = ts_sign(b"spend", key, [1, 3], rng)
    assert ts_verify(dest.dest, b"spend", sig)


def test_tampered_opening_names_the_party(keys, rng):
    _, _, sender, child, _ = keys
    good = sender_partial_dh(sender.share_for(1), child.child_pub, rng)
    verify_opening(good)
    bad = PartialDH(2, good.term + GroupPoint.generator(), good.commitment, good.opening_nonce)
    with pytest.raises(InconsistentContribution) as exc:
        aggregate_shared_secret([good, bad], [1, 2], 2, require_openings=True)
    assert exc.value.index == 2
    with pytest.raises(InconsistentContribution):
        verify_opening(PartialDH(3, good.term))


def test_commitment_binds_term_and_nonce(rng):
    term = base_mul(Scalar(5))
    nonce = rng.randbytes(32)
    assert commit_term(term, nonce) != commit_term(term, rng.randbytes(32))
    assert commit_term(term, nonce) != commit_term(base_mul(Scalar(6)), nonce)
    assert len(commit_term(term, nonce)) == 32


def test_aggregate_enforces_the_threshold(keys, rng):
    _, _, sender, child, _ = keys
    partials = [sender_partial_dh(sender.share_for(1), child.child_pub, rng)]
    with pytest.raises(SubThreshold):
        aggregate_shared_secret(partials, [1], 2)


def test_identity_shared_secret_is_degenerate(keys, rng):
    _, _, _, child, _ = keys
    with pytest.raises(DegenerateSession):
        make_destination(GroupPoint.identity(), child.child_pub, StealthLabel.random(rng), child.tag)


def test_bad_one_time_share_is_caught(keys, rng):
    a, _, _, child, children = keys
    shared = child.child_pub.multiply(a)
    label = StealthLabel.random(rng)
    dest = make_destination(shared, child.child_pub, label, child.tag)
    rho = stealth_offset(shared, label)
    publics = {j: recover_one_time_share(children[j].my_share, rho).public for j in (1, 2, 4)}
    publics[2] = publics[2] + GroupPoint.generator()

    with pytest.raises(InconsistentShares):
        verify_one_time_shares(publics, [1, 2, 4], dest.dest, 2)

    child_publics = children[1].public_shares
    with pytest.raises(MisbehavingParty) as exc:
        verify_one_time_shares(publics, [1, 2, 4], dest.dest, 2, child_publics=child_publics, rho=rho)
    assert exc.value.index == 2
    verify_one_time_shares(publics, [1, 4], dest.dest, 2, child_publics=child_publics, rho=rho)


def test_label_length_is_enforced():
    with pytest.raises(DecodeError):
        StealthLabel(bytes(31))


def test_detect_rejects_independent_receivers(keys, rng):
    a, b, sender, child, _ = keys
    shared = child.child_pub.multiply(a)
    dest = make_destination(shared, child.child_pub, StealthLabel.random(rng), child.tag)
    assert detect(dest, child.child_pub, sender.aggregate.multiply(b + child.offset))
    for _ in range(100):
        b_other = Scalar.random(rng)
        root = DerivationState(0, base_mul(b_other), rng.randbytes(32), {1: base_mul(b_other)})
        other = derive_child_public(root, child.tag)
        other_secret = sender.aggregate.multiply(b_other + other.offset)
        assert not detect(dest, other.child_pub, other_secret)


@pytest.mark.parametrize("n", range(1, 8))
def test_every_single_share_corruption_is_caught(n, rng):
    rho = Scalar.random(rng)
    shift = base_mul(rho)
    for t in range(1, n + 1):
        key = share_secret(Scalar.random(rng), n, t, rng)
        dest = key.aggregate + shift
        honest = {j: key.public_for(j) + shift for j in key.indices}
        verify_one_time_shares(honest, key.indices, dest, t)
        for j in key.indices:
            publics = dict(honest)
            publics[j] = publics[j] + GroupPoint.generator()
            with pytest.raises(InconsistentShares):
                verify_one_time_shares(publics, key.indices, dest, t)
            with pytest.raises(MisbehavingParty) as exc:
                verify_one_time_shares(publics, key.indices, dest, t, child_publics=key.public_shares, rho=rho)
            assert exc.value.index == j


def test_missing_one_time_share_is_a_typed_error(keys, rng):
    a, _, _, child, children = keys
    shared = child.child_pub.multiply(a)
    label = StealthLabel.random(rng)
    dest = make_destination(shared, child.child_pub, label, child.tag)
    rho = stealth_offset(shared, label)
    publics = {j: recover_one_time_share(children[j].my_share, rho).public for j in (1, 2)}

    with pytest.raises(InconsistentShares):
        verify_one_time_shares(publics, [1, 2, 4], dest.dest, 2)
    with pytest.raises(DomainError):
        verify_one_time_shares(
            publics, [1, 2], dest.dest, 2, child_publics={1: children[1].public_shares[1]}, rho=rho
        )
    verify_one_time_shares(publics, [1, 2], dest.dest, 2, child_publics=children[1].public_shares, rho=rho)
