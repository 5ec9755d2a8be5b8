import itertools

import pytest

from app.crypto.group import ORDER, Scalar, base_mul
from app.crypto.sharing import (
    Polynomial,
    Share,
    dkg_finalize,
    dkg_round,
    dkg_verify,
    lagrange_coeff,
    reconstruct,
    reconstruct_in_exponent,
    run_dkg,
    share_secret,
    share_set_from_polynomial,
)
from app.errors import DomainError


def _brute_force_lagrange(i, subset):
    num, den = 1, 1
    for j in subset:
        if j != i:
            num *= j
            den *= j - i
    return num * pow(den % ORDER, -1, ORDER) % ORDER


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_lagrange_matches_brute_force_on_every_subset(n):
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(1, n + 1), size):
            for i in subset:
                assert lagrange_coeff(i, subset).value == _brute_force_lagrange(i, subset)


ALL_SIZES_TO_7 = [(n, t) for n in range(1, 8) for t in range(1, n + 1)]
ALL_SIZES_TO_6 = [(n, t) for n, t in ALL_SIZES_TO_7 if n <= 6]


def _evaluate_directly(coefficients, x):
    return sum(c * x ** k for k, c in enumerate(coefficients)) % ORDER


@pytest.mark.parametrize("n,t", ALL_SIZES_TO_6)
def test_reconstruction_matches_direct_polynomial_evaluation(n, t, rng):
    coefficients = [rng.randrange(ORDER) for _ in range(t)]
    share_set = share_set_from_polynomial(Polynomial(tuple(Scalar(c) for c in coefficients)), n)
    for j in range(1, n + 1):
        assert share_set.share_for(j).value.value == _evaluate_directly(coefficients, j)
    for size in range(t, n + 1):
        for subset in itertools.combinations(range(1, n + 1), size):
            points = [Share(j, Scalar(_evaluate_directly(coefficients, j))) for j in subset]
            assert reconstruct(points).value == _evaluate_directly(coefficients, 0)


@pytest.mark.parametrize("n,t", ALL_SIZES_TO_7)
def test_every_qualified_subset_recovers_the_secret(n, t, rng):
    secret = Scalar.random(rng)
    share_set = share_secret(secret, n, t, rng)
    for size in range(t, n + 1):
        for subset in itertools.combinations(range(1, n + 1), size):
            assert reconstruct([share_set.share_for(i) for i in subset]) == secret


@pytest.mark.parametrize("n,t", [(1, 1), (3, 2), (4, 3), (6, 2), (6, 6)])
def test_any_threshold_subset_reconstructs_in_the_exponent(n, t, rng):
    secret = Scalar.random(rng)
    share_set = share_secret(secret, n, t, rng)
    assert share_set.aggregate == base_mul(secret)
    for size in range(t, n + 1):
        for subset in itertools.combinations(range(1, n + 1), size):
            shares = [share_set.share_for(i) for i in subset]
            assert reconstruct(shares) == secret
            points = {i: share_set.public_for(i) for i in subset}
            assert reconstruct_in_exponent(points) == share_set.aggregate


def test_below_threshold_does_not_reconstruct(rng):
    secret = Scalar.random(rng)
    share_set = share_secret(secret, 5, 3, rng)
    for subset in itertools.combinations(range(1, 6), 2):
        assert reconstruct([share_set.share_for(i) for i in subset]) != secret


def test_lagrange_rejects_bad_subsets():
    with pytest.raises(DomainError):
        lagrange_coeff(4, [1, 2, 3])
    with pytest.raises(DomainError):
        lagrange_coeff(1, [1, 1, 2])
    with pytest.raises(DomainError):
        reconstruct([])
    with pytest.raises(DomainError):
        Share(0, Scalar(1))


@pytest.mark.parametrize("n,t", [(0, 1), (3, 0), (3, 4)])
def test_share_secret_rejects_bad_parameters(n, t, rng):
    with pytest.raises(DomainError):
        share_secret(Scalar(1), n, t, rng)


def test_polynomial_evaluation_is_horner():
    poly = Polynomial((Scalar(3), Scalar(2), Scalar(1)))
    assert poly.evaluate(0) == Scalar(3)
    assert poly.evaluate(2) == Scalar(3 + 4 + 4)
    assert poly.constant == Scalar(3)


def test_dkg_shares_pass_feldman_checks(rng):
    contrib = dkg_round(1, 4, 3, rng)
    for j, share in contrib.shares.items():
        assert dkg_verify(share, j, contrib.commitments)
    assert not dkg_verify(contrib.shares[1] + Scalar(1), 1, contrib.commitments)


def test_dkg_public_shares_match_secret_shares(rng):
    outcome = run_dkg(5, 3, rng)
    key = outcome.share_set
    assert outcome.complaints == ()
    assert outcome.excluded == frozenset()
    for j in key.indices:
        assert base_mul(key.share_for(j).value) == key.public_for(j)
    for subset in itertools.combinations(key.indices, 3):
        assert base_mul(reconstruct([key.share_for(i) for i in subset])) == key.aggregate


def test_dkg_complaint_excludes_the_dealer(rng):
    def tamper(dealer, recipient, share):
        return share + Scalar(1) if dealer == 2 and recipient == 3 else share

    outcome = run_dkg(4, 2, rng, corrupt=tamper)
    assert [(c.dealer, c.complainer) for c in outcome.complaints] == [(2, 3)]
    assert outcome.excluded == frozenset({2})
    key = outcome.share_set
    for subset in itertools.combinations(key.indices, 2):
        assert base_mul(reconstruct([key.share_for(i) for i in subset])) == key.aggregate


def test_dkg_finalize_refuses_when_everyone_is_excluded(rng):
    contribs = [dkg_round(d, 2, 1, rng) for d in (1, 2)]
    received = {j: {c.dealer: c.shares[j] for c in contribs} for j in (1, 2)}
    commitments = {c.dealer: c.commitments for c in contribs}
    with pytest.raises(DomainError):
        dkg_finalize(2, 1, received, commitments, excluded={1, 2})
