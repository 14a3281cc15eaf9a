import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from fogfed.group import (
    MAX_BITS,
    MIN_BITS,
    REFERENCE_BACKEND,
    G1Element,
    GroupError,
    GroupMismatchError,
    group_setup,
    hash_to_group,
    is_probable_prime,
    pair,
)
from oracles import naive_seeded_prime

P64 = group_setup(64, 1)
scalars = st.integers(0, 2**80)


@pytest.mark.parametrize("bits,seed,expected", [
    (16, 1, 41579),
    (32, 7, 3538334777),
    (64, 1, 10499958131665515053),
    (64, 42, 11277067891212646883),
])
def test_seeded_prime_frozen(bits, seed, expected):
    assert naive_seeded_prime(bits, seed) == expected
    params = group_setup(bits, seed)
    assert params.p == expected
    assert params.p.bit_length() == bits


@given(st.integers(2, 10**6))
def test_primality_matches_sympy_small(n):
    assert is_probable_prime(n) == sympy.isprime(n)


def test_primality_large_known_values():
    assert is_probable_prime(2**127 - 1)
    assert not is_probable_prime(2**128 + 1)
    assert not is_probable_prime(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7


@pytest.mark.parametrize("bits", [0, MIN_BITS - 1, MAX_BITS + 1, "64"])
def test_bad_bit_lengths(bits):
    with pytest.raises(GroupError):
        group_setup(bits, 1)


def test_reference_backend_is_flagged():
    assert P64.insecure
    assert REFERENCE_BACKEND == "insecure-reference"


@settings(max_examples=50)
@given(scalars, scalars)
def test_bilinearity(a, b):
    g = P64.g
    assert pair(g ** a, g ** b) == pair(g, g) ** (a * b)
    assert pair(g ** a, g ** b) == pair(g ** b, g ** a)


@settings(max_examples=50)
@given(scalars, scalars, scalars)
def test_group_laws(a, b, c):
    g = P64.g
    x, y, z = g ** a, g ** b, g ** c
    assert (x * y) * z == x * (y * z)
    assert x * P64.g1_identity == x
    assert (x / x).is_identity()
    assert x * x.inverse() == P64.g1_identity
    assert x ** P64.p == P64.g1_identity


def test_pairing_nondegenerate():
    assert not pair(P64.g, P64.g).is_identity()
    assert pair(P64.g, P64.g) == P64.gt_generator


def test_cross_group_mixing_rejected():
    other = group_setup(64, 2)
    with pytest.raises(GroupMismatchError):
        P64.g * other.g
    with pytest.raises(GroupMismatchError):
        pair(P64.g, other.g)
    with pytest.raises(TypeError):
        P64.g * P64.gt_generator


def test_hash_to_group_frozen():
    assert hash_to_group("Health", P64).exponent == 1276519924161284737
    assert hash_to_group("Atlanta", P64).exponent == 10439176836155857471
    assert hash_to_group("Health", P64) == hash_to_group("Health", P64)
    assert isinstance(hash_to_group("x", P64), G1Element)
    with pytest.raises(GroupError):
        hash_to_group("", P64)


def test_fingerprint_and_serialization():
    assert P64.fingerprint().hex() == "f21df7c3e2a7d69abf60c9997ae918f29dd378e0d33c844ddc03065b5c38c627"
    assert len(P64.g.to_bytes()) == 1 + 8
    assert P64.g.to_bytes() != P64.gt_generator.to_bytes()


def test_random_scalar_range():
    rng = random.Random(3)
    small = group_setup(16, 1)
    values = {small.random_scalar(rng) for _ in range(2000)}
    assert 0 not in values and max(values) < small.p
