import dataclasses
import random
from types import MappingProxyType

import pytest

from fogfed import cpabe
from fogfed.group import group_setup, hash_to_group
from fogfed.policy import PolicyNotSatisfied, parse_policy, satisfies
from oracles import brute_satisfies, random_tree

PARAMS = group_setup(64, 1)
KEYS = cpabe.setup(PARAMS, 7)
UNIVERSE = ["Health", "Education", "Atlanta", "Boston", "Finance", "Police"]


def _message(rng):
    return PARAMS.gt_from_int(rng.randrange(PARAMS.p))


def test_random_trees_decrypt_iff_satisfied():
    rng = random.Random(2024)
    hits = misses = 0
    for case in range(200):
        tree = random_tree(rng, UNIVERSE, max_leaves=10)
        attrs = set(rng.sample(UNIVERSE, rng.randint(1, len(UNIVERSE))))
        key = cpabe.keygen(KEYS, attrs, ("key", case))
        msg = _message(rng)
        ct = cpabe.encrypt(KEYS.public, msg, tree, ("ct", case))
        if brute_satisfies(tree, attrs):
            hits += 1
            assert cpabe.decrypt(key, ct) == msg
        else:
            misses += 1
            with pytest.raises(PolicyNotSatisfied):
                cpabe.decrypt(key, ct)
    assert hits > 20 and misses > 20


def test_colluding_keys_do_not_combine():
    tree = parse_policy("Health AND Atlanta")
    msg = PARAMS.gt_from_int(12345)
    ct = cpabe.encrypt(KEYS.public, msg, tree, 1)
    k1 = cpabe.keygen(KEYS, {"Health"}, 2)
    k2 = cpabe.keygen(KEYS, {"Atlanta"}, 3)
    merged = dataclasses.replace(
        k1,
        components=MappingProxyType({**k1.components, **k2.components}),
        attrs=frozenset({"Health", "Atlanta"}),
    )
    assert satisfies(tree, merged.attrs)
    assert cpabe.decrypt(merged, ct) != msg


def test_cross_federation_key_rejected():
    other = cpabe.setup(PARAMS, 8)
    ct = cpabe.encrypt(KEYS.public, PARAMS.gt_from_int(5), parse_policy("Health"), 1)
    with pytest.raises(cpabe.KeyMismatch):
        cpabe.decrypt(cpabe.keygen(other, {"Health"}, 1), ct)


def test_ciphertext_serialization_roundtrip():
    ct = cpabe.encrypt(KEYS.public, PARAMS.gt_from_int(99), parse_policy("(Health OR Education) AND Atlanta"), 4)
    again = cpabe.CpabeCiphertext.from_bytes(ct.to_bytes(), PARAMS)
    assert again == ct
    key = cpabe.keygen(KEYS, {"Education", "Atlanta"}, 5)
    assert cpabe.decrypt(key, again) == PARAMS.gt_from_int(99)


def test_malformed_ciphertexts():
    ct = cpabe.encrypt(KEYS.public, PARAMS.gt_from_int(1), parse_policy("Health AND Atlanta"), 4)
    key = cpabe.keygen(KEYS, {"Health", "Atlanta"}, 5)
    with pytest.raises(cpabe.MalformedCiphertext):
        cpabe.decrypt(key, dataclasses.replace(ct, leaves=ct.leaves[:1]))
    with pytest.raises(cpabe.MalformedCiphertext):
        cpabe.CpabeCiphertext.from_bytes(ct.to_bytes()[:-3], PARAMS)
    with pytest.raises(cpabe.MalformedCiphertext):
        cpabe.CpabeCiphertext.from_bytes(b"garbage", PARAMS)


def test_deterministic_per_seed():
    tree = parse_policy("Health OR Atlanta")
    a = cpabe.encrypt(KEYS.public, PARAMS.gt_from_int(3), tree, 10)
    b = cpabe.encrypt(KEYS.public, PARAMS.gt_from_int(3), tree, 10)
    c = cpabe.encrypt(KEYS.public, PARAMS.gt_from_int(3), tree, 11)
    assert a.to_bytes() == b.to_bytes() != c.to_bytes()
    assert cpabe.setup(PARAMS, 7).public == KEYS.public


def test_empty_attribute_set_rejected():
    with pytest.raises(cpabe.CpabeError):
        cpabe.keygen(KEYS, set(), 1)


def test_verifier_list_does_not_change_fingerprint():
    pk = KEYS.public.with_verifier("FN1", b"\x01" * 32)
    assert pk.fingerprint() == KEYS.public.fingerprint()
    assert "FN1" in pk.verifiers and "FN1" not in pk.without_verifier("FN1").verifiers


def test_ciphertext_exponents_follow_the_construction():
    from fogfed.encoding import seeded_rng

    tree = parse_policy("Health AND Atlanta")
    msg = PARAMS.gt_from_int(777)
    ct = cpabe.encrypt(KEYS.public, msg, tree, 42)
    s = PARAMS.random_scalar(seeded_rng(42))
    beta, alpha = KEYS.master.beta, KEYS.master.g_alpha.exponent
    p = PARAMS.p
    assert ct.c.exponent == beta * s % p
    assert ct.c_tilde.exponent == (777 + alpha * s) % p
    assert KEYS.public.h.exponent == beta
    assert KEYS.public.egg_alpha.exponent == alpha
    key = cpabe.keygen(KEYS, {"Health"}, 9)
    r = key.d.exponent * beta - alpha
    dj, dpj = key.components["Health"]
    assert dj.exponent == (r + hash_to_group("Health", PARAMS).exponent * dpj.exponent) % p
