import itertools
import random

import pytest

from fogfed.fieldmath import interpolate_at_zero
from fogfed.shares import (
    VF_CHUNK_BYTES,
    InsufficientShares,
    MixedShares,
    ShareError,
    VfChunk,
    chunk_vf,
    count_vf_matches,
    generate_vf,
    majority_threshold,
    reconstruct_key,
    split_key,
    verify_vf_chunks,
)
from oracles import rational_interpolate_at_zero

P = 10499958131665515053


@pytest.mark.parametrize("n,t", [(1, 1), (2, 2), (3, 2), (4, 3), (5, 3), (6, 4), (7, 4)])
def test_majority_threshold(n, t):
    assert majority_threshold(n) == t


@pytest.mark.parametrize("n", range(1, 7))
def test_exhaustive_subsets(n):
    t = majority_threshold(n)
    sk = random.Random(n).randrange(P)
    shares = split_key(sk, n, t, p=P, ef_id="EF1", seed=n)
    for r in range(1, n + 1):
        for subset in itertools.combinations(shares, r):
            if r >= t:
                assert reconstruct_key(list(subset)) == sk
                assert rational_interpolate_at_zero({s.index: s.value for s in subset[:t]}, P) == sk
            else:
                with pytest.raises(InsufficientShares):
                    reconstruct_key(list(subset))


def test_below_threshold_reveals_nothing_small_field():
    # With t-1 shares fixed, each candidate secret matches exactly one value of the next share.
    p, n, t = 13, 4, 3
    shares = split_key(7, n, t, p=p, ef_id="EF", seed=1)
    known = {s.index: s.value for s in shares[: t - 1]}
    outcomes = [interpolate_at_zero({**known, t: c}, p) for c in range(p)]
    assert sorted(outcomes) == list(range(p))


def test_mixed_and_conflicting_shares():
    a = split_key(5, 4, 3, p=P, ef_id="EF1", seed=1)
    b = split_key(5, 4, 3, p=P, ef_id="EF2", seed=1)
    with pytest.raises(MixedShares):
        reconstruct_key([a[0], a[1], b[2]])
    forged = type(a[0])("EF1", 1, a[0].value + 1, 3, P)
    with pytest.raises(MixedShares):
        reconstruct_key([a[0], forged, a[1], a[2]])
    with pytest.raises(InsufficientShares):
        reconstruct_key([])
    with pytest.raises(ShareError):
        split_key(5, 3, 4, p=P, ef_id="EF", seed=1)
    with pytest.raises(ShareError):
        split_key(P, 3, 2, p=P, ef_id="EF", seed=1)


@pytest.mark.parametrize("n", range(1, 7))
def test_vf_accepts_exactly_at_majority(n):
    vf = generate_vf("EF1", n, random.Random(n))
    assert len(vf.data) == VF_CHUNK_BYTES * n and vf.members == n
    chunks = chunk_vf(vf, n)
    for good in range(n + 1):
        for kept in itertools.combinations(chunks, good):
            bad = [VfChunk("EF1", c.index, bytes(len(c.data))) for c in chunks if c not in kept]
            submitted = list(kept) + bad
            assert count_vf_matches(submitted, vf, n) == good
            assert verify_vf_chunks(submitted, vf, n) == (good >= n // 2 + 1)


def test_vf_four_members():
    vf = generate_vf("EF4", 4, random.Random(0))
    chunks = chunk_vf(vf, 4)
    assert verify_vf_chunks(chunks[:3], vf, 4)
    assert not verify_vf_chunks(chunks[:2], vf, 4)


def test_vf_duplicates_and_foreign_chunks_do_not_count():
    vf = generate_vf("EF1", 4, random.Random(0))
    chunks = chunk_vf(vf, 4)
    assert count_vf_matches([chunks[0]] * 4, vf, 4) == 1
    foreign = [VfChunk("EF2", c.index, c.data) for c in chunks]
    assert count_vf_matches(foreign, vf, 4) == 0
    assert count_vf_matches(chunks, vf, 3) == 0
