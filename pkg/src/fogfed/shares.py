"""Majority-threshold sharing of file keys and chunking of verification files."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .encoding import encode_fields, seeded_rng
from .fieldmath import interpolate_at_zero, poly_eval, random_polynomial

VF_CHUNK_BYTES = 32


class ShareError(ValueError):
    pass


class InsufficientShares(ShareError):
    pass


class MixedShares(ShareError):
    pass


def majority_threshold(n: int) -> int:
    """Smallest count strictly greater than half of ``n``."""
    if n < 1:
        raise ShareError("n must be at least 1")
    return n // 2 + 1


@dataclass(frozen=True)
class KeyShare:
    ef_id: str
    index: int
    value: int
    threshold: int
    modulus: int

    def to_bytes(self) -> bytes:
        return encode_fields(["KeyShare", self.ef_id, self.index, self.value, self.threshold, self.modulus])


@dataclass(frozen=True)
class VfChunk:
    ef_id: str
    index: int
    data: bytes

    def to_bytes(self) -> bytes:
        return encode_fields(["VfChunk", self.ef_id, self.index, self.data])


@dataclass(frozen=True)
class VerificationFile:
    ef_id: str
    data: bytes

    @property
    def members(self) -> int:
        return len(self.data) // VF_CHUNK_BYTES


def generate_vf(ef_id: str, n: int, rng: random.Random) -> VerificationFile:
    return VerificationFile(ef_id, rng.randbytes(VF_CHUNK_BYTES * n))


def split_key(sk: int, n: int, t: int, *, p: int, ef_id: str, seed) -> list[KeyShare]:
    if n < 1 or not 1 <= t <= n:
        raise ShareError(f"need 1 <= t <= n, got t={t}, n={n}")
    if not 0 <= sk < p:
        raise ShareError("secret outside the field")
    rng = seeded_rng(seed)
    coeffs = random_polynomial(sk, t - 1, p, rng)
    return [KeyShare(ef_id, i, poly_eval(coeffs, i, p), t, p) for i in range(1, n + 1)]


def reconstruct_key(shares: list[KeyShare]) -> int:
    if not shares:
        raise InsufficientShares("no shares supplied")
    first = shares[0]
    if any(s.ef_id != first.ef_id for s in shares):
        raise MixedShares("shares belong to different files")
    if any((s.threshold, s.modulus) != (first.threshold, first.modulus) for s in shares):
        raise MixedShares("shares disagree on threshold or field")
    points: dict[int, int] = {}
    for s in shares:
        if s.index in points and points[s.index] != s.value:
            raise MixedShares(f"conflicting values for share index {s.index}")
        points[s.index] = s.value
    if len(points) < first.threshold:
        raise InsufficientShares(f"{len(points)} distinct shares, need {first.threshold}")
    chosen = dict(sorted(points.items())[: first.threshold])
    return interpolate_at_zero(chosen, first.modulus)


def chunk_vf(vf: VerificationFile, n: int) -> list[VfChunk]:
    if n < 1 or len(vf.data) % n:
        raise ShareError(f"verification file of {len(vf.data)} bytes cannot split into {n} chunks")
    size = len(vf.data) // n
    return [VfChunk(vf.ef_id, i + 1, vf.data[i * size : (i + 1) * size]) for i in range(n)]


def count_vf_matches(submitted: list[VfChunk], stored: VerificationFile, n: int) -> int:
    try:
        expected = {c.index: c.data for c in chunk_vf(stored, n)}
    except ShareError:
        return 0
    seen = set()
    matches = 0
    for chunk in submitted:
        if chunk.ef_id != stored.ef_id or chunk.index in seen:
            continue
        seen.add(chunk.index)
        if expected.get(chunk.index) == chunk.data:
            matches += 1
    return matches


def verify_vf_chunks(submitted: list[VfChunk], stored: VerificationFile, n: int) -> bool:
    return count_vf_matches(submitted, stored, n) >= majority_threshold(n)
