"""Prime-order bilinear group with an exponent-arithmetic reference backend.

Every element is stored as its discrete logarithm to the generator ``g``:
the group operation adds exponents mod p and the pairing multiplies them.
That keeps the bilinear identities exact at desk scale, but anyone can read
the exponent, so the backend is flagged ``insecure`` and must never protect
real data.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property

from .encoding import digest, encode_fields

REFERENCE_BACKEND = "insecure-reference"
MIN_BITS = 16
MAX_BITS = 512

# Deterministic Miller-Rabin witnesses; exact for n < 3.3e24 and a
# negligible-error test beyond that.
_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


class GroupError(ValueError):
    pass


class GroupMismatchError(GroupError):
    """Raised when elements bound to different parameters are combined."""


def is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _WITNESSES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def seeded_prime(bits: int, seed: int) -> int:
    """First prime at or above a seeded odd ``bits``-bit starting point."""
    rng = random.Random(seed)
    candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
    while not is_probable_prime(candidate):
        candidate += 2
    return candidate


@dataclass(frozen=True)
class GroupParams:
    p: int
    bits: int
    seed: int
    description: str = REFERENCE_BACKEND

    @property
    def insecure(self) -> bool:
        return self.description == REFERENCE_BACKEND

    @cached_property
    def g(self) -> G1Element:
        return G1Element(self, 1)

    @property
    def g1_identity(self) -> G1Element:
        return G1Element(self, 0)

    @property
    def gt_identity(self) -> GTElement:
        return GTElement(self, 0)

    @cached_property
    def gt_generator(self) -> GTElement:
        return pair(self.g, self.g)

    def random_scalar(self, rng: random.Random, nonzero: bool = True) -> int:
        if nonzero:
            return rng.randrange(1, self.p)
        return rng.randrange(self.p)

    def gt_from_int(self, value: int) -> GTElement:
        """Embed an integer in [0, p) as a GT message."""
        if not 0 <= value < self.p:
            raise GroupError("value out of range for GT embedding")
        return GTElement(self, value)

    def fingerprint(self) -> bytes:
        return digest(encode_fields(["group", self.description, self.p, self.bits]))

    def to_bytes(self) -> bytes:
        return encode_fields([self.description, self.p, self.bits, self.seed])


def group_setup(security_param: int, seed: int) -> GroupParams:
    if not isinstance(security_param, int) or not MIN_BITS <= security_param <= MAX_BITS:
        raise GroupError(f"unsupported bit length: {security_param!r} (need {MIN_BITS}..{MAX_BITS})")
    return GroupParams(p=seeded_prime(security_param, seed), bits=security_param, seed=seed)


@dataclass(frozen=True)
class _Element:
    params: GroupParams
    exponent: int = field(compare=True)

    _tag = b""

    def __post_init__(self):
        object.__setattr__(self, "exponent", self.exponent % self.params.p)

    def _check(self, other) -> None:
        if not isinstance(other, type(self)):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.params != self.params:
            raise GroupMismatchError("elements belong to different group parameters")

    def __mul__(self, other):
        self._check(other)
        return type(self)(self.params, self.exponent + other.exponent)

    def __truediv__(self, other):
        self._check(other)
        return type(self)(self.params, self.exponent - other.exponent)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        return type(self)(self.params, self.exponent * k)

    def inverse(self):
        return type(self)(self.params, -self.exponent)

    def is_identity(self) -> bool:
        return self.exponent == 0

    def to_bytes(self) -> bytes:
        width = (self.params.p.bit_length() + 7) // 8
        return self._tag + self.exponent.to_bytes(width, "big")

    def __repr__(self) -> str:
        return f"{type(self).__name__}(p={self.params.p}, dlog={self.exponent})"


class G1Element(_Element):
    _tag = b"\x01"


class GTElement(_Element):
    _tag = b"\x02"

    def to_int(self) -> int:
        return self.exponent


def pair(a: G1Element, b: G1Element) -> GTElement:
    if not isinstance(a, G1Element) or not isinstance(b, G1Element):
        raise TypeError("pair expects two G1 elements")
    if a.params != b.params:
        raise GroupMismatchError("pairing arguments belong to different group parameters")
    return GTElement(a.params, a.exponent * b.exponent)


def hash_to_group(attribute: str, params: GroupParams) -> G1Element:
    if not attribute:
        raise GroupError("cannot hash an empty attribute")
    counter = 0
    while True:
        h = digest(encode_fields(["fogfed/H", params.p, attribute, counter]))
        exponent = int.from_bytes(h, "big") % params.p
        if exponent:
            return G1Element(params, exponent)
        counter += 1
