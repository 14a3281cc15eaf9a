"""Ciphertext-policy ABE over the reference bilinear group.

Key and ciphertext components follow the Bethencourt-Sahai-Waters layout:

* public key  ``{params, h = g^beta, e(g,g)^alpha}``
* master key  ``{beta, g^alpha}``
* node key    ``D = g^((alpha + r)/beta)``, and per attribute j
  ``D_j = g^r * H(j)^(r_j)``, ``D'_j = g^(r_j)``
* ciphertext  ``C~ = M * e(g,g)^(alpha*s)``, ``C = h^s`` and per leaf y
  ``C_y = g^(q_y(0))``, ``C'_y = H(att(y))^(q_y(0))``

The same construction serves the system keys and every federation's keys.
Ciphertexts and node keys carry the fingerprint of the federation public key
so that cross-federation decryption is rejected instead of returning garbage.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .encoding import decode_fields, digest, encode_fields, seeded_rng
from .group import G1Element, GroupParams, GTElement, hash_to_group, pair
from .policy import (
    AccessTree,
    PolicyNotSatisfied,
    reconstruction_coefficients,
    satisfies,
    share_over_tree,
    tree_from_fields,
    tree_to_fields,
)


class CpabeError(Exception):
    pass


class MalformedCiphertext(CpabeError):
    pass


class KeyMismatch(CpabeError):
    """Key and ciphertext belong to different federations."""


def _rng(seed) -> random.Random:
    return seeded_rng(seed)


@dataclass(frozen=True)
class PublicKey:
    params: GroupParams
    h: G1Element
    egg_alpha: GTElement
    # fn_id -> raw signature verification key; only used by federation keys
    verifiers: Mapping[str, bytes] = field(default_factory=dict, compare=False)

    def fingerprint(self) -> bytes:
        return digest(encode_fields([self.params.fingerprint(), self.h.to_bytes(), self.egg_alpha.to_bytes()]))

    def with_verifier(self, fn_id: str, verify_key: bytes) -> "PublicKey":
        registry = dict(self.verifiers)
        registry[fn_id] = verify_key
        return PublicKey(self.params, self.h, self.egg_alpha, MappingProxyType(registry))

    def without_verifier(self, fn_id: str) -> "PublicKey":
        registry = {k: v for k, v in self.verifiers.items() if k != fn_id}
        return PublicKey(self.params, self.h, self.egg_alpha, MappingProxyType(registry))

    def to_bytes(self) -> bytes:
        return encode_fields([
            self.params.to_bytes(),
            self.h.to_bytes(),
            self.egg_alpha.to_bytes(),
            [[k, self.verifiers[k]] for k in sorted(self.verifiers)],
        ])


@dataclass(frozen=True)
class MasterKey:
    beta: int
    g_alpha: G1Element

    def __repr__(self) -> str:
        return "MasterKey(<redacted>)"


@dataclass(frozen=True)
class SystemKeys:
    public: PublicKey
    master: MasterKey


# A federation key pair has exactly the system-key shape.
FederationKeys = SystemKeys


def setup(params: GroupParams, seed) -> SystemKeys:
    rng = _rng(seed)
    alpha = params.random_scalar(rng)
    beta = params.random_scalar(rng)
    g = params.g
    public = PublicKey(params, g ** beta, pair(g, g) ** alpha)
    return SystemKeys(public, MasterKey(beta, g ** alpha))


def federation_setup(params: GroupParams, seed) -> FederationKeys:
    return setup(params, seed)


@dataclass(frozen=True)
class FnSecretKey:
    d: G1Element
    components: Mapping[str, tuple[G1Element, G1Element]]
    attrs: frozenset[str]
    federation: bytes

    def to_bytes(self) -> bytes:
        return encode_fields([
            self.federation,
            self.d.to_bytes(),
            [[a, dj.to_bytes(), dpj.to_bytes()] for a, (dj, dpj) in sorted(self.components.items())],
        ])

    def __repr__(self) -> str:
        return f"FnSecretKey(attrs={sorted(self.attrs)})"


def keygen(keys: FederationKeys, attrs: Iterable[str], seed) -> FnSecretKey:
    attrs = frozenset(attrs)
    if not attrs:
        raise CpabeError("empty attribute set")
    rng = _rng(seed)
    params = keys.public.params
    g = params.g
    r = params.random_scalar(rng)
    beta_inv = pow(keys.master.beta, -1, params.p)
    d = (keys.master.g_alpha * g ** r) ** beta_inv
    components = {}
    for attr in sorted(attrs):
        rj = params.random_scalar(rng)
        components[attr] = (g ** r * hash_to_group(attr, params) ** rj, g ** rj)
    return FnSecretKey(d, MappingProxyType(components), attrs, keys.public.fingerprint())


@dataclass(frozen=True)
class CpabeCiphertext:
    tree: AccessTree
    c_tilde: GTElement
    c: G1Element
    leaves: tuple[tuple[G1Element, G1Element], ...]
    federation: bytes

    def to_bytes(self) -> bytes:
        return encode_fields([
            self.federation,
            tree_to_fields(self.tree.root),
            self.c_tilde.to_bytes(),
            self.c.to_bytes(),
            [[cy.to_bytes(), cpy.to_bytes()] for cy, cpy in self.leaves],
        ])

    @classmethod
    def from_bytes(cls, data: bytes, params: GroupParams) -> "CpabeCiphertext":
        try:
            fed, tree, c_tilde, c, leaves = decode_fields(data)
            return cls(
                AccessTree(tree_from_fields(tree)),
                _element(GTElement, c_tilde, params),
                _element(G1Element, c, params),
                tuple((_element(G1Element, a, params), _element(G1Element, b, params)) for a, b in leaves),
                fed,
            )
        except (ValueError, TypeError) as exc:
            raise MalformedCiphertext(str(exc)) from exc


def _element(kind, raw: bytes, params: GroupParams):
    if not raw or raw[:1] != kind._tag:
        raise ValueError("element tag mismatch")
    value = int.from_bytes(raw[1:], "big")
    if value >= params.p:
        raise ValueError("element out of range")
    return kind(params, value)


def encrypt(public: PublicKey, message: GTElement, tree: AccessTree, seed) -> CpabeCiphertext:
    rng = _rng(seed)
    params = public.params
    if message.params != params:
        raise CpabeError("message is not in this group's GT")
    s = params.random_scalar(rng)
    leaf_values = share_over_tree(tree, s, rng, params.p)
    g = params.g
    leaves = tuple(
        (g ** leaf_values[i], hash_to_group(leaf.attribute, params) ** leaf_values[i])
        for i, leaf in enumerate(tree.leaves)
    )
    return CpabeCiphertext(
        tree=tree,
        c_tilde=message * public.egg_alpha ** s,
        c=public.h ** s,
        leaves=leaves,
        federation=public.fingerprint(),
    )


def decrypt(key: FnSecretKey, ct: CpabeCiphertext) -> GTElement:
    if key.federation != ct.federation:
        raise KeyMismatch("key and ciphertext come from different federations")
    if len(ct.leaves) != len(ct.tree.leaves):
        raise MalformedCiphertext("leaf components do not cover the policy tree")
    if ct.c.params != key.d.params:
        raise MalformedCiphertext("ciphertext uses different group parameters")
    if not satisfies(ct.tree, key.attrs):
        raise PolicyNotSatisfied("key attributes do not satisfy the ciphertext policy")
    params = key.d.params
    coeffs = reconstruction_coefficients(ct.tree, key.attrs, params.p)
    # A = e(g,g)^(r*s), assembled from the satisfied leaves
    a = params.gt_identity
    for leaf_id, coeff in coeffs.items():
        attr = ct.tree.leaves[leaf_id].attribute
        dj, dpj = key.components[attr]
        cy, cpy = ct.leaves[leaf_id]
        a = a * (pair(dj, cy) / pair(dpj, cpy)) ** coeff
    return ct.c_tilde / (pair(ct.c, key.d) / a)
