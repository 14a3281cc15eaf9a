"""Slow, obviously-correct reference implementations used to check the package."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import sympy

from fogfed.policy import AccessTree, Gate, Leaf


def brute_satisfies(tree: AccessTree, attrs) -> bool:
    """Try every k-subset of children instead of counting."""
    attrs = frozenset(attrs)

    def ok(node) -> bool:
        if isinstance(node, Leaf):
            return node.attribute in attrs
        return any(all(ok(c) for c in combo) for combo in itertools.combinations(node.children, node.threshold))

    return ok(tree.root)


def naive_seeded_prime(bits: int, seed: int) -> int:
    """Same start point as the package; walks upward one integer at a time."""
    n = random.Random(seed).getrandbits(bits) | (1 << (bits - 1)) | 1
    while not sympy.isprime(n):
        n += 1
    return n


def rational_interpolate_at_zero(points: dict[int, int], p: int) -> int:
    """Lagrange over the rationals, reduced mod p only at the end."""
    total = Fraction(0)
    for i, y in points.items():
        term = Fraction(y)
        for j in points:
            if j != i:
                term *= Fraction(-j, i - j)
        total += term
    return total.numerator * pow(total.denominator, -1, p) % p


def random_tree(rng: random.Random, universe, max_leaves: int = 10) -> AccessTree:
    """Random threshold tree with at most ``max_leaves`` leaves."""
    budget = rng.randint(1, max_leaves)

    def build(leaves: int):
        if leaves == 1 or rng.random() < 0.25:
            return Leaf(rng.choice(universe)), 1
        n_children = rng.randint(2, min(4, leaves))
        children, used = [], 0
        for k in range(n_children):
            remaining = leaves - used - (n_children - k - 1)
            child, size = build(rng.randint(1, max(1, remaining)))
            children.append(child)
            used += size
        return Gate(rng.randint(1, len(children)), tuple(children)), used

    root, _ = build(budget)
    return AccessTree(root)


def bit_flips(data: bytes):
    for i in range(len(data) * 8):
        mutated = bytearray(data)
        mutated[i // 8] ^= 1 << (i % 8)
        yield i, bytes(mutated)
