"""Polynomial evaluation and Lagrange interpolation over Z_p."""

from __future__ import annotations

import random
from typing import Iterable, Mapping, Sequence


def random_polynomial(constant: int, degree: int, p: int, rng: random.Random) -> list[int]:
    """Coefficients ``[a0, a1, ...]`` with ``a0 = constant``."""
    return [constant % p] + [rng.randrange(p) for _ in range(degree)]


def poly_eval(coeffs: Sequence[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def lagrange_coefficient(i: int, points: Iterable[int], p: int, x: int = 0) -> int:
    """Basis polynomial for point ``i`` over ``points``, evaluated at ``x``."""
    num, den = 1, 1
    for j in points:
        if j == i:
            continue
        num = num * (x - j) % p
        den = den * (i - j) % p
    if den == 0:
        raise ValueError("duplicate interpolation points")
    return num * pow(den, -1, p) % p


def interpolate_at_zero(points: Mapping[int, int], p: int) -> int:
    xs = list(points)
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate interpolation points")
    return sum(lagrange_coefficient(i, xs, p) * y for i, y in points.items()) % p
