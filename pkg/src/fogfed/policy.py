"""Monotone access trees: parsing, satisfaction, sharing and reconstruction.

Grammar accepted by :func:`parse_policy` (keywords are case-insensitive)::

    attr   := [A-Za-z0-9_-]+
    expr   := term ("OR" term)*
    term   := factor ("AND" factor)*
    factor := attr | "(" expr ")"

Leaves are numbered left to right from 0; that number is the leaf id used by
share maps and coefficient maps. Gate children are indexed 1..#children and
those indices are the evaluation points of the gate polynomial.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

from .fieldmath import lagrange_coefficient, poly_eval, random_polynomial


class PolicyError(ValueError):
    pass


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class PolicyNotSatisfied(PolicyError):
    pass


@dataclass(frozen=True)
class Leaf:
    attribute: str


@dataclass(frozen=True)
class Gate:
    threshold: int
    children: tuple["Node", ...]

    def __post_init__(self):
        if not self.children:
            raise PolicyError("gate without children")
        if not 1 <= self.threshold <= len(self.children):
            raise PolicyError(
                f"gate threshold {self.threshold} outside 1..{len(self.children)}"
            )


Node = Union[Leaf, Gate]


def AND(*children: Node) -> Gate:
    return Gate(len(children), tuple(children))


def OR(*children: Node) -> Gate:
    return Gate(1, tuple(children))


@dataclass(frozen=True)
class AccessTree:
    root: Node

    @cached_property
    def leaves(self) -> tuple[Leaf, ...]:
        out: list[Leaf] = []

        def walk(node: Node) -> None:
            if isinstance(node, Leaf):
                out.append(node)
            else:
                for child in node.children:
                    walk(child)

        walk(self.root)
        return tuple(out)

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(leaf.attribute for leaf in self.leaves)

    def to_expr(self) -> str:
        return _render(self.root, top=True)

    def __str__(self) -> str:
        return self.to_expr()


def _render(node: Node, top: bool = False) -> str:
    if isinstance(node, Leaf):
        return node.attribute
    parts = [_render(c) for c in node.children]
    if node.threshold == len(node.children) and len(parts) > 1:
        text = " AND ".join(parts)
    elif node.threshold == 1 and len(parts) > 1:
        text = " OR ".join(parts)
    elif len(parts) == 1:
        return parts[0]
    else:
        return f"{node.threshold}of({', '.join(parts)})"
    return text if top else f"({text})"


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<lp>\()|(?P<rp>\))|(?P<word>[A-Za-z0-9_-]+))")


def _tokenize(expr: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(expr):
        if expr[pos:].strip() == "":
            break
        m = _TOKEN.match(expr, pos)
        if not m:
            bad = pos + (len(expr[pos:]) - len(expr[pos:].lstrip()))
            raise PolicySyntaxError(f"unexpected character {expr[bad]!r}", bad)
        start = m.start(m.lastgroup)
        if m.lastgroup == "word":
            word = m.group("word")
            kind = word.upper() if word.upper() in ("AND", "OR") else "ATTR"
            tokens.append((kind, word, start))
        else:
            tokens.append((m.lastgroup.upper(), m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("END", "", len(expr)))
    return tokens


class _Parser:
    def __init__(self, expr: str):
        self.tokens = _tokenize(expr)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str):
        tok = self.tokens[self.i]
        if tok[0] != kind:
            found = "end of input" if tok[0] == "END" else repr(tok[1])
            raise PolicySyntaxError(f"expected {kind.lower()}, found {found}", tok[2])
        self.i += 1
        return tok

    def expr(self) -> Node:
        terms = [self.term()]
        while self.peek()[0] == "OR":
            self.take("OR")
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else OR(*terms)

    def term(self) -> Node:
        factors = [self.factor()]
        while self.peek()[0] == "AND":
            self.take("AND")
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else AND(*factors)

    def factor(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "ATTR":
            self.i += 1
            return Leaf(text)
        if kind == "LP":
            self.take("LP")
            node = self.expr()
            self.take("RP")
            return node
        found = "end of input" if kind == "END" else repr(text)
        raise PolicySyntaxError(f"expected attribute or '(', found {found}", pos)


def parse_policy(expr: str) -> AccessTree:
    if not expr or not expr.strip():
        raise PolicySyntaxError("empty policy expression", 0)
    parser = _Parser(expr)
    root = parser.expr()
    parser.take("END")
    return AccessTree(root)


# -- evaluation --------------------------------------------------------------

def satisfies(tree: AccessTree, attrs: Iterable[str]) -> bool:
    attrs = frozenset(attrs)

    def ok(node: Node) -> bool:
        if isinstance(node, Leaf):
            return node.attribute in attrs
        return sum(ok(c) for c in node.children) >= node.threshold

    return ok(tree.root)


def _walk_with_ids(tree: AccessTree):
    """Yield ``(node, first_leaf_id)`` pairs while assigning leaf ids."""
    counter = 0

    def walk(node: Node):
        nonlocal counter
        if isinstance(node, Leaf):
            leaf_id = counter
            counter += 1
            return ("leaf", node, leaf_id)
        return ("gate", node, [walk(c) for c in node.children])

    return walk(tree.root)


def share_over_tree(tree: AccessTree, secret: int, rng: random.Random, p: int) -> dict[int, int]:
    """Top-down sharing of ``secret``; returns leaf id -> q_leaf(0)."""
    shares: dict[int, int] = {}

    def walk(entry, value: int) -> None:
        kind, node, rest = entry
        if kind == "leaf":
            shares[rest] = value % p
            return
        coeffs = random_polynomial(value, node.threshold - 1, p, rng)
        for index, child in enumerate(rest, start=1):
            walk(child, poly_eval(coeffs, index, p))

    walk(_walk_with_ids(tree), secret)
    return shares


def _minimal_cover(entry, attrs: frozenset[str]):
    """Smallest satisfying leaf-id tuple for a subtree (lexicographic tie-break).

    Returns ``None`` when the subtree is unsatisfied, otherwise
    ``(leaf_ids, plan)`` where plan records the chosen child indices.
    """
    kind, node, rest = entry
    if kind == "leaf":
        if node.attribute in attrs:
            return (rest,), ("leaf", rest)
        return None
    candidates = []
    for index, child in enumerate(rest, start=1):
        found = _minimal_cover(child, attrs)
        if found is not None:
            candidates.append((len(found[0]), index, found))
    if len(candidates) < node.threshold:
        return None
    # Children cover disjoint, increasing leaf-id ranges, so preferring the
    # leftmost among equal-size candidates yields the lexicographically
    # smallest union.
    chosen = sorted(candidates)[: node.threshold]
    chosen.sort(key=lambda c: c[1])
    leaf_ids = tuple(i for _, _, (ids, _) in chosen for i in ids)
    plan = ("gate", [(index, sub_plan) for _, index, (_, sub_plan) in chosen])
    return leaf_ids, plan


def minimal_satisfying_leaves(tree: AccessTree, attrs: Iterable[str]) -> tuple[int, ...]:
    found = _minimal_cover(_walk_with_ids(tree), frozenset(attrs))
    if found is None:
        raise PolicyNotSatisfied("attributes do not satisfy the access policy")
    return found[0]


def reconstruction_coefficients(tree: AccessTree, attrs: Iterable[str], p: int) -> dict[int, int]:
    """Leaf id -> coefficient such that sum(coeff * share) == secret (mod p)."""
    found = _minimal_cover(_walk_with_ids(tree), frozenset(attrs))
    if found is None:
        raise PolicyNotSatisfied("attributes do not satisfy the access policy")
    coeffs: dict[int, int] = {}

    def walk(plan, factor: int) -> None:
        if plan[0] == "leaf":
            coeffs[plan[1]] = factor % p
            return
        points = [index for index, _ in plan[1]]
        for index, sub in plan[1]:
            walk(sub, factor * lagrange_coefficient(index, points, p))

    walk(found[1], 1)
    return coeffs


def tree_to_fields(node: Node) -> list:
    """Structural encoding: a leaf is ``["L", attr]``, a gate ``["G", k, [children]]``."""
    if isinstance(node, Leaf):
        return ["L", node.attribute]
    return ["G", node.threshold, [tree_to_fields(c) for c in node.children]]


def tree_from_fields(fields: list) -> Node:
    if fields and fields[0] == "L" and len(fields) == 2:
        return Leaf(fields[1])
    if fields and fields[0] == "G" and len(fields) == 3:
        return Gate(fields[1], tuple(tree_from_fields(c) for c in fields[2]))
    raise PolicyError("malformed tree encoding")
