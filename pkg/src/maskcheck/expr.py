"""Interned expression trees.

Every node is built through the module constructors (const, var, neg,
binop) and deduplicated in a global table, so structurally equal
expressions are the *same object*. That keeps fully expanded
computations affordable: the expansion of a straight-line program is a
tree semantically, but shared subtrees are stored once, and all the
per-node analyses (variable counts, sizes, evaluation) memoize on node
identity.

Tree-level quantities such as size and variable multiplicity still
count shared subtrees once per occurrence, matching the semantics of
the expanded tree.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .domain import BINARY_OPS, DomainConfig, eval_op, gf_mul_vec
from .errors import ShiftOutOfRange

PUBLIC = "public"
SECRET = "secret"
RANDOM = "random"
INTERNAL = "internal"

VAR_KINDS = (PUBLIC, SECRET, RANDOM, INTERNAL)

# Operator classes. COMMUTATIVE drives both printing-free rule symmetry
# and rewrite matching; RING_OPS excludes shifts (whose right operand is
# always a literal amount).
RING_OPS = ("^", "&", "|", "@", "+", "-", "*")
SHIFT_OPS = ("<<", ">>")
COMMUTATIVE = ("^", "&", "|", "@", "+", "*")


class Expr:
    __slots__ = ("_hash",)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"<{type(self).__name__} {pretty(self)}>"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value
        self._hash = hash(("c", value))


class Var(Expr):
    __slots__ = ("name", "kind")

    def __init__(self, name, kind):
        self.name = name
        self.kind = kind
        self._hash = hash(("v", name, kind))


class Unary(Expr):
    """Bitwise complement; the only unary operator."""

    __slots__ = ("op", "operand")

    def __init__(self, operand):
        self.op = "~"
        self.operand = operand
        self._hash = hash(("u", operand))


class Binary(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right):
        self.op = op
        self.left = left
        self.right = right
        self._hash = hash(("b", op, left, right))


_INTERN: dict[tuple, Expr] = {}


def _intern(key, make):
    node = _INTERN.get(key)
    if node is None:
        # setdefault keeps construction safe under concurrent parsing
        node = _INTERN.setdefault(key, make())
    return node


def const(value: int) -> Const:
    if value < 0:
        raise ValueError("constants must be non-negative")
    return _intern(("c", value), lambda: Const(value))


def var(name: str, kind: str) -> Var:
    if kind not in VAR_KINDS:
        raise ValueError(f"bad variable kind {kind!r}")
    return _intern(("v", name, kind), lambda: Var(name, kind))


def neg(operand: Expr) -> Unary:
    return _intern(("u", operand), lambda: Unary(operand))


def binop(op: str, left: Expr, right: Expr) -> Binary:
    if op not in BINARY_OPS:
        raise ValueError(f"bad operator {op!r}")
    return _intern(("b", op, left, right), lambda: Binary(op, left, right))


ZERO = const(0)
ONE = const(1)


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Unary):
        return (e.operand,)
    return ()


# --- memoized tree analyses ------------------------------------------------

_SIZE: dict[Expr, int] = {}
_COUNTS: dict[Expr, Counter] = {}
_PRETTY: dict[Expr, str] = {}


def size(e: Expr) -> int:
    """Node count of the expanded tree (shared nodes count per occurrence)."""
    got = _SIZE.get(e)
    if got is None:
        got = 1 + sum(size(c) for c in children(e))
        _SIZE[e] = got
    return got


def var_counts(e: Expr) -> Counter:
    """Occurrences of each Var leaf, with tree multiplicity."""
    got = _COUNTS.get(e)
    if got is None:
        if isinstance(e, Var):
            got = Counter({e: 1})
        elif isinstance(e, Const):
            got = Counter()
        else:
            got = Counter()
            for c in children(e):
                got.update(var_counts(c))
        _COUNTS[e] = got
    return got


def variables(e: Expr) -> set[str]:
    """Names of all variables occurring in e."""
    return {v.name for v in var_counts(e)}


def rvars(e: Expr) -> set[str]:
    """Names of the random variables occurring in e."""
    return {v.name for v in var_counts(e) if v.kind == RANDOM}


def var_leaves(e: Expr) -> set[Var]:
    return set(var_counts(e))


def occurrences(e: Expr, t: Expr) -> int:
    """How many times subterm t occurs in the tree of e."""
    memo: dict[Expr, int] = {}

    def walk(node):
        if node is t:
            return 1
        got = memo.get(node)
        if got is None:
            got = sum(walk(c) for c in children(node))
            memo[node] = got
        return got

    return walk(e)


def replace(e: Expr, t: Expr, s: Expr) -> Expr:
    """Replace every occurrence of subterm t in e with s."""
    memo: dict[Expr, Expr] = {}

    def walk(node):
        if node is t:
            return s
        got = memo.get(node)
        if got is None:
            if isinstance(node, Binary):
                left = walk(node.left)
                right = walk(node.right)
                got = node if left is node.left and right is node.right \
                    else binop(node.op, left, right)
            elif isinstance(node, Unary):
                inner = walk(node.operand)
                got = node if inner is node.operand else neg(inner)
            else:
                got = node
            memo[node] = got
        return got

    return walk(e)


def subterms(e: Expr) -> list[Expr]:
    """Distinct subterms of e, innermost first (size, then print order)."""
    seen: set[Expr] = set()
    out: list[Expr] = []

    def walk(node):
        if node in seen:
            return
        seen.add(node)
        for c in children(node):
            walk(c)
        out.append(node)

    walk(e)
    out.sort(key=lambda t: (size(t), pretty(t)))
    return out


def pretty(e: Expr) -> str:
    """Fully parenthesized rendering; reparses to the same tree."""
    got = _PRETTY.get(e)
    if got is None:
        if isinstance(e, Const):
            got = str(e.value)
        elif isinstance(e, Var):
            got = e.name
        elif isinstance(e, Unary):
            inner = pretty(e.operand)
            if isinstance(e.operand, (Binary, Unary)):
                got = f"~({inner})"
            else:
                got = f"~{inner}"
        else:
            got = f"({pretty(e.left)} {e.op} {pretty(e.right)})"
        _PRETTY[e] = got
    return got


# --- evaluation -------------------------------------------------------------

def eval_expr(e: Expr, env: dict[str, int], d: DomainConfig) -> int:
    """Evaluate with scalar ints from env; constants wrap mod 2^bits."""
    memo: dict[Expr, int] = {}

    def walk(node):
        got = memo.get(node)
        if got is None:
            if isinstance(node, Const):
                got = node.value & d.mask
            elif isinstance(node, Var):
                got = env[node.name] & d.mask
            elif isinstance(node, Unary):
                got = eval_op("~", walk(node.operand), None, d)
            else:
                if node.op in SHIFT_OPS:
                    if not isinstance(node.right, Const):
                        raise ShiftOutOfRange("shift amount must be a constant")
                    got = eval_op(node.op, walk(node.left), node.right.value, d)
                else:
                    got = eval_op(node.op, walk(node.left), walk(node.right), d)
            memo[node] = got
        return got

    return walk(e)


def eval_vec(e: Expr, env: dict[str, np.ndarray], d: DomainConfig) -> np.ndarray:
    """Evaluate elementwise over numpy uint32 arrays (broadcasting allowed).

    Wraparound of +, - and * is the intended modular semantics, so the
    numpy overflow warning (emitted only for scalar operands) is off.
    """
    mask = np.uint32(d.mask)
    memo: dict[Expr, np.ndarray] = {}

    def walk(node):
        got = memo.get(node)
        if got is None:
            if isinstance(node, Const):
                got = np.uint32(node.value & d.mask)
            elif isinstance(node, Var):
                got = env[node.name]
            elif isinstance(node, Unary):
                got = ~walk(node.operand) & mask
            elif node.op == "^":
                got = walk(node.left) ^ walk(node.right)
            elif node.op == "&":
                got = walk(node.left) & walk(node.right)
            elif node.op == "|":
                got = walk(node.left) | walk(node.right)
            elif node.op == "+":
                got = (walk(node.left) + walk(node.right)) & mask
            elif node.op == "-":
                got = (walk(node.left) - walk(node.right)) & mask
            elif node.op == "*":
                got = (walk(node.left) * walk(node.right)) & mask
            elif node.op == "@":
                got = gf_mul_vec(walk(node.left), walk(node.right), d)
            else:
                if not isinstance(node.right, Const):
                    raise ShiftOutOfRange("shift amount must be a constant")
                amount = node.right.value
                if not 0 <= amount < d.bits:
                    raise ShiftOutOfRange(
                        f"shift amount {amount} outside [0, {d.bits})")
                if node.op == "<<":
                    got = (walk(node.left) << np.uint32(amount)) & mask
                else:
                    got = walk(node.left) >> np.uint32(amount)
            memo[node] = got
        return got

    with np.errstate(over="ignore"):
        return walk(e)
