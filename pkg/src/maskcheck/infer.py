"""Distribution types and the syntax-directed rules that assign them.

Each expression over program inputs gets one of four labels:

* RUD - uniform for every fixing of secrets and publics
* SID - distribution identical across fixings that agree on publics
  (RUD is a subtype: uniform everywhere implies identical everywhere)
* SDD - provably NOT secret-independent
* UKD - the rules cannot decide

The workhorse is the dominant-variable check: a random r that occurs
exactly once, reachable from the root through bijective steps only
(xor, complement, modular add/sub, or a multiplication whose other
operand is an invertible constant), makes the whole expression uniform.

Rules fire in a fixed priority order and every binary rule is also
tried with its operands swapped (commutativity of the ring operators),
so the outcome is deterministic. An optional store of already-resolved
expression types is consulted before giving up with UKD, which lets
verdicts established by model counting propagate into later, larger
expressions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import expr as ex
from .domain import DomainConfig


class DistType(enum.Enum):
    RUD = "RUD"
    SID = "SID"
    SDD = "SDD"
    UKD = "UKD"

    def __str__(self):
        return self.value


RUD = DistType.RUD
SID = DistType.SID
SDD = DistType.SDD
UKD = DistType.UKD


def at_most_sid(t: DistType) -> bool:
    """Subtype check: RUD counts wherever SID is required."""
    return t in (RUD, SID)


@dataclass(frozen=True)
class Judgement:
    expr: ex.Expr
    dist: DistType
    rule_trace: tuple[str, ...]   # derivation, root rule last


# Operators through which uniformity survives unconditionally.
_BIJECTIVE_OPS = ("^", "+", "-")
# Multiplications that are bijective when the sibling is an invertible
# constant: `*` needs an odd constant (units mod 2^bits), `@` any
# nonzero constant (field).
_MUL_OPS = ("*", "@")
_PRODUCT_OPS = ("&", "|", "@", "*")


def _const_invertible(c: ex.Const, op: str, d: DomainConfig | None) -> bool:
    value = c.value if d is None else c.value & d.mask
    if op == "*":
        return value & 1 == 1
    return value != 0


def dominant_vars(e: ex.Expr, d: DomainConfig | None = None) -> set[str]:
    """Random variables that occur once and dominate the expression.

    Passing the domain lets constant siblings be judged by their masked
    value (a literal like 256 is 0 in an 8-bit word and must not count
    as invertible).
    """
    counts = ex.var_counts(e)
    once = {v.name for v, k in counts.items() if v.kind == ex.RANDOM and k == 1}
    if not once:
        return set()

    reachable: set[str] = set()
    seen: set[ex.Expr] = set()

    def walk(node):
        if node in seen:
            return
        seen.add(node)
        if isinstance(node, ex.Var):
            if node.kind == ex.RANDOM:
                reachable.add(node.name)
        elif isinstance(node, ex.Unary):
            walk(node.operand)
        elif isinstance(node, ex.Binary):
            if node.op in _BIJECTIVE_OPS:
                walk(node.left)
                walk(node.right)
            elif node.op in _MUL_OPS:
                if isinstance(node.right, ex.Const) and \
                        _const_invertible(node.right, node.op, d):
                    walk(node.left)
                if isinstance(node.left, ex.Const) and \
                        _const_invertible(node.left, node.op, d):
                    walk(node.right)
            # &, | and shifts do not preserve uniformity

    walk(e)
    return reachable & once


def infer(e: ex.Expr, d: DomainConfig | None = None,
          store: dict[ex.Expr, DistType] | None = None) -> Judgement:
    """Assign a distribution type by the rule system.

    `store` maps already-resolved expressions to their types; it is
    consulted only where the rules would otherwise answer UKD.
    """
    memo: dict[ex.Expr, Judgement] = {}

    def derive(node: ex.Expr) -> Judgement:
        got = memo.get(node)
        if got is not None:
            return got
        got = _derive(node)
        memo[node] = got
        return got

    def _derive(node: ex.Expr) -> Judgement:
        # dominant random variable: uniform outright
        if dominant_vars(node, d):
            return Judgement(node, RUD, ("dominant",))
        # no secret anywhere: the distribution cannot depend on one
        counts = ex.var_counts(node)
        if not any(v.kind == ex.SECRET for v in counts):
            return Judgement(node, SID, ("no-secret",))
        if isinstance(node, ex.Var) and node.kind == ex.SECRET:
            return Judgement(node, SDD, ("secret",))

        if isinstance(node, ex.Binary):
            left, right, op = node.left, node.right, node.op
            # e (+) e collapses to a constant
            if left is right and op in ("^", "-"):
                return Judgement(node, SID, ("self-cancel",))
        if isinstance(node, ex.Unary):
            # complement is a bijection on values: type carries over
            sub = derive(node.operand)
            if sub.dist is not UKD:
                return Judgement(node, sub.dist, sub.rule_trace + ("complement",))
        if isinstance(node, ex.Binary):
            left, right, op = node.left, node.right, node.op
            if left is right:
                sub = derive(left)
                # e op e is a pointwise function of e
                if at_most_sid(sub.dist):
                    return Judgement(node, SID, sub.rule_trace + ("self-op",))
                if sub.dist is SDD and op in ("&", "|"):
                    return Judgement(node, SDD,
                                     sub.rule_trace + ("self-absorb",))

            lj = derive(left)
            rj = derive(right)

            # uniform x uniform with a fresh dominant on one side
            if op in _PRODUCT_OPS:
                if lj.dist is RUD and rj.dist is RUD:
                    if dominant_vars(left, d) - ex.rvars(right):
                        return Judgement(
                            node, SID,
                            lj.rule_trace + rj.rule_trace + ("masked-product",))
                    if dominant_vars(right, d) - ex.rvars(left):
                        return Judgement(
                            node, SID,
                            lj.rule_trace + rj.rule_trace
                            + ("masked-product", "commute"))

            # independent secret-independent operands
            if at_most_sid(lj.dist) and at_most_sid(rj.dist) and \
                    not (ex.rvars(left) & ex.rvars(right)):
                return Judgement(
                    node, SID,
                    lj.rule_trace + rj.rule_trace + ("independent-op",))

            # dependent x freshly-masked uniform stays dependent
            if op in _PRODUCT_OPS:
                if lj.dist is SDD and rj.dist is RUD and \
                        dominant_vars(right, d) - ex.rvars(left):
                    return Judgement(
                        node, SDD,
                        lj.rule_trace + rj.rule_trace + ("tainted-product",))
                if rj.dist is SDD and lj.dist is RUD and \
                        dominant_vars(left, d) - ex.rvars(right):
                    return Judgement(
                        node, SDD,
                        lj.rule_trace + rj.rule_trace
                        + ("tainted-product", "commute"))

        if store is not None:
            known = store.get(node)
            if known is not None and known is not UKD:
                return Judgement(node, known, ("recalled",))
        return Judgement(node, UKD, ("unknown",))

    return derive(e)
