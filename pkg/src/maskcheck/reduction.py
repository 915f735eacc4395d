"""Distribution-preserving expression reductions.

Four passes run in a fixed order until nothing changes:

1. eliminate_ineffective - variables that never influence the value
   (decided by exhaustive enumeration under a bit budget) become 0.
2. apply_algebraic_laws  - local identities: e^e -> 0, e-e -> 0,
   annihilators for *, @, &, units for ^, *, @, double complement.
3. eliminate_dominated   - a subexpression dominated by a random r that
   occurs nowhere else collapses to r itself (it is a fresh uniform).
4. apply_meta_theorems   - pattern table of known equivalences, each
   guarded by the same "r occurs nowhere else" side condition.

Every pass preserves the joint distribution of the expression for each
fixing of secrets and publics, never grows the tree, and never invents
random variables, so the simplified form can stand in for the original
in both type inference and model counting.

A separate oracle hook lets callers register arbitrary rewrites
(e.g. boolean-to-arithmetic conversions); results are spot-checked by
exhaustive distribution comparison on narrow domains.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from . import expr as ex
from .domain import DomainConfig
from .errors import OracleUnsound
from .infer import dominant_vars
from .program import _Parser, _tokenize

EFFECTIVE_BITS_BUDGET = 20


def is_effective(x: str, e: ex.Expr, d: DomainConfig) -> bool:
    """Can changing x change the value of e, for some other fixing?

    Exhaustive over all assignments while the variables of e fit in
    EFFECTIVE_BITS_BUDGET bits; beyond that the answer is a
    conservative True.
    """
    names = sorted(ex.variables(e))
    if x not in names:
        return False
    if d.bits * len(names) > EFFECTIVE_BITS_BUDGET:
        return True
    env = {}
    axis = names.index(x)
    for i, name in enumerate(names):
        shape = [1] * len(names)
        shape[i] = d.size
        env[name] = np.arange(d.size, dtype=np.uint32).reshape(shape)
    values = np.broadcast_to(
        ex.eval_vec(e, env, d), (d.size,) * len(names))
    values = np.moveaxis(values, axis, -1)
    return bool((values != values[..., :1]).any())


def eliminate_ineffective(e: ex.Expr, d: DomainConfig) -> ex.Expr:
    """Replace every ineffective variable of e by the constant 0."""
    for name in sorted(ex.variables(e)):
        leaf = next(v for v in ex.var_counts(e) if v.name == name)
        if not is_effective(name, e, d):
            e = ex.replace(e, leaf, ex.ZERO)
    return e


_ANNIHILATED = ("*", "@", "&")
_UNIT_OPS = ("*", "@")


def apply_algebraic_laws(e: ex.Expr) -> ex.Expr:
    """Rewrite with the local identity/annihilator laws to a fixpoint."""

    def once(root):
        memo = {}

        def walk(node):
            got = memo.get(node)
            if got is not None:
                return got
            if isinstance(node, ex.Binary):
                left = walk(node.left)
                right = walk(node.right)
                new = _match_law(node.op, left, right)
                if new is None:
                    new = node if left is node.left and right is node.right \
                        else ex.binop(node.op, left, right)
            elif isinstance(node, ex.Unary):
                inner = walk(node.operand)
                if isinstance(inner, ex.Unary):
                    new = inner.operand
                else:
                    new = node if inner is node.operand else ex.neg(inner)
            else:
                new = node
            memo[node] = new
            return new

        return walk(root)

    prev = None
    while e is not prev:
        prev = e
        e = once(e)
    return e


def _match_law(op, left, right):
    if left is right and op in ("^", "-"):
        return ex.ZERO
    if op in _ANNIHILATED and (left is ex.ZERO or right is ex.ZERO):
        return ex.ZERO
    if op == "^":
        if right is ex.ZERO:
            return left
        if left is ex.ZERO:
            return right
    if op in _UNIT_OPS:
        if right is ex.ONE:
            return left
        if left is ex.ONE:
            return right
    return None


def _exclusive_to(e: ex.Expr, t: ex.Expr, r_name: str) -> bool:
    """Does every occurrence of random r in e sit inside an occurrence of t?"""
    leaf = ex.var(r_name, ex.RANDOM)
    total = ex.var_counts(e).get(leaf, 0)
    inside = ex.var_counts(t).get(leaf, 0)
    return total == ex.occurrences(e, t) * inside


def eliminate_dominated(e: ex.Expr, d: DomainConfig) -> ex.Expr:
    """Collapse r-dominated subexpressions to r when r occurs nowhere else.

    Innermost candidates are tried first; each hit replaces all
    occurrences of the subexpression and the scan restarts.
    """
    changed = True
    while changed:
        changed = False
        for t in ex.subterms(e):
            if isinstance(t, (ex.Var, ex.Const)):
                continue
            for r_name in sorted(dominant_vars(t, d)):
                if _exclusive_to(e, t, r_name):
                    e = ex.replace(e, t, ex.var(r_name, ex.RANDOM))
                    changed = True
                    break
            if changed:
                break
    return e


# --- meta-theorem patterns ----------------------------------------------------

class _MetaKinds:
    """Identifier classes for pattern text: `r` is the distinguished
    random metavariable, anything else matches an arbitrary subterm."""

    @staticmethod
    def get(name):
        return ex.RANDOM if name == "r" else ex.INTERNAL


def _parse_pattern_expr(text: str) -> ex.Expr:
    parser = _Parser(_tokenize(text))
    node = parser.expression(_MetaKinds())
    if parser.peek().kind != "eof":
        parser.fail("trailing input in pattern")
    return node


def parse_pattern(line: str) -> tuple[ex.Expr, ex.Expr]:
    """Parse one `lhs => rhs` rewrite rule."""
    if "=>" not in line:
        raise ValueError(f"pattern needs '=>': {line!r}")
    lhs_text, rhs_text = line.split("=>", 1)
    lhs = _parse_pattern_expr(lhs_text.strip())
    rhs = _parse_pattern_expr(rhs_text.strip())
    lhs_names = ex.variables(lhs)
    if not ex.variables(rhs) <= lhs_names:
        raise ValueError(f"replacement uses unbound names: {line!r}")
    return lhs, rhs


def load_meta_patterns(path) -> list[tuple[ex.Expr, ex.Expr]]:
    """Read rewrite rules from a file, one per line, `#` comments allowed."""
    patterns = []
    with open(path) as handle:
        for raw in handle:
            line = raw.split("#", 1)[0].strip()
            if line:
                patterns.append(parse_pattern(line))
    return patterns


# r masked by anything derived from 2*r leaves r's bit 0 in place,
# making the whole thing a bijection of r.
BUILTIN_META = (parse_pattern("r ^ ((2 * r) & e) => r"),)


def _match(pattern: ex.Expr, node: ex.Expr, bind: dict) -> bool:
    if isinstance(pattern, ex.Const):
        return isinstance(node, ex.Const) and node.value == pattern.value
    if isinstance(pattern, ex.Var):
        if pattern.kind == ex.RANDOM and not (
                isinstance(node, ex.Var) and node.kind == ex.RANDOM):
            return False
        bound = bind.get(pattern.name)
        if bound is not None:
            return bound is node
        bind[pattern.name] = node
        return True
    if isinstance(pattern, ex.Unary):
        return isinstance(node, ex.Unary) and _match(pattern.operand,
                                                     node.operand, bind)
    if isinstance(node, ex.Binary) and node.op == pattern.op:
        saved = dict(bind)
        if _match(pattern.left, node.left, bind) and \
                _match(pattern.right, node.right, bind):
            return True
        bind.clear()
        bind.update(saved)
        if pattern.op in ex.COMMUTATIVE:
            if _match(pattern.left, node.right, bind) and \
                    _match(pattern.right, node.left, bind):
                return True
            bind.clear()
            bind.update(saved)
    return False


def _instantiate(pattern: ex.Expr, bind: dict) -> ex.Expr:
    if isinstance(pattern, ex.Const):
        return pattern
    if isinstance(pattern, ex.Var):
        return bind[pattern.name]
    if isinstance(pattern, ex.Unary):
        return ex.neg(_instantiate(pattern.operand, bind))
    return ex.binop(pattern.op, _instantiate(pattern.left, bind),
                    _instantiate(pattern.right, bind))


def apply_meta_theorems(e: ex.Expr, d: DomainConfig,
                        patterns=None) -> ex.Expr:
    """Apply the pattern table to a fixpoint, innermost matches first.

    The distinguished random metavariable only matches a random
    variable that occurs nowhere outside the matched subterm.
    """
    if patterns is None:
        patterns = BUILTIN_META
    changed = True
    while changed:
        changed = False
        for t in ex.subterms(e):
            for lhs, rhs in patterns:
                bind: dict = {}
                if not _match(lhs, t, bind):
                    continue
                r_bound = bind.get("r")
                if r_bound is not None and \
                        not _exclusive_to(e, t, r_bound.name):
                    continue
                replacement = _instantiate(rhs, bind)
                if replacement is t:
                    continue
                e = ex.replace(e, t, replacement)
                changed = True
                break
            if changed:
                break
    return e


def simplify(e: ex.Expr, d: DomainConfig, patterns=None) -> ex.Expr:
    """Run the four reduction passes to a global fixpoint."""
    prev = None
    while e is not prev:
        prev = e
        e = eliminate_ineffective(e, d)
        e = apply_algebraic_laws(e)
        e = eliminate_dominated(e, d)
        e = apply_meta_theorems(e, d, patterns)
    return e


# --- transformation oracle ------------------------------------------------------

Oracle = Callable[[ex.Expr, DomainConfig], Optional[ex.Expr]]


def apply_oracle(e: ex.Expr, d: DomainConfig,
                 registry: list[Oracle]) -> Optional[ex.Expr]:
    """First registered rewrite that fires, distribution-checked when cheap.

    On domains of at most 2 bits (and few enough variables to
    enumerate) the rewrite is verified by comparing the exact
    distributions of e and the result for every fixing; a mismatch
    raises OracleUnsound.
    """
    for oracle in registry:
        result = oracle(e, d)
        if result is None:
            continue
        if d.bits <= 2:
            _spot_check(e, result, d)
        return result
    return None


def _spot_check(e: ex.Expr, result: ex.Expr, d: DomainConfig):
    from .counting import distribution  # local import avoids a cycle

    names = sorted((ex.variables(e) | ex.variables(result)) - ex.rvars(e)
                   - ex.rvars(result))
    if d.bits * (len(names) + len(ex.rvars(e) | ex.rvars(result))) > 16:
        return
    for idx in range(d.size ** len(names)):
        sigma = {}
        rest = idx
        for name in names:
            sigma[name] = rest % d.size
            rest //= d.size
        left = distribution(e, {k: v for k, v in sigma.items()
                                if k in ex.variables(e)}, d)
        right = distribution(result, {k: v for k, v in sigma.items()
                                      if k in ex.variables(result)}, d)
        if not np.array_equal(left.counts * right.total,
                              right.counts * left.total):
            raise OracleUnsound(
                f"rewrite of {ex.pretty(e)} to {ex.pretty(result)} "
                f"changes the distribution at sigma={sigma}")
