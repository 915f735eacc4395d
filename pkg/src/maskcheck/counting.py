"""Exact distribution computation by exhaustive enumeration.

For an expression e over publics/secrets (fixed by an assignment sigma)
and randoms (enumerated exhaustively), `distribution` tallies how often
each value appears. On top of that:

* check_uniform - flat for every sigma
* check_si      - identical across sigma pairs that agree on publics
* qms_exact     - 1 - max_(sigma1,sigma2,c) (count1[c]-count2[c]) / 2^m,
                  the quantitative masking strength, as an exact rational

The sigma space is enumerated in lexicographic order of variable values
(variables sorted by name, first name most significant), sliced into
fixed-size chunks that a thread pool may evaluate concurrently;
results land in preallocated arrays indexed by slice, so the outcome,
including witnesses, is byte-identical no matter how many workers run.
Witnesses are the lexicographically smallest assignments that exhibit
the reported gap.

Ineffective secret/public variables are excluded from the sigma
enumeration (they cannot change the distribution) and reported pinned
to 0 in witnesses. Work is bounded by an evaluation budget and an
internal count-matrix cap; a cooperative deadline can abort between
chunks.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import expr as ex
from .domain import DomainConfig
from .errors import BudgetExceeded, UncoveredVariable, VariableTimeout

DEFAULT_BUDGET = 1 << 28
_MATRIX_CELL_CAP = 1 << 26
_CHUNK_CELLS = 1 << 20


@dataclass
class CountVector:
    """Value counts over all random assignments (total = 2^(bits*|rvars|))."""

    counts: np.ndarray
    total: int

    def __eq__(self, other):
        return isinstance(other, CountVector) and self.total == other.total \
            and np.array_equal(self.counts, other.counts)

    def is_flat(self) -> bool:
        size = len(self.counts)
        return self.total % size == 0 and \
            bool((self.counts == self.total // size).all())

    def probability(self, value: int) -> Fraction:
        return Fraction(int(self.counts[value]), self.total)


@dataclass
class Qms:
    """Quantitative masking strength num/den, deliberately unreduced.

    The denominator is 2^(bits*|rvars|) of the counted expression. The
    witness, present exactly when num < den, is the lexicographically
    smallest (sigma1, sigma2, c) realizing the maximal count gap.
    """

    num: int
    den: int
    witness: tuple[dict, dict, int] | None = None

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __float__(self):
        return self.num / self.den


def _check_deadline(deadline):
    if deadline is not None and time.monotonic() > deadline:
        raise VariableTimeout("per-variable deadline exceeded")


class _Space:
    """Enumeration layout: which variables index sigma, which are random."""

    def __init__(self, e: ex.Expr, d: DomainConfig, budget: int):
        self.d = d
        leaves = ex.var_counts(e)
        nonrandom = sorted(v.name for v in leaves if v.kind != ex.RANDOM)
        self.rand_names = sorted(v.name for v in leaves
                                 if v.kind == ex.RANDOM)
        from .reduction import is_effective  # lazy: reduction also uses us
        self.sig_names = [n for n in nonrandom if is_effective(n, e, d)]
        self.pinned = {n: 0 for n in nonrandom if n not in self.sig_names}
        kind_of = {v.name: v.kind for v in leaves}
        self.pub_positions = [i for i, n in enumerate(self.sig_names)
                              if kind_of[n] == ex.PUBLIC]
        self.S = d.size ** len(self.sig_names)
        self.F = d.size ** len(self.rand_names)
        if self.S * self.F > budget:
            raise BudgetExceeded(
                f"{self.S} sigma x {self.F} random assignments exceed "
                f"the budget of {budget} evaluations")

    def sigma_dict(self, s: int) -> dict[str, int]:
        bits = self.d.bits
        out = dict(self.pinned)
        for i, name in enumerate(self.sig_names):
            shift = bits * (len(self.sig_names) - 1 - i)
            out[name] = (s >> shift) & self.d.mask
        return dict(sorted(out.items()))

    def pub_keys(self) -> np.ndarray:
        """Packed public values per sigma index, grouping key for SI."""
        s = np.arange(self.S, dtype=np.uint64)
        bits = self.d.bits
        pk = np.zeros(self.S, dtype=np.uint64)
        for rank, pos in enumerate(self.pub_positions):
            shift = bits * (len(self.sig_names) - 1 - pos)
            field = (s >> np.uint64(shift)) & np.uint64(self.d.mask)
            out_shift = bits * (len(self.pub_positions) - 1 - rank)
            pk |= field << np.uint64(out_shift)
        return pk


def _evaluate_block(e, d, space, s_lo, s_hi):
    """Values of e for sigma indices [s_lo, s_hi) x all random assignments."""
    bits = d.bits
    mask = np.uint64(d.mask)
    env: dict[str, np.ndarray] = {}
    s = np.arange(s_lo, s_hi, dtype=np.uint64)
    for i, name in enumerate(space.sig_names):
        shift = np.uint64(bits * (len(space.sig_names) - 1 - i))
        env[name] = ((s >> shift) & mask).astype(np.uint32)[:, None]
    f = np.arange(space.F, dtype=np.uint64)
    for j, name in enumerate(space.rand_names):
        shift = np.uint64(bits * (len(space.rand_names) - 1 - j))
        env[name] = ((f >> shift) & mask).astype(np.uint32)[None, :]
    for name in space.pinned:
        env[name] = np.uint32(0)
    out = ex.eval_vec(e, env, d)
    return np.broadcast_to(out, (s_hi - s_lo, space.F))


def _counts_matrix(e, d, space, jobs, deadline):
    """(S x 2^bits) count matrix, or per-sigma values when F == 1."""
    V = d.size
    if space.F == 1:
        values = np.empty(space.S, dtype=np.uint32)
        target = values
    else:
        if space.S * V > _MATRIX_CELL_CAP:
            raise BudgetExceeded(
                f"count matrix of {space.S} x {V} cells exceeds the "
                f"internal cap of {_MATRIX_CELL_CAP}")
        target = np.empty((space.S, V), dtype=np.uint32)

    chunk = max(1, _CHUNK_CELLS // space.F)
    spans = [(lo, min(lo + chunk, space.S))
             for lo in range(0, space.S, chunk)]

    def work(span):
        lo, hi = span
        _check_deadline(deadline)
        block = _evaluate_block(e, d, space, lo, hi)
        if space.F == 1:
            target[lo:hi] = block[:, 0]
        else:
            rows = np.arange(hi - lo, dtype=np.int64)[:, None]
            flat = (rows * V + block.astype(np.int64)).ravel()
            target[lo:hi] = np.bincount(
                flat, minlength=(hi - lo) * V).reshape(hi - lo, V)

    if jobs > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    return target


_DIST_CACHE: dict = {}


def distribution(e: ex.Expr, sigma: dict[str, int], d: DomainConfig,
                 budget: int = DEFAULT_BUDGET) -> CountVector:
    """Exact value counts of e under sigma, over all random assignments."""
    leaves = ex.var_counts(e)
    nonrandom = {v.name for v in leaves if v.kind != ex.RANDOM}
    missing = nonrandom - set(sigma)
    if missing:
        raise UncoveredVariable(
            f"sigma misses {sorted(missing)} for {ex.pretty(e)}")
    key = (e, tuple(sorted((n, sigma[n] & d.mask) for n in nonrandom)), d)
    cached = _DIST_CACHE.get(key)
    if cached is not None:
        return cached

    rand_names = sorted(v.name for v in leaves if v.kind == ex.RANDOM)
    F = d.size ** len(rand_names)
    if F > budget:
        raise BudgetExceeded(f"{F} random assignments exceed budget {budget}")
    counts = np.zeros(d.size, dtype=np.int64)
    bits = d.bits
    for lo in range(0, F, _CHUNK_CELLS):
        hi = min(lo + _CHUNK_CELLS, F)
        f = np.arange(lo, hi, dtype=np.uint64)
        env: dict[str, np.ndarray] = {
            name: np.uint32(sigma[name] & d.mask) for name in nonrandom}
        for j, name in enumerate(rand_names):
            shift = np.uint64(bits * (len(rand_names) - 1 - j))
            env[name] = ((f >> shift) & np.uint64(d.mask)).astype(np.uint32)
        out = np.broadcast_to(ex.eval_vec(e, env, d), (hi - lo,))
        counts += np.bincount(out, minlength=d.size)
    result = CountVector(counts, F)
    _DIST_CACHE[key] = result
    return result


def check_uniform(e: ex.Expr, d: DomainConfig, budget: int = DEFAULT_BUDGET,
                  jobs: int = 1, deadline: float | None = None) -> bool:
    """Is e uniformly distributed for every fixing of secrets and publics?"""
    space = _Space(e, d, budget)
    if space.F % d.size != 0:
        return False  # counts cannot be flat (includes F == 1)
    matrix = _counts_matrix(e, d, space, jobs, deadline)
    return bool((matrix == space.F // d.size).all())


def _group_spans(space):
    """Sigma index groups sharing a public-key, in lexicographic order."""
    pk = space.pub_keys()
    if not space.pub_positions:
        return [np.arange(space.S)]
    _, first = np.unique(pk, return_index=True)
    return [np.nonzero(pk == pk[i])[0] for i in np.sort(first)]


def check_si(e: ex.Expr, d: DomainConfig, budget: int = DEFAULT_BUDGET,
             jobs: int = 1, deadline: float | None = None
             ) -> tuple[bool, tuple[dict, dict] | None]:
    """Secret independence: same distribution across each public group.

    Returns (True, None) or (False, (sigma1, sigma2)) with the
    lexicographically smallest differing pair.
    """
    space = _Space(e, d, budget)
    matrix = _counts_matrix(e, d, space, jobs, deadline)
    for members in _group_spans(space):
        block = matrix[members]
        if space.F == 1:
            differs = np.nonzero(block != block[0])[0]
        else:
            differs = np.nonzero((block != block[0]).any(axis=1))[0]
        if differs.size:
            s1 = int(members[0])
            s2 = int(members[differs[0]])
            return False, (space.sigma_dict(s1), space.sigma_dict(s2))
    return True, None


def qms_exact(e: ex.Expr, d: DomainConfig, budget: int = DEFAULT_BUDGET,
              jobs: int = 1, deadline: float | None = None) -> Qms:
    """Exact quantitative masking strength of e."""
    space = _Space(e, d, budget)
    matrix = _counts_matrix(e, d, space, jobs, deadline)
    den = space.F
    groups = _group_spans(space)

    if space.F == 1:
        gap = 0
        for members in groups:
            vals = matrix[members]
            if (vals != vals[0]).any():
                gap = 1
                break
        if gap == 0:
            return Qms(1, 1)
        for members in groups:
            vals = matrix[members]
            differs = np.nonzero(vals != vals[0])[0]
            if differs.size:
                s1 = int(members[0])
                s2 = int(members[differs[0]])
                return Qms(0, 1, (space.sigma_dict(s1),
                                  space.sigma_dict(s2), int(vals[0])))

    signed = matrix.astype(np.int64)
    group_of = np.empty(space.S, dtype=np.int64)
    colmin = np.empty((len(groups), d.size), dtype=np.int64)
    for g, members in enumerate(groups):
        group_of[members] = g
        colmin[g] = signed[members].min(axis=0)
    per_sigma_best = (signed - colmin[group_of]).max(axis=1)
    gap = int(per_sigma_best.max())
    if gap == 0:
        return Qms(den, den)

    s1 = int(np.nonzero(per_sigma_best == gap)[0][0])
    members = groups[int(group_of[s1])]
    diffs = signed[s1][None, :] - signed[members]
    hit_rows = np.nonzero((diffs == gap).any(axis=1))[0]
    s2 = int(members[hit_rows[0]])
    c = int(np.nonzero(diffs[hit_rows[0]] == gap)[0][0])
    return Qms(den - gap, den,
               (space.sigma_dict(s1), space.sigma_dict(s2), c))
