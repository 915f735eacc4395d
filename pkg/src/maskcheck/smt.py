"""SMT-LIB2 encoding of distribution-gap queries and solver driving.

The question "is the masking strength of e below q" is encoded as
satisfiability of:

    exists secrets k, k', publics p, value c :
        #{f : e[f](k,p) = c}  -  #{f : e[f](k',p) = c}  >  delta

where f ranges over all 2^m assignments to the random variables
(m = bits * |rvars|), e[f] is e with randoms replaced by the constants
f assigns, and delta = ceil((1-q) * 2^m). Both program copies share the
public variables and the probed value c; only the secrets are primed.

The script is byte-deterministic for a given (expression, q, domain,
profile): fixed sort orders, fixed name mangling (publics/secrets p_*,
k_*, primed secrets kk_*, copies c_*/d_*, indicators i_*/j_*), and a
balanced adder tree, so emitted files can be golden-tested and cached.

Profiles: "bv" sums indicator bit-vectors of width m+2 (wide enough
that sum + delta never wraps) in logic QF_BV; "int" sums integer
indicators, for solvers that accept mixed bit-vector/integer scripts.

qms_smt runs the dyadic binary search: at most m+1 queries, each
conclusive answer halving the interval, yielding the exact strength
low/2^m without ever enumerating sigma space.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import expr as ex
from .domain import DomainConfig
from .errors import (
    InconclusiveSolver,
    ShiftOutOfRange,
    SolverSpawnFailure,
    TooManyCopies,
)

MAX_COPY_BITS = 16

SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class SmtQuery:
    text: str
    q: Fraction
    m: int          # bits * |rvars|: 2^m program copies per side
    delta: int      # ceil((1-q) * 2^m)


@dataclass(frozen=True)
class SolverVerdict:
    kind: str               # sat | unsat | unknown
    reason: str = ""
    elapsed: float = 0.0


def _bv(value: int, width: int) -> str:
    return f"(_ bv{value} {width})"


def _gfmul_define(d: DomainConfig) -> str:
    """Unrolled shift-and-xor field multiply as a define-fun circuit."""
    n = d.bits
    wide = 2 * n - 1
    lines = [f"(define-fun gfmul ((a (_ BitVec {n})) (b (_ BitVec {n})))"
             f" (_ BitVec {n})"]
    if n == 1:
        lines.append("  (bvand a b))")
        return "\n".join(lines)
    lines.append(f"  (let ((bw ((_ zero_extend {wide - n}) b)))")
    terms = [
        f"(ite (= ((_ extract {i} {i}) a) #b1)"
        f" (bvshl bw {_bv(i, wide)}) {_bv(0, wide)})"
        for i in range(n)
    ]
    acc = terms[0]
    for term in terms[1:]:
        acc = f"(bvxor {acc} {term})"
    lines.append(f"  (let ((p0 {acc}))")
    depth = 1
    for j in range(2 * n - 2, n - 1, -1):
        prev = f"p{depth - 1}"
        cur = f"p{depth}"
        lines.append(
            f"  (let (({cur} (ite (= ((_ extract {j} {j}) {prev}) #b1)"
            f" (bvxor {prev} {_bv(d.poly << (j - n), wide)}) {prev})))")
        depth += 1
    closers = depth + 2  # every let, plus the define-fun itself
    lines.append(f"  ((_ extract {n - 1} 0) p{depth - 1})" + ")" * closers)
    return "\n".join(lines)


def _term(e: ex.Expr, d: DomainConfig, rand_values: dict[str, int],
          primed: bool, cache: dict) -> str:
    """Render e with randoms substituted; secrets primed on request."""
    key = (e, primed)
    got = cache.get(key)
    if got is not None:
        return got
    n = d.bits
    if isinstance(e, ex.Const):
        got = _bv(e.value & d.mask, n)
    elif isinstance(e, ex.Var):
        if e.kind == ex.RANDOM:
            got = _bv(rand_values[e.name] & d.mask, n)
        elif e.kind == ex.SECRET:
            got = f"kk_{e.name}" if primed else f"k_{e.name}"
        else:
            got = f"p_{e.name}"
    elif isinstance(e, ex.Unary):
        got = f"(bvnot {_term(e.operand, d, rand_values, primed, cache)})"
    else:
        left = _term(e.left, d, rand_values, primed, cache)
        if e.op in ex.SHIFT_OPS:
            if not isinstance(e.right, ex.Const):
                raise ShiftOutOfRange("shift amount must be a constant")
            amount = e.right.value
            if not 0 <= amount < n:
                raise ShiftOutOfRange(
                    f"shift amount {amount} outside [0, {n})")
            fn = "bvshl" if e.op == "<<" else "bvlshr"
            got = f"({fn} {left} {_bv(amount, n)})"
        else:
            right = _term(e.right, d, rand_values, primed, cache)
            fn = {"^": "bvxor", "&": "bvand", "|": "bvor", "+": "bvadd",
                  "-": "bvsub", "*": "bvmul", "@": "gfmul"}[e.op]
            got = f"({fn} {left} {right})"
    cache[key] = got
    return got


def _balanced_sum(names: list[str], adder: str) -> str:
    while len(names) > 1:
        names = [f"({adder} {names[i]} {names[i + 1]})"
                 if i + 1 < len(names) else names[i]
                 for i in range(0, len(names), 2)]
    return names[0]


def encode_psi(e: ex.Expr, q, d: DomainConfig,
               profile: str = "bv") -> SmtQuery:
    """Build the strength-below-q satisfiability script for e."""
    if profile not in ("bv", "int"):
        raise ValueError(f"unknown profile {profile!r}")
    q = Fraction(q)
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    n = d.bits
    rand_names = sorted(ex.rvars(e))
    m = n * len(rand_names)
    if m > MAX_COPY_BITS:
        raise TooManyCopies(
            f"{len(rand_names)} randoms x {n} bits would need 2^{m} copies")
    copies = 1 << m
    # exact for the dyadic thresholds the binary search asks about;
    # for other q the ceiling errs on the unsatisfiable side
    delta = math.ceil((1 - q) * copies)

    leaves = ex.var_counts(e)
    publics = sorted(v.name for v in leaves if v.kind == ex.PUBLIC)
    secrets = sorted(v.name for v in leaves if v.kind == ex.SECRET)

    lines = [
        f"; masking-strength query: is QMS({ex.pretty(e)}) < {q}?",
        f"; bits {n}, modulus {d.poly:#x}, copies 2^{m}, delta {delta}",
        "(set-logic QF_BV)" if profile == "bv" else "(set-logic ALL)",
    ]
    if any(isinstance(t, ex.Binary) and t.op == "@" for t in ex.subterms(e)):
        lines.append(_gfmul_define(d))
    for name in publics:
        lines.append(f"(declare-fun p_{name} () (_ BitVec {n}))")
    for name in secrets:
        lines.append(f"(declare-fun k_{name} () (_ BitVec {n}))")
        lines.append(f"(declare-fun kk_{name} () (_ BitVec {n}))")
    lines.append(f"(declare-fun c () (_ BitVec {n}))")

    cache: dict = {}
    mask = d.mask
    for t in range(copies):
        rand_values = {
            name: (t >> (n * (len(rand_names) - 1 - j))) & mask
            for j, name in enumerate(rand_names)
        }
        for prefix, primed in (("c", False), ("d", True)):
            lines.append(
                f"(define-fun {prefix}_{t} () (_ BitVec {n}) "
                f"{_term(e, d, rand_values, primed, cache)})")
        cache.clear()  # rand_values change every copy

    width = m + 2
    if profile == "bv":
        one, zero = _bv(1, width), _bv(0, width)
        for t in range(copies):
            lines.append(f"(define-fun i_{t} () (_ BitVec {width}) "
                         f"(ite (= c c_{t}) {one} {zero}))")
            lines.append(f"(define-fun j_{t} () (_ BitVec {width}) "
                         f"(ite (= c d_{t}) {one} {zero}))")
        sum_i = _balanced_sum([f"i_{t}" for t in range(copies)], "bvadd")
        sum_j = _balanced_sum([f"j_{t}" for t in range(copies)], "bvadd")
        lines.append(f"(assert (bvugt {sum_i} "
                     f"(bvadd {_bv(delta, width)} {sum_j})))")
    else:
        for t in range(copies):
            lines.append(f"(define-fun i_{t} () Int (ite (= c c_{t}) 1 0))")
            lines.append(f"(define-fun j_{t} () Int (ite (= c d_{t}) 1 0))")
        sum_i = _balanced_sum([f"i_{t}" for t in range(copies)], "+")
        sum_j = _balanced_sum([f"j_{t}" for t in range(copies)], "+")
        lines.append(f"(assert (> (- {sum_i} {sum_j}) {delta}))")
    lines.append("(check-sat)")
    return SmtQuery("\n".join(lines) + "\n", q, m, delta)


def check_sat(query: SmtQuery, solver_cmd: str,
              timeout: float | None = None,
              script_path: str | Path | None = None) -> SolverVerdict:
    """Run an external solver on the query script (path passed last).

    Output containing a bare `sat`/`unsat` line decides the verdict;
    anything else, including a timeout, is UNKNOWN.
    """
    started = time.monotonic()
    if script_path is None:
        handle = tempfile.NamedTemporaryFile(
            "w", suffix=".smt2", delete=False)
        path = Path(handle.name)
        handle.write(query.text)
        handle.close()
    else:
        path = Path(script_path)
        path.write_text(query.text)
    try:
        proc = subprocess.run(
            shlex.split(solver_cmd) + [str(path)],
            capture_output=True, text=True, timeout=timeout)
    except (FileNotFoundError, PermissionError) as err:
        raise SolverSpawnFailure(f"cannot run {solver_cmd!r}: {err}") from err
    except subprocess.TimeoutExpired:
        return SolverVerdict(UNKNOWN, "timeout",
                             time.monotonic() - started)
    finally:
        if script_path is None:
            path.unlink(missing_ok=True)
    elapsed = time.monotonic() - started
    for line in proc.stdout.splitlines():
        word = line.strip()
        if word == "sat":
            return SolverVerdict(SAT, elapsed=elapsed)
        if word == "unsat":
            return SolverVerdict(UNSAT, elapsed=elapsed)
    reason = (proc.stdout + proc.stderr).strip().splitlines()
    return SolverVerdict(UNKNOWN, reason[0] if reason else "no output",
                         elapsed)


def qms_smt(e: ex.Expr, d: DomainConfig, solver_cmd: str,
            profile: str = "bv", deadline: float | None = None,
            emit_dir: str | Path | None = None, var_name: str = "e",
            stats: dict | None = None):
    """Masking strength by binary search over dyadic thresholds.

    Needs at most m+1 conclusive solver answers (m = bits * |rvars|).
    An unknown answer raises InconclusiveSolver; the caller may fall
    back to exact counting. The result carries no witness (models are
    never parsed).
    """
    from .counting import Qms  # import here: counting pulls in numpy

    m = d.bits * len(ex.rvars(e))
    copies = 1 << m
    low, high = 0, copies
    queries = 0
    while low < high:
        mid = (low + high + 1) // 2
        q = Fraction(mid, copies)
        query = encode_psi(e, q, d, profile)
        if emit_dir is not None:
            out = Path(emit_dir)
            out.mkdir(parents=True, exist_ok=True)
            name = f"{var_name}_q{q.numerator}_{q.denominator}.smt2"
            (out / name).write_text(query.text)
        timeout = None
        if deadline is not None:
            timeout = deadline - time.monotonic()
            if timeout <= 0:
                raise InconclusiveSolver("deadline exhausted before query")
        verdict = check_sat(query, solver_cmd, timeout)
        queries += 1
        if verdict.kind == SAT:
            high = mid - 1
        elif verdict.kind == UNSAT:
            low = mid
        else:
            raise InconclusiveSolver(
                f"solver answered {verdict.kind} ({verdict.reason}) "
                f"for q={q}")
    if stats is not None:
        stats["queries"] = queries
        stats["m"] = m
    return Qms(low, copies)
