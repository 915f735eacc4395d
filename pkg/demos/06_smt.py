"""Shipping the counting question to an SMT solver.

Exhaustive enumeration dies at 2^(bits * #randoms). The alternative:
encode "more than delta of 2^m random assignments hit value c under
sigma1 but not sigma2" as a bit-vector formula with one variable copy
per random assignment, and binary-search the threshold q over dyadic
rationals. Each step needs one sat/unsat verdict; m+1 conclusive
answers pin the strength exactly, models never get parsed.
"""

import os
import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from maskcheck import encode_psi, make_domain, pretty, qms_exact, qms_smt
from maskcheck.expr import binop, var


def find_solver():
    env = os.environ.get("MASKCHECK_SOLVER")
    if env:
        return env
    for binary in ("z3", "cvc5", "bitwuzla", "boolector"):
        found = shutil.which(binary)
        if found:
            return found
    bundled = Path(__file__).resolve().parents[1] / "tests" / "fragment_solver.py"
    if bundled.exists():
        return f"{sys.executable} {bundled}"
    return None


d = make_domain(2)
k = var("k", "secret")
r0 = var("r0", "random")
e = binop("@", binop("@", r0, r0), binop("^", k, r0))
print(f"e = {pretty(e)} over {d}")

# The query for threshold q = 1/2. Secrets appear twice (primed and
# unprimed side), randoms appear once per copy, and the count gap is a
# popcount comparison over indicator bits.
query = encode_psi(e, Fraction(1, 2), d, "bv")
print(f"copies per side = {1 << query.m}, delta = {query.delta} "
      f"({len(query.text.splitlines())} lines of SMT-LIB)")
print("\n".join(query.text.splitlines()[:7]))
print("  ...")

solver = find_solver()
if solver is None:
    print("no solver found (set MASKCHECK_SOLVER); skipping the live search")
    raise SystemExit(0)

print(f"\nsolver: {solver}")
with tempfile.TemporaryDirectory() as tmp:
    stats = {}
    got = qms_smt(e, d, solver, emit_dir=tmp, var_name="e", stats=stats)
    want = qms_exact(e, d)
    print(f"binary search: QMS = {got.num}/{got.den} "
          f"in {stats['queries']} queries (m+1 = {stats['m'] + 1})")
    print(f"exact counting agrees: {got.fraction == want.fraction}")
    print("emitted queries:")
    for name in sorted(os.listdir(tmp)):
        print(f"  {name}")
