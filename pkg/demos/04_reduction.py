"""Expression reduction: shrink the random space before counting.

Counting cost is 2^(bits * #randoms) per secret/public assignment, so
every random squeezed out of an expression cuts the bill by 2^bits.
Four semantics-preserving passes run to a fixpoint: pin value-level
ineffective variables, fold algebraic identities, collapse subterms a
fresh random dominates, and apply user-extensible rewrite patterns.
Only the distribution must survive, not the value.
"""

from maskcheck import (
    BUILTIN_META,
    apply_algebraic_laws,
    apply_meta_theorems,
    corpus_dir,
    distribution,
    eliminate_dominated,
    eliminate_ineffective,
    expr_of,
    make_domain,
    parse,
    parse_pattern,
    pretty,
    rvars,
    simplify,
)
from maskcheck.expr import binop, const, var

d = make_domain(8)
k = var("k", "secret")
p = var("p", "public")
r0 = var("r0", "random")

# Pass 1: a variable that never changes the value is pinned to 0.
# (The exhaustive effectiveness check runs only while the variables fit
# a bit budget; past it the pass conservatively keeps everything.)
e = binop("^", binop("^", k, r0), r0)
pinned = eliminate_ineffective(e, d)
print(f"ineffective : {pretty(e)}  ->  {pretty(pinned)}")

# Pass 2: constant folding of the usual identities cleans up the
# shapes pinning leaves behind.
print(f"algebraic   : {pretty(pinned)}  ->  {pretty(apply_algebraic_laws(pinned))}")

# Pass 3: a subterm with a dominant random used nowhere else is itself
# uniform and independent of the rest, so the subterm IS the random.
e = binop("&", binop("^", k, r0), p)
print(f"dominated   : {pretty(e)}  ->  {pretty(eliminate_dominated(e, d))}")

# Pass 4: rewrite patterns, checked nowhere, trusted as stated. `r` is
# the distinguished random metavariable, other names match any subterm.
lhs, rhs = BUILTIN_META[0]
print(f"builtin meta: {pretty(lhs)} => {pretty(rhs)}")
e = binop("^", r0, binop("&", binop("*", const(2), r0), k))
print(f"              {pretty(e)}  ->  "
      f"{pretty(apply_meta_theorems(e, d, list(BUILTIN_META)))}")

custom = parse_pattern("(e + r) - r => e")
e = binop("-", binop("+", k, r0), r0)
print(f"custom meta : {pretty(e)}  ->  {pretty(apply_meta_theorems(e, d, [custom]))}")

# The driver iterates all four passes until nothing changes. On the
# cubing gadget, x6 = ((k^r0)@(k^r0))@(k^r0) loses its secret entirely,
# turning an undecidable-by-rules expression into a no-secret SID.
cube = parse((corpus_dir() / "cube.mv").read_text())
x6 = expr_of(cube, "x6")
x6_hat = simplify(x6, d)
print(f"\nx6    = {pretty(x6)}")
print(f"x6^   = {pretty(x6_hat)}")

# Squeezing out a random halves the enumeration per bit: the masked
# AND from demo 02 collapses to its output mask outright.
e = binop("^", binop("^", binop("&", binop("^", k, r0), p),
                     binop("&", r0, p)),
          var("r1", "random"))
e_hat = simplify(e, d)
print(f"\nmasked AND  : {pretty(e)}")
print(f"simplified  : {pretty(e_hat)}")
print(f"randoms {len(rvars(e))} -> {len(rvars(e_hat))}, "
      f"counting work / 2^{8 * (len(rvars(e)) - len(rvars(e_hat)))}")

# Same distribution, not the same values: that is the contract.
d2 = make_domain(2)
x2 = expr_of(cube, "x2")
x2_hat = simplify(x2, d2)
same = all(distribution(x2, {"k": s}, d2) == distribution(x2_hat, {"k": s}, d2)
           for s in range(4))
print(f"x2^   = {pretty(x2_hat)}; distributions agree at 2 bits: {same}")
