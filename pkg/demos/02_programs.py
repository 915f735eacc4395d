"""The program format: declared inputs, straight-line body, SSA.

Inputs are declared as secret, public, or random. Compound right-hand
sides are legal in source; the parser splits them into three-address
statements with fresh `_t<n>` names, so later stages only ever see one
operator per statement. `expr_of` undoes the chaining, substituting
until a variable is a closed expression over the inputs alone.
"""

from maskcheck import NotSSA, execute, expr_of, make_domain, parse, pretty

SOURCE = """
# first-order masked AND of k with p
fn Demo(k: secret, p: public, r0: random, r1: random) {
    mk = k ^ r0;                # masked secret
    u  = (mk & p) ^ (r0 & p);   # compound rhs, parser splits it
    v  = u ^ r1;
    return v;
}
"""

p = parse(SOURCE)
print(f"parsed {p.name}: secrets={sorted(p.secrets)} publics={sorted(p.publics)} "
      f"randoms={sorted(p.randoms)}")
print("three-address form:")
for s in p.statements:
    print(f"  {s}")

print("closed expressions over the inputs:")
for name in p.internals:
    print(f"  {name} = {pretty(expr_of(p, name))}")

# Concrete execution for sanity: v should equal (k & p) ^ r1.
d = make_domain(8)
env = {"k": 0xAB, "p": 0x5F, "r0": 0x33, "r1": 0xC4}
out = execute(p, env, d)
expected = (env["k"] & env["p"]) ^ env["r1"]
print(f"execute({env}) -> v = {out['v']:#04x}, expected {expected:#04x}")

# Reassignment is rejected: every name is defined once.
try:
    parse("fn Bad(k: secret) { t = k; t = t ^ k; return t; }")
except NotSSA as err:
    print(f"reassignment -> {type(err).__name__}: {err}")
