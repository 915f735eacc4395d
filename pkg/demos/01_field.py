"""Words, moduli, and the two multiplications.

Every value in a program is an n-bit word. Bitwise operators, modular
arithmetic, and shifts act on the word directly; `@` multiplies in
GF(2^n) modulo an irreducible polynomial. The field product is the one
that matters for masking, because every nonzero element has an inverse.
"""

import numpy as np

from maskcheck import (
    ReduciblePolynomial,
    eval_op,
    gf_mul,
    gf_mul_vec,
    is_irreducible,
    make_domain,
)

d8 = make_domain(8)
print(f"default 8-bit domain: {d8}")

# A field product and the inverse that undoes it.
a = 0x53
inv = next(b for b in range(1, 256) if gf_mul(a, b, d8) == 1)
print(f"{a:#04x} @ {inv:#04x} = {gf_mul(a, inv, d8):#04x}  (inverse found by scan)")

# `*` is modular multiplication; only odd constants are invertible
# there, while any nonzero constant is invertible under `@`.
units_mul = sum(1 for c in range(256)
                if len({eval_op('*', a, c, d8) for a in range(256)}) == 256)
units_gf = sum(1 for c in range(256)
               if len({gf_mul(a, c, d8) for a in range(256)}) == 256)
print(f"invertible constants under *: {units_mul} of 256")
print(f"invertible constants under @: {units_gf} of 256")

# Moduli must be irreducible of the right degree; anything else is
# rejected up front.
print(f"x^8+x^4+x^3+x^2+1 irreducible: {is_irreducible(0x11D, 8)}")
print(f"x^8+1 irreducible: {is_irreducible(0x101, 8)}")
try:
    make_domain(8, poly=0x101)
except ReduciblePolynomial as err:
    print(f"make_domain(8, poly=0x101) -> {type(err).__name__}: {err}")

# Counting code multiplies whole vectors at once; a log/antilog pair
# makes that a table lookup.
xs = np.arange(256, dtype=np.uint32)
ys = gf_mul_vec(xs, np.full(256, a, dtype=np.uint32), d8)
spot = all(int(ys[x]) == gf_mul(int(x), a, d8) for x in (0, 1, 77, 255))
print(f"vectorized multiply matches scalar on spot checks: {spot}")

# Small fields get the lexicographically smallest modulus by default.
for bits in (1, 2, 3, 4):
    print(f"  {make_domain(bits)}")
