"""
Finite fields, quadratic forms and spheres
==========================================

A tour of the arithmetic layer: build GF(9), look at its characters, and count
points on the spheres of a quadratic form.
"""

# GF(9) is built from the least monic irreducible x^2 + 1 over F_3
from ffdist import field_of_order, gauss_sum, kloosterman_sum, make_space, parse_form, sphere_sizes

F = field_of_order(9)
print(F, "modulus (low to high):", F.modulus)

# elements are little-endian base-3 digit strings: index 4 is 1 + x
x = F.element(3)
print("x =", x.coeffs, " x^2 =", (x * x).coeffs, " Tr(x) =", int(x.trace()))

# the Gauss sum has absolute value sqrt(q) exactly
G = gauss_sum(F)
print("|G|^2 =", G.norm_squared())

# Kloosterman sums stay under 2 sqrt(q)
worst = max(kloosterman_sum(F, a, b).magnitude for a in range(1, 9) for b in range(9))
print(f"max |K(a, b)| = {worst:.4f} <= 2 sqrt(9) = 6")

###############################################################################
# Spheres of x^2 + y^2 + a z^2 in F_9^3 sit within q^(d/2) of q^(d-1)
sp = make_space(F.p, F.k, 3)
Q = parse_form("quadratic:canonical", sp)
sizes = sphere_sizes(Q)
for t in range(1, 9):
    print(f"|S_{t}| = {sizes[t]:3d}   deviation {sizes[t] - 81:+d}   bound 27")
print("sum over t:", sizes.sum(), "= 9^3")
