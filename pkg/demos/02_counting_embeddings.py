"""
Counting distance graphs
========================

Exact counts of labelled paths, trees and cycles inside a point set, next to the
main terms |E|^(k+1)/q^k that the counting bounds compare them with.
"""

from fractions import Fraction

from ffdist import (count_cycles, count_cycles_nondegenerate, count_paths, count_tree, field_of_order, make_set,
                    make_space, parse_form, star_graph)

F = field_of_order(7)
Q = parse_form("quadratic:norm", make_space(F.p, F.k, 3))

# a seeded third of F_7^3
E = make_set("random:1/3", Q, seed=0)
q, n = F.q, E.size
print(f"|E| = {n} of {q ** 3}")

###############################################################################
# Paths: P_k against |E|^(k+1) / q^k
for k in (1, 2, 3):
    P = count_paths(E, k, 1, Q)
    main = Fraction(n ** (k + 1), q**k)
    print(f"P_{k} = {P.raw:>10}   main term {float(main):>12.1f}   ratio {float(P.raw / main):.4f}")

###############################################################################
# A star with three leaves, every edge at distance 1
T = count_tree(E, star_graph(3), 1, Q)
print(f"star(3) embeddings: {T.raw}  normalized {float(T.normalized):.4f}")

###############################################################################
# Cycles, with and without repeated vertices
for length in (4, 5):
    C = count_cycles(E, length, 1, Q)
    Cs = count_cycles_nondegenerate(E, length, 1, Q)
    print(f"C_{length} = {C.raw}, with distinct vertices {Cs.raw}, main term {float(Fraction(n**length, q**length)):.1f}")
