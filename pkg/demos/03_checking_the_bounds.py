"""
Checking the bounds on concrete instances
=========================================

Each check evaluates one inequality on one instance and reports both sides.
Right-hand sides with irrational factors are rigorous rational enclosures.
"""

import numpy as np

from ffdist import PointSet, field_of_order, make_set, make_space, parse_form, path_graph
from ffdist.verify import PRESETS, check_distinct_theorem, check_functional_distance, run_campaign

F = field_of_order(25)
Q = parse_form("quadratic:norm", make_space(F.p, F.k, 2))

# The functional distance bound on the indicator of a random set
A = make_set("random:1/2", Q, seed=1)
rec = check_functional_distance(A.indicator(), A.indicator(), 1, Q)
print(f"{rec.theorem_id}: lhs {float(rec.lhs):.5f} <= rhs {float(rec.rhs):.5f}  holds={rec.holds}")

###############################################################################
# Distinct copies of a single edge in a dense subset of F_25^4
Q4 = parse_form("quadratic:norm", make_space(F.p, F.k, 4))
E = make_set("random:4/5", Q4, seed=0)
for r in check_distinct_theorem(E, path_graph(1), Q4):
    print(f"{r.theorem_id}: hypothesis {r.hypothesis_satisfied}, margin {float(r.margin):.4g}")

###############################################################################
# A small campaign: every theorem on F_3^2 and F_5^2
res = run_campaign(PRESETS["smoke"])
print(res.summary())
