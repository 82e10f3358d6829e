"""
Peeling a correlation matrix into low-rank factors
==================================================

A generator that is linearly independent of the others can be split off:
P = R * Q with rank(R) = rank(P) - 1 and rank(Q) <= 2. Repeating this on an
(r+1) x (r+1) full-rank matrix reaches rank r.
"""

import numpy as np

from corrdecomp import NoIndependentPivot, decompose_full, gram_factor, numerical_rank, peel, random_correlation

P = random_correlation(5, 5, seed=1)
T = gram_factor(P)

# one step, pivot on the last generator
step = peel(T, 4)
print("branch:", step.branch, " |projection| =", round(step.proj_norm, 4))
print("ranks R, Q:", numerical_rank(step.R), numerical_rank(step.Q))
print("max |R*Q - P|:", np.abs(step.R * step.Q - P).max())

# the full loop for r = 4; rank-one leftovers are folded into another factor
D = decompose_full(P, 4)
print("\nfactors:", D.m, "ranks:", [numerical_rank(F) for F in D.factors])
print("verified:", D.verified, " residual:", D.residual)

# Ask for too much: r = 2 on a 5x5 full-rank matrix. After one peel the five
# generators span four dimensions and none of them is independent.
try:
    decompose_full(P, 2)
except NoIndependentPivot as exc:
    print("\nstuck:", exc)
    print("peeled so far:", len(exc.factors), " remainder rank:", numerical_rank(exc.remainder))
