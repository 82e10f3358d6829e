"""
Rediscovering a rank-2 factorization by numerical search
========================================================

The four-vector family has rank 3 and no independent generator, so peeling
gets nowhere. It still factors as Q1 * Q2 with both factors of rank 2. The
explicit factors are known; here the search finds a factorization on its own.
"""

import numpy as np

from corrdecomp import Prop52Params, SearchConfig, gen_chain, gen_prop52_factors, gen_prop52_target, numerical_rank, two_factor_search
from corrdecomp.families import hard_candidate_checks

params = Prop52Params.random(np.random.default_rng(7))
print(f"p = {params.p:.4f}, alpha1 = {params.alpha1:.4f}, alpha2 = {params.alpha2:.4f}")
T, P = gen_prop52_target(params)
print("rank:", numerical_rank(P), " every generator dependent on the rest:", hard_candidate_checks(T))

# the closed-form factors
Q1, Q2, _, _ = gen_prop52_factors(params)
print("closed form: ranks", numerical_rank(Q1), numerical_rank(Q2), " error", np.abs(Q1 * Q2 - P).max())

# Levenberg-Marquardt over pairs of unit vectors in C^2, random restarts
result = two_factor_search(P, SearchConfig(restarts=100, max_iters=500, seed=0))
print("\nsearch:", result.verdict, "after", len(result.per_restart), "restarts")
print("basin residual", result.basin_residual, " polished", result.best_residual)
print("found ranks:", [numerical_rank(F) for F in result.factors])

# The factors found need not equal the closed form: the factorization is not unique.
print("distance to closed-form Q1:", np.abs(result.Q1 - Q1).max())

# negative control: the certified chain matrix is out of reach
_, C = gen_chain(r=2, p=0.3)
neg = two_factor_search(C, SearchConfig(restarts=10, max_iters=300))
print("\nchain matrix:", neg.verdict, " best residual", neg.best_residual)
