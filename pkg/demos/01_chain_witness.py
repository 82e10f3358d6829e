"""
A correlation matrix that no rank-r Schur product can reach
===========================================================

Build the chain family for r = 2, look at its overlap pattern, and let the
witness certify that it is not a Schur product of rank-2 correlation
matrices. Then push p past 1/r and watch the certificate disappear.
"""

import numpy as np

from corrdecomp import chain_witness, gen_chain, numerical_rank

# Three chain vectors with pairwise overlap p, plus the normalized sums of
# neighbours. Columns of T are the vectors, P is their Gram matrix.
r, p = 2, 0.3
T, P = gen_chain(r=r, p=p)
print("rank of P:", numerical_rank(P))
print("squared overlaps:\n", np.round(np.abs(P) ** 2, 4))

# The witness only looks at squared overlaps, which is what an experiment
# can measure.
report = chain_witness(np.abs(P) ** 2, r)
print("\nverdict:", report.verdict.value)
for check in report.checks:
    print(f"  {'ok ' if check.passed else 'FAIL'} {check.name}: {check.detail}")

# The argument needs p < 1/r. Sweep p and compare.
print("\n  p    certified")
for p in np.arange(0.05, 1.0, 0.15):
    _, P = gen_chain(r=r, p=p)
    print(f"{p:5.2f}  {chain_witness(np.abs(P) ** 2, r).certified}")
