"""
When is a sum of product vectors again a product vector?
========================================================

Two product vectors combine into a product vector exactly when their factors
differ in at most one subsystem. More generally, n independent product
vectors with a product-vector sum differ in at most n - 1 subsystems.
"""

import numpy as np

from corrdecomp import combo_product_check, is_product_vector, lemma_pair_check
from corrdecomp.tensorlab import outer, sample_product_sum_instance

e0, e1 = np.eye(2)

bell = outer([e0, e0]) + outer([e1, e1])
print("e0e0 + e1e1 is a product vector:", is_product_vector(bell, (2, 2))[0])

x1 = outer([e0, e0, e0])
x2 = outer([e0, e0, e1])
rep = lemma_pair_check(x1, x2, (2, 2, 2), trials=50)
print("\ndiffer only in the last subsystem:", sorted(rep.nonparallel))
print("random combinations that stayed product:", rep.product_count, "/", rep.trials)

x2 = outer([e1, e0, e1])
rep = lemma_pair_check(x1, x2, (2, 2, 2), trials=50)
print("differ in", sorted(rep.nonparallel), "-> product combinations:", rep.product_count, "/", rep.trials)

# constructed instances: four vectors in (C^2)^4 with a product sum
rng = np.random.default_rng(0)
for _ in range(5):
    S, coeffs = sample_product_sum_instance(rng, (2, 2, 2, 2), 4)
    rep = combo_product_check(S, coeffs)
    print(f"non-parallel subsystems {sorted(rep.nonparallel)}  bound {rep.bound}  holds {rep.bound_holds}")
