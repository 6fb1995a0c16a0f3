# %% [markdown]
# # Voronoi vectors and stencils
#
# A stencil is consistent with a positive definite matrix M when it holds every
# strict Voronoi vector of M.  Here we look at how that plays out for the two
# fixed stencils and for the kappa-indexed family.

# %%
import numpy as np

from ma3d import is_consistent, kappa_of, make_kappa_stencil, make_table1_stencil, strict_voronoi_vectors
from ma3d.bench import random_spd

small, large = make_table1_stencil("small"), make_table1_stencil("large")
print(len(small), "directions in the small stencil,", len(large), "in the large one")

# %% The identity is the easy case: its Voronoi cell is the unit cube.
print(strict_voronoi_vectors(np.eye(3)))

# %% A mildly anisotropic matrix already needs diagonal directions.
M = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]])
print("kappa", kappa_of(M))
for e in strict_voronoi_vectors(M):
    print(tuple(int(x) for x in e))
print("consistent with small:", is_consistent(M, small))

# %% [markdown]
# Fraction of random matrices handled by each stencil, as the anisotropy grows.

# %%
rng = np.random.default_rng(0)
for kappa in (1.5, 3.0, 6.0, 10.0):
    mats = [random_spd(rng, kappa, exact=True) for _ in range(200)]
    frac = {V.label: np.mean([is_consistent(M, V) for M in mats]) for V in (small, large)}
    kstencil = make_kappa_stencil(kappa)
    print(f"kappa={kappa:4}: small {frac['small']:.2f}  large {frac['large']:.2f}  "
          f"kappa stencil ({len(kstencil)} dirs) {np.mean([is_consistent(M, kstencil) for M in mats]):.2f}")
