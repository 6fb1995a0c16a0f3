# %% [markdown]
# # Polytope volumes
#
# D_V(u)(x) is the volume of a centrally symmetric polytope cut out by one pair
# of halfspaces per stencil direction.  We check the exact volume against
# quasi Monte Carlo and look at how it compares with det M.

# %%
import numpy as np

from ma3d import make_table1_stencil, measure_D_of_matrix, measure_polytope, monte_carlo_volume
from ma3d.polytope import symmetric_halfspaces
from ma3d.bench import random_spd

V = make_table1_stencil("small")

# %% All offsets equal to 1.  Only the directions whose facets survive get a nonzero area.
pm = measure_polytope(V, np.ones(len(V)))
a, c = symmetric_halfspaces(V.directions, np.ones(len(V)))
est = monte_carlo_volume(a, c, n_samples=2**20)
print(f"exact {pm.volume:.6f}   sobol {est:.6f}")
print("facet areas per direction:", np.round(pm.facet_area, 4))

# %% D_V(u_M) never undershoots det M and matches it when V is consistent.
rng = np.random.default_rng(1)
for _ in range(8):
    M = random_spd(rng, rng.uniform(1, 6), exact=True)
    M /= np.linalg.det(M) ** (1 / 3)
    print(f"D(M) - det M = {measure_D_of_matrix(M, V) - 1:+.3e}")
