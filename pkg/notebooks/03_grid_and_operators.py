# %% [markdown]
# # Grids and discrete operators
#
# Near the boundary the stencil step is cut short so that it lands exactly on
# the boundary; that is what lets the scheme work on non-square domains.

# %%
import numpy as np

from ma3d import apply_DV, apply_FD, apply_WS, ball, build_grid, make_table1_stencil, make_ws_triplets, unit_cube
from ma3d.grid import sup_step

V = make_table1_stencil("small")
g = build_grid(unit_cube(), 8, V)
print(g.n_interior, "interior points,", g.size - g.n_interior, "boundary points")

# %% On a ball the boundary set is much less regular.
gb = build_grid(ball([0.5, 0.5, 0.5], 0.45), 12, V)
print(gb.n_interior, "interior points on the ball,", gb.size - gb.n_interior, "boundary nodes")
print("largest step fraction", sup_step(gb), "(1 means no step was shortened by the boundary)")

# %% All three operators are exact on |x|^2 / 2 (hessian = identity).
u = g.sample(lambda p: 0.5 * (p**2).sum(1))
print("D_V", np.ptp(apply_DV(g, u)), apply_DV(g, u)[0])
print("FD ", apply_FD(g, u)[0])
print("WS ", apply_WS(g, u, make_ws_triplets(1))[0])

# %% Something less trivial: the smoothed cone, where D_V sees the anisotropy.
from ma3d import make_test_case

tc = make_test_case("smoothed_cone")
u = g.sample(tc.exact)
rho = tc.density(g.points[: g.n_interior])
rel = np.abs(apply_DV(g, u) - rho) / rho
print(f"median relative consistency error {np.median(rel):.3e}, max {rel.max():.3e}")
