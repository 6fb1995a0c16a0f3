# %% [markdown]
# # Where on the sphere is each scheme consistent?
#
# For a direction v we build a rank-one anisotropic matrix along v and measure
# the relative error of the scheme on the matching quadratic.

# %%
import numpy as np

from ma3d import consistency_sphere_map

for family in ("aniso_plus", "aniso_minus", "rotated"):
    for scheme in ("proposed:small", "proposed:large", "ws:small"):
        err = consistency_sphere_map(family, scheme, 400)[:, 3]
        print(f"{family:12s} {scheme:15s} exact on {np.mean(err < 1e-9):5.1%}  "
              f"worst {err.max():.3f}")

# %% [markdown]
# To plot, write the CSV with `ma3d sphere --out file.csv` and scatter
# `(vx, vy, vz)` coloured by `rel_error`.
