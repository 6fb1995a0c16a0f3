# %% [markdown]
# # Solving and convergence
#
# Damped Newton from the seed |x|^2.  The step is halved until the sup-norm
# residual drops enough; near the solution full steps take over.

# %%
import numpy as np

from ma3d import convergence_table
from ma3d.bench import run_case

rec, u, report, sch = run_case("smoothed_cone", "proposed:small", 12)
print(rec)
for k, (r, d) in enumerate(zip(report.residual_history, report.damping_history + [None])):
    print(f"{k:3d}  residual {r:.3e}  step {d}")

# %% A small table; increase the resolutions for a real study (slow).
rows = convergence_table("singular", ["proposed:small", "ws:small", "fd"], [8, 12])
for r in rows:
    print(f"{r.scheme:9s} {r.stencil:6s} n={r.n:3d}  err {r.linf_error:.3e}  iters {r.iters:3d}  {r.seconds:6.1f}s")

# %% Error ratio between successive resolutions (roughly an order estimate).
by = {}
for r in rows:
    by.setdefault((r.scheme, r.stencil), []).append(r.linf_error)
for key, errs in by.items():
    print(key, "ratio", errs[0] / errs[1], "order", np.log(errs[0] / errs[1]) / np.log(12 / 8))
