"""Sampling the pinned fluctuation process and checking it against the kernel.

Fluctuations around the mean path form a time-inhomogeneous Ornstein-Uhlenbeck
bridge whose covariance is twice the Dirichlet kernel.  Sampling goes through
the Cholesky factor of the discrete precision operator, so the law is exact
for the discrete measure.  The script draws a batch, overlays a few paths with
the one-standard-deviation envelope from the kernel, and verifies the
sqrt(eps) shrinkage of the marginal spread.

Run:  python demos/bridge_fluctuations.py
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tpgauss import (
    constant_field,
    gaussian_measure,
    marginal_std,
    sample_bridge,
    straight_line_path,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

n, eps = 400, 0.1
m = straight_line_path(0.0, 1.0, n)
A = constant_field(np.eye(1), n, 0.5)
gm = gaussian_measure(m, A, eps)

batch = sample_bridge(gm, count=20000, seed=314)
t_int = batch.interior_times

std = np.array([marginal_std(gm, i)[0, 0] for i in range(1, n)])
emp = batch.z[:, :, 0].std(axis=0)
print(f"max |empirical - kernel| marginal std: {np.max(np.abs(emp - std)):.4f}")
print(f"midpoint std {std[n // 2 - 1]:.4f} (kernel), {emp[n // 2 - 1]:.4f} (sampled)")

fig, ax = plt.subplots(figsize=(7, 4))
for k in range(12):
    ax.plot(t_int, batch.z[k, :, 0], lw=0.7, alpha=0.7)
ax.plot(t_int, std, "k--", lw=2, label="kernel std")
ax.plot(t_int, -std, "k--", lw=2)
ax.set_xlabel("t")
ax.set_ylabel("fluctuation z(t)")
ax.set_title(f"pinned fluctuations, eps = {eps}")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "bridge_paths.png", dpi=140)
print(f"wrote {OUT / 'bridge_paths.png'}")

# temperature scan: the midpoint spread shrinks like sqrt(eps)
print("\nmidpoint std under eps-halving (ratio should sit near 0.71):")
prev = None
for e in (0.2, 0.1, 0.05, 0.025):
    gm_e = gaussian_measure(m, A, e)
    s = marginal_std(gm_e, n // 2)[0, 0]
    note = "" if prev is None else f"  ratio {s / prev:.3f}"
    print(f"  eps={e:5.3f}: std {s:.4f}{note}")
    prev = s
