"""Temperature sweep: how the minimizers approach the zero-temperature limit.

Across a decreasing temperature ladder the converged pairs trend toward a
piecewise-constant path jumping between the wells, with three hallmarks:

* the energy part decreases toward the minimal transition cost;
* the fluctuation penalty at the optimum decreases;
* the fraction of time spent near the saddle decreases.

The energy excess over the limit decays like sqrt(eps): the penalty forces
the path to cross the concave region in O(sqrt(eps)) time, and the extra
kinetic cost of that hurry is O(sqrt(eps)).  The script fits the observed
rate next to the prediction.

Run:  python demos/low_temperature_sweep.py
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tpgauss import (
    OptimizerConfig,
    builtin_potential,
    gamma_sweep,
    quasipotential,
    straight_line_path,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

p = builtin_potential("double_well_1d")
n = 800
eps_list = [0.2, 0.1, 0.05, 0.025]
report = gamma_sweep(p, straight_line_path(0.0, 1.0, n), eps_list,
                     OptimizerConfig())
limit = quasipotential(p, [0.0], [1.0])
print(f"transition-cost limit: {limit:.6f}\n")
print(f"{'eps':>7} {'energy':>9} {'penalty':>9} {'saddle%':>8} {'limit ref':>10}")
for r in report.rows:
    print(f"{r.eps:7.3f} {r.energy:9.5f} {r.penalty:9.5f} "
          f"{100 * r.saddle_fraction:8.2f} {r.limit_total:10.5f}")

excess = np.array([r.energy for r in report.rows]) - limit
eps_arr = np.array(eps_list)
slope = np.polyfit(np.log(eps_arr), np.log(excess), 1)[0]
print(f"\nenergy excess decays like eps^{slope:.2f} (sqrt-eps law predicts 0.50)")

fig, axes = plt.subplots(1, 2, figsize=(10, 3.8))
axes[0].loglog(eps_arr, excess, "o-", label="energy excess over limit")
ref = excess[0] * np.sqrt(eps_arr / eps_arr[0])
axes[0].loglog(eps_arr, ref, "--", color="gray", label=r"$\propto\sqrt{\epsilon}$")
axes[0].set_xlabel("eps")
axes[0].legend()
axes[0].set_title("approach to the transition-cost limit")
for r in report.rows:
    axes[1].plot(np.arange(n + 1) / n, r.path_values[:, 0], lw=1.4,
                 label=f"eps = {r.eps}")
axes[1].set_xlabel("t")
axes[1].set_title("sweep minimizers sharpen into a jump")
axes[1].legend(fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "low_temperature_sweep.png", dpi=140)
print(f"wrote {OUT / 'low_temperature_sweep.png'}")
