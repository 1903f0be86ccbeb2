"""Fluctuation kernels of the pinned process: discrete solver vs closed forms.

The covariance of the bridge fluctuations is twice the Dirichlet kernel of
the operator -d^2/dt^2 + B with B = A^2/eps^2 - A'/eps.  For a constant
scalar field the kernel has a hyperbolic-sine closed form, which makes a
sharp oracle for the block-tridiagonal solver.  For variable fields the
kernel diagonal approaches (eps/2) A(t)^{-1} away from O(eps) boundary
layers; this script shows both comparisons and saves the figures.

Run:  python demos/green_kernels.py
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tpgauss import (
    analytic_const_green,
    assemble_operator,
    constant_field,
    field_from_function,
    green_column,
    green_diagonal,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# --- constant coefficient: solver vs sinh formula ---------------------------
n, eps, lam = 2000, 0.1, 1.0
op = assemble_operator(constant_field(lam * np.eye(1), n, lam / 2), eps)
gd = green_diagonal(op)
t = op.interior_times
exact = np.array([analytic_const_green(lam, eps, ti, ti) for ti in t])
err = np.max(np.abs(gd.blocks[:, 0, 0] - exact) / exact)
print(f"constant field, eps={eps}: max relative kernel error {err:.2e}")

col = green_column(op, n // 2)

fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))
axes[0].plot(t, gd.blocks[:, 0, 0], lw=2, label="solver G(t,t)")
axes[0].plot(t, exact, "--", label="closed form")
axes[0].axhline(eps / (2 * lam), color="gray", lw=0.8, label=r"$\epsilon/(2\lambda)$")
axes[0].set_xlabel("t")
axes[0].set_title("kernel diagonal, constant field")
axes[0].legend()
axes[1].semilogy(t, np.abs(col[:, 0, 0]), lw=2)
axes[1].semilogy(t, (eps / 2) * np.exp(-np.abs(t - 0.5) / eps), "--",
                 label=r"$\frac{\epsilon}{2}e^{-|t-s|/\epsilon}$ envelope")
axes[1].set_xlabel("t")
axes[1].set_title("kernel column from s = 1/2")
axes[1].legend()
fig.tight_layout()
fig.savefig(OUT / "green_kernels.png", dpi=140)
print(f"wrote {OUT / 'green_kernels.png'}")

# --- variable coefficient: low-temperature law G(t,t) ~ (eps/2) A^{-1} ------
print("\nvariable field A(t) = (1+t) I, d = 2:")
fig, ax = plt.subplots(figsize=(6, 3.8))
for eps in (0.1, 0.05, 0.025, 0.0125):
    m = max(2000, int(np.ceil(25 / eps)))
    A = field_from_function(lambda s: (1.0 + s) * np.eye(2), m, 1.0)
    op = assemble_operator(A, eps)
    gd = green_diagonal(op)
    tt = op.interior_times
    target = 0.5 * eps * np.linalg.inv(A.values[1:-1])
    dev = np.sqrt(np.sum((gd.blocks - target) ** 2, axis=(1, 2))) / eps
    inner = (tt >= 5 * eps) & (tt <= 1 - 5 * eps)
    print(f"  eps={eps:7.4f}: max interior deviation {np.max(dev[inner]):.4f}")
    ax.semilogy(tt, dev, lw=1.4, label=f"eps = {eps}")
ax.set_xlabel("t")
ax.set_ylabel(r"$|G(t,t) - \frac{\epsilon}{2}A^{-1}(t)|_F / \epsilon$")
ax.set_title("approach to the low-temperature kernel law")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "kernel_asymptotics.png", dpi=140)
print(f"wrote {OUT / 'kernel_asymptotics.png'}")
