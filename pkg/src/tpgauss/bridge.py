"""The Gaussian path measure N(m, 2 L^{-1}) and exact sampling of its bridge fluctuations.

The fluctuation z around the mean path is a pinned, time-inhomogeneous
Ornstein-Uhlenbeck process with covariance Cov(z(t), z(s)) = 2 G(t, s), where
G is the Dirichlet kernel from :mod:`tpgauss.greens`.  Sampling goes through
the banded Cholesky factor of the discrete precision operator: one triangular
solve per sample, exact for the discrete measure (no time-stepping bias).

Randomness comes from counter-based Philox streams keyed on (seed, chunk), so
batches are bit-reproducible and independent of how work is partitioned.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded

from .greens import (
    FundamentalMatrix,
    GreenDiagonal,
    SchrodingerOperator,
    assemble_operator,
    fundamental_matrix,
    green_diagonal,
    log_det_term,
)
from .grids import FieldGrid, PathGrid, trapezoid

__all__ = [
    "GaussianPathMeasure",
    "BridgeSampleBatch",
    "gaussian_measure",
    "sample_bridge",
    "gaussian_log_normalizer",
    "marginal_std",
]

_SAMPLE_CHUNK = 8192
_KERNEL_BOUND_SLACK = 1.2


@dataclass
class GaussianPathMeasure:
    """Mean path, fluctuation field, temperature, and the cached solver state."""

    mean: PathGrid
    field: FieldGrid
    eps: float
    operator: SchrodingerOperator
    green_diag: GreenDiagonal

    @property
    def n(self) -> int:
        return self.mean.n

    @property
    def dim(self) -> int:
        return self.mean.dim

    @cached_property
    def fundamental(self) -> FundamentalMatrix:
        return fundamental_matrix(self.field, self.eps)


@dataclass
class BridgeSampleBatch:
    """Sampled fluctuation paths on the interior nodes; zero at both boundaries."""

    count: int
    seed: int
    interior_times: np.ndarray  # (n-1,)
    z: np.ndarray  # (count, n-1, d)


def gaussian_measure(mean: PathGrid, field: FieldGrid, eps: float) -> GaussianPathMeasure:
    """Assemble and factor the precision operator, cache the kernel diagonal.

    Raises IndefiniteOperatorError when the field/grid pair is inadmissible,
    and ValueError when the kernel diagonal violates the eps/(2a) size bound
    that admissible fields must satisfy.
    """
    if mean.n != field.n:
        raise ValueError("mean path and field must share one grid")
    if mean.dim != field.dim:
        raise ValueError("mean path and field must share one dimension")
    op = assemble_operator(field, eps)
    op.cholesky  # factor now; failure marks the measure invalid
    gd = green_diagonal(op)
    bound = _KERNEL_BOUND_SLACK * eps / (2.0 * field.floor_a)
    if gd.max_frobenius > bound:
        raise ValueError(
            f"kernel diagonal norm {gd.max_frobenius:.3e} exceeds "
            f"{_KERNEL_BOUND_SLACK} * eps/(2a) = {bound:.3e}"
        )
    return GaussianPathMeasure(mean=mean, field=field, eps=eps,
                               operator=op, green_diag=gd)


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(chunk_index,))
    return np.random.Generator(np.random.Philox(ss))


def sample_bridge(gm: GaussianPathMeasure, count: int, seed: int) -> BridgeSampleBatch:
    """Draw pinned fluctuation paths with covariance 2 G, deterministically.

    For the factored precision op = R^T R, solving R z = xi with standard
    normal xi gives Cov(z) = op^{-1}; the discrete kernel normalization adds
    the factor 2n.  Sample chunks use seeds derived from (seed, chunk index),
    so the batch does not depend on worker partitioning.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    n, d = gm.n, gm.dim
    m = n - 1
    cb = gm.operator.cholesky
    scale = np.sqrt(2.0 * n)
    out = np.empty((count, m, d))
    start = 0
    chunk_index = 0
    while start < count:
        c = min(_SAMPLE_CHUNK, count - start)
        rng = _chunk_rng(seed, chunk_index)
        # sample-major draw: sample k always consumes the same stream stretch,
        # so batches are prefixes of longer batches with the same seed
        xi = rng.standard_normal((c, m * d)).T
        z = solve_banded((0, d), cb, xi) * scale
        out[start:start + c] = z.T.reshape(c, m, d)
        start += c
        chunk_index += 1
    return BridgeSampleBatch(count=count, seed=int(seed),
                             interior_times=gm.operator.interior_times.copy(), z=out)


def gaussian_log_normalizer(gm: GaussianPathMeasure) -> float:
    """Log normalization constant of the path density relative to the free bridge.

    |x_plus - x_minus|^2/4 - (1/(2 eps)) int Tr A - (1/2) log det(int M Mbar^T).
    Depends on the field and the endpoints only; shifting the mean path leaves
    it unchanged.  Diagnostic: it cancels from the minimized objective.
    """
    fm = gm.fundamental
    dx = gm.mean.x_plus - gm.mean.x_minus
    tr_integral = trapezoid(np.trace(gm.field.values, axis1=1, axis2=2), gm.n)
    half_logdet = log_det_term(fm, gm.eps) / gm.eps
    return float(np.dot(dx, dx) / 4.0 - tr_integral / (2.0 * gm.eps) - half_logdet)


def marginal_std(gm: GaussianPathMeasure, node: int) -> np.ndarray:
    """Principal square root of the marginal covariance 2 G(t_i, t_i)."""
    n = gm.n
    if not 1 <= node <= n - 1:
        raise IndexError(f"node {node} is not interior (1..{n - 1})")
    C = 2.0 * gm.green_diag.blocks[node - 1]
    w, P = np.linalg.eigh(C)
    if np.min(w) < -1e-10:
        raise ValueError(f"marginal covariance not PSD at node {node}: min eig {np.min(w):.2e}")
    w = np.clip(w, 0.0, None)
    return (P * np.sqrt(w)[None, :]) @ P.T
