"""Uniform-grid discretization of paths and matrix fields on [0, 1].

Paths m and symmetric-matrix fields A live on the nodes t_i = i/n of a
uniform grid with n intervals.  Path derivatives use forward differences
attributed to interval midpoints; field derivatives use second-order central
differences with one-sided stencils at the endpoints, so both pair naturally
with the composite trapezoid rule used for every time integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PathGrid",
    "FieldGrid",
    "BVStepPath",
    "straight_line_path",
    "constant_field",
    "field_from_function",
    "path_derivative",
    "trapezoid",
    "field_derivative",
    "project_spd_floor",
]

_SYM_TOL = 1e-12
_FLOOR_SLACK = 1e-10


@dataclass
class PathGrid:
    """An R^d-valued path sampled at the n+1 nodes of [0, 1], pinned at both ends."""

    values: np.ndarray  # (n+1, d)
    x_minus: np.ndarray | None = None
    x_plus: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.ndim != 2:
            raise ValueError("path values must have shape (n+1, d)")
        if self.n < 4:
            raise ValueError("need at least 4 grid intervals")
        if self.x_minus is None:
            self.x_minus = self.values[0].copy()
        if self.x_plus is None:
            self.x_plus = self.values[-1].copy()
        self.x_minus = np.atleast_1d(np.asarray(self.x_minus, dtype=float))
        self.x_plus = np.atleast_1d(np.asarray(self.x_plus, dtype=float))
        if not (np.array_equal(self.values[0], self.x_minus)
                and np.array_equal(self.values[-1], self.x_plus)):
            raise ValueError("path endpoints must equal the anchors exactly")

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    def with_interior(self, interior: np.ndarray) -> "PathGrid":
        """New path with the same anchors and replaced interior nodes."""
        vals = self.values.copy()
        vals[1:-1] = np.asarray(interior, dtype=float).reshape(self.n - 1, self.dim)
        return PathGrid(vals, self.x_minus, self.x_plus)

    def copy(self) -> "PathGrid":
        return PathGrid(self.values.copy(), self.x_minus.copy(), self.x_plus.copy())


@dataclass
class FieldGrid:
    """A symmetric-matrix-valued field on the grid with a spectral floor a > 0."""

    values: np.ndarray  # (n+1, d, d)
    floor_a: float = 1e-3

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None, None]
        if self.values.ndim != 3 or self.values.shape[1] != self.values.shape[2]:
            raise ValueError("field values must have shape (n+1, d, d)")
        if self.n < 4:
            raise ValueError("need at least 4 grid intervals")
        if self.floor_a <= 0:
            raise ValueError("spectral floor must be positive")
        asym = np.max(np.abs(self.values - np.swapaxes(self.values, 1, 2)))
        if asym > _SYM_TOL:
            raise ValueError(f"field matrices asymmetric by {asym:.2e}")
        evmin = np.min(np.linalg.eigvalsh(self.values))
        if evmin < self.floor_a - _FLOOR_SLACK:
            raise ValueError(
                f"minimum field eigenvalue {evmin:.3e} below floor {self.floor_a:.3e}"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    def copy(self) -> "FieldGrid":
        return FieldGrid(self.values.copy(), self.floor_a)


@dataclass
class BVStepPath:
    """A piecewise-constant path on (0,1) jumping between declared critical points.

    ``levels`` has one more entry than ``breakpoints``; level k applies on
    (breakpoints[k-1], breakpoints[k]).  Whether every level actually is a
    critical point of a given potential is checked where the path is consumed.
    """

    breakpoints: np.ndarray  # increasing, in (0, 1)
    levels: np.ndarray  # (len(breakpoints)+1, d)

    def __post_init__(self):
        self.breakpoints = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        self.levels = np.atleast_2d(np.asarray(self.levels, dtype=float))
        if self.breakpoints.size and (
            np.any(self.breakpoints <= 0.0)
            or np.any(self.breakpoints >= 1.0)
            or np.any(np.diff(self.breakpoints) <= 0)
        ):
            raise ValueError("breakpoints must be strictly increasing inside (0,1)")
        if self.levels.shape[0] != self.breakpoints.size + 1:
            raise ValueError("need exactly one more level than breakpoints")

    def sample(self, times: np.ndarray) -> np.ndarray:
        """Level at each time (right-continuous at breakpoints)."""
        idx = np.searchsorted(self.breakpoints, np.asarray(times), side="right")
        return self.levels[idx]


def straight_line_path(x_minus, x_plus, n: int) -> PathGrid:
    x_minus = np.atleast_1d(np.asarray(x_minus, dtype=float))
    x_plus = np.atleast_1d(np.asarray(x_plus, dtype=float))
    t = (np.arange(n + 1) / n)[:, None]
    vals = (1.0 - t) * x_minus[None, :] + t * x_plus[None, :]
    vals[0] = x_minus
    vals[-1] = x_plus
    return PathGrid(vals, x_minus, x_plus)


def constant_field(matrix, n: int, floor_a: float = 1e-3) -> FieldGrid:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    return FieldGrid(np.repeat(matrix[None, :, :], n + 1, axis=0), floor_a)


def field_from_function(fn: Callable[[float], np.ndarray], n: int,
                        floor_a: float = 1e-3) -> FieldGrid:
    vals = np.stack([np.atleast_2d(np.asarray(fn(i / n), dtype=float))
                     for i in range(n + 1)])
    return FieldGrid(vals, floor_a)


def path_derivative(m: PathGrid) -> np.ndarray:
    """Forward differences (values[i+1]-values[i])*n, one per interval midpoint."""
    return np.diff(m.values, axis=0) * m.n


def trapezoid(f: Sequence[float] | np.ndarray, n: int) -> float | np.ndarray:
    """Composite trapezoid of node values over [0, 1].

    ``f`` must hold n+1 node values along its first axis; extra trailing axes
    (vector or matrix integrands) are integrated entrywise.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] != n + 1:
        raise ValueError(f"expected {n + 1} node values, got {f.shape[0]}")
    inner = f[1:-1].sum(axis=0)
    return (0.5 * (f[0] + f[-1]) + inner) / n


def field_derivative(A: FieldGrid) -> np.ndarray:
    """Nodewise time derivative: central interior, one-sided at the endpoints."""
    return np.gradient(A.values, 1.0 / A.n, axis=0, edge_order=2)


def project_spd_floor(M: np.ndarray, a: float) -> np.ndarray:
    """Clamp the eigenvalues of a symmetric matrix to at least a.

    Keeps M's eigenvectors, so the result is the Frobenius-nearest matrix with
    spectrum above the floor among matrices sharing them.  Idempotent, and the
    identity when M already satisfies the floor.
    """
    M = np.asarray(M, dtype=float)
    if np.max(np.abs(M - np.swapaxes(M, -1, -2))) > _SYM_TOL:
        raise ValueError("matrix must be symmetric")
    w, P = np.linalg.eigh(M)
    w = np.maximum(w, a)
    out = (P * w[..., None, :]) @ np.swapaxes(P, -1, -2)
    return 0.5 * (out + np.swapaxes(out, -1, -2))
