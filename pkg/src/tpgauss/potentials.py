"""Potential energy surfaces with the derivatives the path functionals need.

A :class:`PotentialModel` bundles the potential V together with its gradient,
Hessian and third-derivative tensor, plus the declared list of critical points.
All callables are vectorized: they accept arrays of shape ``(..., d)`` and
return arrays of shape ``(...,)``, ``(..., d)``, ``(..., d, d)`` and
``(..., d, d, d)`` respectively.  The built-in potentials carry analytic
derivatives; custom models may fall back to finite differences for the third
derivative via :func:`finite_difference_third`.

Critical points are declared, not searched for; :func:`validate_potential`
checks gradient residuals and derivative consistency on random probes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "CriticalPoint",
    "PotentialModel",
    "builtin_potential",
    "psi_eps",
    "finite_difference_third",
    "validate_potential",
]


@dataclass(frozen=True)
class CriticalPoint:
    """A declared critical point of the potential with its stability kind."""

    x: np.ndarray
    kind: str  # "minimum" | "saddle" | "maximum"

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        if self.kind not in ("minimum", "saddle", "maximum"):
            raise ValueError(f"unknown critical point kind {self.kind!r}")


@dataclass(frozen=True)
class PotentialModel:
    """Potential V with derivatives, declared critical points and growth data.

    ``energy``, ``grad``, ``hessian`` and ``third`` must broadcast over leading
    axes of their input.  ``growth_alpha`` documents the exponent of the
    assumed sub-Gaussian growth of the tilted potential; it is a declared
    contract, not checked at runtime.
    """

    dim: int
    energy: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    third: Callable[[np.ndarray], np.ndarray]
    critical_points: tuple[CriticalPoint, ...] = field(default_factory=tuple)
    growth_alpha: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if not 0.0 <= self.growth_alpha < 2.0:
            raise ValueError("growth_alpha must lie in [0, 2)")
        object.__setattr__(self, "critical_points", tuple(self.critical_points))

    def minima(self) -> list[np.ndarray]:
        return [c.x for c in self.critical_points if c.kind == "minimum"]

    def unstable_points(self) -> list[np.ndarray]:
        """Saddles and maxima: the points the limit functional penalizes."""
        return [c.x for c in self.critical_points if c.kind != "minimum"]

    def nearest_critical_point(self, x: np.ndarray) -> CriticalPoint:
        if not self.critical_points:
            raise ValueError("potential declares no critical points")
        x = np.asarray(x, dtype=float)
        dists = [np.linalg.norm(x - c.x) for c in self.critical_points]
        return self.critical_points[int(np.argmin(dists))]

    def is_critical_point(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        if not self.critical_points:
            return False
        c = self.nearest_critical_point(x)
        return bool(np.linalg.norm(np.asarray(x, float) - c.x) <= tol)


def psi_eps(p: PotentialModel, x: np.ndarray, eps: float) -> np.ndarray:
    """Tilted potential (1/2)|grad V|^2 - eps * laplacian(V), batched over x.

    At eps = 0 this reduces to the nonnegative squared-gradient density.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(x, dtype=float)
    g = p.grad(x)
    out = 0.5 * np.sum(g * g, axis=-1)
    if eps != 0.0:
        h = p.hessian(x)
        out = out - eps * np.trace(h, axis1=-2, axis2=-1)
    return out


def finite_difference_third(
    hessian: Callable[[np.ndarray], np.ndarray], dim: int
) -> Callable[[np.ndarray], np.ndarray]:
    """Third-derivative tensor by central differences of the Hessian.

    Step h = 1e-4 * (1 + |x|).  Accurate enough for the O(1) integrands the
    third derivative enters; built-ins override this analytically.
    """

    def third(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = np.asarray(1e-4 * (1.0 + np.linalg.norm(x, axis=-1)))
        out = np.empty(x.shape[:-1] + (dim, dim, dim))
        for k in range(dim):
            xp = x.copy()
            xm = x.copy()
            xp[..., k] = x[..., k] + h
            xm[..., k] = x[..., k] - h
            out[..., k] = (hessian(xp) - hessian(xm)) / (2.0 * h[..., None, None])
        return out

    return third


def _as_points(x):
    return np.asarray(x, dtype=float)


def _dw_value(x):
    return 0.25 * x**2 * (1.0 - x) ** 2


def _dw_grad(x):
    return 0.5 * x * (1.0 - x) * (1.0 - 2.0 * x)


def _dw_hess(x):
    return 0.5 - 3.0 * x + 3.0 * x**2


def _dw_third(x):
    return 6.0 * x - 3.0


def _double_well_1d() -> PotentialModel:
    def energy(x):
        x = _as_points(x)
        return _dw_value(x[..., 0])

    def grad(x):
        x = _as_points(x)
        return _dw_grad(x[..., 0])[..., None]

    def hessian(x):
        x = _as_points(x)
        return _dw_hess(x[..., 0])[..., None, None]

    def third(x):
        x = _as_points(x)
        return _dw_third(x[..., 0])[..., None, None, None]

    cps = (
        CriticalPoint(np.array([0.0]), "minimum"),
        CriticalPoint(np.array([0.5]), "saddle"),
        CriticalPoint(np.array([1.0]), "minimum"),
    )
    return PotentialModel(1, energy, grad, hessian, third, cps,
                          growth_alpha=0.0, name="double_well_1d")


def _quadratic(lam: float, d: int) -> PotentialModel:
    eye = np.eye(d)

    def energy(x):
        x = _as_points(x)
        return 0.5 * lam * np.sum(x * x, axis=-1)

    def grad(x):
        return lam * _as_points(x)

    def hessian(x):
        x = _as_points(x)
        return np.broadcast_to(lam * eye, x.shape[:-1] + (d, d)).copy()

    def third(x):
        x = _as_points(x)
        return np.zeros(x.shape[:-1] + (d, d, d))

    cps = (CriticalPoint(np.zeros(d), "minimum"),)
    return PotentialModel(d, energy, grad, hessian, third, cps,
                          growth_alpha=0.0, name="quadratic")


def _double_well_planar(kappa: float) -> PotentialModel:
    def energy(x):
        x = _as_points(x)
        return _dw_value(x[..., 0]) + 0.5 * kappa * x[..., 1] ** 2

    def grad(x):
        x = _as_points(x)
        return np.stack([_dw_grad(x[..., 0]), kappa * x[..., 1]], axis=-1)

    def hessian(x):
        x = _as_points(x)
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = _dw_hess(x[..., 0])
        out[..., 1, 1] = kappa
        return out

    def third(x):
        x = _as_points(x)
        out = np.zeros(x.shape[:-1] + (2, 2, 2))
        out[..., 0, 0, 0] = _dw_third(x[..., 0])
        return out

    cps = (
        CriticalPoint(np.array([0.0, 0.0]), "minimum"),
        CriticalPoint(np.array([0.5, 0.0]), "saddle"),
        CriticalPoint(np.array([1.0, 0.0]), "minimum"),
    )
    return PotentialModel(2, energy, grad, hessian, third, cps,
                          growth_alpha=0.0, name="double_well_planar")


def builtin_potential(name: str, params: dict | None = None) -> PotentialModel:
    """Construct a named reference potential.

    Supported names: ``double_well_1d`` (quartic well with minima at 0 and 1),
    ``quadratic`` (params: ``lam`` > 0, ``d``), ``double_well_planar``
    (params: ``kappa`` > 0).
    """
    params = dict(params or {})
    if name == "double_well_1d":
        _reject_unknown(params, ())
        return _double_well_1d()
    if name == "quadratic":
        _reject_unknown(params, ("lam", "d"))
        lam = float(params.get("lam", 1.0))
        d = int(params.get("d", 1))
        if lam <= 0:
            raise ValueError("quadratic potential needs lam > 0")
        if d < 1:
            raise ValueError("quadratic potential needs d >= 1")
        return _quadratic(lam, d)
    if name == "double_well_planar":
        _reject_unknown(params, ("kappa",))
        kappa = float(params.get("kappa", 1.0))
        if kappa <= 0:
            raise ValueError("double_well_planar needs kappa > 0")
        return _double_well_planar(kappa)
    raise ValueError(f"unknown potential {name!r}")


def _reject_unknown(params: dict, allowed: Sequence[str]):
    unknown = set(params) - set(allowed)
    if unknown:
        raise ValueError(f"unknown potential parameters: {sorted(unknown)}")


def validate_potential(
    p: PotentialModel,
    rng: np.random.Generator | None = None,
    n_probes: int = 20,
    box: float = 2.0,
    grad_rtol: float = 1e-5,
    residual_tol: float = 1e-8,
) -> None:
    """Check the model's internal consistency; raise ValueError on failure.

    Verifies Hessian symmetry, symmetry of the third tensor in its first two
    indices, near-zero gradient at every declared critical point, and
    agreement of grad/hessian with central finite differences of the next
    lower derivative at random probe points.
    """
    rng = rng or np.random.default_rng(0)
    pts = rng.uniform(-box, box, size=(n_probes, p.dim))
    h = p.hessian(pts)
    asym = np.max(np.abs(h - np.swapaxes(h, -1, -2)))
    if asym > 1e-12:
        raise ValueError(f"hessian asymmetry {asym:.2e} exceeds 1e-12")
    t3 = p.third(pts)
    t3_asym = np.max(np.abs(t3 - np.swapaxes(t3, -2, -3)))
    if t3_asym > 1e-8:
        raise ValueError(f"third tensor not symmetric in first two indices: {t3_asym:.2e}")
    for c in p.critical_points:
        res = np.linalg.norm(p.grad(c.x))
        if res > residual_tol:
            raise ValueError(
                f"declared critical point {c.x} has gradient residual {res:.2e}"
            )
    # finite-difference agreement, one coordinate at a time
    step = 1e-6
    for x in pts:
        for k in range(p.dim):
            e = np.zeros(p.dim)
            e[k] = step
            fd_g = (p.energy(x + e) - p.energy(x - e)) / (2 * step)
            g = p.grad(x)[k]
            if abs(fd_g - g) > grad_rtol * max(1.0, abs(g)):
                raise ValueError(f"gradient mismatch at {x}, coord {k}")
            fd_h = (p.grad(x + e) - p.grad(x - e)) / (2 * step)
            hk = p.hessian(x)[:, k]
            if np.max(np.abs(fd_h - hk)) > grad_rtol * max(1.0, np.max(np.abs(hk))):
                raise ValueError(f"hessian mismatch at {x}, coord {k}")
