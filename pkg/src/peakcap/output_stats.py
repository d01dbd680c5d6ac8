"""Output law of a discrete input over the unit-variance Gaussian channel.

For a discrete input the output density is a Gaussian mixture.  The posterior
of ``X`` given ``Y = y`` is the vector of mixture responsibilities, so
Tweedie's formula ``E[X|Y=y] = y + grad log f_Y(y)`` and the Hatsell-Nolte
identity ``Hess log f_Y(y) = Var(X|Y=y) - I`` can be evaluated exactly.

Information quantities are in nats.  The information density at ``x`` is
``D(x) = D(P_{Y|X=x} || P_Y) = -E[log f_Y(x + Z)] - h(Z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .channel import EllipseConstraint
from .errors import DomainError, EndpointError
from .inputs import SymmetricBoundaryDistribution, boundary_point, expand_arrays
from .quadrature import QuadratureRule, default_rule, tensor_nodes

__all__ = [
    "OutputDensityModel",
    "log_output_density",
    "posterior_mean",
    "posterior_variance",
    "information_density",
    "information_density_many",
    "info_density_laplacian",
    "info_density_d1",
    "info_density_d2",
    "mutual_information",
    "ENTROPY_Z2",
    "EDGE_GUARD",
]

ENTROPY_Z2 = _kernels.ENTROPY_Z2
EDGE_GUARD = 1e-8


@dataclass(frozen=True, eq=False)
class OutputDensityModel:
    """Mixture ``f_Y(y) = sum_i w_i phi2(y - mu_i)``."""

    means: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        means = np.ascontiguousarray(np.asarray(self.means, dtype=float).reshape(-1, 2))
        weights = np.ascontiguousarray(np.asarray(self.weights, dtype=float).reshape(-1))
        if means.shape[0] != weights.shape[0] or means.shape[0] == 0:
            raise DomainError("means and weights must be non-empty and of equal length")
        if np.any(weights <= 0) or not np.all(np.isfinite(means)):
            raise DomainError("mixture weights must be positive and means finite")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_distribution(cls, d: SymmetricBoundaryDistribution):
        pts, masses, _ = expand_arrays(d)
        return cls(pts, masses)

    @classmethod
    def point_mass(cls, point=(0.0, 0.0)):
        return cls(np.array([point], dtype=float), np.ones(1))

    @cached_property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    @property
    def size(self) -> int:
        return self.weights.size


def _model(m):
    if isinstance(m, SymmetricBoundaryDistribution):
        return OutputDensityModel.from_distribution(m)
    return m


def _points(y):
    y = np.asarray(y, dtype=float)
    return y.reshape(-1, 2), y.ndim == 1


def log_output_density(y, m: OutputDensityModel):
    """``log f_Y(y)`` by max-shifted log-sum-exp; ``y`` of shape (2,) or (P, 2)."""
    m = _model(m)
    pts, single = _points(y)
    out = _kernels.mixture_logpdf(pts, m.means, m.log_weights)
    return float(out[0]) if single else out


def posterior_mean(y, m: OutputDensityModel):
    """``E[X | Y = y]`` as responsibility-weighted component means."""
    m = _model(m)
    pts, single = _points(y)
    _, mean, _ = _kernels.posterior(pts, m.means, m.log_weights)
    return mean[0] if single else mean


def _unpack_cov(packed):
    out = np.empty(packed.shape[:-1] + (2, 2))
    out[..., 0, 0] = packed[..., 0]
    out[..., 0, 1] = out[..., 1, 0] = packed[..., 1]
    out[..., 1, 1] = packed[..., 2]
    return out


def posterior_variance(y, m: OutputDensityModel):
    """``Var(X | Y = y)`` as a 2x2 (or (P, 2, 2)) symmetric PSD matrix."""
    m = _model(m)
    pts, single = _points(y)
    _, _, cov = _kernels.posterior(pts, m.means, m.log_weights)
    cov = _unpack_cov(cov)
    # rounding can leave tiny negative diagonals when the posterior collapses
    cov[..., 0, 0] = np.maximum(cov[..., 0, 0], 0.0)
    cov[..., 1, 1] = np.maximum(cov[..., 1, 1], 0.0)
    return cov[0] if single else cov


def information_density_many(x, m: OutputDensityModel, rule: QuadratureRule | None = None) -> np.ndarray:
    """``D(x_j)`` for every row of ``x`` (shape (J, 2))."""
    m = _model(m)
    z, omega = tensor_nodes(rule or default_rule())
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    return _kernels.shifted_info_density(x, z, omega, m.means, m.log_weights)


def information_density(x, m: OutputDensityModel, rule: QuadratureRule | None = None) -> float:
    """Relative entropy ``D(P_{Y|X=x} || P_Y)`` in nats."""
    return float(information_density_many(np.asarray(x, dtype=float).reshape(1, 2), m, rule)[0])


def _stats(x, m, rule):
    m = _model(m)
    z, omega = tensor_nodes(rule or default_rule())
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    return _kernels.shifted_stats(x, z, omega, m.means, m.log_weights)


def info_density_laplacian(x, m: OutputDensityModel, rule: QuadratureRule | None = None):
    """Laplacian of ``D`` at ``x``: ``2 - E_Z[tr Var(X | Y = x + Z)]``."""
    single = np.asarray(x).ndim == 1
    _, _, evar = _stats(x, m, rule)
    lap = 2.0 - (evar[:, 0] + evar[:, 2])
    return float(lap[0]) if single else lap


def _arc_geometry(x1, c):
    if c.r_p <= 0.0:
        raise DomainError("derivatives along the arc need r_p > 0")
    x1 = float(x1)
    if abs(x1) >= c.r_p * (1.0 - EDGE_GUARD):
        raise EndpointError(f"|x1| = {abs(x1)!r} is within the endpoint guard of r_p = {c.r_p!r}")
    s = math.sqrt(1.0 - (x1 / c.r_p) ** 2)
    x = boundary_point(x1, c)
    # arc velocity and acceleration of (x1, r_m s(x1)) in the parameter x1
    slope = c.r_m * x1 / (c.r_p**2 * s)
    curv = c.r_m / (c.r_p**2 * s**3)
    return x, s, np.array([1.0, -slope]), curv


def info_density_d1(x1: float, m: OutputDensityModel, c: EllipseConstraint, rule: QuadratureRule | None = None) -> float:
    """``d/dx1`` of ``D(x1, r_m sqrt(1 - x1^2/r_p^2))`` along the upper arc.

    Chain rule with Tweedie's formula gives
    ``-E_Z[E[X|Y] . xdot] + x1 (1 - r_m^2/r_p^2)`` where
    ``xdot = (1, -r_m x1 / (r_p^2 s))`` and ``s = sqrt(1 - x1^2/r_p^2)``.
    The sign is that of the derivative of ``D`` itself (not of ``-D``).
    """
    x, _, xdot, _ = _arc_geometry(x1, c)
    _, emean, _ = _stats(np.array(x), m, rule)
    return float(-(emean[0] @ xdot) + x1 * (1.0 - (c.r_m / c.r_p) ** 2))


def info_density_d2(x1: float, m: OutputDensityModel, c: EllipseConstraint, rule: QuadratureRule | None = None) -> float:
    """Second derivative of ``D`` along the upper arc.

    ``xdot^T (I - E_Z[Var(X|Y)]) xdot + k E_Z[E[X2|Y]] - r_m^2 / (r_p^2 s^2)``
    with ``k = r_m / (r_p^2 s^3)`` the magnitude of the arc acceleration.
    """
    x, s, xdot, curv = _arc_geometry(x1, c)
    _, emean, evar = _stats(np.array(x), m, rule)
    v = _unpack_cov(evar[0])
    quad = float(xdot @ (np.eye(2) - v) @ xdot)
    return quad + curv * float(emean[0, 1]) - (c.r_m / c.r_p) ** 2 / s**2


def mutual_information(d: SymmetricBoundaryDistribution, rule: QuadratureRule | None = None) -> float:
    """``I(X; X + Z)`` in nats, one information density per orbit.

    Every point of an orbit has the same information density by symmetry,
    so ``I = sum_atoms mass * D(representative)``.
    """
    if not d.atoms:
        raise DomainError("empty distribution")
    m = OutputDensityModel.from_distribution(d)
    if m.size == 1:
        # a deterministic input carries no information
        return 0.0
    c = d.constraint
    reps = np.array([boundary_point(a.x1, c) if c.r_p > 0 else (0.0, 0.0) for a in d.atoms])
    dens = information_density_many(reps, m, rule)
    return float(math.fsum(d.mass * dens))
