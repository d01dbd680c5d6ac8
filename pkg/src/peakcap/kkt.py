"""Numerical KKT certificates for candidate input distributions.

A distribution ``P`` with information density ``D`` is optimal iff
``D(x) <= I(P)`` on the input region with equality on the support.  When
``r_p <= sqrt(2)`` the density is subharmonic and it suffices to check the
boundary.  The check here is a finite grid, so a passing report certifies
optimality only up to ``tol`` on that grid.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from .channel import EllipseConstraint
from .errors import DomainError, InvalidDistributionError
from .inputs import (
    SymmetricBoundaryDistribution,
    boundary_point,
    expand_arrays,
    validate_distribution,
)
from .output_stats import ENTROPY_Z2, OutputDensityModel, information_density_many
from .quadrature import QuadratureRule, default_rule, tensor_nodes

__all__ = [
    "KktReport",
    "TiltedDistribution",
    "kkt_report",
    "kkt_report_points",
    "check_grid",
    "tilted_kkt_function",
    "DEFAULT_TOL",
    "DEFAULT_GRID",
]

DEFAULT_TOL = 1e-4
DEFAULT_GRID = 512
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class KktReport:
    capacity_estimate: float
    max_violation: float
    max_equalization_residual: float
    constant_a: float
    grid_size: int
    passed: bool
    tol: float
    regime: str
    argmax_point: tuple[float, float]
    interior_checked: bool
    # every passing distribution must contain (+-r_p, 0)
    endpoint_in_support: bool

    def to_dict(self):
        out = asdict(self)
        out["argmax_point"] = list(self.argmax_point)
        return out


def check_grid(c: EllipseConstraint, grid_n: int, interior: bool | None = None) -> np.ndarray:
    """Check points: ``grid_n`` boundary points uniform in the ellipse angle,
    plus (when ``interior``) ``grid_n`` points on scaled interior shells and
    the centre."""
    theta = 2.0 * np.pi * np.arange(grid_n) / grid_n
    pts = [np.column_stack([c.r_p * np.cos(theta), c.r_m * np.sin(theta)])]
    if interior is None:
        interior = not c.small_peak_power
    if interior:
        shells = max(1, int(round(math.sqrt(grid_n) / 2)))
        per = int(math.ceil(grid_n / shells))
        phi = 2.0 * np.pi * np.arange(per) / per
        for i in range(shells):
            s = (i + 1) / (shells + 1)
            pts.append(np.column_stack([s * c.r_p * np.cos(phi), s * c.r_m * np.sin(phi)]))
        pts.append(np.zeros((1, 2)))
    return np.vstack(pts)


def _constant_a(capacity, points, masses, c):
    # a = C - log 2pi + log E[exp(-|X|^2/2)] + h(Z) - 1 - r_m^2/2
    log_m = float(logsumexp(-0.5 * np.sum(points**2, axis=1), b=masses))
    return capacity - LOG_2PI + log_m + ENTROPY_Z2 - 1.0 - 0.5 * c.r_m**2


def kkt_report_points(
    points,
    masses,
    c: EllipseConstraint,
    grid_n: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    rule: QuadratureRule | None = None,
    interior: bool | None = None,
) -> KktReport:
    """KKT report for an arbitrary finite input inside the ellipse.

    ``points`` (M, 2) and ``masses`` (M,) describe the input directly, so
    inputs off the boundary (for example a point mass at the origin) can be
    certified or refuted as well.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    masses = np.asarray(masses, dtype=float).reshape(-1)
    if grid_n < 64:
        raise DomainError(f"grid_n must be >= 64, got {grid_n}")
    if points.shape[0] != masses.shape[0] or points.shape[0] == 0:
        raise InvalidDistributionError("points and masses must be non-empty and matching")
    if abs(math.fsum(masses) - 1.0) > 1e-12 or np.any(masses <= 0):
        raise InvalidDistributionError("masses must be positive and sum to 1")
    if not np.all(c.contains(points[:, 0], points[:, 1], tol=1e-10)):
        raise InvalidDistributionError("support points must lie inside the ellipse")
    rule = rule or default_rule()
    if interior is None:
        interior = not c.small_peak_power
    model = OutputDensityModel(points, masses)

    probes = np.vstack([check_grid(c, grid_n, interior), points])
    dens = information_density_many(probes, model, rule)
    n_grid = probes.shape[0] - points.shape[0]
    support_dens = dens[n_grid:]
    capacity = float(math.fsum(masses * support_dens))
    excess = dens - capacity
    k = int(np.argmax(excess))  # first index on ties
    max_violation = float(excess[k])
    max_eq = float(np.max(np.abs(support_dens - capacity)))
    passed = max_violation <= tol and max_eq <= tol
    scale = max(c.r_p, 1e-300)
    endpoint = bool(np.any((np.abs(np.abs(points[:, 0]) - c.r_p) <= 1e-6 * scale) & (np.abs(points[:, 1]) <= 1e-6 * scale)))
    return KktReport(
        capacity_estimate=capacity,
        max_violation=max_violation,
        max_equalization_residual=max_eq,
        constant_a=_constant_a(capacity, points, masses, c),
        grid_size=int(probes.shape[0]),
        passed=bool(passed),
        tol=float(tol),
        regime="small_peak_power" if c.small_peak_power else "large_peak_power",
        argmax_point=(float(probes[k, 0]), float(probes[k, 1])),
        interior_checked=bool(interior),
        endpoint_in_support=endpoint,
    )


def kkt_report(
    d: SymmetricBoundaryDistribution,
    grid_n: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    rule: QuadratureRule | None = None,
) -> KktReport:
    """KKT report for a symmetric boundary distribution.

    The distribution is validated first.  For ``r_p > sqrt(2)`` interior
    shells are checked in addition to the boundary.

    Raises
    ------
    InvalidDistributionError
        If ``d`` violates any invariant listed by ``validate_distribution``.
    """
    report = validate_distribution(d)
    if not report.ok:
        raise InvalidDistributionError(
            "invalid distribution: " + "; ".join(v.detail for v in report.violations), report.violations
        )
    pts, masses, _ = expand_arrays(d)
    return kkt_report_points(pts, masses, d.constraint, grid_n=grid_n, tol=tol, rule=rule)


@dataclass(frozen=True, eq=False)
class TiltedDistribution:
    """Input law reweighted by ``exp(-|x|^2/2)`` and renormalized."""

    points: np.ndarray
    weights: np.ndarray
    # log E[exp(-|X|^2/2)] under the untilted law
    log_normalizer: float

    @classmethod
    def from_distribution(cls, d: SymmetricBoundaryDistribution):
        pts, masses, _ = expand_arrays(d)
        e = np.log(masses) - 0.5 * np.sum(pts**2, axis=1)
        log_m = float(logsumexp(e))
        return cls(pts, np.exp(e - log_m), log_m)

    def cumulant(self, t) -> np.ndarray:
        """Cumulant generating function ``log E[exp(t . X_tilted)]`` at rows of ``t``."""
        t = np.asarray(t, dtype=float).reshape(-1, 2)
        return logsumexp(t @ self.points.T, b=self.weights[None, :], axis=1)


def tilted_kkt_function(x1: float, d: SymmetricBoundaryDistribution, rule: QuadratureRule | None = None) -> float:
    """``x1^2/2 (1 - r_m^2/r_p^2) - E[K(Z + x)]`` with ``x`` on the upper arc.

    ``K`` is the cumulant generating function of the tilted input.  For any
    ``P`` this differs from the information density at ``x`` by the constant
    ``a - C``, so the KKT conditions read ``g - a <= 0`` with equality on the
    support.
    """
    c = d.constraint
    if c.r_p <= 0.0:
        raise DomainError("tilted_kkt_function needs r_p > 0")
    x = np.array(boundary_point(x1, c))
    tilted = TiltedDistribution.from_distribution(d)
    z, omega = tensor_nodes(rule or default_rule(), prune=0.0)
    f = float(omega @ tilted.cumulant(x[None, :] + z))
    return 0.5 * x1 * x1 * (1.0 - (c.r_m / c.r_p) ** 2) - f
