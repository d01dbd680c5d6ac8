"""Reduction of a 2x2 peak-power MIMO channel to an elliptical input region.

Rotating input and output by the singular vectors of ``H`` leaves the mutual
information unchanged, so ``max I(X; HX + Z)`` over the unit disc equals the
capacity of the identity channel whose input lies in the ellipse with
semi-axes ``sigma_1 >= sigma_2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["EllipseConstraint", "singular_values", "reduce_channel"]

SMALL_PEAK_RADIUS = math.sqrt(2.0)


@dataclass(frozen=True)
class EllipseConstraint:
    """Input region ``x1^2/r_p^2 + x2^2/r_m^2 <= 1`` with ``r_p >= r_m >= 0``."""

    r_p: float
    r_m: float

    def __post_init__(self):
        r_p, r_m = float(self.r_p), float(self.r_m)
        if not (math.isfinite(r_p) and math.isfinite(r_m)):
            raise DomainError(f"radii must be finite, got ({r_p}, {r_m})")
        if r_m < 0.0 or r_p < r_m:
            raise DomainError(f"need r_p >= r_m >= 0, got ({r_p}, {r_m})")
        object.__setattr__(self, "r_p", r_p)
        object.__setattr__(self, "r_m", r_m)

    @property
    def is_circle(self) -> bool:
        return self.r_p == self.r_m

    @property
    def small_peak_power(self) -> bool:
        """True when ``r_p <= sqrt(2)``, where support lies on the boundary."""
        return self.r_p <= SMALL_PEAK_RADIUS * (1.0 + 1e-12)

    def contains(self, x1, x2, tol=1e-12) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.r_p == 0.0:
            return (np.abs(x1) <= tol) & (np.abs(x2) <= tol)
        if self.r_m == 0.0:
            return (np.abs(x2) <= tol) & (np.abs(x1) <= self.r_p * (1 + tol))
        return (x1 / self.r_p) ** 2 + (x2 / self.r_m) ** 2 <= 1.0 + tol

    def to_dict(self):
        return {"r_p": self.r_p, "r_m": self.r_m}


def _as_matrix(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (2, 2):
        raise DomainError(f"channel matrix must be 2x2, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise DomainError("channel matrix entries must be finite")
    return h


def singular_values(h) -> tuple[float, float]:
    """Singular values of a real 2x2 matrix in descending order.

    Uses the closed form for the eigenvalues of ``h^T h``: with
    ``s = |h|_F^2`` and ``d = |det h|`` the squared singular values are
    ``(s +- sqrt(s^2 - 4 d^2)) / 2``.  Their square roots are evaluated as
    ``(p +- q) / 2`` with ``p = |(a + d, c - b)|`` and ``q = |(a - d, b + c)|``,
    which satisfy ``p^2 + q^2 = 2 s`` and ``|p^2 - q^2| = 4 d`` without
    forming the discriminant; the smaller value falls back to ``d / sigma_1``
    when ``p - q`` would cancel.

    Parameters
    ----------
    h : array_like, shape (2, 2)
        Real channel matrix with finite entries.

    Returns
    -------
    (float, float)
        ``(sigma_1, sigma_2)`` with ``sigma_1 >= sigma_2 >= 0``.
    """
    h = _as_matrix(h)
    a, b = h[0]
    c, d = h[1]
    # sigma_1 = (sqrt((a+d)^2 + (c-b)^2) + sqrt((a-d)^2 + (b+c)^2)) / 2 is the
    # cancellation-free form of (s + sqrt(s^2 - 4 det^2)) / 2 under a sqrt.
    p = math.hypot(a + d, c - b)
    q = math.hypot(a - d, b + c)
    sigma1 = 0.5 * (p + q)
    if sigma1 == 0.0:
        return 0.0, 0.0
    # |p - q| / 2 cancels when sigma_2 << sigma_1; det / sigma_1 does not
    sigma2 = 0.5 * abs(p - q)
    if sigma2 < 0.5 * sigma1:
        sigma2 = abs(a * d - b * c) / sigma1
    return sigma1, min(sigma2, sigma1)


def reduce_channel(h) -> EllipseConstraint:
    """Equivalent elliptical constraint ``(r_p, r_m) = (sigma_1, sigma_2)``."""
    sigma1, sigma2 = singular_values(h)
    return EllipseConstraint(sigma1, sigma2)
