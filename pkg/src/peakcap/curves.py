"""Regime boundaries in the ``(r_p, r_m)`` plane.

Two curves are traced:

* the two-point boundary, below which the antipodal pair ``(+-r_p, 0)`` is
  capacity achieving.  The pair is optimal exactly when
  ``r_m^2 / 2 < E[g(r_p + Z)] - E[g(Z)]`` with
  ``g(y) = -log f(y)``, ``f`` the output density of the pair.  The right
  side does not involve ``r_m``, so the boundary is explicit.
* the waterfilling boundary, below which Gaussian signalling under an
  average power constraint would use only the stronger eigenmode.

Writing ``g`` with ``phi(y - r_p) + phi(y + r_p)`` instead of the mixture
density changes ``g`` by the constant ``log 2``, which cancels in the
difference of expectations.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, EvaluationError, PeakcapError
from .quadrature import QuadratureRule, default_rule, expect_gaussian_1d

__all__ = [
    "RegimeCurve",
    "WaterfillingSolution",
    "two_point_rhs",
    "two_point_gap",
    "two_point_threshold",
    "two_point_threshold_bisect",
    "waterfilling_split",
    "waterfilling_boundary",
    "trace_curve",
    "KINDS",
]

KINDS = ("two_point_boundary", "waterfilling_boundary")
_ALIASES = {"two-point": "two_point_boundary", "two_point": "two_point_boundary", "waterfilling": "waterfilling_boundary"}
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class RegimeCurve:
    kind: str
    # (n, 2) array of (r_p, r_m), ascending in r_p
    samples: np.ndarray

    @property
    def r_p(self):
        return self.samples[:, 0]

    @property
    def r_m(self):
        return self.samples[:, 1]

    def to_csv(self, path=None) -> str:
        """CSV with header ``r_p,r_m`` and 12 significant digits; written to ``path`` if given."""
        buf = io.StringIO()
        buf.write("r_p,r_m\n")
        for a, b in self.samples:
            buf.write(f"{a:.12g},{b:.12g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class WaterfillingSolution:
    p1: float
    p2: float
    nu: float


def _check_rp(r_p):
    r_p = float(r_p)
    if not (r_p > 0.0 and math.isfinite(r_p)):
        raise DomainError(f"r_p must be positive and finite, got {r_p!r}")
    return r_p


def two_point_rhs(r_p: float, rule: QuadratureRule | None = None) -> float:
    """``E[g(r_p + Z)] - E[g(Z)]`` where ``g = -log`` of the pair's output density."""
    r_p = _check_rp(r_p)
    rule = rule or default_rule()

    def g(y):
        a = -0.5 * (y - r_p) ** 2
        b = -0.5 * (y + r_p) ** 2
        return _HALF_LOG_2PI + math.log(2.0) - np.logaddexp(a, b)

    return expect_gaussian_1d(g, r_p, rule) - expect_gaussian_1d(g, 0.0, rule)


def two_point_gap(r_p: float, r_m: float, rule: QuadratureRule | None = None) -> float:
    """Positive exactly when the antipodal pair is optimal for ``(r_p, r_m)``."""
    r_m = float(r_m)
    if not (r_m >= 0.0 and math.isfinite(r_m)):
        raise DomainError(f"r_m must be finite and >= 0, got {r_m!r}")
    return two_point_rhs(r_p, rule) - 0.5 * r_m * r_m


def two_point_threshold(r_p: float, tol: float = 1e-12, rule: QuadratureRule | None = None) -> float:
    """Largest ``r_m`` (capped at ``r_p``) for which the pair stays optimal.

    Raises ``EvaluationError`` if the right-hand side comes out below
    ``-tol``; it is a difference of relative entropies and cannot be
    negative, so that signals an inaccurate rule.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    rhs = two_point_rhs(r_p, rule)
    if rhs < -tol:
        raise EvaluationError(f"two-point right-hand side is negative ({rhs!r}) at r_p = {r_p!r}")
    return min(math.sqrt(2.0 * max(rhs, 0.0)), float(r_p))


def two_point_threshold_bisect(r_p: float, tol: float = 1e-13, rule: QuadratureRule | None = None) -> float:
    """Same threshold found by bisection on :func:`two_point_gap` over ``[0, r_p]``."""
    r_p = _check_rp(r_p)
    if two_point_gap(r_p, r_p, rule) >= 0.0:
        return r_p
    return float(bisect(lambda m: two_point_gap(r_p, m, rule), 0.0, r_p, xtol=tol, rtol=4 * np.finfo(float).eps))


def waterfilling_split(r_p: float, r_m: float) -> WaterfillingSolution:
    """Unit-power waterfilling over eigenmode gains ``r_p >= r_m``."""
    r_p, r_m = float(r_p), float(r_m)
    if not (math.isfinite(r_p) and math.isfinite(r_m) and r_p >= r_m >= 0.0 and r_p > 0.0):
        raise DomainError(f"need r_p >= r_m >= 0 and r_p > 0, got ({r_p!r}, {r_m!r})")
    inv_p = 1.0 / (r_p * r_p)
    if r_m == 0.0 or 1.0 + inv_p <= 1.0 / (r_m * r_m):
        return WaterfillingSolution(1.0, 0.0, 1.0 + inv_p)
    inv_m = 1.0 / (r_m * r_m)
    nu = 0.5 * (1.0 + inv_p + inv_m)
    return WaterfillingSolution(nu - inv_p, nu - inv_m, nu)


def waterfilling_boundary(r_p: float) -> float:
    """Largest ``r_m`` for which waterfilling leaves the weaker mode unused."""
    r_p = _check_rp(r_p)
    return r_p / math.sqrt(1.0 + r_p * r_p)


def trace_curve(kind: str, r_p_min: float, r_p_max: float, n: int, rule: QuadratureRule | None = None) -> RegimeCurve:
    """Sample a boundary at ``n`` equally spaced ``r_p`` values.

    ``kind`` is ``two_point_boundary`` or ``waterfilling_boundary`` (the
    CLI spellings ``two-point`` and ``waterfilling`` are accepted too).
    Errors raised for a sample carry the offending value as ``exc.r_p``.
    """
    kind = _ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise DomainError(f"unknown curve kind {kind!r}; expected one of {KINDS}")
    if not (0.0 < r_p_min < r_p_max and math.isfinite(r_p_max)):
        raise DomainError(f"need 0 < r_p_min < r_p_max, got ({r_p_min!r}, {r_p_max!r})")
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    rule = rule or default_rule()
    r_p = np.linspace(float(r_p_min), float(r_p_max), int(n))
    r_m = np.empty_like(r_p)
    for i, v in enumerate(r_p):
        try:
            if kind == "two_point_boundary":
                r_m[i] = two_point_threshold(v, rule=rule)
            else:
                r_m[i] = waterfilling_boundary(v)
        except PeakcapError as exc:
            exc.r_p = float(v)
            exc.args = (f"at r_p = {v!r}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
    return RegimeCurve(kind, np.column_stack([r_p, r_m]))
