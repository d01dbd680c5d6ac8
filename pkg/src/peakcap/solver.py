"""Capacity of the ellipse-constrained Gaussian channel.

The solver works on the boundary, where the optimal input lives whenever
``r_p <= sqrt(2)``.  It proceeds in three stages:

1. Blahut-Arimoto over a symmetric grid of half-axis atoms (coarse
   quadrature, cheap iterations);
2. extraction of mass clusters from the grid solution, one atom per cluster,
   plus the endpoint ``x1 = r_p`` which always belongs to the support;
3. refinement at full quadrature order, alternating mass updates at fixed
   locations, a joint quasi-Newton ascent of the mutual information in atom
   positions and masses, merging, and an exchange step that inserts the
   worst KKT violator as a new atom.

If refinement does not settle or its result fails the KKT check, the grid
solution itself is re-weighted at full order and returned when it passes.
The circle ``r_p = r_m`` short-circuits after stage 1 when the grid solution
is flat, since the uniform law on the circle is then optimal.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import softmax

from . import _kernels
from .channel import EllipseConstraint
from .errors import ConvergenceError, DomainError, RegimeError
from .inputs import SymmetricBoundaryDistribution, boundary_point, merge_atoms, orbit_shares
from .kkt import KktReport, kkt_report
from .output_stats import OutputDensityModel, info_density_d1, information_density_many, mutual_information
from .quadrature import (
    QuadratureRule,
    default_rule,
    expect_gaussian_1d,
    gauss_hermite_rule,
    gauss_laguerre_rule,
    tensor_nodes,
)
from .special import log_i0

__all__ = [
    "SolverOptions",
    "CapacityResult",
    "solve_capacity",
    "two_point_capacity",
    "circle_capacity",
    "REGIMES",
    "CIRCLE_ORACLE_MAX",
]

log = logging.getLogger(__name__)

REGIMES = ("two_point", "circle_uniform", "general_discrete", "degenerate_1d", "degenerate_zero")
CIRCLE_ORACLE_MAX = 2.4
PRUNE_MASS = 1e-12
FLAT_TOL = 0.01
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolverOptions:
    grid_n: int = 48
    ba_tol: float = 1e-9
    max_iters: int = 20000
    # atoms closer than this (x1 units) are merged
    merge_tol: float = 1e-6
    quadrature_order: int = 96
    # order used for the grid stage only
    coarse_order: int = 16
    kkt_grid: int = 512
    kkt_tol: float = 1e-4
    refine_rounds: int = 60
    # heuristic boundary-only solve for r_p > sqrt(2)
    allow_large_peak: bool = False

    def __post_init__(self):
        for name in ("grid_n", "max_iters", "quadrature_order", "coarse_order", "kkt_grid", "refine_rounds"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if self.grid_n < 2:
            raise DomainError("grid_n must be at least 2")
        if not (self.ba_tol >= 1e-12 and math.isfinite(self.ba_tol)):
            raise DomainError(f"ba_tol must be >= 1e-12, got {self.ba_tol!r}")
        if not (self.merge_tol > 0 and self.kkt_tol > 0):
            raise DomainError("merge_tol and kkt_tol must be positive")


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    distribution: SymmetricBoundaryDistribution
    kkt: KktReport
    iterations: int
    regime_label: str
    # mutual information after every grid-stage iteration
    ba_trace: tuple = field(default=(), repr=False)
    support_sizes: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            "capacity": self.capacity,
            "regime_label": self.regime_label,
            "iterations": self.iterations,
            "distribution": self.distribution.to_dict(),
            "kkt": self.kkt.to_dict(),
            "support_sizes": list(self.support_sizes),
        }


# ---------------------------------------------------------------------------
# closed-form oracles
# ---------------------------------------------------------------------------

def two_point_capacity(r_p: float, rule: QuadratureRule | None = None) -> float:
    """Mutual information of the equiprobable pair ``{(+-r_p, 0)}``, nats.

    Only the first coordinate carries information, and for the binary input
    ``I = r_p^2 - E[log cosh(r_p Y)]`` with ``Y = r_p + Z``.  Since
    ``log cosh t = t + log1p(exp(-2t)) - log 2`` this is
    ``log 2 - E[log1p(exp(-2 r_p Y))]``, which has no cancellation.
    """
    r_p = float(r_p)
    if not (r_p >= 0.0 and math.isfinite(r_p)):
        raise DomainError(f"r_p must be finite and >= 0, got {r_p!r}")
    if r_p == 0.0:
        return 0.0
    rule = rule or default_rule()
    return math.log(2.0) - expect_gaussian_1d(lambda y: np.logaddexp(0.0, -2.0 * r_p * y), r_p, rule)


def circle_capacity(r: float, order: int = 100) -> float:
    """Mutual information of the uniform law on the circle of radius ``r``.

    The output density is radial,
    ``f_Y(y) = exp(-(|y|^2 + r^2)/2) I0(r |y|) / (2 pi)``, which gives
    ``I = r^2 - E[log I0(r |Y|)]`` with ``|Y|`` Rice distributed.  With
    ``u = |Y|^2 / 2`` the expectation is a Gauss-Laguerre integral of order
    ``order``.

    Raises ``DomainError`` above 2.4, where the uniform law stops being
    optimal and the value is no longer a capacity.
    """
    r = float(r)
    if not (0.0 <= r <= CIRCLE_ORACLE_MAX):
        raise DomainError(f"circle capacity oracle is valid for 0 <= r <= {CIRCLE_ORACLE_MAX}, got {r!r}")
    if r == 0.0:
        return 0.0
    u, w = gauss_laguerre_rule(order)
    rho = np.sqrt(2.0 * u)
    li = log_i0(r * rho)
    # Rice density in u is exp(-u - r^2/2) I0(r rho); the exp(-u) is the weight
    dens = np.exp(li - 0.5 * r * r)
    return r * r - float(math.fsum(w * dens * li))


# ---------------------------------------------------------------------------
# Blahut-Arimoto at fixed locations
# ---------------------------------------------------------------------------

class _FixedSupport:
    """Kernel cache for BA iterations over atoms at fixed positions."""

    def __init__(self, x1, c, rule):
        self.x1 = np.asarray(x1, dtype=float)
        self.c = c
        pts, share, owner = orbit_shares(self.x1, c)
        reps = np.array([boundary_point(v, c) for v in self.x1]).reshape(-1, 2)
        self.z, self.omega = tensor_nodes(rule)
        self.tensor, self.shift = _kernels.orbit_tensor(reps, self.z, pts, owner, share, self.x1.size)
        self.orbit_size = np.bincount(owner, minlength=self.x1.size).astype(float)

    def densities(self, w):
        return _kernels.orbit_info_density(self.tensor, self.shift, self.omega, w)

    def restrict(self, keep):
        """Drop atoms (as probes and as mixture components) outside ``keep``."""
        keep = np.flatnonzero(keep)
        self.x1 = self.x1[keep]
        self.tensor = np.ascontiguousarray(self.tensor[keep][:, :, keep])
        self.shift = np.ascontiguousarray(self.shift[keep])
        self.orbit_size = self.orbit_size[keep]
        return keep


def _blahut_arimoto(fs, w, tol, max_iters, trace=None, eq_tol=None, prune=False):
    """Run BA from ``w``; returns ``(w, D, iterations)``.

    Stops when the MI change drops below ``tol`` or, if ``eq_tol`` is set,
    when every atom's density is within ``eq_tol`` of the MI.  With
    ``prune`` atoms whose mass falls below ``PRUNE_MASS`` leave the active
    set for good (their entries of ``w`` and ``D`` are returned as 0 and
    -inf).
    """
    w = np.asarray(w, dtype=float) / math.fsum(w)
    n_all = w.size
    active = np.arange(n_all)
    dens = fs.densities(w)
    mi = float(w @ dens)
    if trace is not None:
        trace.append(mi)
    it = 0
    for it in range(1, max_iters + 1):
        e = np.exp(dens - dens.max())
        w = w * e
        w /= math.fsum(w)
        if prune and np.any(w < PRUNE_MASS):
            keep = w >= PRUNE_MASS
            active = active[fs.restrict(keep)]
            w = w[keep] / math.fsum(w[keep])
        dens = fs.densities(w)
        new = float(w @ dens)
        if trace is not None:
            trace.append(new)
        change = abs(new - mi)
        mi = new
        if eq_tol is not None and np.max(np.abs(dens - mi)) <= eq_tol:
            break
        if change < tol:
            break
    if prune:
        w_all, d_all = np.zeros(n_all), np.full(n_all, -np.inf)
        w_all[active], d_all[active] = w, dens
        return w_all, d_all, it
    return w, dens, it


# ---------------------------------------------------------------------------
# support extraction and refinement
# ---------------------------------------------------------------------------

def _angle_grid(c, n):
    theta = np.linspace(0.0, 0.5 * math.pi, n)
    x1 = c.r_p * np.cos(theta)[::-1]
    x1[0] = 0.0
    x1[-1] = c.r_p
    return x1


def _clusters(x1, w):
    """Split the grid mass profile at its local minima; one (x1, mass) per cluster."""
    keep = w > PRUNE_MASS
    x1, w = x1[keep], w[keep]
    if x1.size == 0:
        return [], []
    cuts = [0]
    for i in range(1, w.size - 1):
        if w[i] < w[i - 1] and w[i] <= w[i + 1]:
            cuts.append(i + 1)
    cuts.append(w.size)
    xs, ms = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        m = math.fsum(w[a:b])
        xs.append(float(np.dot(x1[a:b], w[a:b]) / m))
        ms.append(m)
    return xs, ms


def _density_on_arc(t, model, c, rule):
    pts = np.array([boundary_point(v, c) for v in np.atleast_1d(t)])
    return information_density_many(pts, model, rule)


def _golden_max(f, lo, hi, tol):
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    cands = [(f(lo), lo), (f1, x1), (f2, x2), (f(hi), hi)]
    return max(cands)[1]


def _distribution(c, x1, w):
    return SymmetricBoundaryDistribution.from_arrays(c, x1, np.asarray(w) / math.fsum(w))


def _model(c, x1, w):
    return OutputDensityModel.from_distribution(_distribution(c, x1, w))


def _orbit_model(c, x1, w):
    pts, share, owner = orbit_shares(x1, c)
    return OutputDensityModel(pts, np.maximum(share * w[owner], 1e-300))


def _polish(c, x1, w, rule):
    """Joint ascent of the mutual information in the free atom positions and all masses.

    The endpoint atom stays put.  Gradients are exact: moving atom ``j``
    along the arc changes ``I`` by ``w_j dD/dx1(x_j)``, and through softmax
    logits ``a`` the mass gradient is ``w_k (D_k - I)``.
    """
    r_p = c.r_p
    free = np.flatnonzero(x1 < r_p)
    nf = free.size
    hi = r_p * (1.0 - 1e-7)

    def unpack(v):
        xs = x1.copy()
        xs[free] = v[:nf]
        return xs, softmax(v[nf:])

    def neg_mi(v):
        xs, ws = unpack(v)
        model = _orbit_model(c, xs, ws)
        reps = np.array([boundary_point(t, c) for t in xs])
        dens = information_density_many(reps, model, rule)
        mi = float(ws @ dens)
        gx = np.array([ws[j] * info_density_d1(xs[j], model, c, rule) for j in free])
        ga = ws * (dens - mi)
        return -mi, -np.concatenate([gx, ga])

    v0 = np.concatenate([np.minimum(x1[free], hi), np.log(np.maximum(w, 1e-300))])
    v0[nf:] -= v0[nf:].max()
    bounds = [(0.0, hi)] * nf + [(-60.0, 1.0)] * x1.size
    res = minimize(neg_mi, v0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-16, "gtol": 1e-12, "maxiter": 500})
    if not -res.fun > -neg_mi(v0)[0]:
        return x1, w
    xs, ws = unpack(res.x)
    return xs, ws


def _snap_origin(c, x1, w, mi, scan, rule, reach=0.05):
    """Replace atoms within ``reach * r_p`` of the axis by one atom at ``x1 = 0``.

    The information density is very flat near the top of the ellipse, so the
    polish can leave one or two atoms just off it.  The replacement is kept
    only if it loses no information and still certifies on ``scan``.
    """
    near = x1 < reach * c.r_p
    if not np.any(near) or (near.sum() == 1 and x1[0] == 0.0):
        return x1, w
    xs = np.concatenate([[0.0], x1[~near]])
    ws = np.concatenate([[math.fsum(w[near])], w[~near]])
    fs = _FixedSupport(xs, c, rule)
    ws, dens, _ = _blahut_arimoto(fs, ws, 1e-15, 4000, eq_tol=1e-11)
    new_mi = float(ws @ dens)
    viol = float(np.max(_density_on_arc(scan, _model(c, xs, ws), c, rule))) - new_mi
    if new_mi >= mi - 1e-12 and viol <= 1e-8 and np.max(np.abs(dens - new_mi)) <= 1e-8:
        return xs, ws
    return x1, w


def _refine(c, x1, w, opts, rule):
    """Stage 3; returns ``(x1, w, iterations, support_sizes)``."""
    r_p = c.r_p
    width = opts.merge_tol
    sizes = []
    total_iters = 0
    scan = _angle_grid(c, 257)
    for _ in range(opts.refine_rounds):
        fs = _FixedSupport(x1, c, rule)
        w, dens, it = _blahut_arimoto(fs, w, 1e-15, 4000, eq_tol=1e-11)
        total_iters += it
        mi = float(w @ dens)
        log.debug("refine round: x1 = %s, w = %s", np.array2string(x1, precision=6), np.array2string(w, precision=3))
        # atoms BA is starving; the exchange step re-inserts them if needed
        drop = (w < 1e-3) & (dens < mi - 1e-5) & (x1 < r_p)
        drop |= (w < 1e-13) & (x1 < r_p)
        if np.any(drop):
            x1, w = x1[~drop], w[~drop]
            continue

        new_x, w = _polish(c, x1, w, rule)
        merged = merge_atoms(_distribution(c, new_x, w), width / r_p)
        if merged.x1.size == x1.size:
            moved = float(np.max(np.abs(merged.x1 - x1)))
        else:
            moved = math.inf
        x1, w = merged.x1, merged.mass
        if moved > 1e-9 * r_p:
            continue

        # exchange: worst violator on a dense arc scan
        model = _model(c, x1, w)
        scan_d = _density_on_arc(scan, model, c, rule)
        k = int(np.argmax(scan_d))
        lo, hi = scan[max(k - 1, 0)], scan[min(k + 1, scan.size - 1)]
        t = _golden_max(lambda s: float(_density_on_arc(s, model, c, rule)[0]), lo, hi, 1e-10 * r_p)
        viol = float(_density_on_arc(t, model, c, rule)[0]) - mi
        sizes.append(int(x1.size))
        log.debug("refine: %d atoms, worst violation %.3e at x1 = %.9f", x1.size, viol, t)
        if viol <= 1e-8 or np.min(np.abs(x1 - t)) < width:
            x1, w = _snap_origin(c, x1, w, mi, scan, rule)
            return x1, w, total_iters, sizes
        x1 = np.append(x1, t)
        w = np.append(w, 0.02)
        order = np.argsort(x1)
        x1, w = x1[order], w[order] / math.fsum(w)
    raise ConvergenceError("support refinement did not settle", best=(x1, w))


def _expanded_flatness(d):
    pts_mass = []
    for a in d.atoms:
        k = 2 if (a.x1 == 0.0 or a.x1 == d.constraint.r_p) else 4
        pts_mass.extend([a.mass / k] * k)
    pts_mass = np.array(pts_mass)
    return float(np.max(np.abs(pts_mass / pts_mass.mean() - 1.0)))


def _finish(c, x1, w, opts, rule, iterations, label, trace=(), sizes=()):
    d = _distribution(c, x1, w).validated()
    rep = kkt_report(d, grid_n=opts.kkt_grid, tol=opts.kkt_tol, rule=rule)
    cap = mutual_information(d, rule)
    return CapacityResult(cap, d, rep, int(iterations), label, tuple(trace), tuple(sizes))


def solve_capacity(c: EllipseConstraint, opts: SolverOptions | None = None) -> CapacityResult:
    """Capacity and an optimal input for the ellipse ``c``.

    Raises
    ------
    RegimeError
        If ``r_p > sqrt(2)`` and ``opts.allow_large_peak`` is not set.
    ConvergenceError
        If refinement does not settle or the final KKT check fails; ``best``
        holds the last :class:`CapacityResult`.
    """
    opts = opts or SolverOptions()
    rule = gauss_hermite_rule(opts.quadrature_order)
    if c.r_p == 0.0:
        d = SymmetricBoundaryDistribution(c, ((0.0, 1.0),))
        rep = kkt_report(d, grid_n=opts.kkt_grid, tol=opts.kkt_tol, rule=rule)
        return CapacityResult(0.0, d, rep, 0, "degenerate_zero")
    if not c.small_peak_power and not opts.allow_large_peak:
        raise RegimeError(
            f"r_p = {c.r_p!r} exceeds sqrt(2); boundary support is only guaranteed for r_p <= sqrt(2) "
            "(pass allow_large_peak to solve on the boundary anyway and check the interior)"
        )

    x1 = _angle_grid(c, opts.grid_n)
    trace = []
    if c.is_circle:
        fs = _FixedSupport(x1, c, rule)
        w0 = fs.orbit_size / fs.orbit_size.sum()
        w, _, iters = _blahut_arimoto(fs, w0, opts.ba_tol, opts.max_iters, trace)
        grid_d = _distribution(c, x1, w)
        if _expanded_flatness(grid_d) <= FLAT_TOL:
            res = _finish(c, x1, w, opts, rule, iters, "circle_uniform", trace)
            return _check(res)
    else:
        fs = _FixedSupport(x1, c, gauss_hermite_rule(min(opts.coarse_order, opts.quadrature_order)))
        w0 = fs.orbit_size / fs.orbit_size.sum()
        w, _, iters = _blahut_arimoto(fs, w0, opts.ba_tol, opts.max_iters, trace, prune=True)

    grid_x, grid_w = x1[w > 0], w[w > 0]
    try:
        res = _sparse_solution(c, grid_x, grid_w, opts, rule, iters, trace)
        if res.kkt.passed:
            return res
        log.debug("sparse support failed KKT (violation %.3e); using the grid", res.kkt.max_violation)
    except ConvergenceError as exc:
        log.debug("sparse refinement failed: %s; using the grid", exc)
    return _check(_grid_solution(c, grid_x, grid_w, opts, rule, iters, trace))


def _label(c, x1):
    if c.r_m == 0.0:
        return "degenerate_1d"
    if x1.size == 1 and x1[0] == c.r_p:
        return "two_point"
    return "general_discrete"


def _sparse_solution(c, x1, w, opts, rule, iters, trace):
    xs, ms = _clusters(x1, w)
    spacing = c.r_p * (1.0 - math.cos(0.5 * math.pi / (opts.grid_n - 1)))
    if xs and c.r_p - xs[-1] <= 2.0 * spacing + opts.merge_tol:
        xs[-1] = c.r_p
    else:
        xs.append(c.r_p)
        ms.append(0.02)
    start = merge_atoms(_distribution(c, xs, ms), opts.merge_tol / c.r_p)
    x1, w, more, sizes = _refine(c, start.x1, start.mass, opts, rule)
    log.debug("support sizes during refinement: %s", sizes)
    return _finish(c, x1, w, opts, rule, iters + more, _label(c, x1), trace, sizes)


def _grid_solution(c, x1, w, opts, rule, iters, trace):
    """Grid-stage support re-weighted at full order.

    Used when the grid mass profile is spread out (close to the circle the
    support has many atoms and clustering cannot resolve them).
    """
    fs = _FixedSupport(x1, c, rule)
    w, _, more = _blahut_arimoto(fs, w, opts.ba_tol, opts.max_iters, prune=True)
    keep = w > 0
    x1, w = x1[keep], w[keep]
    return _finish(c, x1, w, opts, rule, iters + more, _label(c, x1), trace, (int(x1.size),))


def _check(res):
    if not res.kkt.passed:
        raise ConvergenceError(
            f"KKT check failed: max violation {res.kkt.max_violation:.3e}, "
            f"equalization residual {res.kkt.max_equalization_residual:.3e}",
            best=res,
        )
    return res
