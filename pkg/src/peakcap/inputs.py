"""Symmetric input distributions supported on the ellipse boundary.

A distribution is stored as atoms on the closed upper-right quarter of the
boundary, keyed by their first coordinate ``x1`` in ``[0, r_p]``.  Each atom
stands for its whole orbit under the reflections ``x1 -> -x1`` and
``x2 -> -x2``; the orbit shares the atom's mass equally.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import EllipseConstraint
from .errors import DomainError, InvalidDistributionError

__all__ = [
    "HalfAxisAtom",
    "SymmetricBoundaryDistribution",
    "ExpandedAtom",
    "Violation",
    "ValidationReport",
    "boundary_point",
    "expand_symmetric",
    "expand_arrays",
    "validate_distribution",
    "merge_atoms",
    "MERGE_TOL",
]

# atoms closer than MERGE_TOL * r_p in x1 are one atom
MERGE_TOL = 1e-6
_RADICAND_CLAMP = 1e-14
_ENDPOINT_TOL = 1e-14
MASS_TOL = 1e-12


@dataclass(frozen=True)
class HalfAxisAtom:
    x1: float
    mass: float


@dataclass(frozen=True)
class ExpandedAtom:
    point: tuple[float, float]
    mass: float


@dataclass(frozen=True)
class SymmetricBoundaryDistribution:
    """Finite symmetric law on the boundary of an ellipse.

    Construction does not validate; call :func:`validate_distribution` or
    :meth:`validated` when the atoms come from outside.
    """

    constraint: EllipseConstraint
    atoms: tuple[HalfAxisAtom, ...] = field(default_factory=tuple)

    def __post_init__(self):
        atoms = tuple(
            a if isinstance(a, HalfAxisAtom) else HalfAxisAtom(float(a[0]), float(a[1]))
            for a in self.atoms
        )
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_arrays(cls, constraint, x1, mass):
        x1 = np.atleast_1d(np.asarray(x1, dtype=float))
        mass = np.atleast_1d(np.asarray(mass, dtype=float))
        order = np.argsort(x1, kind="stable")
        return cls(constraint, tuple(HalfAxisAtom(float(x1[i]), float(mass[i])) for i in order))

    @classmethod
    def point_mass_at_endpoint(cls, constraint):
        """The antipodal pair ``(+-r_p, 0)`` with mass 1/2 each."""
        return cls(constraint, (HalfAxisAtom(constraint.r_p, 1.0),))

    @property
    def x1(self) -> np.ndarray:
        return np.array([a.x1 for a in self.atoms], dtype=float)

    @property
    def mass(self) -> np.ndarray:
        return np.array([a.mass for a in self.atoms], dtype=float)

    def __len__(self):
        return len(self.atoms)

    def validated(self):
        report = validate_distribution(self)
        if not report.ok:
            raise InvalidDistributionError(
                "invalid distribution: " + "; ".join(v.detail for v in report.violations),
                report.violations,
            )
        return self

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        return {
            "r_p": self.constraint.r_p,
            "r_m": self.constraint.r_m,
            "atoms": [{"x1": a.x1, "mass": a.mass} for a in self.atoms],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            c = EllipseConstraint(float(data["r_p"]), float(data["r_m"]))
            atoms = tuple(HalfAxisAtom(float(a["x1"]), float(a["mass"])) for a in data["atoms"])
        except (KeyError, TypeError) as exc:
            raise InvalidDistributionError(f"malformed distribution document: {exc}") from exc
        return cls(c, atoms)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def boundary_point(x1: float, c: EllipseConstraint) -> tuple[float, float]:
    """Point ``(x1, r_m sqrt(1 - x1^2/r_p^2))`` on the upper half boundary."""
    if c.r_p <= 0.0:
        raise DomainError("boundary_point needs r_p > 0")
    x1 = float(x1)
    u = 1.0 - (x1 / c.r_p) ** 2
    if u < 0.0:
        if u < -_RADICAND_CLAMP:
            raise DomainError(f"|x1| = {abs(x1)!r} exceeds r_p = {c.r_p!r}")
        u = 0.0
    return x1, c.r_m * math.sqrt(u)


def _x2_array(x1, c):
    u = 1.0 - (np.asarray(x1, dtype=float) / c.r_p) ** 2
    return c.r_m * np.sqrt(np.clip(u, 0.0, None))


def _orbit(x1, mass, c):
    """Points and masses of one atom's symmetry orbit."""
    if c.r_p == 0.0:
        return [((0.0, 0.0), mass)]
    at_end = abs(x1 - c.r_p) <= _ENDPOINT_TOL * c.r_p
    if at_end:
        return [((c.r_p, 0.0), 0.5 * mass), ((-c.r_p, 0.0), 0.5 * mass)]
    _, x2 = boundary_point(x1, c)
    if x1 == 0.0:
        if x2 == 0.0:
            return [((0.0, 0.0), mass)]
        return [((0.0, x2), 0.5 * mass), ((0.0, -x2), 0.5 * mass)]
    if x2 == 0.0:
        return [((x1, 0.0), 0.5 * mass), ((-x1, 0.0), 0.5 * mass)]
    q = 0.25 * mass
    return [((x1, x2), q), ((-x1, x2), q), ((x1, -x2), q), ((-x1, -x2), q)]


def expand_symmetric(d: SymmetricBoundaryDistribution) -> list[ExpandedAtom]:
    """Full point set of ``d`` with masses; total mass is preserved exactly."""
    out = []
    for a in d.atoms:
        out.extend(ExpandedAtom(p, m) for p, m in _orbit(a.x1, a.mass, d.constraint))
    return out


def expand_arrays(d: SymmetricBoundaryDistribution):
    """Expanded ``(points (M, 2), masses (M,), owner (M,))``.

    ``owner[m]`` is the index of the half-axis atom that point ``m`` came
    from.
    """
    pts, masses, owner = [], [], []
    for i, a in enumerate(d.atoms):
        for p, m in _orbit(a.x1, a.mass, d.constraint):
            pts.append(p)
            masses.append(m)
            owner.append(i)
    return (
        np.array(pts, dtype=float).reshape(-1, 2),
        np.array(masses, dtype=float),
        np.array(owner, dtype=np.int64),
    )


def orbit_shares(x1, c):
    """Expanded points and within-orbit shares for a vector of atom positions.

    Returns ``(points, shares, owner)`` as for :func:`expand_arrays` but with
    shares summing to one per atom, independent of atom masses.
    """
    pts, shares, owner = [], [], []
    for i, v in enumerate(np.asarray(x1, dtype=float)):
        for p, m in _orbit(float(v), 1.0, c):
            pts.append(p)
            shares.append(m)
            owner.append(i)
    return (
        np.array(pts, dtype=float).reshape(-1, 2),
        np.array(shares, dtype=float),
        np.array(owner, dtype=np.int64),
    )


@dataclass(frozen=True)
class Violation:
    kind: str  # "mass_sum", "mass_sign", "range", "ordering", "separation", "boundary", "empty"
    detail: str
    value: float = float("nan")
    index: int = -1


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self):
        return [v.kind for v in self.violations]


def validate_distribution(d: SymmetricBoundaryDistribution, merge_tol: float = MERGE_TOL) -> ValidationReport:
    """List every violated invariant of ``d`` (empty when valid)."""
    c = d.constraint
    out = []
    if not d.atoms:
        out.append(Violation("empty", "distribution has no atoms"))
        return ValidationReport(tuple(out))
    x1, mass = d.x1, d.mass
    total = math.fsum(mass)
    if not abs(total - 1.0) <= MASS_TOL:
        out.append(Violation("mass_sum", f"masses sum to {total!r}, deficit {1.0 - total!r}", 1.0 - total))
    for i, m in enumerate(mass):
        if not (m > 0.0 and math.isfinite(m)):
            out.append(Violation("mass_sign", f"atom {i} has non-positive mass {m!r}", m, i))
    for i, v in enumerate(x1):
        if not (math.isfinite(v) and v >= 0.0 and v <= c.r_p * (1 + 1e-12)):
            out.append(Violation("range", f"atom {i} has x1 = {v!r} outside [0, {c.r_p!r}]", v, i))
    gaps = np.diff(x1)
    for i, g in enumerate(gaps):
        if g <= 0.0:
            out.append(Violation("ordering", f"atoms {i} and {i + 1} are not strictly increasing in x1", g, i))
        elif g < merge_tol * c.r_p:
            out.append(Violation("separation", f"atoms {i} and {i + 1} are {g!r} apart, below merge tolerance", g, i))
    if c.r_p > 0.0 and c.r_m > 0.0:
        for i, v in enumerate(x1):
            if not math.isfinite(v) or abs(v) > c.r_p * (1 + 1e-12):
                continue
            p1, p2 = boundary_point(min(abs(v), c.r_p), c)
            resid = abs((p1 / c.r_p) ** 2 + (p2 / c.r_m) ** 2 - 1.0)
            if resid > 1e-12:
                out.append(Violation("boundary", f"atom {i} is {resid!r} off the boundary", resid, i))
    elif c.r_p == 0.0 and np.any(x1 != 0.0):
        out.append(Violation("range", "r_p = 0 admits only x1 = 0"))
    return ValidationReport(tuple(out))


def merge_atoms(d: SymmetricBoundaryDistribution, tol: float = MERGE_TOL) -> SymmetricBoundaryDistribution:
    """Merge atoms closer than ``tol * r_p``; positions mass-weighted, clamped to ``[0, r_p]``.

    Atoms whose merged position lies within ``tol * r_p`` of an end of the
    quarter arc are snapped onto that end.
    """
    c = d.constraint
    if not d.atoms:
        return d
    order = np.argsort(d.x1, kind="stable")
    x1, mass = d.x1[order], d.mass[order]
    width = tol * c.r_p
    groups = [[0]]
    for i in range(1, len(x1)):
        if x1[i] - x1[groups[-1][-1]] < width:
            groups[-1].append(i)
        else:
            groups.append([i])
    new_x, new_m = [], []
    for g in groups:
        m = math.fsum(mass[g])
        v = float(np.dot(x1[g], mass[g]) / m) if m > 0 else float(x1[g[0]])
        v = min(max(v, 0.0), c.r_p)
        if c.r_p - v < width:
            v = c.r_p
        elif v < width:
            v = 0.0
        new_x.append(v)
        new_m.append(m)
    # snapping can make neighbours coincide; merge those too
    if len(new_x) > 1 and np.any(np.diff(new_x) < width):
        return merge_atoms(SymmetricBoundaryDistribution.from_arrays(c, new_x, new_m), tol)
    return SymmetricBoundaryDistribution.from_arrays(c, new_x, new_m)
