import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakcap.channel import EllipseConstraint
from peakcap.errors import DomainError, InvalidDistributionError
from peakcap.inputs import (
    HalfAxisAtom,
    SymmetricBoundaryDistribution,
    boundary_point,
    expand_symmetric,
    merge_atoms,
    validate_distribution,
)

from conftest import random_distribution


def _as_set(atoms):
    return sorted((round(a.point[0], 14) + 0.0, round(a.point[1], 14) + 0.0, a.mass) for a in atoms)


def test_boundary_point_examples():
    c = EllipseConstraint(1.3, 0.7)
    assert boundary_point(1.3, c) == (1.3, 0.0)
    assert boundary_point(0.0, c) == (0.0, 0.7)
    p = boundary_point(1 / math.sqrt(2), EllipseConstraint(1.0, 1.0))
    assert p == pytest.approx((0.70711, 0.70711), abs=1e-5)


def test_boundary_point_clamp_and_reject():
    c = EllipseConstraint(1.0, 0.5)
    assert boundary_point(1.0 + 1e-15, c)[1] == 0.0
    with pytest.raises(DomainError):
        boundary_point(1.001, c)


def test_expand_examples():
    c = EllipseConstraint(1.0, 0.5)
    got = expand_symmetric(SymmetricBoundaryDistribution(c, (HalfAxisAtom(1.0, 1.0),)))
    assert _as_set(got) == [(-1.0, 0.0, 0.5), (1.0, 0.0, 0.5)]
    got = expand_symmetric(SymmetricBoundaryDistribution(c, (HalfAxisAtom(0.0, 1.0),)))
    assert _as_set(got) == [(0.0, -0.5, 0.5), (0.0, 0.5, 0.5)]
    got = expand_symmetric(SymmetricBoundaryDistribution(c, (HalfAxisAtom(0.6, 1.0),)))
    assert len(got) == 4
    for a in got:
        assert (abs(a.point[0]), abs(a.point[1])) == pytest.approx((0.6, 0.4), abs=1e-15)
        assert a.mass == 0.25


def test_expand_degenerate_minor_radius():
    c = EllipseConstraint(1.0, 0.0)
    got = expand_symmetric(SymmetricBoundaryDistribution.from_arrays(c, [0.0, 0.4, 1.0], [0.2, 0.3, 0.5]))
    assert _as_set(got) == [(-1.0, 0.0, 0.25), (-0.4, 0.0, 0.15), (0.0, 0.0, 0.2), (0.4, 0.0, 0.15), (1.0, 0.0, 0.25)]


@given(st.integers(0, 2**32 - 1))
def test_expansion_symmetry_and_mass(seed):
    d = random_distribution(np.random.default_rng(seed))
    atoms = expand_symmetric(d)
    # halving and quartering are exact in binary floating point
    assert math.fsum(a.mass for a in atoms) == math.fsum(d.mass)
    base = _as_set(atoms)
    for sx, sy in [(-1, 1), (1, -1)]:
        flipped = [type(a)((sx * a.point[0], sy * a.point[1]), a.mass) for a in atoms]
        assert _as_set(flipped) == base
    c = d.constraint
    for a in atoms:
        assert (a.point[0] / c.r_p) ** 2 + (a.point[1] / c.r_m) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_validation_examples():
    c = EllipseConstraint(1.0, 0.5)
    assert validate_distribution(SymmetricBoundaryDistribution.from_arrays(c, [0.3, 1.0], [0.4, 0.6])).ok
    rep = validate_distribution(SymmetricBoundaryDistribution.from_arrays(c, [0.3, 1.0], [0.4, 0.5]))
    assert rep.kinds() == ["mass_sum"]
    assert rep.violations[0].value == pytest.approx(0.1, abs=1e-15)
    rep = validate_distribution(SymmetricBoundaryDistribution(c, ((0.5, 0.5), (0.5 + 1e-9, 0.5))))
    assert rep.kinds() == ["separation"]


def test_validation_lists_everything():
    c = EllipseConstraint(1.0, 0.5)
    d = SymmetricBoundaryDistribution(c, ((0.7, 0.5), (0.2, -0.1), (1.5, 0.3)))
    kinds = set(validate_distribution(d).kinds())
    assert {"mass_sum", "mass_sign", "range", "ordering"} <= kinds
    assert validate_distribution(SymmetricBoundaryDistribution(c, ())).kinds() == ["empty"]
    with pytest.raises(InvalidDistributionError):
        d.validated()


def test_json_round_trip(rng):
    d = random_distribution(rng, n_atoms=4)
    back = SymmetricBoundaryDistribution.from_json(d.to_json())
    assert back == d
    assert set(d.to_dict()) == {"r_p", "r_m", "atoms"}
    with pytest.raises(InvalidDistributionError):
        SymmetricBoundaryDistribution.from_dict({"r_p": 1.0, "atoms": []})


def test_merge():
    c = EllipseConstraint(2.0, 1.0)
    d = SymmetricBoundaryDistribution(c, ((0.5, 0.25), (0.5 + 1e-7, 0.25), (2.0 - 1e-7, 0.5)))
    m = merge_atoms(d)
    assert m.x1.tolist() == pytest.approx([0.5 + 5e-8, 2.0], abs=1e-15)
    assert m.x1[-1] == 2.0
    assert m.mass.tolist() == [0.5, 0.5]
    assert validate_distribution(m).ok
    # already separated atoms are untouched
    d = SymmetricBoundaryDistribution.from_arrays(c, [0.0, 1.0, 2.0], [0.2, 0.3, 0.5])
    assert merge_atoms(d) == d
