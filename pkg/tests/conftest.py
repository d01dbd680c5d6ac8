import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from peakcap.channel import EllipseConstraint
from peakcap.inputs import SymmetricBoundaryDistribution

DATA = Path(__file__).parent / "data"

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def load_table(name):
    return np.loadtxt(DATA / name, delimiter=",", skiprows=1)


def random_distribution(rng, r_p=None, r_m=None, n_atoms=None, r_max=np.sqrt(2.0)):
    """Random symmetric boundary distribution with r_m <= r_p <= r_max."""
    if r_p is None:
        r_p = rng.uniform(0.3, r_max)
    if r_m is None:
        r_m = rng.uniform(0.1, 1.0) * r_p
    if n_atoms is None:
        n_atoms = int(rng.integers(1, 6))
    c = EllipseConstraint(r_p, r_m)
    x1 = np.sort(rng.uniform(0.0, r_p, n_atoms))
    x1 = np.unique(np.round(x1, 6))
    mass = rng.dirichlet(np.ones(x1.size))
    mass[-1] = 1.0 - mass[:-1].sum()
    return SymmetricBoundaryDistribution.from_arrays(c, x1, mass)


def uniform_circle(r, n_points):
    """Uniform law on ``n_points`` equally spaced points of the circle (n_points divisible by 4)."""
    q = n_points // 4
    theta = np.arange(q + 1) * (0.5 * np.pi / q)
    x1 = r * np.cos(theta)
    x1[0], x1[-1] = r, 0.0
    mass = np.full(q + 1, 4.0 / n_points)
    mass[0] = mass[-1] = 2.0 / n_points
    return SymmetricBoundaryDistribution.from_arrays(EllipseConstraint(r, r), x1, mass)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
