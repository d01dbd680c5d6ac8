import os
import subprocess
import sys

import numpy as np
import pytest

from peakcap import _kernels
from peakcap.channel import EllipseConstraint
from peakcap.inputs import orbit_shares
from peakcap.quadrature import gauss_hermite_rule, tensor_nodes

pytestmark = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not importable")


def _problem(rng, n_atoms=5, order=24):
    c = EllipseConstraint(1.2, 0.7)
    x1 = np.sort(rng.uniform(0, 1.2, n_atoms))
    mu, share, owner = orbit_shares(x1, c)
    reps = np.column_stack([x1, 0.7 * np.sqrt(1 - (x1 / 1.2) ** 2)])
    z, omega = tensor_nodes(gauss_hermite_rule(order))
    w = rng.dirichlet(np.ones(n_atoms))
    logw = np.log(share * w[owner])
    return reps, z, omega, mu, logw, owner, share, w


def _both(fn):
    out = {}
    for b in ("numba", "numpy"):
        prev = _kernels.use_backend(b)
        try:
            r = fn()
        finally:
            _kernels.use_backend(prev)
        out[b] = r if isinstance(r, tuple) else (r,)
    return out["numba"], out["numpy"]


def test_backend_switch():
    prev = _kernels.use_backend("numpy")
    assert _kernels.backend() == "numpy"
    _kernels.use_backend(prev)
    with pytest.raises(ValueError):
        _kernels.use_backend("fortran")


def test_backends_agree(rng):
    reps, z, omega, mu, logw, owner, share, w = _problem(rng)
    y = rng.uniform(-6, 6, size=(200, 2))
    tensor, shift = _kernels.orbit_tensor(reps, z, mu, owner, share, w.size)
    calls = [
        lambda: _kernels.mixture_logpdf(y, mu, logw),
        lambda: _kernels.posterior(y, mu, logw),
        lambda: _kernels.shifted_stats(reps, z, omega, mu, logw),
        lambda: _kernels.shifted_info_density(reps, z, omega, mu, logw),
        lambda: _kernels.orbit_tensor(reps, z, mu, owner, share, w.size),
        lambda: _kernels.orbit_info_density(tensor, shift, omega, w),
    ]
    for fn in calls:
        a, b = _both(fn)
        for u, v in zip(a, b):
            np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-13)


_SCRIPT = """
import numpy as np
from peakcap.channel import EllipseConstraint
from peakcap.inputs import SymmetricBoundaryDistribution
from peakcap.output_stats import mutual_information
from peakcap.solver import _FixedSupport, _angle_grid
from peakcap.quadrature import gauss_hermite_rule
c = EllipseConstraint(1.2, 0.8)
d = SymmetricBoundaryDistribution.from_arrays(c, [0.0, 0.4, 1.2], [0.3, 0.2, 0.5])
fs = _FixedSupport(_angle_grid(c, 24), c, gauss_hermite_rule(24))
dens = fs.densities(np.full(24, 1 / 24))
print(repr(mutual_information(d)), dens.tobytes().hex())
"""


def test_thread_count_independence():
    outs = []
    for threads in ("1", "3"):
        env = dict(os.environ, NUMBA_NUM_THREADS="3", PEAKCAP_THREADS=threads, PEAKCAP_BACKEND="numba")
        proc = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
        outs.append(proc.stdout)
    assert outs[0] == outs[1]
