"""Monte Carlo estimate of ``I(X; X + Z)`` for symmetric boundary inputs.

Independent of the quadrature code: samples ``(X, Z)``, then averages the
log likelihood ratio ``log f(Y|X) - log f_Y(Y)``.  The ratio is formed
directly as ``-log sum_m w_m exp(|Y - X|^2/2 - |Y - mu_m|^2/2)`` so it
is exactly zero for a point mass.

Random numbers come from Philox, a counter-based generator.  Sample block
``b`` uses the key ``seed`` and a counter whose top word is ``b``, so every
sample's variates depend only on ``(seed, index)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp, ndtri

from .errors import DomainError, InvalidDistributionError
from .inputs import SymmetricBoundaryDistribution, expand_arrays, validate_distribution

__all__ = ["McEstimate", "mc_mutual_information", "uniform_block", "BLOCK", "MIN_SAMPLES"]

BLOCK = 1 << 16
MIN_SAMPLES = 1000
_CHUNK = 8192
_SEED_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    samples: int
    seed: int

    def to_dict(self):
        return asdict(self)


def uniform_block(seed: int, block: int, count: int) -> np.ndarray:
    """``count`` uniforms in the open interval (0, 1) for sample block ``block``."""
    bg = np.random.Philox(key=int(seed), counter=[0, 0, 0, int(block)])
    raw = bg.random_raw(int(count))
    # 53 high bits, offset by half an ulp so 0 and 1 never occur
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _log_ratio(x, y, mu, logw):
    out = np.empty(y.shape[0])
    for a in range(0, y.shape[0], _CHUNK):
        b = min(a + _CHUNK, y.shape[0])
        dy = y[a:b, None, :] - mu[None, :, :]
        dx = y[a:b] - x[a:b]
        e = logw[None, :] - 0.5 * np.sum(dy * dy, axis=2) + 0.5 * np.sum(dx * dx, axis=1)[:, None]
        out[a:b] = -logsumexp(e, axis=1)
    return out


def mc_mutual_information(d: SymmetricBoundaryDistribution, samples: int = 10**6, seed: int = 0) -> McEstimate:
    """Sample-mean estimate of the mutual information of ``d`` in nats.

    ``stderr`` is the sample standard deviation over ``sqrt(samples)``.
    The result is a deterministic function of ``(d, samples, seed)``.
    """
    if isinstance(samples, bool) or int(samples) != samples or samples < MIN_SAMPLES:
        raise DomainError(f"samples must be an integer >= {MIN_SAMPLES}, got {samples!r}")
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= _SEED_MAX:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    report = validate_distribution(d)
    if not report.ok:
        raise InvalidDistributionError(
            "invalid distribution: " + "; ".join(v.detail for v in report.violations), report.violations
        )
    samples, seed = int(samples), int(seed)
    mu, w, _ = expand_arrays(d)
    logw = np.log(w)
    cdf = np.cumsum(w)
    cdf[-1] = 1.0

    vals = np.empty(samples)
    for b, start in enumerate(range(0, samples, BLOCK)):
        n = min(BLOCK, samples - start)
        u = uniform_block(seed, b, 3 * n).reshape(n, 3)
        idx = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), w.size - 1)
        x = mu[idx]
        y = x + ndtri(u[:, 1:])
        vals[start:start + n] = _log_ratio(x, y, mu, logw)

    mean = math.fsum(vals) / samples
    var = math.fsum((vals - mean) ** 2) / (samples - 1)
    return McEstimate(mean, math.sqrt(var / samples), samples, seed)
