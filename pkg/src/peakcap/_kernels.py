"""Hot numeric kernels: Gaussian-mixture log densities and their shifted
expectations.

Every kernel exists twice, as a numba ``@njit`` loop nest and as a
vectorized numpy routine.  The numba path is used when numba imports and
``PEAKCAP_BACKEND`` is not ``numpy``; :func:`use_backend` switches at
runtime (the benchmark and the backend-equivalence tests rely on it).

Conventions shared by all kernels:

* mixture components have means ``mu`` of shape ``(M, 2)`` and log weights
  ``logw`` of shape ``(M,)``; each component is a unit-covariance bivariate
  normal, so ``log phi2(v) = -|v|^2/2 - log(2 pi)``;
* shifted expectations take probe points ``x`` of shape ``(J, 2)`` and a
  2-D rule ``(z, omega)`` of shapes ``(Q, 2)`` and ``(Q,)`` and average over
  ``y = x_j + z_k``;
* covariance-like outputs are packed as ``(v11, v12, v22)``.

Loops over probes are parallel (``prange``) while every reduction inside a
probe runs sequentially, so results do not depend on the thread count.
"""

import os
import warnings

import numpy as np
from scipy.special import logsumexp

LOG_2PI = float(np.log(2.0 * np.pi))
# differential entropy of the bivariate standard normal, nats
ENTROPY_Z2 = 1.0 + LOG_2PI

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    # the default threading-layer probe tries TBB first and warns on old builds
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_backend = "numba" if HAVE_NUMBA else "numpy"
if os.environ.get("PEAKCAP_BACKEND", "").strip().lower() == "numpy":
    _backend = "numpy"

if HAVE_NUMBA and os.environ.get("PEAKCAP_THREADS"):
    numba.set_num_threads(
        max(1, min(int(os.environ["PEAKCAP_THREADS"]), numba.config.NUMBA_NUM_THREADS))
    )


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return _backend


def use_backend(name):
    """Select the kernel backend; returns the previous one."""
    global _backend
    name = name.lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    previous, _backend = _backend, name
    return previous


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _chunks(n_rows, n_cols, budget=1 << 18):
    step = max(1, budget // max(1, n_cols))
    for start in range(0, n_rows, step):
        yield slice(start, min(n_rows, start + step))


def _exponents_np(y, mu, logw):
    d1 = y[:, 0:1] - mu[None, :, 0]
    d2 = y[:, 1:2] - mu[None, :, 1]
    return logw[None, :] - 0.5 * (d1 * d1 + d2 * d2)


def _mixture_logpdf_np(y, mu, logw):
    out = np.empty(y.shape[0])
    for s in _chunks(y.shape[0], mu.shape[0]):
        out[s] = logsumexp(_exponents_np(y[s], mu, logw), axis=1) - LOG_2PI
    return out


def _posterior_np(y, mu, logw):
    n = y.shape[0]
    logf = np.empty(n)
    mean = np.empty((n, 2))
    cov = np.empty((n, 3))
    for s in _chunks(n, mu.shape[0]):
        e = _exponents_np(y[s], mu, logw)
        lse = logsumexp(e, axis=1)
        r = np.exp(e - lse[:, None])
        m1 = r @ mu[:, 0]
        m2 = r @ mu[:, 1]
        logf[s] = lse - LOG_2PI
        mean[s, 0] = m1
        mean[s, 1] = m2
        a = mu[None, :, 0] - m1[:, None]
        b = mu[None, :, 1] - m2[:, None]
        cov[s, 0] = np.einsum("pm,pm->p", r, a * a)
        cov[s, 1] = np.einsum("pm,pm->p", r, a * b)
        cov[s, 2] = np.einsum("pm,pm->p", r, b * b)
    return logf, mean, cov


def _shifted_stats_np(x, z, omega, mu, logw):
    J = x.shape[0]
    dens = np.empty(J)
    emean = np.empty((J, 2))
    evar = np.empty((J, 3))
    for j in range(J):
        logf, mean, cov = _posterior_np(x[j] + z, mu, logw)
        dens[j] = -omega @ logf - ENTROPY_Z2
        emean[j] = omega @ mean
        evar[j] = omega @ cov
    return dens, emean, evar


def _shifted_info_density_np(x, z, omega, mu, logw):
    J = x.shape[0]
    dens = np.empty(J)
    for j in range(J):
        dens[j] = -omega @ _mixture_logpdf_np(x[j] + z, mu, logw) - ENTROPY_Z2
    return dens


def _orbit_tensor_np(x, z, mu, owner, share, n_atoms):
    # E[j, k, i] * exp(c[j, k]) = sum over components m owned by atom i of
    # share_m * phi2(x_j + z_k - mu_m)
    J, Q = x.shape[0], z.shape[0]
    assign = np.zeros((mu.shape[0], n_atoms))
    assign[np.arange(mu.shape[0]), owner] = share
    tensor = np.empty((J, Q, n_atoms))
    shift = np.empty((J, Q))
    zero = np.zeros(mu.shape[0])
    for j in range(J):
        e = _exponents_np(x[j] + z, mu, zero)
        c = e.max(axis=1)
        tensor[j] = np.exp(e - c[:, None]) @ assign
        shift[j] = c - LOG_2PI
    return tensor, shift


def _orbit_info_density_np(tensor, shift, omega, w):
    f = tensor @ w
    return -((shift + np.log(f)) @ omega) - ENTROPY_Z2


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, fastmath=False)
    def _lse_row(y1, y2, mu, logw, buf):
        M = mu.shape[0]
        best = -np.inf
        for m in range(M):
            d1 = y1 - mu[m, 0]
            d2 = y2 - mu[m, 1]
            e = logw[m] - 0.5 * (d1 * d1 + d2 * d2)
            buf[m] = e
            if e > best:
                best = e
        acc = 0.0
        for m in range(M):
            acc += np.exp(buf[m] - best)
        return best + np.log(acc)

    @njit(cache=True, parallel=True)
    def _mixture_logpdf_nb(y, mu, logw):
        n = y.shape[0]
        out = np.empty(n)
        for p in prange(n):
            buf = np.empty(mu.shape[0])
            out[p] = _lse_row(y[p, 0], y[p, 1], mu, logw, buf) - LOG_2PI
        return out

    @njit(cache=True)
    def _posterior_row(y1, y2, mu, logw, buf, res):
        M = mu.shape[0]
        lse = _lse_row(y1, y2, mu, logw, buf)
        m1 = 0.0
        m2 = 0.0
        for m in range(M):
            r = np.exp(buf[m] - lse)
            buf[m] = r
            m1 += r * mu[m, 0]
            m2 += r * mu[m, 1]
        # centered second pass; E[X^2] - m^2 cancels when the posterior collapses
        s11 = 0.0
        s12 = 0.0
        s22 = 0.0
        for m in range(M):
            a = mu[m, 0] - m1
            b = mu[m, 1] - m2
            s11 += buf[m] * a * a
            s12 += buf[m] * a * b
            s22 += buf[m] * b * b
        res[0] = lse - LOG_2PI
        res[1] = m1
        res[2] = m2
        res[3] = s11
        res[4] = s12
        res[5] = s22

    @njit(cache=True, parallel=True)
    def _posterior_nb(y, mu, logw):
        n = y.shape[0]
        logf = np.empty(n)
        mean = np.empty((n, 2))
        cov = np.empty((n, 3))
        for p in prange(n):
            buf = np.empty(mu.shape[0])
            res = np.empty(6)
            _posterior_row(y[p, 0], y[p, 1], mu, logw, buf, res)
            logf[p] = res[0]
            mean[p, 0] = res[1]
            mean[p, 1] = res[2]
            cov[p, 0] = res[3]
            cov[p, 1] = res[4]
            cov[p, 2] = res[5]
        return logf, mean, cov

    @njit(cache=True, parallel=True)
    def _shifted_stats_nb(x, z, omega, mu, logw):
        J = x.shape[0]
        Q = z.shape[0]
        dens = np.empty(J)
        emean = np.empty((J, 2))
        evar = np.empty((J, 3))
        for j in prange(J):
            buf = np.empty(mu.shape[0])
            res = np.empty(6)
            acc = np.zeros(6)
            for k in range(Q):
                _posterior_row(x[j, 0] + z[k, 0], x[j, 1] + z[k, 1], mu, logw, buf, res)
                wk = omega[k]
                for t in range(6):
                    acc[t] += wk * res[t]
            dens[j] = -acc[0] - ENTROPY_Z2
            emean[j, 0] = acc[1]
            emean[j, 1] = acc[2]
            evar[j, 0] = acc[3]
            evar[j, 1] = acc[4]
            evar[j, 2] = acc[5]
        return dens, emean, evar

    @njit(cache=True, parallel=True)
    def _shifted_info_density_nb(x, z, omega, mu, logw):
        J = x.shape[0]
        Q = z.shape[0]
        dens = np.empty(J)
        for j in prange(J):
            buf = np.empty(mu.shape[0])
            acc = 0.0
            for k in range(Q):
                acc += omega[k] * _lse_row(x[j, 0] + z[k, 0], x[j, 1] + z[k, 1], mu, logw, buf)
            dens[j] = LOG_2PI - acc - ENTROPY_Z2
        return dens

    @njit(cache=True, parallel=True)
    def _orbit_tensor_nb(x, z, mu, owner, share, n_atoms):
        J = x.shape[0]
        Q = z.shape[0]
        M = mu.shape[0]
        tensor = np.zeros((J, Q, n_atoms))
        shift = np.empty((J, Q))
        for j in prange(J):
            buf = np.empty(M)
            for k in range(Q):
                y1 = x[j, 0] + z[k, 0]
                y2 = x[j, 1] + z[k, 1]
                best = -np.inf
                for m in range(M):
                    d1 = y1 - mu[m, 0]
                    d2 = y2 - mu[m, 1]
                    e = -0.5 * (d1 * d1 + d2 * d2)
                    buf[m] = e
                    if e > best:
                        best = e
                for m in range(M):
                    tensor[j, k, owner[m]] += share[m] * np.exp(buf[m] - best)
                shift[j, k] = best - LOG_2PI
        return tensor, shift

    # the mixture sum is the BA hot loop; fastmath lets it vectorize (the
    # order is still fixed per probe, so results stay thread-count independent)
    @njit(cache=True, parallel=True, fastmath=True)
    def _orbit_info_density_nb(tensor, shift, omega, w):
        J, Q, N = tensor.shape
        dens = np.empty(J)
        for j in prange(J):
            acc = 0.0
            for k in range(Q):
                f = 0.0
                for i in range(N):
                    f += tensor[j, k, i] * w[i]
                acc += omega[k] * (shift[j, k] + np.log(f))
            dens[j] = -acc - ENTROPY_Z2
        return dens


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def mixture_logpdf(y, mu, logw):
    """log f_Y at rows of ``y`` for the mixture ``(mu, logw)``."""
    y, mu, logw = _f64(y), _f64(mu), _f64(logw)
    if _backend == "numba":
        return _mixture_logpdf_nb(y, mu, logw)
    return _mixture_logpdf_np(y, mu, logw)


def posterior(y, mu, logw):
    """``(log f_Y, E[X|Y=y], Var(X|Y=y))`` at rows of ``y``."""
    y, mu, logw = _f64(y), _f64(mu), _f64(logw)
    if _backend == "numba":
        return _posterior_nb(y, mu, logw)
    return _posterior_np(y, mu, logw)


def shifted_stats(x, z, omega, mu, logw):
    """Information density and Z-averaged posterior moments at probes ``x``.

    Returns ``(D, E_Z[E[X|Y]], E_Z[Var(X|Y)])`` with ``Y = x_j + Z``.
    """
    args = tuple(_f64(a) for a in (x, z, omega, mu, logw))
    if _backend == "numba":
        return _shifted_stats_nb(*args)
    return _shifted_stats_np(*args)


def shifted_info_density(x, z, omega, mu, logw):
    """Information density ``-E[log f_Y(x_j + Z)] - h(Z)`` at probes ``x``."""
    args = tuple(_f64(a) for a in (x, z, omega, mu, logw))
    if _backend == "numba":
        return _shifted_info_density_nb(*args)
    return _shifted_info_density_np(*args)


def orbit_tensor(x, z, mu, owner, share, n_atoms):
    """Precompute per-atom kernel values for Blahut-Arimoto iterations.

    Component ``m`` belongs to atom ``owner[m]`` and carries the fraction
    ``share[m]`` of that atom's mass.  Returns ``(tensor, shift)`` such that
    ``f_Y(x_j + z_k) = exp(shift[j, k]) * tensor[j, k, :] @ w`` for atom
    masses ``w``.
    """
    x, z, mu, share = _f64(x), _f64(z), _f64(mu), _f64(share)
    owner = np.ascontiguousarray(owner, dtype=np.int64)
    if _backend == "numba":
        return _orbit_tensor_nb(x, z, mu, owner, share, int(n_atoms))
    return _orbit_tensor_np(x, z, mu, owner, share, int(n_atoms))


def orbit_info_density(tensor, shift, omega, w):
    """Information density of every probe for atom masses ``w``."""
    w = _f64(w)
    if _backend == "numba":
        return _orbit_info_density_nb(tensor, shift, _f64(omega), w)
    return _orbit_info_density_np(tensor, shift, _f64(omega), w)
