"""Modified Bessel function of the first kind, order zero."""

import math

import numpy as np

__all__ = ["i0", "log_i0", "SERIES_CUTOFF"]

SERIES_CUTOFF = 15.0


def _series(x):
    # sum_k (x^2/4)^k / (k!)^2; all terms positive so no cancellation
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    k = 0
    while True:
        k += 1
        term = term * q / (k * k)
        total = total + term
        if np.all(term <= 1e-17 * total) or k > 200:
            return total


def _asymptotic_scaled(x):
    # e^{-x} sqrt(2 pi x) I0(x) = sum_k ((2k-1)!!)^2 / (k! (8x)^k), truncated at
    # the smallest term; for x > 15 that term is below 5e-15
    term = np.ones_like(x)
    total = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 80):
        nxt = term * (2 * k - 1) ** 2 / (8.0 * x * k)
        active &= nxt < term
        if not np.any(active):
            break
        term = np.where(active, nxt, term)
        total = total + np.where(active, nxt, 0.0)
        active &= nxt > 1e-17 * total
    return total


def log_i0(x):
    """``log I0(x)``; finite for every finite ``x`` (no overflow)."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF
    if np.any(small):
        out[small] = np.log(_series(x[small]))
    big = ~small
    if np.any(big):
        xb = x[big]
        out[big] = xb - 0.5 * np.log(2.0 * math.pi * xb) + np.log(_asymptotic_scaled(xb))
    return out if out.ndim else float(out)


def i0(x):
    """``I0(x)`` by power series for ``|x| <= 15``, asymptotic expansion beyond."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF
    if np.any(small):
        out[small] = _series(x[small])
    big = ~small
    if np.any(big):
        xb = x[big]
        out[big] = np.exp(xb) / np.sqrt(2.0 * math.pi * xb) * _asymptotic_scaled(xb)
    return out if out.ndim else float(out)
