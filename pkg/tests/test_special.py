import numpy as np
from scipy.special import i0e

from peakcap.special import SERIES_CUTOFF, i0, log_i0


def test_i0_against_scipy():
    x = np.concatenate([np.linspace(0.0, 40.0, 4001), [SERIES_CUTOFF - 1e-9, SERIES_CUTOFF + 1e-9]])
    ref = i0e(x) * np.exp(x)
    assert np.max(np.abs(i0(x) / ref - 1.0)) <= 1e-13


def test_log_i0_large_argument():
    x = np.geomspace(1e-3, 1e5, 200)
    ref = np.log(i0e(x)) + x
    assert np.all(np.isfinite(log_i0(x)))
    assert np.max(np.abs(log_i0(x) - ref) / np.maximum(1.0, np.abs(ref))) <= 1e-13


def test_i0_values():
    assert i0(np.array([0.0]))[0] == 1.0
    assert abs(float(log_i0(np.array([0.0]))[0])) == 0.0
