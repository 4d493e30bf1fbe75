"""Small symmetric-matrix helpers used across the package."""

import numpy as np
import scipy.linalg

COND_LIMIT = 1e12


def sym(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def is_well_conditioned(a, cond_limit=COND_LIMIT):
    """True when a symmetric PSD matrix is numerically positive definite."""
    w = np.linalg.eigvalsh(sym(a))
    if w[-1] <= 0.0 or not np.all(np.isfinite(w)):
        return False
    return w[0] > w[-1] / cond_limit


def spd_inv(a, cond_limit=COND_LIMIT):
    """Inverse of a symmetric positive definite matrix, symmetrized.

    Returns None when `a` is singular to within `cond_limit`, so callers can
    pick their own error type.
    """
    a = sym(a)
    if not is_well_conditioned(a, cond_limit):
        return None
    c, low = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    inv = scipy.linalg.cho_solve((c, low), np.eye(a.shape[0]), check_finite=False)
    return sym(inv)


def min_eig(a):
    return float(np.linalg.eigvalsh(sym(a))[0])


def is_psd(a, tol=1e-10):
    """PSD test with a tolerance relative to the matrix scale."""
    a = sym(a)
    scale = max(1.0, float(np.max(np.abs(a))))
    return min_eig(a) >= -tol * scale


def numerical_rank(a, rtol=1e-10):
    """Rank via singular values against ``rtol * n * sigma_max``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > s[0] * max(a.shape) * rtol))
