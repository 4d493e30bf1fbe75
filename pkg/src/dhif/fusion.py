"""Linear fusion of estimates: optimal (uncorrelated errors) and covariance intersection."""

from dataclasses import dataclass

import numpy as np

from dhif._linalg import spd_inv, sym
from dhif.errors import InfiniteUncertaintyError, InvalidInputError, NotIdentifiableError, PreconditionError

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Estimate:
    """A mean with its (approximated) error covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        n = mean.shape[-1]
        if cov.shape != (n, n):
            raise InvalidInputError(f"cov must be {n}x{n}, got {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", sym(cov))

    @property
    def n(self):
        return self.cov.shape[0]


@dataclass(frozen=True, eq=False)
class InformationPair:
    """Information matrix ``Xi = P^-1`` and vector ``xi = P^-1 x``.

    ``Xi`` may be singular (zero means no information at all).
    """

    Xi: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        Xi = np.atleast_2d(np.asarray(self.Xi, dtype=float))
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        n = Xi.shape[0]
        if Xi.shape != (n, n) or xi.shape[-1] != n:
            raise InvalidInputError(f"inconsistent shapes Xi {Xi.shape}, xi {xi.shape}")
        object.__setattr__(self, "Xi", sym(Xi))
        object.__setattr__(self, "xi", xi)

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, n)), np.zeros(n))


@dataclass(frozen=True, eq=False)
class LinearSource:
    """A measurement ``a`` of ``C alpha`` whose error covariance is bounded by ``R``."""

    C: np.ndarray
    R: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        m = C.shape[0]
        if R.shape != (m, m) or a.shape != (m,):
            raise InvalidInputError(
                f"source shapes disagree: C {C.shape}, R {R.shape}, a {a.shape}"
            )
        R_inv = spd_inv(R)
        if R_inv is None:
            raise InvalidInputError("source covariance must be positive definite")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "R", sym(R))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "_R_inv", R_inv)

    def info_matrix(self):
        return self.C.T @ self._R_inv @ self.C

    def info_vector(self):
        return self.C.T @ (self._R_inv @ self.a)


def _combine(sources, weights):
    if not sources:
        raise InvalidInputError("need at least one source")
    n = sources[0].C.shape[1]
    if any(s.C.shape[1] != n for s in sources):
        raise InvalidInputError("sources map to parameters of different dimension")
    info = np.zeros((n, n))
    vec = np.zeros(n)
    for w, s in zip(weights, sources):
        info += w * s.info_matrix()
        vec += w * s.info_vector()
    cov = spd_inv(info)
    if cov is None:
        raise NotIdentifiableError("summed information matrix is singular")
    return Estimate(cov @ vec, cov)


def fuse_uncorrelated(sources):
    """Minimum-trace unbiased fusion of sources with mutually uncorrelated errors."""
    return _combine(sources, [1.0] * len(sources))


def fuse_ci(sources, weights):
    """Covariance intersection: consistent for any cross-correlation between sources."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(sources),):
        raise InvalidInputError("one weight per source is required")
    if np.any(weights <= 0.0) or abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidInputError("CI weights must be positive and sum to one")
    return _combine(sources, weights)


def to_information(e):
    Xi = spd_inv(e.cov)
    if Xi is None:
        raise PreconditionError("covariance is singular")
    return InformationPair(Xi, Xi @ e.mean)


def from_information(p):
    cov = spd_inv(p.Xi)
    if cov is None:
        raise InfiniteUncertaintyError("information matrix is singular; keep the information form")
    return Estimate(cov @ p.xi, cov)
