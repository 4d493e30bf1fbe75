"""Covariance-intersection weight selection.

The weights ``w_j`` of the fused information ``sum_j w_j Xi_j`` are chosen to
minimize ``tr((sum_j w_j Xi_j)^-1)`` over the simplex with a per-agent lower
bound. The objective is smooth and convex on that polytope, so it is solved
directly with a projected Newton method rather than through the equivalent
semidefinite program.
"""

from dataclasses import dataclass

import numpy as np

from dhif._linalg import is_well_conditioned, sym
from dhif.errors import InvalidInputError

DEFAULT_LOWER_BOUND_SCALE = 1e-3
GAP_RTOL = 1e-10
MAX_ITER = 200
MAX_BRUTE_SOURCES = 4


@dataclass(frozen=True, eq=False)
class WeightProblem:
    """Information matrices of the inclusive neighborhood and the weight floor.

    ``lower_bound`` defaults to ``1e-3 / len(infos)``.
    """

    infos: tuple
    lower_bound: float = None

    def __post_init__(self):
        infos = tuple(sym(np.atleast_2d(np.asarray(x, dtype=float))) for x in self.infos)
        if not infos:
            raise InvalidInputError("weight problem needs at least one information matrix")
        n = infos[0].shape[0]
        if any(x.shape != (n, n) for x in infos):
            raise InvalidInputError("information matrices must share one square shape")
        m = len(infos)
        lb = DEFAULT_LOWER_BOUND_SCALE / m if self.lower_bound is None else float(self.lower_bound)
        if m == 1:
            lb = min(lb, 1.0)
        elif not (0.0 < lb and lb * m < 1.0):
            raise InvalidInputError(f"lower bound {lb} infeasible for {m} sources")
        object.__setattr__(self, "infos", infos)
        object.__setattr__(self, "lower_bound", lb)

    @property
    def size(self):
        return len(self.infos)

    @property
    def stacked(self):
        return np.stack(self.infos)


@dataclass(frozen=True, eq=False)
class WeightResult:
    weights: np.ndarray
    objective: float
    degenerate: bool = False
    iterations: int = 0


def ci_objective(infos, weights):
    """``tr((sum_j w_j Xi_j)^-1)``, or ``inf`` when the weighted sum is singular."""
    S = np.tensordot(np.asarray(weights, dtype=float), np.asarray(infos), axes=1)
    if not is_well_conditioned(S):
        return np.inf
    return float(np.trace(np.linalg.inv(sym(S))))


def project_simplex(v):
    """Euclidean projection onto ``{x >= 0, sum x = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _uniform(m, infos):
    w = np.full(m, 1.0 / m)
    return WeightResult(w, ci_objective(infos, w), degenerate=True)


def _snap(lam, lb, m):
    w = lb + (1.0 - m * lb) * lam
    # pin the residual of the equality constraint on the largest weight
    w[np.argmax(w)] += 1.0 - w.sum()
    return w


def optimize_ci_weights(p):
    """Minimum-trace CI weights for one agent's inclusive neighborhood.

    Falls back to uniform weights, flagged ``degenerate``, when the summed
    information is singular (no feasible weighting gives a finite objective).
    """
    X = p.stacked
    m = p.size
    if m == 1:
        w = np.ones(1)
        return WeightResult(w, ci_objective(X, w))
    if not is_well_conditioned(X.sum(axis=0)):
        return _uniform(m, X)

    lb = p.lower_bound
    scale = 1.0 - m * lb
    base = lb * X.sum(axis=0)

    def evaluate(lam):
        S_inv = np.linalg.inv(sym(base + scale * np.tensordot(lam, X, axes=1)))
        A = np.einsum("ab,jbc->jac", S_inv, X)  # S^-1 Xi_j
        f = np.trace(S_inv)
        g = -scale * np.einsum("jab,ba->j", A, S_inv)
        return f, g, S_inv, A

    def value(lam):
        S = sym(base + scale * np.tensordot(lam, X, axes=1))
        return float(np.trace(np.linalg.inv(S)))

    lam = np.full(m, 1.0 / m)
    it = 0
    for it in range(1, MAX_ITER + 1):
        f, g, S_inv, A = evaluate(lam)
        gap = float(lam @ g - g.min())
        if gap <= GAP_RTOL * f:
            break
        free = (lam > 1e-15) | (g <= g.min() + 1e-15 * abs(g.min()))
        idx = np.nonzero(free)[0]
        # Hessian of tr(S^-1): 2 tr(S^-1 Xi_a S^-1 Xi_b S^-1)
        AS = np.einsum("jab,bc->jac", A, S_inv)
        H = 2.0 * scale**2 * np.einsum("aij,bji->ab", A[idx], AS[idx])
        k = idx.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = H
        kkt[:k, k] = kkt[k, :k] = 1.0
        rhs = np.concatenate([-g[idx], [0.0]])
        try:
            step = np.linalg.solve(kkt, rhs)[:k]
        except np.linalg.LinAlgError:
            step = -(g[idx] - g[idx].mean())
        d = np.zeros(m)
        d[idx] = step
        if d @ g >= 0.0:
            d = -(g - g.mean())
        lam_new = None
        t = 1.0
        while t > 1e-12:
            cand = project_simplex(lam + t * d)
            if value(cand) <= f + 1e-4 * (g @ (cand - lam)):
                lam_new = cand
                break
            t *= 0.5
        if lam_new is None:
            # projected gradient fallback with its own backtracking
            t = 1.0 / max(np.abs(g).max(), 1e-300)
            while t > 1e-16:
                cand = project_simplex(lam - t * g)
                if value(cand) <= f - 0.5 / t * float((cand - lam) @ (cand - lam)):
                    lam_new = cand
                    break
                t *= 0.5
        if lam_new is None or np.array_equal(lam_new, lam):
            break
        lam = lam_new
    w = _snap(lam, lb, m)
    return WeightResult(w, ci_objective(X, w), iterations=it)


def _lattice(m, resolution):
    """All non-negative integer m-vectors summing to ``resolution``."""
    pts = np.arange(resolution + 1)[:, None]
    for _ in range(m - 2):
        tot = pts.sum(axis=1)
        reps = resolution - tot + 1
        head = np.repeat(pts, reps, axis=0)
        tail = np.concatenate([np.arange(r) for r in reps])[:, None]
        pts = np.hstack([head, tail])
    return np.hstack([pts, resolution - pts.sum(axis=1, keepdims=True)])


def brute_force_weights(p, resolution=200, chunk=200_000):
    """Best point of the lower-bounded simplex lattice with spacing ``1/resolution``.

    The lattice lives on the shifted simplex ``w = lb + (1 - m lb) k / resolution``
    so that weights sitting on the lower bound are representable exactly.
    """
    m = p.size
    if m > MAX_BRUTE_SOURCES:
        raise InvalidInputError(f"brute force supports at most {MAX_BRUTE_SOURCES} sources")
    X = p.stacked
    if m == 1:
        w = np.ones(1)
        return WeightResult(w, ci_objective(X, w))
    lb = p.lower_bound
    grid = lb + (1.0 - m * lb) * _lattice(m, resolution) / resolution
    best_f = np.inf
    best_w = None
    for start in range(0, len(grid), chunk):
        W = grid[start:start + chunk]
        S = np.einsum("kj,jab->kab", W, X)
        ev = np.linalg.eigvalsh(S)
        ok = ev[:, 0] > ev[:, -1] / 1e12
        f = np.full(len(W), np.inf)
        f[ok] = np.sum(1.0 / ev[ok], axis=1)
        i = int(np.argmin(f))
        if f[i] < best_f:
            best_f = float(f[i])
            best_w = W[i]
    if best_w is None:
        return _uniform(m, X)
    return WeightResult(best_w, best_f)


def fast_ci_weights(p):
    """Closed-form heuristic: weights proportional to ``tr(Xi_j)``, clipped at the floor."""
    X = p.stacked
    m = p.size
    tr = np.trace(X, axis1=1, axis2=2)
    if m == 1:
        w = np.ones(1)
        return WeightResult(w, ci_objective(X, w))
    if tr.sum() <= 0.0:
        return _uniform(m, X)
    lb = p.lower_bound
    w = tr / tr.sum()
    pinned = np.zeros(m, dtype=bool)
    while np.any(w[~pinned] < lb):
        pinned |= w < lb
        rest = 1.0 - lb * pinned.sum()
        w = np.where(pinned, lb, tr * rest / tr[~pinned].sum())
    return WeightResult(w, ci_objective(X, w))
