"""Independent reference computations used only by the tests."""

import itertools

import numpy as np
import sympy


def exact_rank(M):
    """Rank of a matrix with small-integer or rational entries, in exact arithmetic."""
    return sympy.Matrix(np.asarray(M).tolist()).applyfunc(sympy.nsimplify).rank()


def observability_rank_exact(F, H):
    n = F.shape[0]
    blocks = [H @ np.linalg.matrix_power(F, k) for k in range(n)]
    return exact_rank(np.vstack(blocks))


def reachable_pairs(N, edges):
    """Transitive closure by repeated relaxation (Floyd-Warshall on booleans)."""
    R = np.eye(N, dtype=bool)
    for i, j in edges:
        R[i, j] = True
    for k in range(N):
        R |= R[:, [k]] & R[[k], :]
    return R


def scc_by_reachability(N, edges):
    R = reachable_pairs(N, edges)
    mutual = R & R.T
    comps = {frozenset(np.nonzero(mutual[i])[0].tolist()) for i in range(N)}
    return comps


def lagrangian_fusion(Cs, Rs, As):
    """Minimize sum tr(K_i R_i K_i^T) s.t. sum K_i C_i = I by solving the KKT system row by row."""
    C = np.vstack(Cs)
    m = C.shape[0]
    n = C.shape[1]
    R = np.zeros((m, m))
    off = 0
    for Ri in Rs:
        k = Ri.shape[0]
        R[off:off + k, off:off + k] = Ri
        off += k
    kkt = np.block([[2 * R, C], [C.T, np.zeros((n, n))]])
    K = np.empty((n, m))
    for r in range(n):
        rhs = np.concatenate([np.zeros(m), np.eye(n)[r]])
        K[r] = np.linalg.solve(kkt, rhs)[:m]
    a = np.concatenate(As)
    return K @ a, K @ R @ K.T, K


def psd_with_slack(bound, errors, nsigma=3.0):
    """Smallest standardized margin of ``bound - sample_cov`` over its eigen-directions.

    Along a fixed direction v the sample second moment has standard error
    ``sqrt(2/T) v^T S v`` for Gaussian errors; ``bound`` passes when every
    margin is at least ``-nsigma``.
    """
    errors = np.asarray(errors)
    T = errors.shape[0]
    S = errors.T @ errors / T
    D = bound - S
    w, V = np.linalg.eigh(0.5 * (D + D.T))
    worst = np.inf
    for v in V.T:
        se = np.sqrt(2.0 / T) * (v @ S @ v)
        worst = min(worst, (v @ D @ v) / max(se, 1e-300))
    return worst


def random_spd(rng, n, floor=0.1):
    A = rng.standard_normal((n, n))
    return A @ A.T / n + floor * np.eye(n)


def textbook_kf(F, B, Q, H, R, zs, x0, P0):
    """Covariance-form Kalman filter; returns the posterior (mean, cov) per step."""
    x, P = x0.copy(), P0.copy()
    out = []
    for z in zs:
        S = H @ P @ H.T + R
        K = P @ H.T @ np.linalg.inv(S)
        x = x + K @ (z - H @ x)
        P = (np.eye(len(x)) - K @ H) @ P
        out.append((x.copy(), P.copy()))
        x = F @ x
        P = F @ P @ F.T + B @ Q @ B.T
    return out


def simplex_grid_min(f, m, res):
    best = (np.inf, None)
    for c in itertools.product(range(res + 1), repeat=m - 1):
        if sum(c) <= res:
            w = np.array(list(c) + [res - sum(c)]) / res
            best = min(best, (f(w), tuple(w)))
    return best
