# Choosing covariance-intersection weights.
#
# The objective tr((sum w_j Xi_j)^-1) is convex on the simplex. The solver
# uses projected Newton steps and certifies the result with a Frank-Wolfe gap.
# A grid search serves as a slow cross-check.

import time

import numpy as np

from dhif.weights import (
    WeightProblem,
    brute_force_weights,
    ci_objective,
    fast_ci_weights,
    optimize_ci_weights,
)

rng = np.random.default_rng(1)


def random_info(n):
    A = rng.standard_normal((n, n))
    return np.linalg.inv(A @ A.T / n + 0.1 * np.eye(n))


infos = [random_info(4) for _ in range(3)]
p = WeightProblem(infos)

t = time.perf_counter()
opt = optimize_ci_weights(p)
print(f"optimizer   w={np.round(opt.weights, 4)}  f={opt.objective:.6f}  "
      f"({opt.iterations} iterations, {1e3 * (time.perf_counter() - t):.1f} ms)")

t = time.perf_counter()
grid = brute_force_weights(p, resolution=200)
print(f"grid 1/200  w={np.round(grid.weights, 4)}  f={grid.objective:.6f}  "
      f"({1e3 * (time.perf_counter() - t):.0f} ms)")

fast = fast_ci_weights(p)
print(f"fast rule   w={np.round(fast.weights, 4)}  f={fast.objective:.6f}")

uniform = np.full(3, 1 / 3)
print(f"uniform     f={ci_objective(infos, uniform):.6f}")

# A source with no information at all (a blind neighbor) ends up at the floor.
p2 = WeightProblem(infos[:2] + [np.zeros((4, 4))])
print("with a blind source:", np.round(optimize_ci_weights(p2).weights, 6))
