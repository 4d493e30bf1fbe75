# Fusing two estimates of the same quantity.
#
# When the two errors are independent the optimal fusion simply adds the
# information matrices. When the correlation is unknown, covariance
# intersection gives a bound that stays valid whatever the correlation is.

import numpy as np

from dhif.fusion import LinearSource, fuse_ci, fuse_uncorrelated
from dhif.weights import WeightProblem, optimize_ci_weights

np.set_printoptions(precision=3, suppress=True)

# Two sensors looking at a 2-D position. Each is precise along a different axis.
R1 = np.diag([1.0, 9.0])
R2 = np.diag([9.0, 1.0])
a1 = np.array([0.2, -1.0])
a2 = np.array([-0.4, 0.1])
s1 = LinearSource(np.eye(2), R1, a1)
s2 = LinearSource(np.eye(2), R2, a2)

ind = fuse_uncorrelated([s1, s2])
print("independent errors")
print("  mean", ind.mean)
print("  cov\n", ind.cov)

# Covariance intersection with the weights that minimize the trace of the
# fused covariance.
res = optimize_ci_weights(WeightProblem([np.linalg.inv(R1), np.linalg.inv(R2)]))
ci = fuse_ci([s1, s2], res.weights)
print("covariance intersection, weights", res.weights)
print("  mean", ci.mean)
print("  cov\n", ci.cov)

# CI is more cautious: its covariance dominates the independent one.
print("min eig(P_ci - P_ind) =", np.linalg.eigvalsh(ci.cov - ind.cov).min())

# Check the bound empirically with fully correlated errors.
rng = np.random.default_rng(0)
u = rng.standard_normal((20000, 2))
e1 = u @ np.sqrt(R1)
e2 = u @ np.sqrt(R2)
W1 = res.weights[0] * ci.cov @ np.linalg.inv(R1)
W2 = res.weights[1] * ci.cov @ np.linalg.inv(R2)
fused_err = e1 @ W1.T + e2 @ W2.T
print("sample cov of the fused error\n", np.cov(fused_err.T))
