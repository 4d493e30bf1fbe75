# Naive agents and the Kalman consensus filter.
#
# The consensus filter needs every agent to start from a proper prior. Once
# that holds it runs, but its naive agents never receive measurement
# information from far away, so their error is much larger than under the
# hybrid filter.

import numpy as np

from dhif.errors import FilterFault
from dhif.filters import FilterConfig
from dhif.model import check_boundedness_condition, naive_set
from dhif.scenarios import paper_scenario
from dhif.sim import compute_rmse, run_monte_carlo

s = paper_scenario(trials=50, algorithms=[FilterConfig("DHIF"), FilterConfig("KCF")])
print("naive agents:", sorted(i + 1 for i in naive_set(s.graph, s.sensors, s.process.F)))
print("boundedness condition per agent:",
      [check_boundedness_condition(s.graph, s.sensors, s.process.F, i) for i in range(10)])

try:
    run_monte_carlo(s)
except FilterFault as exc:
    print("without priors:", exc)

n = s.process.n
prior = [(np.zeros(n), np.eye(n) / 1e4) for _ in range(10)]
r = run_monte_carlo(s.replace(initial_beliefs=prior))
steady = slice(29, 70)
for name, rec in r.records.items():
    per_agent = np.sqrt(np.mean(rec.errors[:, steady, :, 0] ** 2, axis=(0, 1)))
    print(f"{name:5s} x RMSE per agent:", np.round(per_agent, 1))
    print(f"{name:5s} network x RMSE:   {compute_rmse(rec, 0)[steady].mean():.1f}")
