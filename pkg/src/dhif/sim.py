"""Monte Carlo engine and the evaluation statistics (RMSE, NEES, 3-sigma bounds)."""

from dataclasses import dataclass, field
import hashlib

import numpy as np
from scipy import stats

from dhif.errors import DhifError, FilterFault, InvalidInputError
from dhif.filters import AgentBelief, Algorithm, FilterConfig, run_filter_step
from dhif.model import measure, propagate_state


class IncompleteDataError(DhifError):
    pass


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to reproduce one experiment.

    ``initial_beliefs`` is an optional per-agent list of ``(mean, info)``
    pairs; the default is a zero mean with zero information.
    """

    process: object
    sensors: tuple
    graph: object
    horizon: int
    trials: int = 1
    seed: int = 0
    algorithms: tuple = ()
    initial_state: np.ndarray = None
    initial_beliefs: tuple = None
    name: str = "custom"
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.process.n
        object.__setattr__(self, "sensors", tuple(self.sensors))
        object.__setattr__(self, "algorithms", tuple(FilterConfig(**a) if isinstance(a, dict) else a
                                                     for a in self.algorithms))
        if len(self.sensors) != self.graph.N:
            raise InvalidInputError(f"{len(self.sensors)} sensors for {self.graph.N} agents")
        if any(s.n != n for s in self.sensors):
            raise InvalidInputError("sensor state dimension disagrees with the process")
        if self.horizon < 1 or self.trials < 1:
            raise InvalidInputError("horizon and trials must be at least 1")
        x0 = np.zeros(n) if self.initial_state is None else np.asarray(self.initial_state, float)
        if x0.shape != (n,):
            raise InvalidInputError(f"initial state must have shape ({n},)")
        object.__setattr__(self, "initial_state", x0)
        if self.initial_beliefs is not None:
            ib = tuple((np.asarray(m, float), np.asarray(P, float)) for m, P in self.initial_beliefs)
            if len(ib) != self.graph.N or any(m.shape != (n,) or P.shape != (n, n) for m, P in ib):
                raise InvalidInputError("initial beliefs need one (mean, info) pair per agent")
            object.__setattr__(self, "initial_beliefs", ib)
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise InvalidInputError(f"duplicate algorithm entries: {names}")
        for a in self.algorithms:
            a.resolved(self.graph)

    def replace(self, **changes):
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return Scenario(**kw)


@dataclass(eq=False)
class AlgorithmRecord:
    """Per-algorithm results of a batch of trials.

    ``errors`` is ``(T, K, N, n)``. Covariances do not depend on the realized
    noise, so ``info`` and ``cov`` are ``(K, N, n, n)`` and shared by all
    trials; ``cov`` is NaN where the information matrix is singular.
    """

    name: str
    config: dict
    errors: np.ndarray
    info: np.ndarray
    cov: np.ndarray
    weights: list = None

    @property
    def finite(self):
        return ~np.isnan(self.cov[..., 0, 0])

    @property
    def cov_trace(self):
        tr = np.trace(self.cov, axis1=-2, axis2=-1)
        return np.where(self.finite, tr, np.inf)

    @property
    def sigma(self):
        """Per-component standard deviations ``(K, N, n)``; ``inf`` where uninformed."""
        d = np.diagonal(self.cov, axis1=-2, axis2=-1)
        return np.where(self.finite[..., None], np.sqrt(np.abs(d)), np.inf)

    @property
    def nees(self):
        """``(T, K, N)`` normalized estimation error squared; NaN where uninformed."""
        q = np.einsum("tkni,knij,tknj->tkn", self.errors, self.info, self.errors)
        return np.where(self.finite[None], q, np.nan)


@dataclass(eq=False)
class MonteCarloResult:
    scenario: Scenario
    trial_indices: list
    truth: np.ndarray
    records: dict
    noise_checksums: list

    def __getitem__(self, name):
        return self.records[name]


def trial_rng(seed, trial_index):
    """Independent generator per (scenario seed, trial index)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial_index)]))


def simulate_truth(scenario, trial_index):
    """True path and measurements of one trial.

    Returns ``(x, z, checksum)`` with ``x`` of shape ``(K, n)`` and ``z`` a list
    holding ``(K, m_i)`` arrays for observing agents and ``None`` otherwise.
    """
    rng = trial_rng(scenario.seed, trial_index)
    K = scenario.horizon
    x = np.empty((K, scenario.process.n))
    z = [np.empty((K, s.H.shape[0])) if s.observing else None for s in scenario.sensors]
    state = scenario.initial_state.copy()
    for k in range(K):
        x[k] = state
        for i, s in enumerate(scenario.sensors):
            if z[i] is not None:
                z[i][k] = measure(s, state, rng)
        state = propagate_state(scenario.process, state, rng)
    h = hashlib.sha256(x.tobytes())
    for zi in z:
        if zi is not None:
            h.update(zi.tobytes())
    return x, z, h.hexdigest()


def _initial_beliefs(scenario, T, centralized):
    n = scenario.process.n
    if centralized:
        return [AgentBelief(np.zeros((T, n)), np.zeros((n, n)))]
    if scenario.initial_beliefs is None:
        return [AgentBelief(np.zeros((T, n)), np.zeros((n, n))) for _ in range(scenario.graph.N)]
    return [AgentBelief(np.broadcast_to(m, (T, n)).copy(), P) for m, P in scenario.initial_beliefs]


def _run_algorithm(scenario, cfg, truth, z, trial_indices):
    graph = scenario.graph
    T, K, n = truth.shape
    N = graph.N
    cfg = cfg.resolved(graph)
    centralized = cfg.algorithm is Algorithm.CKF
    beliefs = _initial_beliefs(scenario, T, centralized)
    errors = np.empty((T, K, N, n))
    info = np.empty((K, N, n, n))
    cov = np.full((K, N, n, n), np.nan)
    weights = [] if cfg.algorithm is Algorithm.DHIF else None
    for k in range(K):
        meas = [None if zi is None else zi[:, k] for zi in z]
        try:
            out = run_filter_step(cfg, beliefs, meas, graph, scenario.process, scenario.sensors)
        except (FloatingPointError, DhifError) as exc:
            raise FilterFault(
                f"{cfg.name} failed at step {k + 1}: {exc}",
                trial=trial_indices, step=k + 1, algorithm=cfg.name,
            ) from exc
        posts = out.posteriors * N if centralized else out.posteriors
        for i, p in enumerate(posts):
            errors[:, k, i] = p.mean - truth[:, k]
            info[k, i] = p.info
            if p.cov is not None:
                cov[k, i] = p.cov
        if weights is not None:
            weights.append(out.weights)
        beliefs = out.priors
    return AlgorithmRecord(cfg.name, cfg.describe(), errors, info, cov, weights)


def run_trials(scenario, trial_indices):
    """Simulate the listed trials and run every configured filter on them.

    All filters see the same realized states and measurements. Results for a
    given trial index do not depend on which other trials share the batch.
    """
    trial_indices = [int(t) for t in trial_indices]
    if not trial_indices:
        raise InvalidInputError("no trials requested")
    sims = [simulate_truth(scenario, t) for t in trial_indices]
    truth = np.stack([s[0] for s in sims])
    z = [
        None if sims[0][1][i] is None else np.stack([s[1][i] for s in sims])
        for i in range(scenario.graph.N)
    ]
    records = {}
    for cfg in scenario.algorithms:
        rec = _run_algorithm(scenario, cfg, truth, z, trial_indices)
        records[rec.name] = rec
    return MonteCarloResult(scenario, trial_indices, truth, records, [s[2] for s in sims])


def run_trial(scenario, trial_index):
    return run_trials(scenario, [trial_index])


def run_monte_carlo(scenario, trials=None):
    T = scenario.trials if trials is None else int(trials)
    return run_trials(scenario, range(T))


def _errors(record):
    return record.errors if isinstance(record, AlgorithmRecord) else np.asarray(record, float)


def compute_rmse(record, component):
    """Root mean squared error over trials and agents, per step: ``(K,)``."""
    e = _errors(record)[..., component]
    if np.isnan(e).any():
        raise IncompleteDataError("error table has missing cells")
    return np.sqrt(np.mean(e**2, axis=(0, 2)))


@dataclass(frozen=True, eq=False)
class NeesSeries:
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    excluded: np.ndarray
    trials: int


def chi2_band(trials, dim, level=0.95):
    """Two-sided acceptance band for the trial-averaged NEES."""
    dof = trials * dim
    a = (1.0 - level) / 2.0
    return stats.chi2.ppf(a, dof) / trials, stats.chi2.ppf(1.0 - a, dof) / trials


def compute_nees_statistic(record, agent, level=0.95):
    """Trial-averaged NEES per step with its chi-square band.

    Steps where the agent holds no finite covariance are excluded (mean NaN)
    and their trial count reported in ``excluded``.
    """
    q = record.nees[:, :, agent]
    T, K = q.shape
    n = record.errors.shape[-1]
    valid = ~np.isnan(q)
    counts = valid.sum(axis=0)
    mean = np.full(K, np.nan)
    lo = np.full(K, np.nan)
    hi = np.full(K, np.nan)
    for k in range(K):
        if counts[k]:
            mean[k] = q[valid[:, k], k].mean()
            lo[k], hi[k] = chi2_band(int(counts[k]), n, level)
    return NeesSeries(mean, lo, hi, T - counts, T)


def compute_3sigma_bounds(record, agent, component):
    """``(bound, abs_error)``: ``3 sqrt(P[c, c])`` per step and ``|error|`` per trial and step."""
    bound = 3.0 * record.sigma[:, agent, component]
    return bound, np.abs(record.errors[:, :, agent, component])


def sigma_violation_fraction(record, agent, steps=None):
    """Fraction of (trial, step, component) cells with ``|error| > 3 sigma``."""
    e = np.abs(record.errors[:, :, agent, :])
    b = 3.0 * record.sigma[None, :, agent, :]
    if steps is not None:
        e, b = e[:, steps], b[:, steps]
    return float(np.mean(e > b))
