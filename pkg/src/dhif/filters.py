"""Per-step estimators over a sensor network.

Every filter is written in information form so that zero-information priors
(infinite covariance) are representable. Means may carry leading batch axes
(one row per Monte Carlo trial): covariances never depend on the data, so a
whole batch of trials shares one covariance recursion.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from dhif._linalg import COND_LIMIT, numerical_rank, spd_inv, sym
from dhif.errors import InvalidInputError, PreconditionError
from dhif.weights import WeightProblem, fast_ci_weights, optimize_ci_weights

DEFAULT_EPSILON_SCALE = 0.65


class Algorithm(str, enum.Enum):
    DHIF = "DHIF"
    KLA = "KLA"
    ICF = "ICF"
    KCF = "KCF"
    CKF = "CKF"


class WeightMode(str, enum.Enum):
    OPTIMAL = "optimal"
    FAST = "fast"
    UNIFORM = "uniform"


def _apply(A, x):
    """``A @ x`` over the last axis of ``x``; row results do not depend on batch size."""
    return np.einsum("ij,...j->...i", A, x, optimize=False)


@dataclass(frozen=True, eq=False)
class AgentBelief:
    """Mean and information matrix of one agent's estimate.

    ``info`` may be singular; ``cov`` is then ``None``.
    """

    mean: np.ndarray
    info: np.ndarray
    cov: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "info", sym(self.info))
        if self.cov is None:
            object.__setattr__(self, "cov", spd_inv(self.info))

    @classmethod
    def uninformed(cls, n, mean=None, batch=()):
        m = np.zeros(tuple(batch) + (n,)) if mean is None else np.broadcast_to(
            np.asarray(mean, dtype=float), tuple(batch) + (n,)).copy()
        return cls(m, np.zeros((n, n)))

    @classmethod
    def from_estimate(cls, mean, cov):
        cov = sym(cov)
        info = spd_inv(cov)
        if info is None:
            raise InvalidInputError("prior covariance must be positive definite")
        return cls(np.asarray(mean, dtype=float), info, cov)

    @property
    def finite(self):
        return self.cov is not None

    @property
    def info_vector(self):
        return _apply(self.info, self.mean)


@dataclass(frozen=True, eq=False)
class BroadcastMessage:
    """What an agent sends to its out-neighbors at one step."""

    S: np.ndarray
    y: np.ndarray
    Xi: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True)
class FilterConfig:
    """Algorithm choice and its tuning constants.

    ``epsilon`` defaults to ``0.65 / max_in_degree``, ``N_hint`` to the true
    network size, ``delta`` (KCF) to ``epsilon / (1 + tr(P))`` per agent.
    """

    algorithm: Algorithm
    weight_mode: WeightMode = WeightMode.OPTIMAL
    epsilon: float = None
    delta: float = None
    N_hint: int = None
    lower_bound: float = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))
        if self.delta is not None and not self.delta > 0:
            raise InvalidInputError("KCF delta must be positive")

    @property
    def name(self):
        if self.algorithm is Algorithm.DHIF and self.weight_mode is not WeightMode.OPTIMAL:
            return f"DHIF-{self.weight_mode.value}"
        return self.algorithm.value

    def resolved(self, graph):
        """Copy with every default filled in for ``graph``; validates ``epsilon``."""
        dmax = graph.max_in_degree
        eps = self.epsilon
        if eps is None:
            eps = DEFAULT_EPSILON_SCALE / max(dmax, 1)
        if self.algorithm in (Algorithm.ICF, Algorithm.KCF):
            if not (0.0 < eps and (dmax == 0 or eps < 1.0 / dmax)):
                raise InvalidInputError(f"epsilon {eps} outside (0, 1/{dmax})")
        n_hint = graph.N if self.N_hint is None else int(self.N_hint)
        return FilterConfig(self.algorithm, self.weight_mode, eps, self.delta, n_hint, self.lower_bound)

    def describe(self):
        return {
            "algorithm": self.algorithm.value,
            "weight_mode": self.weight_mode.value,
            "epsilon": self.epsilon,
            "delta": "epsilon/(1+tr(P_post))" if self.delta is None else self.delta,
            "N_hint": self.N_hint,
            "lower_bound": "1e-3/|J_i|" if self.lower_bound is None else self.lower_bound,
            "sigma_stencil": {
                Algorithm.KLA: "1/|J_i|",
                Algorithm.ICF: "sigma_ij=epsilon (j in N_i), sigma_ii=1-epsilon*Delta_i",
            }.get(self.algorithm),
        }


def make_message(belief, sensor, z=None):
    """Message of one agent: its measurement information and its prior information.

    ``z`` is ignored (and may be ``None``) for a non-observing sensor.
    """
    S = sensor.info_matrix
    if sensor.observing:
        if z is None:
            raise InvalidInputError("observing sensor needs a measurement")
        y = sensor.info_vector(z)
    else:
        y = np.zeros_like(belief.mean)
    return BroadcastMessage(S=S, y=y, Xi=belief.info, xi=belief.info_vector)


def solve_information(A, rhs, prior_mean):
    """Posterior mean from the information system ``A x = rhs``.

    A singular ``A`` is solved in the least-squares sense and the prior mean is
    kept along the null space, so directions without information stay inert.
    """
    A = sym(A)
    cov = spd_inv(A)
    if cov is not None:
        return AgentBelief(_apply(cov, rhs), A, cov)
    pinv = sym(np.linalg.pinv(A, rcond=1.0 / COND_LIMIT, hermitian=True))
    mean = prior_mean + _apply(pinv, rhs - _apply(A, prior_mean))
    return AgentBelief(mean, A, None)


def _check_finite(belief, where):
    if not (np.all(np.isfinite(belief.mean)) and np.all(np.isfinite(belief.info))):
        raise FloatingPointError(f"non-finite posterior at {where}")
    return belief


def dhif_update(beliefs, msgs, graph, weights):
    """Hybrid fusion: CI over neighbor priors, optimal fusion of all measurements.

    ``weights[i]`` is aligned with ``graph.inclusive(i)``.
    """
    out = []
    for i in range(graph.N):
        J = graph.inclusive(i)
        w = np.asarray(weights[i], dtype=float)
        if w.shape != (len(J),) or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"agent {i + 1}: weights must be positive and on the simplex")
        A = sum(msgs[j].S + wj * msgs[j].Xi for j, wj in zip(J, w))
        rhs = sum(msgs[j].y + wj * msgs[j].xi for j, wj in zip(J, w))
        out.append(_check_finite(solve_information(A, rhs, beliefs[i].mean), f"agent {i + 1}"))
    return out


def kla_update(beliefs, msgs, graph, sigma=None):
    """Consensus on densities after local fusion; ``sigma[i]`` aligned with ``J_i``."""
    out = []
    for i in range(graph.N):
        J = graph.inclusive(i)
        s = np.full(len(J), 1.0 / len(J)) if sigma is None else np.asarray(sigma[i], dtype=float)
        if s.shape != (len(J),) or np.any(s < 0) or abs(s.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"agent {i + 1}: sigma must be row-stochastic over J_i")
        A = sum(sj * (msgs[j].Xi + msgs[j].S) for j, sj in zip(J, s))
        rhs = sum(sj * (msgs[j].xi + msgs[j].y) for j, sj in zip(J, s))
        out.append(_check_finite(solve_information(A, rhs, beliefs[i].mean), f"agent {i + 1}"))
    return out


def icf_stencil(graph, i, epsilon):
    """Single-step consensus weights over ``J_i``."""
    J = graph.inclusive(i)
    return np.array([1.0 - epsilon * graph.in_degree(i) if j == i else epsilon for j in J])


def icf_update(beliefs, msgs, graph, cfg):
    """One consensus exchange of the information-consensus filter, measurement scaled by N."""
    cfg = cfg.resolved(graph)
    out = []
    for i in range(graph.N):
        J = graph.inclusive(i)
        s = icf_stencil(graph, i, cfg.epsilon)
        A = sum(sj * (msgs[j].Xi + cfg.N_hint * msgs[j].S) for j, sj in zip(J, s))
        rhs = sum(sj * (msgs[j].xi + cfg.N_hint * msgs[j].y) for j, sj in zip(J, s))
        out.append(_check_finite(solve_information(A, rhs, beliefs[i].mean), f"agent {i + 1}"))
    return out


def kcf_update(beliefs, msgs, graph, cfg):
    """Kalman-consensus update: local information filter plus an equal-weight consensus pull."""
    cfg = cfg.resolved(graph)
    out = []
    for i in range(graph.N):
        J = graph.inclusive(i)
        S_bar = sum(msgs[j].S for j in J)
        y_bar = sum(msgs[j].y for j in J)
        A = sym(beliefs[i].info + S_bar)
        P = spd_inv(A)
        if P is None:
            raise PreconditionError(f"KCF needs positive definite priors (agent {i + 1})")
        x = beliefs[i].mean
        delta = cfg.epsilon / (1.0 + np.trace(P)) if cfg.delta is None else cfg.delta
        pull = sum((beliefs[j].mean - x for j in graph.neighbors(i)), np.zeros_like(x))
        mean = x + _apply(P, y_bar - _apply(S_bar, x)) + delta * _apply(P, pull)
        out.append(_check_finite(AgentBelief(mean, A, P), f"agent {i + 1}"))
    return out


def ckf_update(belief, msgs):
    """Centralized information-form measurement update with every agent's measurement."""
    A = belief.info + sum(m.S for m in msgs)
    rhs = belief.info_vector + sum(m.y for m in msgs)
    return _check_finite(solve_information(A, rhs, belief.mean), "centralized filter")


def predict_covariance(P, model):
    return sym(model.F @ P @ model.F.T + model.process_cov)


def predict_information(info, model):
    """Information-form prediction; valid for singular (PSD) ``info``.

    ``M - M B (Q^-1 + B^T M B)^-1 B^T M`` with ``M = F^-T info F^-1``.
    """
    if numerical_rank(model.F) < model.n:
        raise PreconditionError("information-form prediction needs a nonsingular F")
    F_inv = np.linalg.inv(model.F)
    M = sym(F_inv.T @ info @ F_inv)
    Q_inv = np.linalg.inv(model.Q)
    MB = M @ model.B
    inner = sym(Q_inv + model.B.T @ MB)
    return sym(M - MB @ np.linalg.solve(inner, MB.T))


def dhif_predict(posterior, model):
    """Time update shared by every filter: ``x <- F x``, ``P <- F P F^T + B Q B^T``."""
    mean = _apply(model.F, posterior.mean)
    if posterior.cov is not None:
        cov = predict_covariance(posterior.cov, model)
        return AgentBelief(mean, spd_inv(cov), cov)
    return AgentBelief(mean, predict_information(posterior.info, model))


def ckf_step(belief, msgs, model):
    """Centralized benchmark: update with all measurements, then predict."""
    post = ckf_update(belief, msgs)
    return dhif_predict(post, model), post


def select_weights(cfg, graph, msgs):
    """CI weights of every agent, aligned with ``graph.inclusive(i)``."""
    out = []
    for i in range(graph.N):
        J = graph.inclusive(i)
        if cfg.weight_mode is WeightMode.UNIFORM:
            out.append(np.full(len(J), 1.0 / len(J)))
            continue
        p = WeightProblem(tuple(msgs[j].Xi for j in J), cfg.lower_bound)
        solver = optimize_ci_weights if cfg.weight_mode is WeightMode.OPTIMAL else fast_ci_weights
        out.append(solver(p).weights)
    return out


@dataclass
class StepOutput:
    priors: list
    posteriors: list
    weights: list = None


def run_filter_step(cfg, beliefs, measurements, graph, model, sensors):
    """One time step of a filter across the network.

    Messages are built from the pre-step beliefs (a read-only snapshot), then
    every agent updates from that snapshot and predicts. ``measurements[i]``
    is ``None`` for a non-observing agent. For the centralized filter
    ``beliefs`` holds one entry.
    """
    cfg = cfg.resolved(graph)
    if cfg.algorithm is Algorithm.CKF:
        msgs = [
            make_message(beliefs[0], sensors[i], measurements[i]) for i in range(graph.N)
        ]
        prior, post = ckf_step(beliefs[0], msgs, model)
        return StepOutput([prior], [post])
    msgs = [make_message(beliefs[i], sensors[i], measurements[i]) for i in range(graph.N)]
    weights = None
    if cfg.algorithm is Algorithm.DHIF:
        weights = select_weights(cfg, graph, msgs)
        posts = dhif_update(beliefs, msgs, graph, weights)
    elif cfg.algorithm is Algorithm.KLA:
        posts = kla_update(beliefs, msgs, graph)
    elif cfg.algorithm is Algorithm.ICF:
        posts = icf_update(beliefs, msgs, graph, cfg)
    else:
        posts = kcf_update(beliefs, msgs, graph, cfg)
    priors = [dhif_predict(p, model) for p in posts]
    return StepOutput(priors, posts, weights)
