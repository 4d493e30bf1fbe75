"""Process, sensing and communication models.

Agents are indexed ``0 .. N-1``. An edge ``(i, j)`` means agent ``j`` receives
from agent ``i``, so ``N_j`` (the in-neighborhood) is what the update
equations iterate over.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from dhif._linalg import is_well_conditioned, numerical_rank, sym
from dhif.errors import InvalidInputError, PreconditionError

RANK_RTOL = 1e-10


def _as_matrix(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2:
        raise InvalidInputError(f"{name} must be a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class ProcessModel:
    """Linear time-invariant process ``x[k+1] = F x[k] + B w[k]``, ``w ~ N(0, Q)``."""

    F: np.ndarray
    B: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        F = _as_matrix(self.F, "F")
        B = _as_matrix(self.B, "B")
        Q = _as_matrix(self.Q, "Q")
        n = F.shape[0]
        if F.shape != (n, n):
            raise InvalidInputError(f"F must be square, got {F.shape}")
        if B.shape[0] != n:
            raise InvalidInputError(f"B has {B.shape[0]} rows, expected {n}")
        p = B.shape[1]
        if Q.shape != (p, p):
            raise InvalidInputError(f"Q must be {p}x{p}, got {Q.shape}")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
            raise InvalidInputError("Q must be symmetric")
        if not is_well_conditioned(Q):
            raise InvalidInputError("Q must be positive definite")
        if numerical_rank(B, RANK_RTOL) < p:
            raise InvalidInputError("B must have full column rank")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", sym(Q))

    @property
    def n(self):
        return self.F.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    @property
    def process_cov(self):
        """``B Q B^T``, the covariance the state picks up per step."""
        return sym(self.B @ self.Q @ self.B.T)

    @classmethod
    def integrator2d(cls, dt, q=5.0):
        """Planar constant-velocity target, state ``(x, y, vx, vy)``.

        ``Q`` is the exact discretization of white acceleration noise with
        spectral density ``q``.
        """
        i2 = np.eye(2)
        z2 = np.zeros((2, 2))
        F = np.block([[i2, dt * i2], [z2, i2]])
        Q = np.block(
            [
                [q * dt**3 * i2 / 3, q * dt**2 * i2 / 2],
                [q * dt**2 * i2 / 2, q * dt * i2],
            ]
        )
        return cls(F=F, B=np.eye(4), Q=Q)


@dataclass(frozen=True, eq=False)
class SensorModel:
    """Local sensing model ``z = H x + v`` with noise information ``R_inv``.

    A sensor that does not see the target carries ``H = 0`` and ``R_inv = 0``.
    """

    H: np.ndarray
    R_inv: np.ndarray

    def __post_init__(self):
        H = _as_matrix(self.H, "H")
        R_inv = _as_matrix(self.R_inv, "R_inv")
        m = H.shape[0]
        if R_inv.shape != (m, m):
            raise InvalidInputError(f"R_inv must be {m}x{m}, got {R_inv.shape}")
        R_inv = sym(R_inv)
        w = np.linalg.eigvalsh(R_inv)
        if w[0] < -1e-12 * max(1.0, abs(w[-1])):
            raise InvalidInputError("R_inv must be positive semi-definite")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "R_inv", R_inv)

    @classmethod
    def from_noise_cov(cls, H, R):
        R = _as_matrix(R, "R")
        if not is_well_conditioned(R):
            raise InvalidInputError("R must be positive definite")
        return cls(H=H, R_inv=np.linalg.inv(sym(R)))

    @classmethod
    def blind(cls, n):
        """A sensor that does not observe the target."""
        return cls(H=np.zeros((1, n)), R_inv=np.zeros((1, 1)))

    @property
    def n(self):
        return self.H.shape[1]

    @property
    def observing(self):
        return bool(np.any(self.R_inv != 0.0)) and bool(np.any(self.H != 0.0))

    @property
    def info_matrix(self):
        """``H^T R^-1 H``."""
        return sym(self.H.T @ self.R_inv @ self.H)

    def info_vector(self, z):
        """``H^T R^-1 z``; ``z`` may carry leading batch axes."""
        G = self.H.T @ self.R_inv
        return np.einsum("ij,...j->...i", G, np.asarray(z, dtype=float), optimize=False)


@dataclass(frozen=True)
class NetworkGraph:
    """Directed communication topology over agents ``0 .. N-1``."""

    N: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.N < 1:
            raise InvalidInputError("graph needs at least one agent")
        edges = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if not (0 <= i < self.N and 0 <= j < self.N):
                raise InvalidInputError(f"edge ({i}, {j}) out of range for N={self.N}")
            if i != j:
                edges.add((i, j))
        object.__setattr__(self, "edges", frozenset(edges))
        preds = [[] for _ in range(self.N)]
        succs = [[] for _ in range(self.N)]
        for i, j in sorted(edges):
            preds[j].append(i)
            succs[i].append(j)
        object.__setattr__(self, "_preds", tuple(tuple(p) for p in preds))
        object.__setattr__(self, "_succs", tuple(tuple(s) for s in succs))

    @classmethod
    def complete(cls, N):
        return cls(N, frozenset((i, j) for i in range(N) for j in range(N) if i != j))

    @classmethod
    def ring(cls, N):
        return cls(N, frozenset((i, (i + 1) % N) for i in range(N)))

    def neighbors(self, i):
        """In-neighbors ``N_i``, ascending."""
        return self._preds[i]

    def successors(self, i):
        return self._succs[i]

    def inclusive(self, i):
        """Inclusive neighborhood ``J_i = N_i + {i}``, ascending."""
        return tuple(sorted(self._preds[i] + (i,)))

    def in_degree(self, i):
        return len(self._preds[i])

    @property
    def max_in_degree(self):
        return max(len(p) for p in self._preds)

    def with_edges(self, add=(), remove=()):
        return NetworkGraph(self.N, frozenset((set(self.edges) | set(add)) - set(remove)))

    def reachable_from(self, sources):
        """Vertices reachable from ``sources`` (sources included)."""
        seen = set(sources)
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for v in self._succs[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    def ancestors_of(self, targets):
        """Vertices with a directed path into ``targets`` (targets included)."""
        seen = set(targets)
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for v in self._preds[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


def _check_sensors(graph, sensors):
    if len(sensors) != graph.N:
        raise InvalidInputError(f"{len(sensors)} sensors for {graph.N} agents")


def propagate_state(model, x, rng):
    """One step of the process: ``F x + B w`` with ``w ~ N(0, Q)`` drawn from ``rng``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise InvalidInputError(f"state must have shape ({model.n},), got {x.shape}")
    w = np.linalg.cholesky(model.Q) @ rng.standard_normal(model.p)
    return model.F @ x + model.B @ w


def measure(sensor, x, rng):
    """Draw ``H x + v`` with ``v ~ N(0, R)``; only observing sensors can measure."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sensor.n,):
        raise InvalidInputError(f"state must have shape ({sensor.n},), got {x.shape}")
    if not is_well_conditioned(sensor.R_inv):
        raise PreconditionError("non-observing sensor cannot produce a measurement")
    R = sym(np.linalg.inv(sensor.R_inv))
    v = np.linalg.cholesky(R) @ rng.standard_normal(R.shape[0])
    return sensor.H @ x + v


def observability_matrix(F, H):
    F = _as_matrix(F, "F")
    H = _as_matrix(H, "H")
    n = F.shape[0]
    if F.shape != (n, n) or H.shape[1] != n:
        raise InvalidInputError(f"inconsistent shapes F {F.shape}, H {H.shape}")
    blocks = []
    M = H
    for _ in range(n):
        blocks.append(M)
        M = M @ F
    return np.vstack(blocks)


def is_observable(F, H_stack):
    """True iff ``(F, H_stack)`` is an observable pair."""
    O = observability_matrix(F, H_stack)
    return numerical_rank(O, RANK_RTOL) == O.shape[1]


def _stack(sensors, agents):
    return np.vstack([sensors[j].H for j in sorted(agents)])


def naive_set(graph, sensors, F):
    """Agents whose inclusive neighborhood cannot jointly observe the state."""
    _check_sensors(graph, sensors)
    return {
        i for i in range(graph.N) if not is_observable(F, _stack(sensors, graph.inclusive(i)))
    }


def strongly_connected_components(graph):
    """Maximal strongly connected vertex sets (Tarjan, iterative).

    Components come out in reverse topological order of the condensation.
    """
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comps = []
    counter = 0
    for root in range(graph.N):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, child = work.pop()
            if child == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            succ = graph.successors(v)
            if child < len(succ):
                work.append((v, child + 1))
                w = succ[child]
                if w not in index:
                    work.append((w, 0))
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
                continue
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                comps.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def check_boundedness_condition(graph, sensors, F, agent):
    """Sufficient condition for a bounded covariance at ``agent``.

    True iff some strongly connected component, alone or together with all of
    its ancestors, is jointly observable and has a directed path to ``agent``.
    """
    _check_sensors(graph, sensors)
    F = _as_matrix(F, "F")
    if F.shape[0] != F.shape[1] or numerical_rank(F, RANK_RTOL) < F.shape[0]:
        raise PreconditionError("state transition matrix must be nonsingular")
    if not 0 <= agent < graph.N:
        raise InvalidInputError(f"agent {agent} out of range")
    for comp in strongly_connected_components(graph):
        if agent not in graph.reachable_from(comp):
            continue
        if is_observable(F, _stack(sensors, comp)):
            return True
        if is_observable(F, _stack(sensors, graph.ancestors_of(comp))):
            return True
    return False
