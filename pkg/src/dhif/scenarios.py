"""Scenario files and the built-in tracking scenario.

Scenario files are JSON. Agents are labelled ``1 .. N`` in files and
``0 .. N-1`` in memory. Example::

    {
      "name": "two-agents",
      "process": {"generator": "integrator2d", "dt": 4, "q": 5},
      "agents": 2,
      "edges": [[1, 2]],
      "sensors": [{"agent": 1, "H": [[1, 0, 0, 0], [0, 1, 0, 0]], "R": [[225, 0], [0, 225]]}],
      "horizon": 70, "trials": 10, "seed": 1,
      "algorithms": [{"algorithm": "DHIF"}, {"algorithm": "KLA"}]
    }

Agents missing from ``sensors`` do not observe the target. ``process`` may
instead give explicit ``F``, ``B``, ``Q`` matrices (row-major nested lists).
"""

import json
from pathlib import Path

import numpy as np

from dhif.errors import DhifError, InvalidInputError
from dhif.filters import FilterConfig
from dhif.model import NetworkGraph, ProcessModel, SensorModel
from dhif.sim import Scenario

PAPER_SCENARIO = "paper-fig3"

# Sender -> receiver, 1-based. Two source components, {1, 4, 5} (agent 1 sees
# both positions) and {2, 3, 8} (x from 2, y from 3), feed the rest of the
# network; no vertex reaches every other one, so there is no spanning tree.
PAPER_EDGES = (
    (1, 4), (4, 5), (5, 1),
    (2, 3), (3, 2), (3, 8), (8, 2),
    (3, 7), (7, 10), (8, 10),
    (5, 9), (9, 6), (10, 6),
)


class ScenarioError(InvalidInputError):
    pass


def paper_scenario(trials=500, horizon=70, seed=2016, algorithms=None):
    """Ten-agent planar tracking scenario with naive agents."""
    dt = 4.0
    process = ProcessModel.integrator2d(dt, q=5.0)
    hx = np.array([[1.0, 0, 0, 0]])
    hy = np.array([[0, 1.0, 0, 0]])
    sensors = [SensorModel.blind(4) for _ in range(10)]
    sensors[0] = SensorModel.from_noise_cov(np.vstack([hx, hy]), 225.0 * np.eye(2))
    sensors[1] = SensorModel.from_noise_cov(hx, [[225.0]])
    sensors[2] = SensorModel.from_noise_cov(hy, [[225.0]])
    sensors[6] = SensorModel.from_noise_cov(hy, [[225.0]])
    graph = NetworkGraph(10, frozenset((i - 1, j - 1) for i, j in PAPER_EDGES))
    if algorithms is None:
        algorithms = [FilterConfig(a) for a in ("DHIF", "KLA", "ICF", "CKF")]
    return Scenario(
        process=process,
        sensors=sensors,
        graph=graph,
        horizon=horizon,
        trials=trials,
        seed=seed,
        algorithms=algorithms,
        name=PAPER_SCENARIO,
        notes={"topology": "edges transcribed as sender->receiver, 1-based", "edges": [list(e) for e in PAPER_EDGES]},
    )


BUILTIN = {PAPER_SCENARIO: paper_scenario}


def _matrix(obj, key, where):
    if key not in obj:
        raise ScenarioError(f"{where}: missing '{key}'")
    try:
        a = np.array(obj[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}.{key}: not a numeric matrix ({exc})") from exc
    return np.atleast_2d(a) if a.ndim < 2 else a


def _process(proc):
    if "generator" in proc:
        if proc["generator"] != "integrator2d":
            raise ScenarioError(f"process: unknown generator {proc['generator']!r}")
        return ProcessModel.integrator2d(float(proc["dt"]), float(proc.get("q", 5.0)))
    return ProcessModel(_matrix(proc, "F", "process"), _matrix(proc, "B", "process"),
                        _matrix(proc, "Q", "process"))


def scenario_from_dict(d):
    try:
        process = _process(d["process"])
        N = int(d["agents"])
        n = process.n
        sensors = [SensorModel.blind(n) for _ in range(N)]
        entries = d.get("sensors", [])
        if len(entries) > N:
            raise ScenarioError(f"{len(entries)} sensor entries for {N} agents")
        for k, s in enumerate(entries):
            where = f"sensors[{k}]"
            a = int(s["agent"])
            if not 1 <= a <= N:
                raise ScenarioError(f"{where}: agent {a} outside 1..{N}")
            H = _matrix(s, "H", where)
            if "R_inv" in s:
                sensors[a - 1] = SensorModel(H, _matrix(s, "R_inv", where))
            else:
                sensors[a - 1] = SensorModel.from_noise_cov(H, _matrix(s, "R", where))
        graph = NetworkGraph(N, frozenset((int(i) - 1, int(j) - 1) for i, j in d.get("edges", [])))
        beliefs = None
        if "initial_beliefs" in d:
            beliefs = [(b["mean"], b["info"]) for b in d["initial_beliefs"]]
        return Scenario(
            process=process,
            sensors=sensors,
            graph=graph,
            horizon=int(d.get("horizon", 1)),
            trials=int(d.get("trials", 1)),
            seed=int(d.get("seed", 0)),
            algorithms=[FilterConfig(**a) for a in d.get("algorithms", [{"algorithm": "DHIF"}])],
            initial_state=d.get("initial_state"),
            initial_beliefs=beliefs,
            name=str(d.get("name", "custom")),
        )
    except KeyError as exc:
        raise ScenarioError(f"missing field {exc}") from exc
    except ScenarioError:
        raise
    except (DhifError, TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc


def scenario_to_dict(s):
    """Explicit, full-precision description of a scenario (inverse of :func:`scenario_from_dict`)."""
    out = {
        "name": s.name,
        "process": {"F": s.process.F.tolist(), "B": s.process.B.tolist(), "Q": s.process.Q.tolist()},
        "agents": s.graph.N,
        "edges": sorted([i + 1, j + 1] for i, j in s.graph.edges),
        "sensors": [
            {"agent": i + 1, "H": sen.H.tolist(), "R_inv": sen.R_inv.tolist()}
            for i, sen in enumerate(s.sensors)
            if sen.observing
        ],
        "horizon": s.horizon,
        "trials": s.trials,
        "seed": s.seed,
        "algorithms": [
            {k: v for k, v in (("algorithm", a.algorithm.value), ("weight_mode", a.weight_mode.value),
                               ("epsilon", a.epsilon), ("delta", a.delta), ("N_hint", a.N_hint),
                               ("lower_bound", a.lower_bound)) if v is not None}
            for a in s.algorithms
        ],
        "initial_state": s.initial_state.tolist(),
    }
    if s.initial_beliefs is not None:
        out["initial_beliefs"] = [{"mean": m.tolist(), "info": P.tolist()} for m, P in s.initial_beliefs]
    return out


def load_scenario(source):
    """Built-in scenario name or path to a JSON scenario file."""
    if isinstance(source, str) and source in BUILTIN:
        return BUILTIN[source]()
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {source}: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return scenario_from_dict(d)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def dump_scenario(s, path):
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1) + "\n")
