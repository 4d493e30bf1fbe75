"""Command-line front end: ``dhif run`` and ``dhif check``.

Exit codes: 0 success, 1 validation error (or failed check), 2 runtime fault.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

import dhif
from dhif.errors import DhifError, FilterFault, InvalidInputError
from dhif.filters import Algorithm, FilterConfig, WeightMode
from dhif.model import check_boundedness_condition, naive_set
from dhif.scenarios import load_scenario, scenario_from_dict, scenario_to_dict
from dhif.sim import compute_nees_statistic, compute_rmse, run_monte_carlo

EXIT_OK, EXIT_VALIDATION, EXIT_FAULT = 0, 1, 2


def fmt(x):
    return "%.17g" % x


def scenario_digest(scenario):
    blob = json.dumps(scenario_to_dict(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def resolve_scenario(source, trials=None, seed=None, horizon=None, algorithms=None, weight_mode=None):
    """Load a scenario (built-in name, scenario file or run manifest) and apply overrides."""
    if source.endswith(".json") and Path(source).is_file():
        d = json.loads(Path(source).read_text())
        s = scenario_from_dict(d["scenario"]) if "scenario" in d else load_scenario(source)
    else:
        s = load_scenario(source)
    changes = {}
    if trials is not None:
        changes["trials"] = trials
    if seed is not None:
        changes["seed"] = seed
    if horizon is not None:
        changes["horizon"] = horizon
    algs = list(s.algorithms)
    if algorithms:
        wanted = [Algorithm(a.strip().upper()) for a in algorithms.split(",") if a.strip()]
        by_alg = {a.algorithm: a for a in algs}
        algs = [by_alg.get(a, FilterConfig(a)) for a in wanted]
    if weight_mode is not None:
        algs = [
            FilterConfig(a.algorithm, WeightMode(weight_mode), a.epsilon, a.delta, a.N_hint, a.lower_bound)
            if a.algorithm is Algorithm.DHIF else a
            for a in algs
        ]
    changes["algorithms"] = [a.resolved(s.graph) for a in algs]
    return s.replace(**changes)


def write_outputs(result, out_dir, per_agent_trials=1):
    """Write ``rmse.csv``, ``per_agent.csv`` and ``nees.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s = result.scenario
    n = s.process.n
    K = s.horizon
    with open(out / "rmse.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "algorithm", "component", "psi"])
        for name, rec in result.records.items():
            for c in range(n):
                psi = compute_rmse(rec, c)
                for k in range(K):
                    w.writerow([k + 1, name, c, fmt(psi[k])])
    T = len(result.trial_indices) if per_agent_trials in (0, None) else min(per_agent_trials, len(result.trial_indices))
    with open(out / "per_agent.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "k", "agent", "algorithm", "component", "abs_error", "sigma3"])
        for t in range(T):
            trial = result.trial_indices[t]
            for name, rec in result.records.items():
                err = np.abs(rec.errors[t])
                sig3 = 3.0 * rec.sigma
                for k in range(K):
                    for i in range(s.graph.N):
                        for c in range(n):
                            w.writerow([trial, k + 1, i + 1, name, c, fmt(err[k, i, c]), fmt(sig3[k, i, c])])
    with open(out / "nees.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "agent", "algorithm", "mean_nees", "chi2_lo", "chi2_hi", "excluded"])
        for name, rec in result.records.items():
            for i in range(s.graph.N):
                ns = compute_nees_statistic(rec, i)
                for k in range(K):
                    w.writerow([k + 1, i + 1, name, fmt(ns.mean[k]), fmt(ns.lower[k]), fmt(ns.upper[k]),
                                int(ns.excluded[k])])
    return T


def build_manifest(scenario, per_agent_trials, wall_clock):
    return {
        "tool": "dhif",
        "version": dhif.__version__,
        "scenario_name": scenario.name,
        "scenario_digest": scenario_digest(scenario),
        "seed": scenario.seed,
        "trials": scenario.trials,
        "horizon": scenario.horizon,
        "per_agent_trials": per_agent_trials,
        "trial_seeding": "numpy SeedSequence([seed, trial_index])",
        "initial_beliefs": "zero mean, zero information" if scenario.initial_beliefs is None else "scenario",
        "algorithms": [a.describe() for a in scenario.algorithms],
        "edges_1based": sorted([i + 1, j + 1] for i, j in scenario.graph.edges),
        "notes": scenario.notes,
        "wall_clock_seconds": wall_clock,
        "scenario": scenario_to_dict(scenario),
    }


def cmd_run(args):
    scenario = resolve_scenario(args.scenario, args.trials, args.seed, args.horizon,
                                args.algorithms, args.weight_mode)
    t0 = time.perf_counter()
    result = run_monte_carlo(scenario)
    out = Path(args.out)
    written = write_outputs(result, out, args.per_agent_trials)
    manifest = build_manifest(scenario, written, round(time.perf_counter() - t0, 3))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    print(f"wrote {out}/rmse.csv, per_agent.csv, nees.csv, manifest.json")
    return EXIT_OK


def check_report(scenario):
    F = scenario.process.F
    naive = naive_set(scenario.graph, scenario.sensors, F)
    verdicts = [check_boundedness_condition(scenario.graph, scenario.sensors, F, i)
                for i in range(scenario.graph.N)]
    return naive, verdicts


def cmd_check(args):
    scenario = resolve_scenario(args.scenario)
    naive, verdicts = check_report(scenario)
    print("agent  naive  bounded")
    for i, ok in enumerate(verdicts):
        print(f"{i + 1:5d}  {'yes' if i in naive else 'no':5s}  {'pass' if ok else 'FAIL'}")
    return EXIT_OK if all(verdicts) else EXIT_VALIDATION


def make_parser():
    p = argparse.ArgumentParser(prog="dhif", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a Monte Carlo experiment and write CSV tables")
    run.add_argument("--scenario", required=True, help="built-in name, scenario file or manifest.json")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--horizon", type=int)
    run.add_argument("--algorithms", help="comma-separated subset, e.g. DHIF,KLA")
    run.add_argument("--weight-mode", choices=[m.value for m in WeightMode])
    run.add_argument("--per-agent-trials", type=int, default=1,
                     help="trials written to per_agent.csv (0 = all)")
    run.set_defaults(func=cmd_run)
    chk = sub.add_parser("check", help="report naive agents and the boundedness condition")
    chk.add_argument("--scenario", required=True)
    chk.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except FilterFault as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except (InvalidInputError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DhifError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
