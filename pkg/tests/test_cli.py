import csv
import json

import numpy as np
import pytest

from dhif.cli import main, resolve_scenario
from dhif.scenarios import ScenarioError, dump_scenario, load_scenario, scenario_from_dict


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def write_json(tmp_path, d, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


MINIMAL = {
    "process": {"generator": "integrator2d", "dt": 1.0},
    "agents": 1,
    "sensors": [{"agent": 1, "H": [[1, 0, 0, 0], [0, 1, 0, 0]], "R": [[1, 0], [0, 1]]}],
    "horizon": 3,
    "trials": 2,
}


def test_builtin_scenario_contents():
    s = load_scenario("paper-fig3")
    F = np.eye(4)
    F[0, 2] = F[1, 3] = 4.0
    np.testing.assert_array_equal(s.process.F, F)
    i2 = np.eye(2)
    Q = np.block([[5 * 64 * i2 / 3, 5 * 16 * i2 / 2], [5 * 16 * i2 / 2, 5 * 4 * i2]])
    np.testing.assert_allclose(s.process.Q, Q, rtol=1e-15)
    np.testing.assert_array_equal(s.process.B, np.eye(4))
    np.testing.assert_array_equal(s.sensors[0].H, np.eye(4)[:2])
    np.testing.assert_allclose(s.sensors[0].R_inv, np.eye(2) / 225.0)
    assert (s.trials, s.horizon, s.graph.N) == (500, 70, 10)
    icf = [a for a in s.algorithms if a.algorithm.value == "ICF"][0]
    assert icf.resolved(s.graph).epsilon == pytest.approx(0.325)


def test_minimal_file(tmp_path):
    s = load_scenario(write_json(tmp_path, MINIMAL))
    assert s.graph.N == 1 and s.sensors[0].observing and s.horizon == 3


def test_sensor_count_mismatch(tmp_path):
    bad = dict(MINIMAL, sensors=MINIMAL["sensors"] * 2)
    with pytest.raises(ScenarioError):
        load_scenario(write_json(tmp_path, bad))
    with pytest.raises(ScenarioError):
        scenario_from_dict(dict(MINIMAL, sensors=[dict(MINIMAL["sensors"][0], agent=2)]))


def test_malformed_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"agents": 1,\n  "process": }')
    with pytest.raises(ScenarioError, match=r":2:\d+"):
        load_scenario(str(p))


def test_round_trip_full_precision(tmp_path):
    s = load_scenario("paper-fig3")
    s = s.replace(initial_state=[np.pi, 1 / 3, 0.1, 1e-17])
    dump_scenario(s, tmp_path / "s.json")
    t = load_scenario(str(tmp_path / "s.json"))
    for attr in ("F", "B", "Q"):
        np.testing.assert_array_equal(getattr(t.process, attr), getattr(s.process, attr))
    for a, b in zip(s.sensors, t.sensors):
        np.testing.assert_array_equal(a.R_inv, b.R_inv)
    np.testing.assert_array_equal(t.initial_state, s.initial_state)
    assert t.graph.edges == s.graph.edges


def test_run_smoke(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", "--scenario", "paper-fig3", "--out", str(out), "--trials", "1", "--horizon", "1"])
    assert code == 0
    for f in ("rmse.csv", "per_agent.csv", "nees.csv", "manifest.json"):
        assert (out / f).is_file()
    r = rows(out / "rmse.csv")
    assert {(x["algorithm"], x["component"]) for x in r} == {(a, str(c)) for a in ("DHIF", "KLA", "ICF", "CKF")
                                                              for c in range(4)}
    assert all(x["k"] == "1" for x in r)


def test_run_full_shape_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["--scenario", "paper-fig3", "--trials", "20"]
    assert main(["run", "--out", str(a)] + args) == 0
    assert main(["run", "--out", str(b)] + args) == 0
    r = rows(a / "rmse.csv")
    for alg in ("DHIF", "KLA", "ICF", "CKF"):
        for c in range(4):
            assert sum(1 for x in r if x["algorithm"] == alg and x["component"] == str(c)) == 70
    for f in ("rmse.csv", "per_agent.csv", "nees.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    # rerun from the manifest reproduces the tables
    c = tmp_path / "c"
    assert main(["run", "--scenario", str(a / "manifest.json"), "--out", str(c)]) == 0
    for f in ("rmse.csv", "per_agent.csv", "nees.csv"):
        assert (a / f).read_bytes() == (c / f).read_bytes()


def test_manifest_records_settings(tmp_path):
    out = tmp_path / "o"
    main(["run", "--scenario", "paper-fig3", "--out", str(out), "--trials", "2", "--horizon", "3",
          "--seed", "5", "--algorithms", "DHIF,CKF", "--weight-mode", "fast"])
    m = json.loads((out / "manifest.json").read_text())
    assert (m["seed"], m["trials"], m["horizon"]) == (5, 2, 3)
    assert [a["algorithm"] for a in m["algorithms"]] == ["DHIF", "CKF"]
    assert m["algorithms"][0]["weight_mode"] == "fast"
    assert {x["algorithm"] for x in rows(out / "rmse.csv")} == {"DHIF-fast", "CKF"}


def test_per_agent_rows(tmp_path):
    out = tmp_path / "o"
    main(["run", "--scenario", "paper-fig3", "--out", str(out), "--trials", "3", "--horizon", "2",
          "--algorithms", "KLA", "--per-agent-trials", "0"])
    r = rows(out / "per_agent.csv")
    assert len(r) == 3 * 2 * 10 * 4
    assert {x["agent"] for x in r} == {str(i) for i in range(1, 11)}


def test_check_paper_scenario_passes(capsys):
    assert main(["check", "--scenario", "paper-fig3"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out


def test_check_unobservable_fails(tmp_path):
    d = dict(MINIMAL, agents=2, sensors=[{"agent": 1, "H": [[1, 0, 0, 0]], "R": [[1]]}])
    assert main(["check", "--scenario", write_json(tmp_path, d)]) == 1


def test_check_single_observable_agent(tmp_path):
    assert main(["check", "--scenario", write_json(tmp_path, MINIMAL)]) == 0


def test_invalid_override_is_validation_error(tmp_path, capsys):
    assert main(["run", "--scenario", "paper-fig3", "--out", str(tmp_path), "--trials", "0"]) == 1
    assert main(["run", "--scenario", "nope.json", "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_filter_fault_exit_code(tmp_path, capsys):
    # KCF cannot start from zero information
    d = dict(MINIMAL, algorithms=[{"algorithm": "KCF"}])
    assert main(["run", "--scenario", write_json(tmp_path, d), "--out", str(tmp_path / "o")]) == 2
    assert "KCF" in capsys.readouterr().err


def test_resolve_applies_overrides():
    s = resolve_scenario("paper-fig3", trials=3, seed=9, horizon=4, algorithms="ckf")
    assert (s.trials, s.seed, s.horizon) == (3, 9, 4)
    assert [a.name for a in s.algorithms] == ["CKF"]
