import json
import os

import pytest

from edgex import cli
from edgex.errors import SchemaError
from edgex.experiment import ExperimentConfig, emit_report, run_experiment

BASE = {
    "intensity": {"kind": "rank1", "loops": False,
                  "weights": {"family": "geometric", "b": 2.0, "truncation_count": 30}},
    "mode": "presence_t",
    "schedule": [10, 100, 1000],
    "replicates": 3,
    "seed": 7,
    "checks": [{"name": "ratio_convergence", "threshold": 0.5},
               {"name": "vertex_variance_bound"},
               {"name": "graphon_distance", "graphon": "half_graphon", "threshold": 1.0}],
}


def _config(**over):
    d = json.loads(json.dumps(BASE))
    d.update(over)
    return d


def _write_config(tmp_path, d):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    return str(path)


def _read_tree(root):
    out = {}
    for name in sorted(os.listdir(root)):
        if name != "timing.json":
            with open(os.path.join(root, name), "rb") as fh:
                out[name] = fh.read()
    return out


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict(_config())
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("patch,path", [
    ({"schedule": []}, "schedule"),
    ({"schedule": [10, 5]}, "schedule"),
    ({"mode": "sometimes"}, "mode"),
    ({"replicates": 0}, "replicates"),
    ({"checks": [{"name": "astrology"}]}, "checks[0].name"),
    ({"schema_version": 99}, "schema_version"),
    ({"colour": "blue"}, "colour"),
    ({"intensity": {"kind": "band", "profile": "wiggly"}}, "intensity.profile"),
    ({"intensity": {"kind": "rank1"}}, "intensity.weights"),
])
def test_schema_errors_name_the_field(patch, path):
    with pytest.raises(SchemaError) as exc:
        ExperimentConfig.from_dict(_config(**patch))
    assert exc.value.path == path


def test_invalid_json_is_a_schema_error():
    with pytest.raises(SchemaError):
        ExperimentConfig.from_json("{not json")


def test_report_bundle_headers_and_determinism(tmp_path):
    cfg = ExperimentConfig.from_dict(_config())
    a, b = tmp_path / "a", tmp_path / "b"
    emit_report(run_experiment(cfg, threads=1), "csv-bundle", str(a))
    emit_report(run_experiment(ExperimentConfig.from_dict(_config()), threads=4), "csv-bundle", str(b))
    assert _read_tree(a) == _read_tree(b)
    rows = (a / "growth.csv").read_text().splitlines()
    assert rows[0] == "t,v_exp,v_obs_mean,v_obs_se,e_exp,e_obs_mean,e_obs_se"
    assert len(rows) == 4
    assert (a / "tail_0.csv").read_text().startswith("k,pi_ge_k,v_total\n")
    verdicts = json.loads((a / "verdicts.json").read_text())
    assert [v["check"] for v in verdicts] == ["ratio_convergence", "vertex_variance_bound", "graphon_distance"]
    assert all({"check", "params", "statistic", "threshold", "pass"} <= set(v) for v in verdicts)
    dist = json.loads((a / "distances.json").read_text())
    assert set(dist[0]) == {"pair", "alignment", "l1_bound", "cutnorm_lb", "dcut_upper"}


def test_json_report_excludes_timing(tmp_path):
    cfg = ExperimentConfig.from_dict(_config(checks=[]))
    emit_report(run_experiment(cfg), "json", str(tmp_path))
    rep = json.loads((tmp_path / "report.json").read_text())
    assert "wall_clock" not in rep and rep["seed"] == 7
    assert "wall_clock" in json.loads((tmp_path / "timing.json").read_text())


def test_seed_changes_samples():
    r1 = run_experiment(ExperimentConfig.from_dict(_config(checks=[])))
    r2 = run_experiment(ExperimentConfig.from_dict(_config(checks=[], seed=8)))
    assert r1.curves != r2.curves


def test_fixed_m_mode_runs():
    cfg = ExperimentConfig.from_dict(_config(mode="fixed_m", schedule=[10, 100], checks=[]))
    rep = run_experiment(cfg)
    assert rep.curves["growth"]["e_observed_mean"][-1] > 0
    with pytest.raises(SchemaError):
        ExperimentConfig.from_dict(_config(mode="fixed_m", schedule=[1.5, 3]))


def test_cli_sample_and_expect(tmp_path, capsys):
    path = _write_config(tmp_path, _config())
    out = tmp_path / "out"
    assert cli.main(["sample", "--config", path, "--out", str(out), "--at", "50"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["e"] > 0 and (out / "graph.tsv").exists()
    assert cli.main(["expect", "--config", path, "--out", str(out)]) == 0
    rows = (out / "expectations.csv").read_text().splitlines()
    assert rows[0] == "t,v_exp,e_exp,e_var,v_var_bound" and len(rows) == 4


def test_cli_limit(tmp_path):
    path = _write_config(tmp_path, _config())
    out = tmp_path / "lim"
    assert cli.main(["limit", "--config", path, "--out", str(out)]) == 0
    rep = json.loads((out / "distance.json").read_text())
    assert 0 <= rep["dcut_upper"] <= rep["l1_bound"] + 1e-12
    assert (out / "graphon.txt").read_text().startswith("# measures")


def test_cli_report_with_figures(tmp_path):
    path = _write_config(tmp_path, _config())
    out = tmp_path / "rep"
    assert cli.main(["report", "--config", path, "--out", str(out)]) == 0
    for name in ("growth.csv", "verdicts.json", "growth.png", "degree_tail.png", "timing.json"):
        assert (out / name).exists()


def test_cli_exit_codes(tmp_path, capsys):
    bad = _write_config(tmp_path, _config(schedule=[]))
    assert cli.main(["expect", "--config", bad, "--out", str(tmp_path)]) == 2
    assert "schedule" in capsys.readouterr().err
    assert cli.main(["verify", "--suite", "nonsense"]) == 2
    assert cli.main(["expect", "--config", str(tmp_path / "missing.json")]) == 1
