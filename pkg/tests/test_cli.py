import csv
import io
import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings

from soqnbo.cli import SWEEP_COLUMNS, main
from soqnbo.modelfile import ModelFileError, dump_model, load_model_file, model_to_dict, parse_model_dict
from soqnbo.rmfs import RmfsParams

from modelgen import models

EXAMPLE = resources.files("soqnbo") / "data" / "rmfs_example.json"
TOY = resources.files("soqnbo") / "data" / "single_node.json"


def run(argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], stdout=out)
    return code, out.getvalue()


def values(text):
    d = {}
    for line in text.splitlines():
        if ": " in line:
            k, v = line.split(": ", 1)
            d[k] = v
    return d


def with_resources(tmp_path, n):
    doc = json.loads(EXAMPLE.read_text())
    doc["resources"] = n
    path = tmp_path / f"rmfs_{n}.json"
    path.write_text(json.dumps(doc))
    return path


def test_stability_exit_codes(tmp_path):
    assert run(["stability", EXAMPLE])[0] == 0
    code, text = run(["stability", with_resources(tmp_path, 17)])
    assert code == 3 and values(text)["verdict"] == "unstable"


def test_malformed_routing(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "schema": 1, "nodes": [{"id": "a", "rate": 2.0}],
        "routing": [[0, 1], [0.5, 0.4]], "resources": 1, "arrival_rate": 1.0}))
    assert run(["stability", path])[0] == 2
    assert "NonStochasticRow" in capsys.readouterr().err


def test_json_syntax_error_has_line(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": 1,\n  "nodes": [,]}')
    assert run(["analyze", path])[0] == 2
    assert "broken.json:2:" in capsys.readouterr().err


def test_analyze_example_idle():
    code, text = run(["analyze", EXAMPLE])
    v = values(text)
    assert code == 0
    assert float(v["idle_p1"]) == pytest.approx(0.35, abs=1e-12)
    assert float(v["idle_r"]) == pytest.approx(0.22, abs=1e-12)


def test_analyze_oracle_toy():
    code, text = run(["analyze", TOY, "--oracle"])
    assert code == 0
    assert float(values(text)["max_delta"]) < 1e-8


def test_simulate_needs_seed(capsys):
    assert run(["analyze", TOY, "--simulate"])[0] == 2
    assert run(["simulate", TOY])[0] == 2


def test_simulate_toy():
    code, text = run(["simulate", TOY, "--seed", "4", "--horizon", "2000", "--reps", "2"])
    assert code == 0
    assert values(text)["sim_conservation"] == "ok"


def test_min_robots():
    code, text = run(["min-robots", EXAMPLE, "--to-max", "inf"])
    assert code == 0 and values(text)["minimal_robots"] == "18"
    code, text = run(["min-robots", EXAMPLE, "--to-max", "1e-9"])
    assert code == 4 and values(text)["minimal_robots"] == "no solution"


def test_min_robots_needs_rmfs_block():
    assert run(["min-robots", TOY])[0] == 2


def test_sweep_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["sweep", EXAMPLE, "--n-from", "17", "--n-to", "20", "--out", out])[0] == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.DictReader(io.StringIO(raw.decode("utf-8"))))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [r["N"] for r in rows] == ["17", "18", "19", "20"]
    assert rows[0]["lambda_lc"] == "" and rows[1]["idle_p1"] == "0.35"
    assert len(rows[2]["w_ex"].replace(".", "").lstrip("0").split("e")[0]) <= 12


def test_sweep_empty_range():
    code, text = run(["sweep", EXAMPLE, "--n-from", "5", "--n-to", "4"])
    assert code == 0 and text == ",".join(SWEEP_COLUMNS) + "\n"


def test_sweep_with_simulation_is_deterministic():
    argv = ["sweep", EXAMPLE, "--n-from", "30", "--n-to", "30", "--simulate", "--seed", "2", "--horizon", "1d", "--reps", "2"]
    a, b = run(argv), run(argv)
    assert a == b
    row = next(csv.DictReader(io.StringIO(a[1])))
    assert row["sim_w_ex"] != "" and row["sim_std"] != ""


@given(models(J_max=3, N_max=6))
@settings(max_examples=30, deadline=None)
def test_model_round_trip(model):
    doc = json.loads(json.dumps(model_to_dict(model)))
    back = parse_model_dict(doc).model
    assert back == model
    assert np.array_equal(back.routing, model.routing)


def test_round_trip_through_file(tmp_path):
    mf = load_model_file(EXAMPLE)
    path = tmp_path / "m.json"
    dump_model(mf.model, path, mf.rmfs)
    again = load_model_file(path)
    assert again.model == mf.model and again.rmfs == mf.rmfs == RmfsParams()


def test_sparse_routing_by_id():
    doc = {
        "schema": 1,
        "nodes": [{"id": "x", "rate": {"kind": "infinite-server", "base_rate": 1.0}, "discipline": "processor-sharing"},
                  {"id": "y", "rate": 3.0}],
        "routing": {"sparse": [["0", "x", 1.0], ["x", "y", 1.0], ["y", "0", 1.0]]},
        "resources": 2, "arrival_rate": 0.5,
    }
    m = parse_model_dict(doc).model
    assert m.routing[1, 2] == 1.0


@pytest.mark.parametrize("doc", [
    {"schema": 2},
    {"schema": 1, "extra": 1},
    {"schema": 1, "nodes": [{"id": "a"}]},
    {"schema": 1, "nodes": [{"id": "a", "rate": 1, "discipline": "lifo"}], "routing": [[0, 1], [1, 0]], "resources": 1, "arrival_rate": 1},
    {"schema": 1, "nodes": [{"id": "a", "rate": 1}], "routing": [[0, 1]], "resources": 1, "arrival_rate": 1},
    {"schema": 1, "nodes": [{"id": "a", "rate": 1}], "routing": {"sparse": [["0", "q", 1]]}, "resources": 1, "arrival_rate": 1},
    {"schema": 1, "rmfs": {"q_pp1": 0.9}},
])
def test_schema_errors(doc):
    with pytest.raises(ModelFileError):
        parse_model_dict(doc)
