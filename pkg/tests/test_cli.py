import json
import math
from pathlib import Path

import numpy as np
import pytest

from offwhite import DensitySpec, classify
from offwhite.cli import emit_plot_data, run
from offwhite.report import dumps, write_json

SPECS = Path(__file__).resolve().parent.parent / "specs"


def _spec(tmp_path, d, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def test_validate_white(tmp_path, capsys):
    assert run(["validate", "--spec", _spec(tmp_path, {"family": "white"})]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True


def test_doubling_on_power(tmp_path):
    out = tmp_path / "r.json"
    code = run(["functional", "--which", "doubling", "--spec",
                _spec(tmp_path, {"family": "power", "alpha": 0.5}), "--out", str(out), "--csv",
                str(tmp_path / "ladder.csv")])
    r = json.loads(out.read_text())
    assert code == 0 and r["verdict"] == "Divergent" and r["probe"]["model"] == "log"
    assert (tmp_path / "ladder_ladder.csv").read_text().startswith("cutoff,value\n")


def test_tabulated_without_tail_exits_two(tmp_path):
    assert run(["classify", "--spec", str(SPECS / "tabulated_no_tail.json"), "--out",
                str(tmp_path / "v.json")]) == 2
    assert json.loads((tmp_path / "v.json").read_text())["outcome"] == "Inconclusive"


def test_classify_with_zeros(tmp_path, capsys):
    code = run(["classify", "--spec", str(SPECS / "lambda_squared.json"), "--zeros", str(math.pi)])
    assert code == 0 and json.loads(capsys.readouterr().out)["outcome"] == "OffWhite"


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run(["classify"]) == 1
    assert run(["nonsense"]) == 1
    assert run(["classify", "--spec", _spec(tmp_path, {"family": "white"}), "--tau-rel", "2"]) == 1
    cfg = tmp_path / "c.json"
    cfg.write_text('{"colour": 1}')
    assert run(["validate", "--spec", _spec(tmp_path, {"family": "white"}), "--config", str(cfg)]) == 1
    assert "unknown config keys" in capsys.readouterr().err


def test_config_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"ladder_steps": 12, "lambda0": 8}')
    assert run(["functional", "--which", "line-sobolev", "--spec", _spec(tmp_path, {"family": "power", "alpha": 0.5}),
                "--config", str(cfg)]) == 0
    r = json.loads(capsys.readouterr().out)
    assert r["probe"]["stages"][0]["cutoffs"][0] == pytest.approx(8.0) and len(r["probe"]["stages"][0]["cutoffs"]) == 12


def test_paf_and_shift(tmp_path, capsys):
    spec = _spec(tmp_path, {"family": "circle_direct", "phi": [0.0, 0.5]})
    assert run(["paf", "--spec", spec, "--K", "16,32,64", "--csv", str(tmp_path / "s.csv")]) == 0
    r = json.loads(capsys.readouterr().out)
    assert r["index"]["index"] == -1 and r["pole_shift"] == 1
    assert (tmp_path / "s_sweep.csv").read_text().startswith("K,sigma1,hs_sum\n")
    assert run(["shift-check", "--spec", spec, "--z0", "1.0,-1.0"]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True


def test_simulate(tmp_path):
    spec = _spec(tmp_path, {"family": "circle_direct", "phi": [0.0, 0.5]})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run(["simulate", "--spec", spec, "--paths", "400", "--block", "4", "--seed", "5",
                    "--null-reps", "20", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_report_bundle(tmp_path):
    d = tmp_path / "bundle"
    assert run(["report-bundle", "--spec", _spec(tmp_path, {"family": "explog", "alpha": 0.3}),
                "--out", str(d), "--K", "16,32,64"]) == 0
    names = {p.name for p in d.iterdir()}
    assert {"verdict.json", "validation.json", "line-sobolev.json", "doubling.json", "derivative.json",
            "cross_check.json", "cross_check_sweep.csv"} <= names
    assert json.loads((d / "cross_check.json").read_text())["consistent"] is True


def test_json_is_deterministic(tmp_path):
    v = classify(DensitySpec.explog(0.3))
    assert dumps(v) == dumps(classify(DensitySpec.explog(0.3)))
    write_json(tmp_path / "a.json", v)
    write_json(tmp_path / "b.json", v)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_special_floats():
    text = dumps({"a": math.nan, "b": math.inf, "c": 1.0, "d": np.float64(0.1)})
    assert json.loads(text) == {"a": "nan", "b": "inf", "c": 1.0, "d": 0.1}


def test_emit_plot_data_for_verdict(tmp_path):
    paths = emit_plot_data(classify(DensitySpec.power(0.5)), tmp_path, "v")
    assert paths and all(p.exists() for p in paths)
    with pytest.raises(TypeError):
        emit_plot_data(object(), tmp_path, "x")
