import json

import pytest

from ffdist.cli import ConfigParse, ExperimentConfig, main
from ffdist.embed import PointSet, count_cycles
from ffdist.forms import make_space, norm_form


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sphere_table_row(capsys):
    code, out, _ = run(capsys, "sphere-table", "--q", "3", "--d", "2", "--form", "quadratic:diag=1,1")
    assert code == 0
    row = [line.split() for line in out.splitlines() if line.split()[0] == "1"][0]
    assert row == ["1", "4", "3", "1", "3"]


def test_count_cycle(capsys):
    code, out, _ = run(capsys, "count", "--graph", "cycle:4", "--set", "full", "--q", "3", "--d", "2", "--label", "1")
    assert code == 0
    rec = json.loads(out)
    fn = norm_form(make_space(3, 1, 2))
    assert rec["raw"] == count_cycles(PointSet.full(fn.space), 4, 1, fn).raw == 324


def test_field_info(capsys):
    code, out, _ = run(capsys, "field-info", "--p", "3", "--k", "2")
    assert code == 0 and "GF(9)" in out and "[1, 0, 1]" in out


def test_minimal_verify_writes_reports(tmp_path, capsys):
    cfg = tmp_path / "exp.toml"
    cfg.write_text('fields = [3]\ndims = [2]\nforms = ["bilinear:dot"]\nsets = ["full"]\n'
                   'theorems = ["functional-distance"]\n')
    out = tmp_path / "out"
    code, text, _ = run(capsys, "verify", "--config", str(cfg), "--out", str(out))
    assert code == 0
    lines = (out / "report.jsonl").read_text().splitlines()
    header = json.loads(lines[0])
    assert header["schema"] == "ffdist-report/1"
    assert header["config"]["seeds"] == [0, 1, 2] and header["config"]["budget"] > 0
    assert len(lines) == 3
    assert (out / "report.csv").read_text().count("\n") == 3
    assert "records: 2" in (out / "summary.txt").read_text()


def test_singular_matrix_config_names_entry(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('fields = [3]\ndims = [2]\nforms = ["bilinear:dot", "bilinear:matrix=[[1,1],[1,1]]"]\n')
    code, _, err = run(capsys, "verify", "--config", str(cfg))
    assert code == 2
    assert "ConfigParse" in err and "forms[1]" in err


def test_config_round_trip():
    cfg = ExperimentConfig.from_preset("smoke")
    cfg.labels = [1, 2]
    cfg.out = "somewhere"
    again = ExperimentConfig.from_text(cfg.to_text())
    assert again == cfg
    with pytest.raises(ConfigParse):
        ExperimentConfig.from_text("colour = 3\n")


def test_verify_is_deterministic_and_replayable(tmp_path, capsys):
    runs = []
    for _ in range(2):
        code, _, _ = run(capsys, "verify", "--preset", "smoke", "--out", str(tmp_path), "--format", "jsonl")
        assert code == 0
        runs.append((tmp_path / "report.jsonl").read_bytes())
    ja, jb = runs
    assert ja == jb
    line = ja.decode().splitlines()[5]
    code, out, _ = run(capsys, "replay", line)
    assert code == 0
    assert json.loads(out)["replay"] == "identical"
    assert json.loads(out)["lhs"] == json.loads(line)["lhs"]


def test_replay_detects_tampering(capsys):
    rec = {"theorem_id": "sphere-size", "lhs": "999/1", "rhs": "3/1", "margin": "x", "hypothesis_satisfied": True,
           "witness": {"q": 3, "d": 2, "form": "quadratic:norm", "label": 1, "set": "full", "seed": 0,
                       "params": {}, "theorem": "sphere-size"}}
    code, out, _ = run(capsys, "replay", json.dumps(rec))
    assert code == 1 and "MISMATCH" in out
