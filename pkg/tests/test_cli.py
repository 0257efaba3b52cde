import csv
import json

import pytest

from yinyang.cli import EXIT_CONFIG, main


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--output-dir", str(out)])
    return code, out


def test_soliton_order_zero(tmp_path):
    code, out = run(tmp_path, "s", "soliton", "--theta-min", "50", "--theta-max", "60", "--step", "1",
                    "--order", "0")
    assert code == 0
    header, rows = read_csv(out / "table.csv")
    assert header.startswith("# yinyang soliton config_hash=")
    assert float(rows[0]["theta"]) == 50.0
    assert float(rows[0]["R"]) == pytest.approx(10.0, abs=1e-14)


def test_soliton_coefficients(tmp_path):
    code, out = run(tmp_path, "s", "soliton", "--theta-min", "10", "--theta-max", "20", "--order", "4")
    assert code == 0
    data = json.loads((out / "coeffs.json").read_text())
    assert data["c"][:3] == ["1", "0", "-1"]
    assert "meta" in data and data["meta"]["config_hash"] in (out / "table.csv").read_text().splitlines()[0]


def test_reruns_are_byte_identical(tmp_path):
    args = ["cap", "--t", "-50", "--nodes", "101"]
    _, a = run(tmp_path, "a", *args)
    _, b = run(tmp_path, "b", *args)
    for name in ("cap.csv", "cap_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_bad_config_exits_with_config_code(tmp_path, capsys):
    code, _ = run(tmp_path, "x", "cap", "--t", "-5")
    assert code == EXIT_CONFIG
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"cap": {"nonsense": 1}}))
    code, _ = run(tmp_path, "x", "cap", "--config", str(cfg))
    assert code == EXIT_CONFIG
    assert "invalid configuration" in capsys.readouterr().err


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"cap": {"t": -40.0, "nodes": 51}}))
    _, a = run(tmp_path, "a", "cap", "--config", str(cfg))
    _, b = run(tmp_path, "b", "cap", "--config", str(cfg), "--nodes", "61")
    meta_a = json.loads((a / "cap_summary.json").read_text())["meta"]
    meta_b = json.loads((b / "cap_summary.json").read_text())["meta"]
    assert meta_a["config"]["t"] == -40.0 and meta_a["config"]["nodes"] == 51
    assert meta_b["config"]["t"] == -40.0 and meta_b["config"]["nodes"] == 61
    assert meta_a["config_hash"] != meta_b["config_hash"]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    target = tmp_path / "env"
    monkeypatch.setenv("YINYANG_OUTPUT_DIR", str(target))
    code, _ = run(tmp_path, "ignored", "cap", "--t", "-50", "--nodes", "51")
    assert code == 0
    assert (target / "cap.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_deficit_fit(tmp_path):
    code, out = run(tmp_path, "d", "deficit", "--t-start", "-800", "--t-end", "-50", "--ratio", "1.5", "--fit")
    assert code == 0
    _, rows = read_csv(out / "deficit.csv")
    assert list(rows[0]) == ["t", "tau", "cap_sup", "cap_l1", "trans_l1", "total_l1"]
    slopes = json.loads((out / "slopes.json").read_text())
    assert slopes["fits"]["cap_sup"]["slope"] <= -1.8


def test_report_single_criterion(tmp_path):
    code, out = run(tmp_path, "r", "report", "--criteria", "1", "--strict")
    assert code == 0
    data = json.loads((out / "report.json").read_text())
    assert data["criteria"][0]["number"] == 1 and data["criteria"][0]["passed"]
    assert "criterion  1 " in (out / "report.txt").read_text()
