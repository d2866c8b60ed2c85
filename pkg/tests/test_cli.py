import json

import pytest

from beamzone.cli import main


@pytest.fixture
def files(tmp_path):
    one = tmp_path / "one.json"
    one.write_text(json.dumps({"spans": [6.0], "permanent_udl": [10.0], "variable_udl": [0.0],
                               "sections": ["UKB 457x191x67"]}))
    three = tmp_path / "three.json"
    three.write_text(json.dumps({"spans": [5.0, 6.0, 4.0], "permanent_udl": [3.0] * 3,
                                 "variable_udl": [20.0, 30.0, 10.0]}))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    return tmp_path, one, three, bad


def _rows(text):
    return [line.split(",") for line in text.strip().splitlines()[1:]]


def test_analyze_single_span_midspan(files, capsys):
    _, one, _, _ = files
    assert main(["analyze", str(one), "--station", "5"]) == 0
    (row,) = _rows(capsys.readouterr().out)
    sw = 67.1 * 9.81 / 1000
    w = 1.35 * (10.0 + sw)
    assert float(row[2]) == pytest.approx(w * 36 / 8, rel=1e-3)
    assert abs(float(row[3])) < 1e-9


def test_analyze_zero_arrangement_still_loaded(files, capsys):
    _, one, _, _ = files
    assert main(["analyze", str(one), "--arrangement", "0"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 11
    assert max(float(r[2]) for r in rows) > 0


def test_exit_codes(files, tmp_path):
    _, one, three, bad = files
    assert main(["analyze", str(bad)]) == 2
    assert main(["analyze", str(three)]) == 2           # no sections
    assert main(["analyze", str(one), "--arrangement", "11"]) == 2
    assert main(["dataset", "--samples", "3", "--out", str(tmp_path / "x")]) == 2
    assert main(["stats", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "s")]) == 2
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"spans": [12.0, 12.0], "permanent_udl": [3.0, 3.0],
                               "variable_udl": [400.0, 400.0]}))
    assert main(["design", str(big), "--out", str(tmp_path / "d")]) == 4


def test_catalog_env(files, tmp_path, monkeypatch):
    _, _, three, _ = files
    monkeypatch.setenv("IZ_CATALOG", str(tmp_path / "none.csv"))
    assert main(["design", str(three), "--out", str(tmp_path / "d")]) == 2


def test_arrangements_counts(files, capsys):
    assert main(["arrangements", "--members", "5"]) == 0
    assert len(_rows(capsys.readouterr().out)) == 10
    assert main(["arrangements", "--members", "1"]) == 0
    assert [r[2] for r in _rows(capsys.readouterr().out)] == ["1", "0"]


def test_arrangements_two_shear_spans(tmp_path, capsys):
    p = tmp_path / "s.json"
    spans = [5.0, 2.0, 6.0, 5.0, 2.0, 7.0, 5.0, 6.0, 5.0, 4.0]
    p.write_text(json.dumps({"spans": spans, "permanent_udl": [3.0] * 10, "variable_udl": [0.0] * 10}))
    assert main(["arrangements", str(p)]) == 0
    n = len(_rows(capsys.readouterr().out))
    assert 20 < n <= 74


def test_design_outputs_and_manifest(files):
    tmp, _, three, _ = files
    out = tmp / "d"
    assert main(["design", str(three), "--out", str(out)]) == 0
    doc = json.loads((out / "design.json").read_text())
    assert len(doc["members"]) == 3
    man = json.loads((out / "manifest.json").read_text())
    assert man["outputs"] == ["design.json"]
    assert {"config_hash", "catalog_hash", "version", "started", "finished", "seed"} <= set(man)


def test_pipeline_deterministic(tmp_path, capsys):
    args = ["--set", "2", "--samples", "1x1", "--seed", "3", "--members", "6"]
    assert main(["dataset", *args, "--out", str(tmp_path / "ds")]) == 0
    assert main(["zone", str(tmp_path / "ds"), "--out", str(tmp_path / "z1")]) == 0
    assert main(["zone", *args, "--out", str(tmp_path / "z2"), "--checkpoint", str(tmp_path / "ck")]) == 0
    a = (tmp_path / "z1" / "zone_results.csv").read_bytes()
    assert a == (tmp_path / "z2" / "zone_results.csv").read_bytes()
    assert len(a.decode().strip().splitlines()) == 1 + 6 * 7

    assert main(["zone", str(tmp_path / "ds"), "--eps", "0.5", "--out", str(tmp_path / "z3")]) == 0
    assert len((tmp_path / "z3" / "zone_results.csv").read_text().strip().splitlines()) == 1 + 6

    m1 = json.loads((tmp_path / "z1" / "manifest.json").read_text())
    assert main(["zone", str(tmp_path / "ds"), "--out", str(tmp_path / "z1")]) == 0
    m2 = json.loads((tmp_path / "z1" / "manifest.json").read_text())
    for key in ("config_hash", "catalog_hash", "outputs"):
        assert m1[key] == m2[key]

    capsys.readouterr()
    assert main(["stats", f"s2={tmp_path / 'z1' / 'zone_results.csv'}", "--out", str(tmp_path / "st")]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0] == "eps_percent,mean_s2,max_s2"
    assert len(table) == 8
    assert (tmp_path / "st" / "histogram_s2_eps0.5.csv").exists()


def test_validate_summary(tmp_path, capsys):
    assert main(["validate", "--samples", "1x2", "--members", "5", "--out", str(tmp_path / "v")]) == 0
    out = capsys.readouterr().out
    assert "containment 100.0%" in out
    assert (tmp_path / "v" / "containment.csv").exists()
