import json

import pytest

from dasplit.cli import main


@pytest.fixture(scope="module")
def specs(tmp_path_factory):
    d = tmp_path_factory.mktemp("specs")
    assert main(["build", "--example", "--out", str(d / "example.json"), "--no-report"]) == 0
    assert main(["build", "--linear", "--out", str(d / "linear.json"), "--no-report"]) == 0
    return d


def test_build_writes_spec_and_report(tmp_path):
    out = tmp_path / "m.json"
    assert main(["build", "--theorem", "--out", str(out)]) == 0
    spec = json.loads(out.read_text())
    assert spec["schema"] == 1 and len(spec["charts"]) == 2
    rep = json.loads((tmp_path / "m.construction.json").read_text())
    assert rep["passed"]


def test_build_rejects_large_eps(tmp_path):
    assert main(["build", "--eps", "0.02", "--out", str(tmp_path / "x.json")]) == 3


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("DASPLIT_OUTPUT_DIR", str(tmp_path))
    assert main(["build", "--linear", "--no-report"]) == 0
    assert (tmp_path / "linear-linear.json").exists()


def test_certify_codes(specs, tmp_path):
    assert main(["certify", str(specs / "example.json"), "--out", str(tmp_path / "c.json")]) == 0
    assert json.loads((tmp_path / "c.json").read_text())["passed"]
    assert main(["certify", str(specs / "example.json"), "--eta", "5", "--out", str(tmp_path / "d.json")]) == 1
    assert main(["certify", str(specs / "linear.json"), "--out", str(tmp_path / "e.json")]) == 0


def test_input_errors(specs, tmp_path):
    assert main(["certify", str(tmp_path / "missing.json")]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["fixed-points", str(bad)]) == 3
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 3
    assert main(["plot", str(specs / "example.json"), "--layers", "nope", "--out", str(tmp_path / "p.svg")]) == 3


def test_lemma3_inapplicable_on_linear(specs, tmp_path):
    assert main(["experiment", str(specs / "linear.json"), "lemma3", "--out-dir", str(tmp_path)]) == 2
    rep = json.loads((tmp_path / "lemma3.json").read_text())
    assert rep["verdict"] == "INAPPLICABLE"


def test_trace_and_bundles(specs, tmp_path):
    c = tmp_path / "c.csv"
    assert main(["trace", str(specs / "example.json"), "--point", "0.3", "0.6", "--out", str(c)]) == 0
    assert c.read_text().startswith("arclength,x1,x2,lifted_x1,lifted_x2")
    b = tmp_path / "b.csv"
    assert main(["bundles", str(specs / "example.json"), "--grid", "4", "--out", str(b)]) == 0
    assert len(b.read_text().splitlines()) == 17


def test_fixed_points(specs, tmp_path):
    out = tmp_path / "fp.json"
    assert main(["fixed-points", str(specs / "linear.json"), "--out", str(out)]) == 0
    recs = json.loads(out.read_text())["fixed_points"]
    assert len(recs) == 5 and {r["kind"] for r in recs} == {"saddle"}
