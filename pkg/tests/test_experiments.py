import json

import numpy as np
import pytest

from dasplit import experiments as ex
from dasplit.dynamics import trace_integral_curve


def test_lemma3_passes(lemma3_report, example_map):
    r = lemma3_report
    assert r.verdict == "PASS" and r.passed
    assert r.details["n_basin_samples"] >= 20
    tol = r.parameters["tol"]
    assert r.parameters["step"] == example_map.eps / 500 and tol == 5 * r.parameters["step"]
    assert all(s["closest_approach"] <= tol for s in r.samples)
    assert len(r.curves) == len(r.samples)
    assert ex.LIMITATION in r.notes
    d = r.as_dict()
    assert d["schema"] == ex.REPORT_SCHEMA and "timing" not in json.dumps(d)


def test_lemma3_linear_is_inapplicable(linear_map):
    r = ex.lemma3_experiment(linear_map)
    assert r.verdict == "INAPPLICABLE" and not r.passed
    assert r.details["reason"] == "no sink basin"
    assert r.samples == []


def test_site(example_map):
    s = ex.find_site(example_map)
    assert (s.p.kind, s.q.kind, s.qprime.kind) == ("source", "sink", "saddle")
    ch = example_map.charts[s.chart_index]
    u = example_map.lift_to_chart(ch, s.q.point[None, :])[0]
    assert u[0] > 0
    assert ex.find_site(ex.build_linear_map() if hasattr(ex, "build_linear_map") else example_map.inverse()) is None


def test_intersection_ledger(lemma3_report, example_map):
    led = lemma3_report.ledger
    assert led.single_crossings and led.within_2eps
    pos = [e[2] for e in led.entries]
    assert all(led.a <= s <= led.b for s in pos)
    assert len(led.entries) == len(lemma3_report.samples)


def test_control_curve_has_no_crossing(lemma3_report, example_map):
    f = example_map
    x = ex.find_site(f).p.point + 0.3 * f.base.frame[:, 1]
    c = trace_integral_curve(f, x, "E", 0.25, 1e-3)
    assert c.length == pytest.approx(0.5, abs=1e-9)
    led = ex.unique_intersection_check(f, [c], lemma3_report.ledger.wuu)
    assert led.crossings == [0]


def test_forward_invariance(lemma3_report, example_map):
    r = ex.forward_invariance_check(example_map, lemma3_report.ledger)
    assert r["passed"] and r["images_on_wuu"] and r["strictly_expanding"] and r["p_fixed"]
    assert r["p_position_after"] == 0.0
    assert r["min_expansion_outer_half"] >= 1.3


def test_foliation_witness(lemma3_report, example_map):
    w = ex.foliation_violation_witness(example_map, lemma3_report)
    assert w["found"]
    i, j = w["curves"]
    assert i != j and w["points"][0] != w["points"][1]
    tol = lemma3_report.parameters["tol"]
    assert max(w["closest_approach_to_p"]) < tol
    assert w["opposite_sides_of_weak_axis"] and w["min_separation_near_q"] > 0


def test_remark(example_map):
    r = ex.remark_experiment(example_map)
    assert r.verdict == "PASS"
    site = r.details["site"]
    assert site["target_kind"] == "saddle"
    assert site["target_eigenvalues"] == pytest.approx([0.5, example_map.base.mu], abs=1e-9)


def test_theorem_geometry(theorem_map):
    assert ex.modified_region_gap(theorem_map) > 0.4
    assert ex.locality_check(theorem_map, 100_000)["exact"]


def test_robustness_zero_magnitude_is_identity(lemma3_report, example_map):
    r = ex.robustness_experiment(example_map, 0.0, n_trials=1)
    assert r.verdict == "PASS"
    t = r.samples[0]
    assert t["map_hash"] == lemma3_report.map_hash
    assert t["max_closest_approach"] == lemma3_report.details["closest_approach"]["max"]


def test_robustness_huge_magnitude_is_flagged(example_map):
    r = ex.robustness_experiment(example_map, 10 * example_map.eps, n_trials=1)
    assert r.verdict == "OUTSIDE_CERTIFIED_NEIGHBORHOOD"
    assert r.samples[0]["outcome"] == "outside certified neighborhood"
    assert not r.details["within_precondition"]


def test_construction_report(example_map):
    rep = ex.construction_report(example_map)
    assert rep["passed"]
    assert list(rep["properties"]) == ["1_dominated_splitting", "2_angle_bounds", "3_locality",
                                       "4_fixed_points", "5_wuu_and_norm"]
    kinds = rep["properties"]["4_fixed_points"]["kinds_in_ball"]
    assert "source" in kinds and "sink" in kinds
