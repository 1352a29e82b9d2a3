import json

import numpy as np
import pytest

from dasplit import mapspec
from dasplit.surgery import build_example_map, build_linear_map, build_theorem_map, perturbed


@pytest.fixture(scope="module", params=["linear", "example", "theorem_strict", "perturbed", "inverse"])
def a_map(request):
    if request.param == "linear":
        return build_linear_map()
    if request.param == "example":
        return build_example_map()
    if request.param == "theorem_strict":
        return build_theorem_map(mode="strict")
    f = build_example_map()
    if request.param == "perturbed":
        return perturbed(f, f.base.frame[:, 1] * 0.06, 0.002, f.eps / 20)
    return f.inverse()


def test_round_trip_bytes(a_map):
    text = mapspec.dumps(mapspec.to_spec(a_map))
    g = mapspec.loads(text)
    assert mapspec.dumps(mapspec.to_spec(g)) == text
    assert mapspec.spec_hash(g) == mapspec.spec_hash(a_map)
    X = np.random.default_rng(0).random((2000, 2))
    assert np.array_equal(g.step(X), a_map.step(X))


def test_spec_content():
    spec = mapspec.to_spec(build_theorem_map(mode="strict"))
    assert spec["schema"] == mapspec.SCHEMA
    assert spec["eps"] == "0.00089999999999999998"
    assert [c["center"] for c in spec["charts"]] == [["0/1", "0/1"], ["1/5", "2/5"]]
    assert [c["orientation"] for c in spec["charts"]] == ["forward", "inverse"]


def test_save_load(tmp_path):
    f = build_example_map()
    p = tmp_path / "m.json"
    text = mapspec.save(f, p)
    assert p.read_text() == text
    assert mapspec.spec_hash(mapspec.load(p)) == mapspec.spec_hash(f)


@pytest.mark.parametrize("mutate, msg", [
    (lambda s: s.update(schema=99), "schema"),
    (lambda s: s.update(eps=0.005), "decimal strings"),
    (lambda s: s["charts"][0].update(center=["1/7", "0/1"]), "not a fixed point"),
    (lambda s: s["charts"][0].update(kind="third_da"), "unknown chart kind"),
    (lambda s: s.update(eps="0.02"), "violates"),
    (lambda s: s.pop("base"), "malformed"),
    (lambda s: s["params"].update(bogus="1"), "unknown params"),
])
def test_rejects_bad_specs(mutate, msg):
    spec = mapspec.to_spec(build_example_map())
    mutate(spec)
    with pytest.raises(mapspec.SpecError, match=msg):
        mapspec.from_spec(spec)


def test_rejects_non_json():
    with pytest.raises(mapspec.SpecError):
        mapspec.loads("{not json")
    assert json.loads(mapspec.dumps({"b": 1, "a": 2})) == {"a": 2, "b": 1}
