"""Map-spec files: a lossless, hashable JSON description of a ComposedDiffeo.

Reals are stored as 17-significant-digit decimal strings and chart centres
as exact rationals, so build -> parse -> re-emit is byte-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from fractions import Fraction

import numpy as np

from .surgery import (
    ComposedDiffeo,
    SurgeryError,
    SurgeryParams,
    _check_eps,
    make_first_chart,
    make_shear_chart,
)
from .torus import _eigen_model, fixed_points_exact

SCHEMA = 1


class SpecError(ValueError):
    pass


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _frac(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _parse_frac(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise SpecError(f"bad rational {s!r}") from e


def _parse_num(s) -> float:
    if not isinstance(s, str):
        raise SpecError(f"reals must be decimal strings, got {s!r}")
    try:
        return float(s)
    except ValueError as e:
        raise SpecError(f"bad decimal {s!r}") from e


def to_spec(f: ComposedDiffeo) -> dict:
    charts = []
    for ch in f.charts:
        d = {"kind": ch.kind, "center": [_frac(ch.center[0]), _frac(ch.center[1])], "orientation": ch.orientation}
        if ch.kind == "shear":
            d["radius"] = _num(ch.alpha.half_support)
            d["magnitude"] = _num(ch.eps)
        else:
            d["inner"] = ch.inner is not None
        charts.append(d)
    params = {k: _num(v) for k, v in dataclasses.asdict(f.params).items()}
    return {
        "schema": SCHEMA,
        "label": f.label,
        "base": [[int(round(v)) for v in row] for row in np.asarray(f.base.A)],
        "mode": f.mode,
        "eps": _num(f.eps),
        "delta": _num(f.delta),
        "params": params,
        "charts": charts,
    }


def dumps(spec: dict) -> str:
    return json.dumps(spec, indent=2, sort_keys=True) + "\n"


def spec_hash(spec_or_map) -> str:
    spec = spec_or_map if isinstance(spec_or_map, dict) else to_spec(spec_or_map)
    return hashlib.sha256(dumps(spec).encode()).hexdigest()


def from_spec(spec: dict) -> ComposedDiffeo:
    try:
        if spec.get("schema") != SCHEMA:
            raise SpecError(f"unsupported schema {spec.get('schema')!r}")
        A = tuple(tuple(int(v) for v in row) for row in spec["base"])
        base = _eigen_model(A)
        eps = _parse_num(spec["eps"])
        delta = _parse_num(spec["delta"])
        fields = {fl.name for fl in dataclasses.fields(SurgeryParams)}
        unknown = set(spec["params"]) - fields
        if unknown:
            raise SpecError(f"unknown params {sorted(unknown)}")
        params = SurgeryParams(**{k: _parse_num(v) for k, v in spec["params"].items()})
        charts = []
        fixed = set(fixed_points_exact(base))
        for d in spec["charts"]:
            c = (_parse_frac(d["center"][0]), _parse_frac(d["center"][1]))
            if d["kind"] == "shear":
                charts.append(make_shear_chart(base, c, _parse_num(d["radius"]), _parse_num(d["magnitude"])))
            elif d["kind"] == "first_da":
                if c not in fixed:
                    raise SpecError(f"chart centre {d['center']} is not a fixed point of the base")
                _check_eps(eps)
                charts.append(make_first_chart(base, eps, params, c, d["orientation"], bool(d["inner"])))
            else:
                raise SpecError(f"unknown chart kind {d['kind']!r}")
        return ComposedDiffeo(base, tuple(charts), label=spec["label"], mode=spec["mode"], eps=eps,
                              delta=delta, params=params)
    except (KeyError, TypeError) as e:
        raise SpecError(f"malformed spec: {e}") from e
    except SurgeryError as e:
        raise SpecError(str(e)) from e


def loads(text: str) -> ComposedDiffeo:
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"not JSON: {e}") from e
    return from_spec(spec)


def load(path) -> ComposedDiffeo:
    with open(path) as fh:
        return loads(fh.read())


def save(f: ComposedDiffeo, path) -> str:
    text = dumps(to_spec(f))
    with open(path, "w") as fh:
        fh.write(text)
    return text
