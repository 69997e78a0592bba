import json

import numpy as np
import pytest

from levyhk.errors import BadParameter
from levyhk.exponent import CharExponent
from levyhk.measure import Difference, GeneratingTriplet, RadialDensity, Restriction, Scale
from levyhk.profiles import PowerProfile, TemperedProfile
from levyhk.serialize import SCHEMA, dumps, jsonable, load_triplet, triplet_from_dict, triplet_to_dict
from levyhk.zoo import parse_zoo

ZOO = ["gaussian:1", "gaussian:2", "cauchy", "isotropic_stable:2,1.5", "isotropic_stable:3,0.7",
       "cylindrical_stable:2,1.0", "one_sided_1_stable", "stable_subordinator:0.5",
       "product_stable:0.5,1.0,1.5", "mixed_stable:2,1.0", "spherical_stable:2,0.8", "gaussian_cauchy"]


def same_exponent(a, b, seed=0):
    X = np.random.default_rng(seed).standard_normal((10, a.dim)) * 3
    return np.allclose(CharExponent(a).psi(X), CharExponent(b).psi(X), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("name", ZOO)
def test_zoo_round_trip(name):
    t = parse_zoo(name)
    doc = json.loads(json.dumps(triplet_to_dict(t)))
    back = triplet_from_dict(doc)
    assert back.dim == t.dim
    assert np.array_equal(back.b, t.b)
    assert same_exponent(t, back)


def test_composite_measure_round_trip():
    iso = RadialDensity(2, PowerProfile(1.0, 1.2))
    temp = RadialDensity(2, TemperedProfile(0.5, 0.8, 2.0))
    N = Difference(iso + Scale(temp, 0.5), Scale(Restriction(iso, 0.5, inside=True), 0.25))
    t = GeneratingTriplet([[0.2, 0.05], [0.05, 0.1]], N, [0.3, -1.0], name="composite")
    back = triplet_from_dict(json.loads(json.dumps(triplet_to_dict(t))))
    assert back.name == "composite"
    assert same_exponent(t, back)


def test_zoo_document():
    assert triplet_from_dict({"zoo": "cauchy:2"}).dim == 2
    with pytest.raises(BadParameter):
        triplet_from_dict({"zoo": "cauchy", "extra": 1})


@pytest.mark.parametrize("doc", [
    {"A": [[0.5]]},
    {"A": [[0.5]], "N": {"type": "zero", "dim": 1}, "colour": "red"},
    {"A": [[0.5]], "N": {"type": "zero"}},
    {"A": [[0.5]], "N": {"type": "radial", "dim": 1, "profile": {"kind": "power", "c": 1.0}}},
    {"A": [[0.5]], "N": {"type": "blob", "dim": 1}},
    {"A": [[0.5]], "N": {"type": "radial", "dim": 1, "profile": {"kind": "wiggly"}}},
    {"A": [[-1.0]], "N": {"type": "zero", "dim": 1}},
    [1, 2, 3],
])
def test_bad_documents_rejected(doc):
    with pytest.raises(BadParameter):
        triplet_from_dict(doc)


def test_load_triplet(tmp_path):
    p = tmp_path / "t.json"
    p.write_text(json.dumps(triplet_to_dict(parse_zoo("one_sided_1_stable"))))
    assert same_exponent(load_triplet(p), parse_zoo("one_sided_1_stable"))
    q = tmp_path / "bad.json"
    q.write_text("{not json")
    with pytest.raises(BadParameter, match="not valid JSON"):
        load_triplet(q)


def test_jsonable():
    obj = {"a": np.float64(1.5), "b": np.arange(3), "c": (np.int64(2), np.bool_(True)), 4: np.nan,
           "d": -np.inf, "e": 1 + 2j}
    out = jsonable(obj)
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": [2, True], "4": None, "d": "-inf", "e": {"re": 1.0, "im": 2.0}}
    assert isinstance(out["c"][1], bool)


def test_dumps_is_deterministic_and_tagged():
    rep = {"z": 1, "a": [np.float32(0.25), np.inf]}
    s = dumps(rep)
    assert s == dumps(dict(reversed(list(rep.items()))))
    assert json.loads(s) == {"schema": SCHEMA, "z": 1, "a": [0.25, "inf"]}
    assert s.endswith("\n")
