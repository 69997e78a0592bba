"""JSON round trip for triplets, measures and radial profiles.

Every object carries a ``type`` (measures) or ``kind`` (profiles) tag and a
fixed key set; unknown or missing keys raise :class:`BadParameter`.  A triplet
document is either ``{"zoo": "name:p1,p2"}`` or
``{"A": [[...]], "N": {...}, "b": [...], "name": ...}``.
"""

import json

import numpy as np

from .errors import BadParameter
from .measure import (AtomList, Cylindrical, Difference, GeneratingTriplet, OneSidedDensity, RadialDensity,
                      Restriction, Scale, SphericalProduct, Sum, ZeroMeasure, _RayLeaf)
from .profiles import PowerProfile, ScaledProfile, TemperedProfile
from .zoo import parse_zoo

SCHEMA = 1


def _keys(obj, required, optional=(), what="object"):
    if not isinstance(obj, dict):
        raise BadParameter(f"{what} must be a JSON object, got {type(obj).__name__}")
    keys = set(obj)
    missing = set(required) - keys
    unknown = keys - set(required) - set(optional)
    if missing:
        raise BadParameter(f"{what} is missing keys {sorted(missing)}")
    if unknown:
        raise BadParameter(f"{what} has unknown keys {sorted(unknown)}")


def profile_from_dict(obj):
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "power":
        _keys(obj, ("kind", "c", "alpha"), what="power profile")
        return PowerProfile(obj["c"], obj["alpha"])
    if kind == "tempered":
        _keys(obj, ("kind", "c", "alpha", "beta"), what="tempered profile")
        return TemperedProfile(obj["c"], obj["alpha"], obj["beta"])
    if kind == "scaled":
        _keys(obj, ("kind", "factor", "base"), what="scaled profile")
        return ScaledProfile(profile_from_dict(obj["base"]), obj["factor"])
    raise BadParameter(f"unknown profile kind {kind!r}")


def _inf(values):
    return [np.inf if v is None else float(v) for v in values]


def measure_from_dict(obj):
    kind = obj.get("type") if isinstance(obj, dict) else None
    what = f"{kind} measure"
    if kind == "zero":
        _keys(obj, ("type", "dim"), what=what)
        return ZeroMeasure(int(obj["dim"]))
    if kind == "radial":
        _keys(obj, ("type", "dim", "profile"), what=what)
        return RadialDensity(int(obj["dim"]), profile_from_dict(obj["profile"]))
    if kind == "spherical":
        _keys(obj, ("type", "dim", "directions", "weights", "profile"), what=what)
        return SphericalProduct(int(obj["dim"]), obj["directions"], obj["weights"],
                                profile_from_dict(obj["profile"]))
    if kind == "rays":
        _keys(obj, ("type", "dim", "directions", "weights", "profile"), ("scales", "rlo", "rhi"), what=what)
        n = len(obj["weights"])
        return _RayLeaf(int(obj["dim"]), obj["directions"], obj["weights"], profile_from_dict(obj["profile"]),
                        scales=obj.get("scales"), rlo=obj.get("rlo", 0.0),
                        rhi=_inf(obj.get("rhi", [None] * n)))
    if kind == "one_sided":
        _keys(obj, ("type", "side", "profile"), what=what)
        return OneSidedDensity(profile_from_dict(obj["profile"]), int(obj["side"]))
    if kind == "atoms":
        _keys(obj, ("type", "points", "weights"), what=what)
        return AtomList(obj["points"], obj["weights"])
    if kind == "cylindrical":
        _keys(obj, ("type", "axes"), what=what)
        return Cylindrical([None if a is None else measure_from_dict(a) for a in obj["axes"]])
    if kind == "restriction":
        _keys(obj, ("type", "radius", "inside", "child"), what=what)
        return Restriction(measure_from_dict(obj["child"]), obj["radius"], bool(obj["inside"]))
    if kind == "scale":
        _keys(obj, ("type", "factor", "child"), what=what)
        return Scale(measure_from_dict(obj["child"]), obj["factor"])
    if kind == "sum":
        _keys(obj, ("type", "terms"), what=what)
        return Sum([measure_from_dict(t) for t in obj["terms"]])
    if kind == "difference":
        _keys(obj, ("type", "minuend", "subtrahend"), what=what)
        return Difference(measure_from_dict(obj["minuend"]), measure_from_dict(obj["subtrahend"]))
    raise BadParameter(f"unknown measure type {kind!r}")


def triplet_to_dict(t):
    out = {"A": t.A.entries.tolist(), "N": t.N.to_dict(), "b": [float(x) for x in t.b]}
    if t.name:
        out["name"] = t.name
    return out


def triplet_from_dict(obj):
    if isinstance(obj, dict) and "zoo" in obj:
        _keys(obj, ("zoo",), what="triplet")
        return parse_zoo(str(obj["zoo"]))
    _keys(obj, ("A", "N"), ("b", "name"), what="triplet")
    try:
        return GeneratingTriplet(np.asarray(obj["A"], float), measure_from_dict(obj["N"]), obj.get("b"),
                                 name=obj.get("name"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, BadParameter):
            raise
        raise BadParameter(f"invalid triplet: {exc}") from exc


def load_triplet(path):
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadParameter(f"{path}: not valid JSON ({exc})") from exc
    return triplet_from_dict(obj)


def jsonable(obj):
    """Convert numpy scalars/arrays, tuples and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x):
            return None
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj


def dumps(report):
    """Deterministic JSON: sorted keys, fixed separators, schema tag."""
    body = {"schema": SCHEMA}
    body.update(jsonable(report))
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"
