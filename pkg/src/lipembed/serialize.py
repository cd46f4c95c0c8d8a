"""JSON round-tripping for point clouds, pairings, tame maps and germs.

Floats are written with ``repr`` (Python's shortest round-trip form), so a
load after a dump reproduces every value bitwise.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import LipembedError
from .geometry import PointCloud
from .germs import GermCurve
from .lipschitz import SampledLipschitzFunction
from .tame import LinearOffset, ShearMap, TameMap, UnimodularMap


class FormatError(LipembedError):
    """Malformed input file; exit code 1."""


def read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def write_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _field(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"{where}: missing field '{key}'")
    return obj[key]


def _array(value, where, ndim):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise FormatError(f"{where}: expected numbers") from None
    if arr.ndim != ndim and not (ndim == 2 and arr.size == 0):
        raise FormatError(f"{where}: expected a {ndim}-d array, got shape {arr.shape}")
    return arr


def cloud_to_json(cloud: PointCloud) -> dict:
    return {
        "label": cloud.label,
        "ambient_dim": cloud.ambient_dim,
        "intrinsic_dim": cloud.intrinsic_dim,
        "points": cloud.points.tolist(),
    }


def cloud_from_json(obj, where="cloud") -> PointCloud:
    # accept the output of ``apply`` so results can be chained
    if isinstance(obj, dict) and isinstance(obj.get("points"), dict):
        obj = obj["points"]
    pts = _array(_field(obj, "points", where), f"{where}.points", 2)
    dim = obj.get("ambient_dim")
    if dim is not None and pts.size and pts.shape[1] != int(dim):
        raise FormatError(f"{where}: ambient_dim {dim} but points have {pts.shape[1]} coordinates")
    if pts.size == 0:
        pts = pts.reshape(0, int(dim or 0))
    return PointCloud(pts, int(obj.get("intrinsic_dim", 0)), str(obj.get("label", "")))


def pairing_from_json(obj, where="pairing"):
    if isinstance(obj, dict):
        obj = _field(obj, "pairing", where)
    try:
        return np.asarray(obj, dtype=int)
    except (TypeError, ValueError):
        raise FormatError(f"{where}: expected a list of integers") from None


def _factor_to_json(f) -> dict:
    if isinstance(f, UnimodularMap):
        return {"type": "linear", "matrix": f.matrix.tolist()}
    out = {"type": "shear", "axis": f.axis, "sign": f.sign, "inputs": list(f.inputs)}
    if isinstance(f.offset, LinearOffset):
        out["linear"] = f.offset.coeffs.tolist()
    else:
        out["domain"] = f.offset.domain.tolist()
        out["values"] = f.offset.values.tolist()
        out["L"] = f.offset.constant
    return out


def _factor_from_json(obj, dim, where):
    kind = _field(obj, "type", where)
    if kind == "linear":
        return UnimodularMap(_array(_field(obj, "matrix", where), f"{where}.matrix", 2))
    if kind != "shear":
        raise FormatError(f"{where}: unknown factor type {kind!r}")
    inputs = tuple(int(i) for i in _field(obj, "inputs", where))
    if "linear" in obj:
        offset = LinearOffset(_array(obj["linear"], f"{where}.linear", 1))
    else:
        dom = _array(_field(obj, "domain", where), f"{where}.domain", 2)
        if dom.size == 0:
            dom = dom.reshape(-1, len(inputs))
        vals = _array(_field(obj, "values", where), f"{where}.values", 1)
        offset = SampledLipschitzFunction(dom, vals, float(_field(obj, "L", where)))
    return ShearMap(int(_field(obj, "axis", where)), offset, int(_field(obj, "sign", where)),
                    dim, inputs)


def tame_to_json(F: TameMap) -> dict:
    return {"type": "tame", "dim": F.dim, "factors": [_factor_to_json(f) for f in F.factors]}


def tame_from_json(obj, where="map") -> TameMap:
    dim = int(_field(obj, "dim", where))
    facs = _field(obj, "factors", where)
    return TameMap(dim, tuple(_factor_from_json(f, dim, f"{where}.factors[{i}]")
                              for i, f in enumerate(facs)))


def germ_from_json(obj, where="germ") -> GermCurve:
    branches = _field(obj, "branches", where)
    for i, b in enumerate(branches):
        for j, t in enumerate(_field(b, "terms", f"{where}.branches[{i}]")):
            if not (isinstance(t, list) and len(t) == 3):
                raise FormatError(f"{where}.branches[{i}].terms[{j}]: expected [num, den, coeff]")
    return GermCurve.from_json(obj)


def germ_to_json(curve: GermCurve) -> dict:
    return curve.to_json()
