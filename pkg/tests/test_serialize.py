import json

import numpy as np
import pytest

from conftest import swap_germs
from lipembed.extension import extend_embedding
from lipembed.geometry import PointCloud, SampledMap
from lipembed.serialize import (
    FormatError,
    cloud_from_json,
    cloud_to_json,
    germ_from_json,
    germ_to_json,
    pairing_from_json,
    read_json,
    tame_from_json,
    tame_to_json,
    write_json,
)
from lipembed.tame import evaluate


def test_cloud_roundtrip_bitwise(tmp_path):
    pts = np.random.default_rng(0).normal(size=(7, 3)) / 3
    c = PointCloud(pts, 1, "c")
    p = tmp_path / "c.json"
    write_json(cloud_to_json(c), p)
    back = cloud_from_json(read_json(p))
    assert np.array_equal(back.points, pts) and back.intrinsic_dim == 1 and back.label == "c"


def test_cloud_errors(tmp_path):
    with pytest.raises(FormatError, match="points"):
        cloud_from_json({"ambient_dim": 2})
    with pytest.raises(FormatError, match="ambient_dim"):
        cloud_from_json({"points": [[1, 2]], "ambient_dim": 3})
    p = tmp_path / "bad.json"
    p.write_text('{"points": [[1, 2],\n [3, ]]}')
    with pytest.raises(FormatError, match="line 2"):
        read_json(p)


def test_pairing_forms():
    assert pairing_from_json([2, 0, 1]).tolist() == [2, 0, 1]
    assert pairing_from_json({"pairing": [1, 0]}).tolist() == [1, 0]


def test_tame_roundtrip(r4_curve_pair):
    X, Y = r4_curve_pair
    F = extend_embedding(SampledMap.from_arrays(X, Y), 1).F
    obj = json.loads(write_json(tame_to_json(F)))
    G = tame_from_json(obj)
    pts = np.random.default_rng(1).normal(size=(100, 4))
    assert np.array_equal(evaluate(F, pts), evaluate(G, pts))


def test_tame_unknown_factor():
    with pytest.raises(FormatError):
        tame_from_json({"dim": 2, "factors": [{"type": "rotation"}]})


def test_germ_roundtrip():
    X, _ = swap_germs()
    assert germ_from_json(json.loads(write_json(germ_to_json(X)))).branches == X.branches
    with pytest.raises(FormatError):
        germ_from_json({"branches": [{"terms": [[1, 2]]}]})
