import json
import math

import numpy as np
import pytest

from artifact import surface as surf
from artifact.curveio import (CURVE_COLUMNS, curve_from_csv, curve_from_json, curve_to_csv,
                              curve_to_json, export_obj, read_curve, surface_mesh, write_curve)
from artifact.errors import DomainError
from artifact.geodesic import GeodesicState, integrate_geodesic

SPHERE = surf.sphere(1.0)


@pytest.fixture(scope="module")
def curve():
    return integrate_geodesic(SPHERE, GeodesicState(0.0, 0.3, 1.0, 0.4, 1.0), 2.0)


def test_csv_round_trip(curve):
    text = curve_to_csv(curve)
    assert text.splitlines()[0] == ",".join(CURVE_COLUMNS)
    assert len(text.splitlines()) == len(curve) + 1
    back = curve_from_csv(text)
    for k in ("t", "u", "v", "du", "dv", "s"):
        assert np.array_equal(getattr(back, k), getattr(curve, k))
    assert np.array_equal(back.points, curve.points)


def test_json_round_trip(curve, tmp_path):
    doc = json.loads(curve_to_json(curve, note="x"))
    assert doc["surface"] == SPHERE.name
    assert doc["length"] == curve.length and doc["samples"] == len(curve)
    assert doc["meta"]["note"] == "x" and doc["meta"]["tol"] == 1e-9
    path = tmp_path / "c.json"
    write_curve(path, curve)
    back = read_curve(path)
    assert np.array_equal(back.u, curve.u) and back.meta["surface"] == SPHERE.name
    path = tmp_path / "c.csv"
    write_curve(path, curve)
    assert np.array_equal(read_curve(path).v, curve.v)


def test_json_keeps_nonfinite_metadata(curve):
    doc = json.loads(curve_to_json(curve, c1=math.inf, gap=float("nan")))
    assert doc["meta"]["c1"] == "inf" and doc["meta"]["gap"] == "nan"


def test_bad_inputs():
    with pytest.raises(DomainError):
        curve_from_csv("a,b\n1,2\n")
    with pytest.raises(DomainError):
        curve_from_csv(",".join(CURVE_COLUMNS) + "\n")
    with pytest.raises(DomainError):
        curve_from_json('{"columns": {"t": [0]}}')


def test_mesh_counts():
    verts, faces = surface_mesh(SPHERE, 32)
    assert verts.shape == (33 * 33, 3) and faces.shape == (2 * 32 * 32, 3)
    assert faces.min() == 0 and faces.max() == 33 * 33 - 1
    with pytest.raises(DomainError):
        surface_mesh(SPHERE, 1)


def test_obj_export():
    eq = integrate_geodesic(SPHERE, GeodesicState(0.0, 0.0, math.pi / 2, 1.0, 0.0), math.pi)
    text = export_obj(SPHERE, 32, [eq])
    lines = text.splitlines()
    vs = [ln for ln in lines if ln.startswith("v ")]
    fs = [ln for ln in lines if ln.startswith("f ")]
    ls = [ln for ln in lines if ln.startswith("l ")]
    assert len(vs) == 33 * 33 + len(eq)
    assert len(fs) == 2 * 32 * 32 and len(ls) == 1
    idx = [int(i) for i in ls[0].split()[1:]]
    assert idx == list(range(33 * 33 + 1, 33 * 33 + len(eq) + 1))
    assert not any(ln.startswith("vn") for ln in lines)
    # faces reference existing vertices (1-based)
    assert max(max(int(i) for i in f.split()[1:]) for f in fs) <= 33 * 33
    plain = export_obj(surf.plane(5.0), 4)
    assert sum(ln.startswith("v ") for ln in plain.splitlines()) == 25
    assert not any(ln.startswith("l ") for ln in plain.splitlines())


def test_obj_winding_is_right_handed():
    # plane faces are wound counter-clockwise seen from +z
    verts, faces = surface_mesh(surf.plane(1.0), 2)
    for a, b, c in faces:
        n = np.cross(verts[b] - verts[a], verts[c] - verts[a])
        assert n[2] != 0
    normals = {np.sign(np.cross(verts[b] - verts[a], verts[c] - verts[a])[2]) for a, b, c in faces}
    assert len(normals) == 1
