"""Curve serialization (CSV, JSON) and Wavefront OBJ export."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import DomainError
from .geodesic import GeodesicCurve
from .surface import SurfaceSpec, eval_point

CURVE_COLUMNS = ("t", "u", "v", "du", "dv", "x", "y", "z", "s")


def fmt(x: float) -> str:
    """Machine format: 17 significant digits."""
    return f"{float(x):.17g}"


def _columns(c: GeodesicCurve) -> dict[str, np.ndarray]:
    pts = np.asarray(c.points, dtype=float).reshape(-1, 3)
    return {"t": c.t, "u": c.u, "v": c.v, "du": c.du, "dv": c.dv,
            "x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2], "s": c.s}


def curve_to_csv(c: GeodesicCurve) -> str:
    cols = _columns(c)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for i in range(len(c.t)):
        w.writerow([fmt(cols[k][i]) for k in CURVE_COLUMNS])
    return buf.getvalue()


def curve_from_csv(text: str, meta: dict | None = None) -> GeodesicCurve:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CURVE_COLUMNS:
        raise DomainError(f"expected CSV header {','.join(CURVE_COLUMNS)}")
    rows = [[float(x) for x in row] for row in reader if row]
    if not rows:
        raise DomainError("curve CSV has no samples")
    a = np.array(rows)
    return GeodesicCurve(a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4], a[:, 5:8], a[:, 8],
                         None, dict(meta or {}))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        # JSON has no inf/nan; keep them as strings so the file stays valid
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def curve_to_json(c: GeodesicCurve, **extra) -> str:
    cols = _columns(c)
    meta = dict(c.meta)
    meta.update(extra)
    doc = {"surface": meta.pop("surface", None), "length": float(c.length) if len(c.s) else 0.0,
           "samples": len(c.t), "meta": _jsonable(meta),
           "columns": {k: [float(x) for x in cols[k]] for k in CURVE_COLUMNS}}
    return json.dumps(doc, indent=1, allow_nan=False)


def curve_from_json(text: str) -> GeodesicCurve:
    doc = json.loads(text)
    try:
        cols = {k: np.asarray(doc["columns"][k], dtype=float) for k in CURVE_COLUMNS}
    except KeyError as exc:
        raise DomainError(f"curve JSON lacks column {exc}") from None
    meta = dict(doc.get("meta") or {})
    if doc.get("surface") is not None:
        meta["surface"] = doc["surface"]
    pts = np.column_stack([cols["x"], cols["y"], cols["z"]])
    return GeodesicCurve(cols["t"], cols["u"], cols["v"], cols["du"], cols["dv"], pts,
                         cols["s"], None, meta)


def write_curve(path, c: GeodesicCurve, **extra) -> None:
    path = Path(path)
    text = curve_to_json(c, **extra) if path.suffix.lower() == ".json" else curve_to_csv(c)
    path.write_text(text, encoding="utf-8")


def read_curve(path) -> GeodesicCurve:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return curve_from_json(text)
    return curve_from_csv(text)


# -- OBJ --------------------------------------------------------------------

def surface_mesh(s: SurfaceSpec, res: int) -> tuple[np.ndarray, np.ndarray]:
    """(res+1)^2 vertices on the parameter grid and 2*res^2 triangles (0-based)."""
    if res < 2:
        raise DomainError("mesh resolution must be at least 2")
    us = np.linspace(s.u_range.lo, s.u_range.hi, res + 1)
    vs = np.linspace(s.v_range.lo, s.v_range.hi, res + 1)
    verts = np.array([eval_point(s, u, v) for u in us for v in vs])
    faces = []
    stride = res + 1
    for i in range(res):
        for j in range(res):
            a = i * stride + j
            b, c, d = a + stride, a + stride + 1, a + 1
            faces.append((a, b, c))
            faces.append((a, c, d))
    return verts, np.array(faces, dtype=int)


def export_obj(s: SurfaceSpec, res: int, curves=()) -> str:
    """Surface mesh as triangles plus each curve as one ``l`` polyline; no normals."""
    verts, faces = surface_mesh(s, res)
    out = [f"# {s.name}", "o surface"]
    out += [f"v {fmt(x)} {fmt(y)} {fmt(z)}" for x, y, z in verts]
    out += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    base = len(verts)
    for k, c in enumerate(curves):
        pts = np.asarray(c.points, dtype=float).reshape(-1, 3)
        out.append(f"o curve{k}")
        out += [f"v {fmt(x)} {fmt(y)} {fmt(z)}" for x, y, z in pts]
        if len(pts) >= 2:
            out.append("l " + " ".join(str(base + i + 1) for i in range(len(pts))))
        base += len(pts)
    return "\n".join(out) + "\n"
