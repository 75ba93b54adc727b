"""Closed-form geodesics: plane segments, cylinder helices, sphere great circles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

ANTIPODAL_TOL = 1e-9
RADIUS_TOL = 1e-9


@dataclass(frozen=True)
class AnalyticGeodesic:
    """A geodesic given in closed form, sampled by arc length.

    ``constants`` holds the defining data: ``normal`` (and the in-plane
    basis ``e0``, ``e1``) for a great circle, ``c1``, ``c2`` with
    z = c1*phi + c2 for a helix (``c1`` is ``inf`` for a vertical ruling),
    and the unit ``direction`` for a plane line.
    """

    kind: str
    start: tuple
    end: tuple
    length: float
    constants: dict = field(default_factory=dict)

    def coords(self, s) -> np.ndarray:
        """Surface coordinates at arc length(s) ``s``: (u, v) per row.

        Great circles use longitude (unwrapped) and colatitude, helices
        (phi, z) with phi unwrapped, plane lines (u, v).
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.kind == "great-circle":
            p = self.points(s)
            a = self.constants["a"]
            lon = np.unwrap(np.arctan2(p[:, 1], p[:, 0]))
            col = np.arccos(np.clip(p[:, 2] / a, -1.0, 1.0))
            return np.column_stack([lon, col])
        frac = s / self.length if self.length > 0 else np.zeros_like(s)
        (x0, y0), (x1, y1) = self._param_ends()
        return np.column_stack([x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac])

    def _param_ends(self):
        if self.kind == "helix":
            phi0, z0 = self.start
            return (phi0, z0), (phi0 + self.constants["dphi"], self.end[1])
        return self.start, self.end

    def points(self, s) -> np.ndarray:
        """Embedded points at arc length(s) ``s`` (shape (n, 3))."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        c = self.constants
        if self.kind == "great-circle":
            a = c["a"]
            th = s / a
            return a * (np.cos(th)[:, None] * c["e0"] + np.sin(th)[:, None] * c["e1"])
        uv = self.coords(s)
        if self.kind == "helix":
            a = c["a"]
            return np.column_stack([a * np.cos(uv[:, 0]), a * np.sin(uv[:, 0]), uv[:, 1]])
        return np.column_stack([uv, np.zeros(len(s))])

    def tangents(self, s) -> np.ndarray:
        """Unit tangents dr/ds at arc length(s) ``s``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        c = self.constants
        if self.length == 0:
            return np.zeros((len(s), 3))
        if self.kind == "great-circle":
            th = s / c["a"]
            return -np.sin(th)[:, None] * c["e0"] + np.cos(th)[:, None] * c["e1"]
        if self.kind == "helix":
            a = c["a"]
            phi = self.coords(s)[:, 0]
            wp = c["dphi"] / self.length
            wz = (self.end[1] - self.start[1]) / self.length
            return np.column_stack([-a * wp * np.sin(phi), a * wp * np.cos(phi),
                                    np.full(len(s), wz)])
        d = np.asarray(c["direction"])
        return np.tile(np.append(d, 0.0), (len(s), 1))

    def sample(self, n: int = 101) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``n`` equally spaced arc lengths with their coordinates and points."""
        if n < 2:
            raise DomainError("need at least 2 samples")
        s = np.linspace(0.0, self.length, n)
        return s, self.coords(s), self.points(s)

    def to_curve(self, surface, n: int = 101):
        """Unit-speed :class:`GeodesicCurve` on ``surface`` (coordinates must agree)."""
        from .geodesic import GeodesicCurve
        from .surface import tangent_vectors
        s, uv, pts = self.sample(n)
        T = self.tangents(s)
        du = np.empty(n)
        dv = np.empty(n)
        for i in range(n):
            ru, rv = tangent_vectors(surface, uv[i, 0], uv[i, 1])
            A = np.column_stack([ru, rv])
            du[i], dv[i] = np.linalg.lstsq(A, T[i], rcond=None)[0]
        return GeodesicCurve(s, uv[:, 0].copy(), uv[:, 1].copy(), du, dv, pts, s.copy(), None,
                             {"kind": self.kind, "surface": surface.name, "analytic": True})


def _orthogonal(p: np.ndarray) -> np.ndarray:
    """A deterministic unit vector orthogonal to ``p``."""
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(p)))] = 1.0
    w = np.cross(p, axis)
    return w / np.linalg.norm(w)


def great_circle(p0, p1, a: float = 1.0) -> AnalyticGeodesic:
    """Minor great-circle arc from ``p0`` to ``p1`` on the sphere of radius ``a``."""
    if not a > 0:
        raise DomainError("radius must be positive")
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    for label, p in (("p0", p0), ("p1", p1)):
        r = float(np.linalg.norm(p))
        if abs(r - a) > RADIUS_TOL * max(1.0, a):
            raise DomainError(f"{label} is off the sphere: |{label}|={r!r}, a={a!r}")
    h0, h1 = p0 / np.linalg.norm(p0), p1 / np.linalg.norm(p1)
    theta = math.acos(min(1.0, max(-1.0, float(h0 @ h1))))
    if theta > math.pi - ANTIPODAL_TOL:
        raise DomainError("antipodal points: the great circle is not unique")
    cross = np.cross(h0, h1)
    norm = float(np.linalg.norm(cross))
    normal = cross / norm if norm > 1e-300 and theta > 0 else _orthogonal(h0)
    e1 = np.cross(normal, h0)
    return AnalyticGeodesic("great-circle", tuple(p0), tuple(p1), a * theta,
                            {"a": float(a), "normal": normal, "e0": h0, "e1": e1,
                             "angle": theta})


def cylinder_helix(p0, p1, a: float = 1.0, windings: int = 0) -> AnalyticGeodesic:
    """Helix z = c1*phi + c2 from (phi0, z0) to (phi1, z1) on the cylinder of radius ``a``.

    The angular travel is (phi1 - phi0) + 2*pi*windings.  Zero angular travel
    gives the vertical ruling through both points (the c1 -> inf limit).
    """
    if not a > 0:
        raise DomainError("radius must be positive")
    if int(windings) != windings:
        raise DomainError("windings must be an integer")
    phi0, z0 = map(float, p0)
    phi1, z1 = map(float, p1)
    dphi = (phi1 - phi0) + 2.0 * math.pi * int(windings)
    dz = z1 - z0
    length = math.hypot(a * dphi, dz)
    if dphi == 0.0:
        c1, c2 = math.inf, math.nan
    else:
        c1 = dz / dphi
        c2 = z0 - c1 * phi0
    return AnalyticGeodesic("helix", (phi0, z0), (phi1, z1), length,
                            {"a": float(a), "c1": c1, "c2": c2, "dphi": dphi,
                             "windings": int(windings), "ruling": dphi == 0.0})


def plane_line(p0, p1) -> AnalyticGeodesic:
    """Straight segment in the (u, v) plane."""
    x0, y0 = map(float, p0)
    x1, y1 = map(float, p1)
    L = math.hypot(x1 - x0, y1 - y0)
    d = ((x1 - x0) / L, (y1 - y0) / L) if L > 0 else (1.0, 0.0)
    return AnalyticGeodesic("plane-line", (x0, y0), (x1, y1), L, {"direction": d})


def sphere_point(u: float, v: float, a: float = 1.0) -> np.ndarray:
    """Embedded point for longitude ``u`` and colatitude ``v``."""
    return a * np.array([math.sin(v) * math.cos(u), math.sin(v) * math.sin(u), math.cos(v)])


def sphere_coords(p) -> tuple[float, float]:
    """(longitude in [0, 2pi), colatitude) of a point on a sphere about the origin."""
    x, y, z = map(float, p)
    r = math.sqrt(x * x + y * y + z * z)
    return math.atan2(y, x) % (2 * math.pi), math.acos(max(-1.0, min(1.0, z / r)))
