"""Small convex-polygon toolkit on the x/z plane.

Polygons are ``(k, 2)`` float arrays in counter-clockwise order.
"""

from __future__ import annotations

import math

import numpy as np

TOL = 1e-9


def box_polygon(width: float, height: float) -> np.ndarray:
    return np.array([[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]])


def clip_halfplane(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Keep the part of ``poly`` where ``normal . p <= offset`` (Sutherland-Hodgman)."""
    if len(poly) == 0:
        return poly
    out = []
    vals = poly @ normal - offset
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        va, vb = vals[i], vals[(i + 1) % n]
        if va <= 0:
            out.append(a)
        if (va < 0 < vb) or (vb < 0 < va):
            t = va / (va - vb)
            out.append(a + t * (b - a))
    return np.array(out).reshape(-1, 2)


def area_centroid(poly: np.ndarray) -> tuple[float, np.ndarray]:
    if len(poly) < 3:
        return 0.0, poly.mean(axis=0) if len(poly) else np.zeros(2)
    x, z = poly[:, 0], poly[:, 1]
    xn, zn = np.roll(x, -1), np.roll(z, -1)
    cross = x * zn - xn * z
    area = cross.sum() / 2.0
    if abs(area) < 1e-15:
        return 0.0, poly.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cz = ((z + zn) * cross).sum() / (6.0 * area)
    return abs(area), np.array([cx, cz])


def contains(poly: np.ndarray, p, tol: float = TOL) -> bool:
    """Point in convex CCW polygon, boundary included within ``tol``."""
    if len(poly) < 3:
        return False
    edges = np.roll(poly, -1, axis=0) - poly
    rel = np.asarray(p, dtype=float) - poly
    cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    return bool(np.all(cross >= -tol * np.maximum(lengths, 1.0)))


def closest_point(poly: np.ndarray, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if contains(poly, p, 0.0):
        return p.copy()
    best, best_d = None, math.inf
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        ab = b - a
        denom = ab @ ab
        t = 0.0 if denom == 0 else min(max((p - a) @ ab / denom, 0.0), 1.0)
        c = a + t * ab
        d = float(np.hypot(*(p - c)))
        if d < best_d:
            best, best_d = c, d
    return best


def segment_inside_length(poly: np.ndarray, a, b) -> float:
    """Length of segment ``a -> b`` lying inside a convex CCW polygon (Cyrus-Beck)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    t0, t1 = 0.0, 1.0
    n = len(poly)
    for i in range(n):
        e = poly[(i + 1) % n] - poly[i]
        inward = np.array([-e[1], e[0]])
        num = (a - poly[i]) @ inward
        den = d @ inward
        if den == 0.0:
            if num < 0:
                return 0.0
            continue
        t = -num / den
        if den > 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return 0.0
    return (t1 - t0) * float(np.hypot(*d))
