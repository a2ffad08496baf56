"""Planar geometry helpers and the G1-G5 shape features."""

from __future__ import annotations

import numpy as np

from ..stats import StatSummary


class GeometryUnavailable(ValueError):
    """Raised when a feature needs node coordinates the instance does not have."""


def normalize_coords(coords: np.ndarray) -> np.ndarray:
    """Min-max scale each axis to [0, 1]; an axis with no spread maps to 0."""
    c = np.asarray(coords, dtype=float)
    lo = c.min(axis=0)
    extent = np.ptp(c, axis=0)
    return np.divide(c - lo, extent, out=np.zeros_like(c), where=extent > 0)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Indices of the hull vertices in counter-clockwise order (monotone chain).

    Points lying in the interior of a hull edge are not vertices. All-collinear
    input yields its two extreme points; a single distinct point yields one.
    """
    pts = np.asarray(points, dtype=float)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    # drop exact duplicates, keeping the first index
    uniq = [order[0]]
    for i in order[1:]:
        if not np.array_equal(pts[i], pts[uniq[-1]]):
            uniq.append(i)
    if len(uniq) < 3:
        return np.array(uniq, dtype=int)

    def chain(idx):
        out: list[int] = []
        for i in idx:
            while len(out) >= 2 and _cross(pts[out[-2]], pts[out[-1]], pts[i]) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = chain(uniq)
    upper = chain(uniq[::-1])
    hull = lower[:-1] + upper[:-1]
    return np.array(hull, dtype=int)


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area of a simple polygon given as ordered vertices."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from each point in ``p`` (m x 2) to segments ``a[k]-b[k]`` -> (m x k)."""
    p = np.asarray(p, dtype=float)[:, None, :]
    ab = (b - a)[None, :, :]
    ap = p - a[None, :, :]
    denom = (ab**2).sum(-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(denom > 0, (ap * ab).sum(-1) / denom, 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * ab
    return np.sqrt(((p - closest) ** 2).sum(-1))


def _shape_features(pts: np.ndarray, suffix: str) -> tuple[dict[str, float], np.ndarray, bool]:
    hull = convex_hull(pts)
    hv = pts[hull]
    out: dict[str, float] = {}
    ext = np.ptp(pts, axis=0)
    out["G1" + suffix] = float(ext[0] * ext[1])
    degenerate = len(hull) < 3
    out["G2" + suffix] = 0.0 if degenerate else polygon_area(hv)
    if degenerate:
        g4 = StatSummary()
    else:
        interior = np.setdiff1d(np.arange(len(pts)), hull)
        if interior.size:
            dist = point_segment_distance(pts[interior], hv, np.roll(hv, -1, axis=0))
            g4 = StatSummary.of(dist.min(axis=1))
        else:
            g4 = StatSummary()
    if len(hull) >= 2:
        edges = np.linalg.norm(np.roll(hv, -1, axis=0) - hv, axis=1)
    else:
        edges = np.zeros(0)
    out.update(_suffixed(g4.as_features("G4"), suffix))
    out.update(_suffixed(StatSummary.of(edges).as_features("G5"), suffix))
    return out, hull, degenerate


def _suffixed(d: dict[str, float], suffix: str) -> dict[str, float]:
    return {k + suffix: v for k, v in d.items()}


def geometric_features(coords: np.ndarray) -> dict[str, float]:
    """G1-G5 over all nodes (depot included).

    Computed on normalized coordinates; G1, G2, G4 and G5 are repeated on the
    original scale with a ``_raw`` suffix. Collinear input gives G2 = 0,
    G3 = 1 and an all-zero G4.
    """
    if coords is None:
        raise GeometryUnavailable("geometric features need node coordinates")
    raw = np.asarray(coords, dtype=float)
    norm = normalize_coords(raw)
    out, hull, degenerate = _shape_features(norm, "")
    raw_out, _, _ = _shape_features(raw, "_raw")
    out["G3"] = 1.0 if degenerate else len(hull) / len(norm)
    out.update(raw_out)
    return out
