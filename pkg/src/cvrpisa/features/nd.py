"""Node-distribution features (ND1-ND9)."""

from __future__ import annotations

import numpy as np
from sklearn.cluster import DBSCAN

from ..stats import StatSummary
from .geometry import GeometryUnavailable, normalize_coords


def _upper(d: np.ndarray) -> np.ndarray:
    return d[np.triu_indices(len(d), 1)]


def _nearest_positive_sum(d: np.ndarray) -> float:
    masked = np.where(d > 0, d, np.inf)
    best = masked.min(axis=1)
    return float(best[np.isfinite(best)].sum())


def _pairwise(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff**2).sum(-1))


def dbscan_clusters(points: np.ndarray, eps: float = 0.1, min_pts: int = 3) -> np.ndarray:
    """Cluster labels per point, -1 for noise."""
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    return DBSCAN(eps=eps, min_samples=min_pts).fit_predict(points)


def nd_features(
    coords: np.ndarray,
    dmat: np.ndarray,
    raw_dmat: np.ndarray,
    depot: int,
    eps: float = 0.1,
    min_pts: int = 3,
) -> dict[str, float]:
    """Node-distribution features.

    ``dmat`` is the normalized-scale distance matrix, ``raw_dmat`` the
    instance's own. Customer coordinates are normalized before the centroid
    and clustering features are taken. ND3 counts distinct values of the raw
    matrix (TSPLIB rounding already makes EUC_2D distances integral).
    """
    if coords is None:
        raise GeometryUnavailable("node-distribution features need node coordinates")
    raw = np.asarray(coords, dtype=float)
    norm = normalize_coords(raw)
    customers = np.delete(np.arange(len(raw)), depot)
    out: dict[str, float] = {}

    out.update(StatSummary.of(_upper(dmat)).as_features("ND1"))
    out.update({k + "_raw": v for k, v in StatSummary.of(_upper(raw_dmat)).as_features("ND1").items()})
    out["ND2"] = _nearest_positive_sum(dmat)
    out["ND2_raw"] = _nearest_positive_sum(raw_dmat)
    pairs = _upper(raw_dmat)
    out["ND3"] = len(np.unique(np.round(pairs, 6))) / len(pairs) if len(pairs) else 0.0

    for scale, pts in (("", norm[customers]), ("_raw", raw[customers])):
        centroid = pts.mean(axis=0) if len(pts) else np.zeros(2)
        if scale == "":
            out["ND4_x"], out["ND4_y"] = float(centroid[0]), float(centroid[1])
        to_centroid = np.linalg.norm(pts - centroid, axis=1)
        out.update({k + scale: v for k, v in StatSummary.of(to_centroid).as_features("ND5").items()})

    labels = dbscan_clusters(norm[customers], eps, min_pts)
    ids = np.unique(labels[labels >= 0])
    sizes = np.array([(labels == c).sum() for c in ids])
    out["ND6"] = float(len(ids))
    out.update(StatSummary.of(sizes).as_features("ND7"))
    for scale, pts in (("", norm[customers]), ("_raw", raw[customers])):
        centres = np.array([pts[labels == c].mean(axis=0) for c in ids]).reshape(-1, 2)
        cd = _upper(_pairwise(centres)) if len(centres) >= 2 else np.zeros(0)
        out.update({k + scale: v for k, v in StatSummary.of(cd).as_features("ND8").items()})
    out["ND9"] = len(ids) / len(customers) if len(customers) else 0.0
    return out
