"""Minimum-spanning-tree features (MST1-MST3)."""

from __future__ import annotations

import numpy as np

from ..stats import StatSummary


def prim(dmat: np.ndarray, root: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Prim's algorithm on a dense symmetric matrix.

    Returns ``(parent, order)``: ``parent[root] == -1`` and ``order`` lists
    nodes in the sequence they joined the tree, so every parent precedes its
    children. Zero-length edges are legal (duplicate points).
    """
    n = len(dmat)
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1)
    order = np.empty(n, dtype=int)
    best[root] = 0.0
    for k in range(n):
        cand = np.where(in_tree, np.inf, best)
        u = int(np.argmin(cand))
        order[k] = u
        in_tree[u] = True
        closer = (~in_tree) & (dmat[u] < best)
        best[closer] = dmat[u][closer]
        parent[closer] = u
    return parent, order


def mst_edges(dmat: np.ndarray, root: int = 0) -> np.ndarray:
    """Edge weights of a minimum spanning tree (n - 1 values)."""
    parent, _ = prim(dmat, root)
    child = np.flatnonzero(parent >= 0)
    return dmat[child, parent[child]]


def mst_features(dmat: np.ndarray, depot: int, raw_dmat: np.ndarray | None = None) -> dict[str, float]:
    n = len(dmat)
    parent, order = prim(dmat, depot)
    child = np.flatnonzero(parent >= 0)
    weights = dmat[child, parent[child]]

    degree = np.zeros(n, dtype=int)
    np.add.at(degree, child, 1)
    np.add.at(degree, parent[child], 1)
    depth = np.zeros(n, dtype=int)
    for u in order[1:]:
        depth[u] = depth[parent[u]] + 1

    out = StatSummary.of(weights).as_features("MST1")
    out["MST1_total"] = float(weights.sum())
    if raw_dmat is not None:
        raw_w = mst_edges(raw_dmat, depot)
        out.update({k + "_raw": v for k, v in StatSummary.of(raw_w).as_features("MST1").items()})
        out["MST1_total_raw"] = float(raw_w.sum())
    out.update(StatSummary.of(degree).as_features("MST2"))
    out.update(StatSummary.of(depth).as_features("MST3"))
    return out
