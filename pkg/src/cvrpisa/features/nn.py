"""Nearest-neighbour features (NN1-NN8)."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..stats import StatSummary

DEFAULT_KSET = (1, 3, 5, 7, 10)


def neighbour_order(dmat: np.ndarray) -> np.ndarray:
    """Per row, the other nodes sorted by distance (ties broken by index)."""
    d = np.array(dmat, dtype=float)
    np.fill_diagonal(d, np.inf)
    return np.argsort(d, axis=1, kind="stable")[:, : len(d) - 1]


def knn_graph(nbrs: np.ndarray, k: int) -> csr_matrix:
    n = len(nbrs)
    rows = np.repeat(np.arange(n), k)
    cols = nbrs[:, :k].ravel()
    return csr_matrix((np.ones(n * k), (rows, cols)), shape=(n, n))


def component_sizes(graph: csr_matrix, connection: str) -> np.ndarray:
    count, labels = connected_components(graph, directed=True, connection=connection)
    return np.bincount(labels, minlength=count)


def neighbour_angles(coords: np.ndarray, nbrs: np.ndarray) -> np.ndarray:
    """Angle (radians) at each node between the rays to its two nearest neighbours."""
    c = np.asarray(coords, dtype=float)
    u = c[nbrs[:, 0]] - c
    v = c[nbrs[:, 1]] - c
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    dot = (u * v).sum(1)
    # arctan2(0, 0) == 0 covers coincident points
    return np.abs(np.arctan2(cross, dot))


def nn_features(
    dmat: np.ndarray,
    kset=DEFAULT_KSET,
    coords: np.ndarray | None = None,
    raw_dmat: np.ndarray | None = None,
) -> dict[str, float]:
    """NN features over every node. Values of k that are >= n are skipped.

    NN8 is only emitted when ``coords`` is given.
    """
    n = len(dmat)
    ks = sorted(k for k in set(kset) if 1 <= k < n)
    if not ks:
        raise ValueError(f"no usable k in {tuple(kset)} for {n} nodes")
    nbrs = neighbour_order(dmat)
    out = StatSummary.of(dmat[np.arange(n), nbrs[:, 0]]).as_features("NN1")
    if raw_dmat is not None:
        raw_nn = np.where(np.eye(n, dtype=bool), np.inf, raw_dmat).min(axis=1)
        out.update({k + "_raw": v for k, v in StatSummary.of(raw_nn).as_features("NN1").items()})

    scc_counts, wcc_counts, scc_sizes, wcc_sizes, indeg = [], [], [], [], []
    for k in ks:
        g = knn_graph(nbrs, k)
        s = component_sizes(g, "strong")
        w = component_sizes(g, "weak")
        scc_counts.append(len(s))
        wcc_counts.append(len(w))
        scc_sizes.extend(s)
        wcc_sizes.extend(w)
        indeg.extend(np.asarray(g.sum(axis=0)).ravel())
    scc_counts = np.array(scc_counts, dtype=float)
    wcc_counts = np.array(wcc_counts, dtype=float)
    out.update(StatSummary.of(scc_counts).as_features("NN2"))
    out.update(StatSummary.of(wcc_counts).as_features("NN3"))
    out.update(StatSummary.of(scc_sizes).as_features("NN4"))
    out.update(StatSummary.of(wcc_sizes).as_features("NN5"))
    out.update(StatSummary.of(indeg).as_features("NN6"))
    out.update(StatSummary.of(scc_counts / wcc_counts).as_features("NN7"))
    if coords is not None and n >= 3:
        out.update(StatSummary.of(neighbour_angles(coords, nbrs)).as_features("NN8"))
    return out
