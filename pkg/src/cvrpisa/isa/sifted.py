"""SIFTED: correlation filter, feature clustering and combination search."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.metrics import calinski_harabasz_score, davies_bouldin_score, silhouette_score

log = logging.getLogger(__name__)


def pearson_matrix(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pearson r between every column of X and every column of Y.

    Columns without variance correlate 0 with everything.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    nx = np.sqrt((Xc**2).sum(axis=0))
    ny = np.sqrt((Yc**2).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (Xc.T @ Yc) / np.outer(nx, ny)
    r[~np.isfinite(r)] = 0.0
    return np.clip(r, -1.0, 1.0)


def correlation_filter(F, Y, threshold: float = 0.5, min_keep: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Indices of features whose strongest |r| with any algorithm exceeds ``threshold``.

    When fewer than ``min_keep`` pass, the best-correlated remaining features
    are added so later stages still have something to work with.
    """
    corr = pearson_matrix(F, Y)
    strength = np.abs(corr).max(axis=1) if corr.shape[1] else np.zeros(corr.shape[0])
    keep = np.flatnonzero(strength > threshold)
    if len(keep) < min_keep:
        ranked = np.argsort(-strength, kind="stable")
        extra = [j for j in ranked if j not in set(keep)][: min_keep - len(keep)]
        log.warning("only %d features pass |r| > %s; keeping %d best", len(keep), threshold, min_keep)
        keep = np.sort(np.concatenate([keep, extra]).astype(int))
    return keep, corr


def _unit_columns(X: np.ndarray) -> np.ndarray:
    """Features as unit vectors (rows), so that x_i . x_j is their Pearson r."""
    Xc = X - X.mean(axis=0)
    norms = np.sqrt((Xc**2).sum(axis=0))
    norms[norms == 0] = 1.0
    return (Xc / norms).T


class _SignFreeKMeans:
    """K-means where a feature and its negation are the same point.

    Distance from unit vector x to centre c is 1 + |c|^2 - 2|x.c|, which between
    two features reduces to 2(1 - |r|). Centres average sign-aligned members.
    """

    def __init__(self, k: int, n_init: int = 10, max_iter: int = 300, seed: int = 0):
        self.k, self.n_init, self.max_iter, self.seed = k, n_init, max_iter, seed

    @staticmethod
    def _dist(U, C):
        return 1.0 + (C**2).sum(1)[None, :] - 2.0 * np.abs(U @ C.T)

    def _init(self, U, rng):
        m = len(U)
        centres = [int(rng.integers(m))]
        for _ in range(1, self.k):
            d2 = np.clip(self._dist(U, U[centres]).min(axis=1), 0.0, None)
            d2[centres] = 0.0
            if d2.sum() <= 0:
                pool = np.setdiff1d(np.arange(m), centres)
                centres.append(int(rng.choice(pool)))
            else:
                centres.append(int(rng.choice(m, p=d2 / d2.sum())))
        return U[centres].copy()

    def _run(self, U, rng):
        C = self._init(U, rng)
        labels = None
        for _ in range(self.max_iter):
            D = self._dist(U, C)
            new = np.argmin(D, axis=1)
            for c in range(self.k):
                if not np.any(new == c):
                    # reseed an empty cluster with the worst-served feature
                    far = int(np.argmax(D[np.arange(len(U)), new]))
                    new[far] = c
                    C[c] = U[far]
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for c in range(self.k):
                members = U[labels == c]
                signs = np.sign(members @ C[c])
                signs[signs == 0] = 1.0
                C[c] = (members * signs[:, None]).mean(axis=0)
        inertia = float(self._dist(U, C)[np.arange(len(U)), labels].sum())
        return labels, C, inertia

    def fit(self, U):
        rng = np.random.default_rng(self.seed)
        best = None
        for _ in range(self.n_init):
            res = self._run(U, rng)
            if best is None or res[2] < best[2] - 1e-12:
                best = res
        return best


def _canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber clusters in order of first appearance."""
    mapping: dict[int, int] = {}
    return np.array([mapping.setdefault(int(v), len(mapping)) for v in labels])


def cluster_features(X: np.ndarray, k: int, seed: int = 0, n_init: int = 10) -> np.ndarray:
    """Cluster the columns of X into ``k`` groups using dissimilarity 1 - |r|."""
    m = X.shape[1]
    if not 1 <= k <= m:
        raise ValueError(f"cannot form {k} clusters from {m} features")
    labels, _, _ = _SignFreeKMeans(k, n_init=n_init, seed=seed).fit(_unit_columns(X))
    return _canonical_labels(labels)


@dataclass
class KMetrics:
    k: int
    silhouette: float
    davies_bouldin: float
    calinski_harabasz: float


def cluster_metrics(X: np.ndarray, labels: np.ndarray) -> tuple[float, float, float]:
    """Silhouette on the 1 - |r| dissimilarity; DB and CH on sign-aligned feature vectors."""
    U = _unit_columns(X)
    diss = np.clip(1.0 - np.abs(U @ U.T), 0.0, None)
    np.fill_diagonal(diss, 0.0)
    sil = float(silhouette_score(diss, labels, metric="precomputed"))
    aligned = U.copy()
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        ref = U[idx[0]]
        s = np.sign(U[idx] @ ref)
        s[s == 0] = 1.0
        aligned[idx] *= s[:, None]
    return sil, float(davies_bouldin_score(aligned, labels)), float(calinski_harabasz_score(aligned, labels))


def k_sweep(X: np.ndarray, ks=None, seed: int = 0, n_init: int = 10) -> list[KMetrics]:
    """Silhouette / Davies-Bouldin / Calinski-Harabasz for each candidate K."""
    m = X.shape[1]
    ks = range(2, m) if ks is None else [k for k in ks if 2 <= k <= m - 1]
    out = []
    for k in ks:
        labels = cluster_features(X, k, seed, n_init)
        if len(np.unique(labels)) < 2:
            continue
        out.append(KMetrics(k, *cluster_metrics(X, labels)))
    return out


def pca_2d(X: np.ndarray) -> np.ndarray | None:
    """First two principal-component scores, or None when X has rank < 2."""
    Xc = X - X.mean(axis=0)
    U, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    if len(S) < 2 or S[1] <= 1e-10 * max(S[0], 1e-300):
        return None
    # fix the sign of each axis so the result does not depend on the LAPACK build
    for i in range(2):
        if Vt[i, np.argmax(np.abs(Vt[i]))] < 0:
            U[:, i] *= -1
    return U[:, :2] * S[:2]


def oob_errors(Z: np.ndarray, good: np.ndarray, seed, n_trees: int = 100) -> np.ndarray:
    """Out-of-bag misclassification rate of one random forest per algorithm."""
    errs = []
    for a in range(good.shape[1]):
        y = good[:, a].astype(int)
        if y.min() == y.max():
            errs.append(0.0)
            continue
        rs = np.random.SeedSequence([*np.atleast_1d(seed), a]).generate_state(1)[0]
        rf = RandomForestClassifier(
            n_estimators=n_trees, max_features=1, bootstrap=True, oob_score=True, random_state=int(rs)
        )
        rf.fit(Z, y)
        errs.append(1.0 - rf.oob_score_)
    return np.array(errs)


@dataclass
class SelectionResult:
    chosen: tuple[int, ...]
    mean_oob: float
    oob: np.ndarray
    evaluated: dict[tuple[int, ...], np.ndarray] = field(repr=False)
    exhaustive: bool
    n_combinations: int


def select_combination(
    X: np.ndarray,
    labels: np.ndarray,
    good: np.ndarray,
    budget: int = 10_000,
    seed: int = 0,
    n_trees: int = 100,
) -> SelectionResult:
    """Pick one feature per cluster minimizing the mean OOB error over algorithms.

    Every combination is scored by projecting the instances onto the first
    two principal components of the chosen (standardized) features and
    training one random forest per algorithm on the "good" labels. When the
    number of combinations exceeds ``budget``, half the budget goes to a
    seeded random sample and the rest to greedy one-cluster-at-a-time
    improvement of the best sample.
    """
    good = np.asarray(good, dtype=bool).reshape(len(X), -1)
    groups = [tuple(np.flatnonzero(labels == c)) for c in np.unique(labels)]
    total = math.prod(len(g) for g in groups)
    Xs = (X - X.mean(axis=0)) / np.where(X.std(axis=0, ddof=1) > 0, X.std(axis=0, ddof=1), 1.0)
    worst = np.ones(good.shape[1])
    evaluated: dict[tuple[int, ...], np.ndarray] = {}

    def score(combo):
        if combo not in evaluated:
            Z = pca_2d(Xs[:, list(combo)]) if len(combo) >= 2 else None
            evaluated[combo] = worst if Z is None else oob_errors(Z, good, (seed, len(evaluated)), n_trees)
        return float(evaluated[combo].mean()) if evaluated[combo].size else 0.0

    budget = max(1, int(budget))
    if total <= budget:
        for combo in itertools.product(*groups):
            score(tuple(sorted(combo)))
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        n_sample = max(1, budget // 2)
        seen = set()
        while len(seen) < n_sample:
            seen.add(tuple(sorted(int(rng.choice(g)) for g in groups)))
        for combo in sorted(seen):
            score(combo)
        current = list(min(evaluated, key=lambda c: (score(c), c)))
        improved = True
        while improved and len(evaluated) < budget:
            improved = False
            for gi, g in enumerate(groups):
                member = next(j for j in current if j in g)
                for alt in g:
                    if alt == member or len(evaluated) >= budget:
                        continue
                    trial = tuple(sorted([j for j in current if j != member] + [alt]))
                    if score(trial) < score(tuple(sorted(current))) - 1e-12:
                        current = list(trial)
                        member = alt
                        improved = True
        exhaustive = False
        log.info("evaluated %d of %d feature combinations", len(evaluated), total)

    best = min(evaluated, key=lambda c: (score(c), c))
    return SelectionResult(best, score(best), evaluated[best], evaluated, exhaustive, total)
