"""Lin-Kernighan probing features (P1-P11).

Probing runs on the TSP relaxation of the instance: every node, depot
included, capacity ignored. Each restart builds a nearest-neighbour tour from
a random start node and descends to a local minimum with a depth-limited
Lin-Kernighan search (sequential 2-opt flips with the first tour node fixed,
first improvement, don't-look bits). A best-improvement 2-opt descent from the
same construction tour supplies the step counts of P1.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..stats import StatSummary

EPS = 1e-10


@dataclass(frozen=True)
class ProbingConfig:
    restarts: int = 20
    depth: int = 3
    breadth: tuple[int, ...] = (5, 3, 1)
    neighbours: int = 8
    time_budget: float | None = 10.0


@dataclass
class RestartTrace:
    start: int
    construction_cost: float
    local_min_cost: float
    improvements: list[float]
    best_improvement_steps: int
    tour: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.improvements)


@dataclass
class ProbingTrace:
    restarts: list[RestartTrace] = field(default_factory=list)
    partial: bool = False


class Tour:
    """Array tour with O(1) successor/predecessor lookup and segment reversal."""

    __slots__ = ("order", "pos", "n")

    def __init__(self, order):
        self.order = np.array(order, dtype=np.int64)
        self.n = len(self.order)
        self.pos = np.empty(self.n, dtype=np.int64)
        self.pos[self.order] = np.arange(self.n)

    def succ(self, v: int) -> int:
        return int(self.order[(self.pos[v] + 1) % self.n])

    def pred(self, v: int) -> int:
        return int(self.order[(self.pos[v] - 1) % self.n])

    def flip(self, a: int, b: int) -> np.ndarray:
        """Reverse the forward path a..b and return the touched positions.

        The complementary path is reversed instead when it is shorter; both give
        the same undirected cycle. Reversing the returned positions again undoes
        the move.
        """
        i, j = int(self.pos[a]), int(self.pos[b])
        length = (j - i) % self.n + 1
        if 2 * length > self.n:
            i, length = (j + 1) % self.n, self.n - length
        idx = (i + np.arange(length)) % self.n
        self.reverse_positions(idx)
        return idx

    def reverse_positions(self, idx: np.ndarray) -> None:
        self.order[idx] = self.order[idx[::-1]]
        self.pos[self.order[idx]] = idx

    def cost(self, d: np.ndarray) -> float:
        return float(d[self.order, np.roll(self.order, -1)].sum())

    def edges(self) -> np.ndarray:
        a, b = self.order, np.roll(self.order, -1)
        return np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)


def nearest_neighbour_tour(d: np.ndarray, start: int) -> list[int]:
    n = len(d)
    visited = np.zeros(n, dtype=bool)
    tour = [start]
    visited[start] = True
    cur = start
    for _ in range(n - 1):
        row = np.where(visited, np.inf, d[cur])
        cur = int(np.argmin(row))
        visited[cur] = True
        tour.append(cur)
    return tour


class LinKernighan:
    """Depth-limited LK descent on a symmetric distance matrix."""

    def __init__(self, d: np.ndarray, neighbours: np.ndarray, depth: int = 3, breadth=(5, 3, 1)):
        self.d = d
        self.nbrs = neighbours
        self.depth = depth
        self.breadth = tuple(breadth) + (1,) * max(0, depth - len(breadth))

    def _step(self, tour: Tour, t1: int, t2: int, g_open: float, level: int, touched: list):
        d = self.d
        tried = 0
        for t3 in self.nbrs[t2]:
            t3 = int(t3)
            g1 = g_open - d[t2, t3]
            if g1 <= EPS:
                break  # candidates are sorted by distance
            if t3 == t1:
                continue
            forward = tour.succ(t1) == t2
            t4 = tour.pred(t3) if forward else tour.succ(t3)
            if t4 == t2 or t4 == t1:
                continue
            tried += 1
            idx = tour.flip(t2, t4) if forward else tour.flip(t4, t2)
            closed = g1 + d[t3, t4] - d[t4, t1]
            if closed > EPS:
                touched.extend((t2, t3, t4))
                return closed
            if level < self.depth:
                gain = self._step(tour, t1, t4, g1 + d[t3, t4], level + 1, touched)
                if gain is not None:
                    touched.extend((t2, t3, t4))
                    return gain
            tour.reverse_positions(idx)
            if tried >= self.breadth[level - 1]:
                break
        return None

    def improve_from(self, tour: Tour, t1: int):
        for t2 in (tour.succ(t1), tour.pred(t1)):
            touched = [t1]
            gain = self._step(tour, t1, t2, self.d[t1, t2], 1, touched)
            if gain is not None:
                return gain, touched
        return None, ()

    def descend(self, tour: Tour, deadline: float | None = None) -> tuple[list[float], bool]:
        """Run to a local minimum. Returns the per-step gains and whether it finished."""
        queue = deque(int(v) for v in tour.order)
        queued = np.ones(tour.n, dtype=bool)
        gains: list[float] = []
        while queue:
            if deadline is not None and len(gains) % 64 == 0 and time.monotonic() > deadline:
                return gains, False
            t1 = queue.popleft()
            queued[t1] = False
            gain, touched = self.improve_from(tour, t1)
            if gain is None:
                continue
            gains.append(float(gain))
            for v in touched:
                if not queued[v]:
                    queued[v] = True
                    queue.append(v)
        return gains, True


def best_improvement_2opt(d: np.ndarray, nbrs: np.ndarray, order, max_steps: int | None = None) -> int:
    """Count the steps of a best-improvement 2-opt descent over neighbour-list moves."""
    tour = Tour(order)
    n = tour.n
    k = nbrs.shape[1]
    b = nbrs
    a = np.repeat(np.arange(n), k).reshape(n, k)
    steps = 0
    limit = max_steps if max_steps is not None else n * n
    while steps < limit:
        nxt = tour.order[(tour.pos + 1) % n]
        prv = tour.order[(tour.pos - 1) % n]
        gain_s = d[a, nxt[a]] + d[b, nxt[b]] - d[a, b] - d[nxt[a], nxt[b]]
        gain_p = d[prv[a], a] + d[prv[b], b] - d[a, b] - d[prv[a], prv[b]]
        fs, fp = int(np.argmax(gain_s)), int(np.argmax(gain_p))
        best_s, best_p = gain_s.flat[fs], gain_p.flat[fp]
        if max(best_s, best_p) <= EPS:
            break
        if best_s >= best_p:
            u, v = divmod(fs, k)
            u, v = int(u), int(b[u, v])
            tour.flip(int(nxt[u]), v)
        else:
            u, v = divmod(fp, k)
            u, v = int(u), int(b[u, v])
            tour.flip(u, int(prv[v]))
        steps += 1
    return steps


def crossings(points: np.ndarray, order: np.ndarray) -> int:
    """Number of pairs of non-adjacent tour edges that properly cross."""
    p = points[order]
    q = np.roll(p, -1, axis=0)
    n = len(p)
    total = 0
    for i in range(n - 2):
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if j.size == 0:
            continue
        a, b = p[i], q[i]
        c, e = p[j], q[j]
        d1 = _orient(a, b, c)
        d2 = _orient(a, b, e)
        d3 = _orient_many(c, e, a)
        d4 = _orient_many(c, e, b)
        total += int(np.count_nonzero((d1 * d2 < 0) & (d3 * d4 < 0)))
    return total


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[:, 1] - a[1]) - (b[1] - a[1]) * (c[:, 0] - a[0])


def _orient_many(c, e, a):
    return (e[:, 0] - c[:, 0]) * (a[1] - c[:, 1]) - (e[:, 1] - c[:, 1]) * (a[0] - c[:, 0])


def run_probing(d: np.ndarray, config: ProbingConfig = ProbingConfig(), seed: int = 0) -> ProbingTrace:
    n = len(d)
    if n < 4:
        raise ValueError("probing needs at least 4 nodes")
    rng = np.random.default_rng(seed)
    k = min(config.neighbours, n - 1)
    masked = np.array(d, dtype=float)
    np.fill_diagonal(masked, np.inf)
    nbrs = np.argsort(masked, axis=1, kind="stable")[:, :k]
    lk = LinKernighan(d, nbrs, config.depth, config.breadth)

    deadline = None if config.time_budget is None else time.monotonic() + config.time_budget
    trace = ProbingTrace()
    starts = rng.integers(0, n, size=config.restarts)
    for r, start in enumerate(starts):
        if r > 0 and deadline is not None and time.monotonic() > deadline:
            trace.partial = True
            break
        order = nearest_neighbour_tour(d, int(start))
        bi_steps = best_improvement_2opt(d, nbrs, order)
        tour = Tour(order)
        c0 = tour.cost(d)
        gains, finished = lk.descend(tour, deadline)
        if not finished:
            trace.partial = True
        trace.restarts.append(
            RestartTrace(int(start), c0, tour.cost(d), gains, bi_steps, tour.order.copy())
        )
        if not finished:
            break
    return trace


def _segments(lengths: np.ndarray, q: int) -> tuple[list[float], list[int], list[float]]:
    """Split a cyclic edge sequence at its q longest edges."""
    m = len(lengths)
    q = max(1, min(q, m))
    cut = np.zeros(m, dtype=bool)
    cut[np.argsort(-lengths, kind="stable")[:q]] = True
    first = int(np.flatnonzero(cut)[0])
    seg_len, seg_cnt, seg_edges = [], [], []
    cur_len, cur_cnt = 0.0, 0
    for step in range(1, m + 1):
        e = (first + step) % m
        if cut[e]:
            seg_len.append(cur_len)
            seg_cnt.append(cur_cnt)
            cur_len, cur_cnt = 0.0, 0
        else:
            cur_len += lengths[e]
            cur_cnt += 1
            seg_edges.append(lengths[e])
    return seg_len, seg_cnt, seg_edges


def probing_features(
    d: np.ndarray,
    routes: int,
    coords: np.ndarray | None = None,
    config: ProbingConfig = ProbingConfig(),
    seed: int = 0,
) -> tuple[dict[str, float], ProbingTrace]:
    """P1-P11 from ``config.restarts`` construction + LK runs.

    ``routes`` is the expected number of routes, used to split final tours
    into segments for P3-P5. P8 needs ``coords``.
    """
    trace = run_probing(d, config, seed)
    runs = trace.restarts
    out: dict[str, float] = {}
    out.update(StatSummary.of([r.best_improvement_steps for r in runs]).as_features("P1"))

    quartiles, seg_len, seg_cnt, seg_edges = [], [], [], []
    for r in runs:
        lengths = d[r.tour, np.roll(r.tour, -1)]
        quartiles.append(np.quantile(lengths, [0.25, 0.5, 0.75, 1.0]))
        sl, sc, se = _segments(lengths, routes)
        seg_len += sl
        seg_cnt += sc
        seg_edges += se
    quartiles = np.array(quartiles)
    out.update(StatSummary.of(quartiles).as_features("P2"))
    for i, qv in enumerate(quartiles.mean(axis=0), start=1):
        out[f"P2_q{i}"] = float(qv)
    out.update(StatSummary.of(seg_len).as_features("P3"))
    out.update(StatSummary.of(seg_cnt).as_features("P4"))
    out.update(StatSummary.of(seg_edges).as_features("P5"))
    out.update(StatSummary.of([r.construction_cost for r in runs]).as_features("P6"))
    out.update(StatSummary.of([r.local_min_cost for r in runs]).as_features("P7"))
    if coords is not None:
        out["P8"] = float(np.mean([crossings(coords, r.tour) for r in runs]))
    out.update(StatSummary.of([g for r in runs for g in r.improvements]).as_features("P9"))
    out.update(StatSummary.of([r.steps for r in runs]).as_features("P10"))

    edges = np.concatenate([Tour(r.tour).edges() for r in runs])
    _, counts = np.unique(edges, axis=0, return_counts=True)
    out.update(StatSummary.of(counts / len(runs)).as_features("P11"))
    return out, trace
