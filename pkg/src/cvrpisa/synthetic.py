"""Synthetic instances and metadata for demos and smoke runs."""

from __future__ import annotations

import numpy as np

from .features import CATALOG
from .instance import Instance
from .isa.metadata import MetadataTable


def synthetic_metadata(
    n: int = 50, d: int = 10, a: int = 3, seed: int = 0, feature_names=None, informative: int = 3
) -> MetadataTable:
    """An n x d feature table whose first ``informative`` features drive a algorithm PIs.

    Feature names default to the first d catalog entries so that fitted
    models load strictly. PIs lie in [0, 1]; roughly a third of the
    (instance, algorithm) pairs fall under 0.15.
    """
    rng = np.random.default_rng(seed)
    names = list(feature_names or CATALOG[:d])
    F = rng.lognormal(0.0, 0.5, size=(n, d))
    drivers = np.log(F[:, :informative])
    W = rng.normal(0.0, 1.0, size=(informative, a))
    signal = drivers @ W
    signal = (signal - signal.mean(axis=0)) / signal.std(axis=0)
    pi = 1.0 / (1.0 + np.exp(-(signal + 0.3 * rng.normal(size=(n, a)) - 0.7)))
    pi = np.clip(pi - 0.1, 0.0, 1.0)
    instances = [f"S{'ABC'[i % 3]}-n{100 + i:03d}-k{5 + i % 7}" for i in range(n)]
    return MetadataTable(instances, F, names, pi, [f"alg{j + 1}" for j in range(a)])


def x_style_instance(
    n_customers: int,
    seed: int = 0,
    depot: str = "random",
    layout: str = "random",
    demand: str = "uniform",
    route_size: float = 10.0,
    name: str | None = None,
) -> Instance:
    """A CVRP instance drawn the way the X benchmark set was built.

    Points lie on a 1000 x 1000 integer grid. ``depot`` is one of central,
    eccentric or random. ``layout`` is random, clustered or mixed (half of
    the customers clustered). ``demand`` is unit, small (1-10), uniform
    (1-100) or quadrant (large demands in odd quadrants). Capacity is set so
    that routes hold about ``route_size`` customers.
    """
    rng = np.random.default_rng(seed)
    if depot == "central":
        dpt = np.array([500, 500])
    elif depot == "eccentric":
        dpt = np.array([0, 0])
    elif depot == "random":
        dpt = rng.integers(0, 1001, size=2)
    else:
        raise ValueError(f"unknown depot placement {depot!r}")

    if layout == "random":
        n_clustered = 0
    elif layout == "clustered":
        n_clustered = n_customers
    elif layout == "mixed":
        n_clustered = n_customers // 2
    else:
        raise ValueError(f"unknown layout {layout!r}")
    pts = [rng.integers(0, 1001, size=(n_customers - n_clustered, 2))]
    if n_clustered:
        seeds = rng.integers(0, 1001, size=(int(rng.integers(3, 9)), 2))
        chosen = []
        while len(chosen) < n_clustered:
            p = rng.integers(0, 1001, size=2)
            # acceptance falls off exponentially with distance to the nearest seed
            near = np.min(np.hypot(*(seeds - p).T))
            if rng.random() < np.exp(-near / 40.0):
                chosen.append(p)
        pts.append(np.array(chosen))
    cust = np.vstack(pts).astype(float)

    if demand == "unit":
        q = np.ones(n_customers)
    elif demand == "small":
        q = rng.integers(1, 11, size=n_customers)
    elif demand == "uniform":
        q = rng.integers(1, 101, size=n_customers)
    elif demand == "quadrant":
        odd = (cust[:, 0] >= 500) ^ (cust[:, 1] >= 500)
        q = np.where(odd, rng.integers(51, 101, size=n_customers), rng.integers(1, 51, size=n_customers))
    else:
        raise ValueError(f"unknown demand distribution {demand!r}")
    q = q.astype(np.int64)
    capacity = int(max(np.ceil(route_size * q.mean()), q.max()))

    coords = np.vstack([dpt.astype(float), cust])
    demands = np.concatenate([[0], q])
    k = int(np.ceil(q.sum() / capacity))
    return Instance(
        name=name or f"X-n{n_customers + 1}-k{k}",
        dimension=n_customers + 1,
        capacity=capacity,
        depot_index=0,
        demands=demands,
        edge_weight_type="EUC_2D",
        coords=coords,
    )
