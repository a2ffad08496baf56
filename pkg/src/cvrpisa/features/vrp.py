"""Features read directly off the CVRP data (VRP1-VRP5)."""

from __future__ import annotations

import numpy as np

from ..instance import Instance
from ..stats import StatSummary
from .geometry import normalize_coords


def vrp_features(inst: Instance, dmat: np.ndarray, raw_dmat: np.ndarray | None = None) -> dict[str, float]:
    """VRP1 is only emitted when the instance has coordinates."""
    cust = inst.customer_indices
    depot = inst.depot_index
    out: dict[str, float] = {}
    if inst.coords is not None:
        for suffix, pts in (("", normalize_coords(inst.coords)), ("_raw", inst.coords)):
            centroid = pts[cust].mean(axis=0)
            out["VRP1" + suffix] = float(np.linalg.norm(centroid - pts[depot]))
    out.update(StatSummary.of(dmat[depot, cust]).as_features("VRP2"))
    if raw_dmat is not None:
        raw = StatSummary.of(raw_dmat[depot, cust]).as_features("VRP2")
        out.update({k + "_raw": v for k, v in raw.items()})
    out.update(StatSummary.of(inst.demands[cust]).as_features("VRP3"))
    k_min = inst.min_vehicles
    out["VRP4"] = inst.total_demand / (k_min * inst.capacity)
    out["VRP5"] = len(cust) / k_min
    return out
