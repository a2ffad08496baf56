"""Instance features in six categories: ND, MST, P, G, NN and VRP.

``extract_all`` assembles one :class:`FeatureVector` per instance. Names follow
``<item>_<statistic>`` (``NN3_sd``, ``MST2_mean``) or just ``<item>`` for
scalars (``ND2``, ``G2``); ``_raw`` marks a duplicate computed on the
instance's original scale instead of normalized coordinates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..instance import Instance, distance_matrix, euclidean_matrix
from ..stats import summary_names
from .geometry import GeometryUnavailable, geometric_features, normalize_coords
from .mst import mst_features
from .nd import nd_features
from .nn import DEFAULT_KSET, nn_features
from .probing import ProbingConfig, ProbingTrace, probing_features
from .vrp import vrp_features

__all__ = [
    "CATALOG",
    "PROJECTION_FEATURES",
    "ExtractionConfig",
    "FeatureVector",
    "GeometryUnavailable",
    "ProbingConfig",
    "extract_all",
    "feature_catalog",
    "working_matrix",
]

log = logging.getLogger(__name__)

# The 23 features of the published projection, in its column order.
PROJECTION_FEATURES = (
    "NN3_sd", "ND8_var", "P5_mean", "NN3_skew", "P6_sd", "P4_mean", "P11_skew",
    "ND2", "NN2_max", "NN2_skew", "VRP4", "P10_mean", "MST3_median", "ND5_mean",
    "P7_var", "P2_mean", "P1_mean", "P3_mean", "G2", "P6_skew", "P9_mean",
    "P5_skew", "MST2_mean",
)


def _raw(names):
    return [n + "_raw" for n in names]


def feature_catalog() -> tuple[str, ...]:
    s = summary_names
    nd = (
        s("ND1") + _raw(s("ND1")) + ["ND2", "ND2_raw", "ND3", "ND4_x", "ND4_y"]
        + s("ND5") + _raw(s("ND5")) + ["ND6"] + s("ND7") + s("ND8") + _raw(s("ND8")) + ["ND9"]
    )
    mst = s("MST1") + ["MST1_total"] + _raw(s("MST1")) + ["MST1_total_raw"] + s("MST2") + s("MST3")
    probing = (
        s("P1") + s("P2") + [f"P2_q{i}" for i in range(1, 5)] + s("P3") + s("P4") + s("P5")
        + s("P6") + s("P7") + ["P8"] + s("P9") + s("P10") + s("P11")
    )
    geo = (
        ["G1", "G2", "G3"] + s("G4") + s("G5")
        + ["G1_raw", "G2_raw"] + _raw(s("G4")) + _raw(s("G5"))
    )
    nn = s("NN1") + _raw(s("NN1")) + [n for i in range(2, 9) for n in s(f"NN{i}")]
    vrp = ["VRP1", "VRP1_raw"] + s("VRP2") + _raw(s("VRP2")) + s("VRP3") + ["VRP4", "VRP5"]
    return tuple(nd + mst + probing + geo + nn + vrp)


CATALOG = feature_catalog()
_CATALOG_INDEX = {name: i for i, name in enumerate(CATALOG)}


@dataclass(frozen=True)
class ExtractionConfig:
    probing: ProbingConfig = ProbingConfig()
    kset: tuple[int, ...] = DEFAULT_KSET
    dbscan_eps: float = 0.1
    dbscan_min_pts: int = 3


@dataclass
class FeatureVector:
    """Finite feature values for one instance, in catalog order.

    Features that could not be computed are listed in ``missing`` and absent
    from ``entries``; ``flags`` carries notes such as a truncated probing run.
    """

    instance_name: str
    entries: dict[str, float]
    missing: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()
    n_customers: int = 0
    probing_trace: ProbingTrace | None = field(default=None, repr=False, compare=False)

    def __getitem__(self, name: str) -> float:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def get(self, name: str, default=None):
        return self.entries.get(name, default)

    def as_array(self, names) -> np.ndarray:
        return np.array([self.entries.get(n, np.nan) for n in names], dtype=float)


def working_matrix(inst: Instance) -> np.ndarray:
    """Distances on the normalized scale used by all un-suffixed features.

    EUC_2D: unrounded Euclidean distances between normalized coordinates.
    EXPLICIT: the stored weights divided by their maximum.
    """
    if inst.edge_weight_type == "EUC_2D":
        return euclidean_matrix(normalize_coords(inst.coords))
    m = np.array(inst.explicit_matrix, dtype=float)
    top = m.max()
    return m / top if top > 0 else m


def extract_all(inst: Instance, config: ExtractionConfig = ExtractionConfig(), seed: int = 0) -> FeatureVector:
    """Compute every catalog feature that the instance supports."""
    d = working_matrix(inst)
    raw = distance_matrix(inst)
    coords = normalize_coords(inst.coords) if inst.has_coords else None
    depot = inst.depot_index
    values: dict[str, float] = {}
    flags: list[str] = []

    if inst.has_coords:
        values.update(nd_features(inst.coords, d, raw, depot, config.dbscan_eps, config.dbscan_min_pts))
        values.update(geometric_features(inst.coords))
    else:
        flags.append("geometry-unavailable")

    values.update(mst_features(d, depot, raw))

    if inst.dimension >= 4:
        p, trace = probing_features(d, inst.min_vehicles, coords, config.probing, seed)
        values.update(p)
        if trace.partial:
            flags.append(f"probing-partial:{len(trace.restarts)}/{config.probing.restarts}")
            log.warning("%s: probing budget exhausted after %d restarts", inst.name, len(trace.restarts))
    else:
        trace = None
        flags.append("probing-skipped")

    if inst.dimension >= 3:
        values.update(nn_features(d, config.kset, coords, raw))
    values.update(vrp_features(inst, d, raw))

    unknown = set(values) - set(_CATALOG_INDEX)
    assert not unknown, f"uncatalogued features {sorted(unknown)}"
    bad = [k for k, v in values.items() if not math.isfinite(v)]
    for k in bad:
        del values[k]
    entries = {k: float(values[k]) for k in CATALOG if k in values}
    missing = tuple(k for k in CATALOG if k not in entries)
    return FeatureVector(
        instance_name=inst.name,
        entries=entries,
        missing=missing,
        flags=tuple(flags),
        n_customers=inst.n_customers,
        probing_trace=trace,
    )
