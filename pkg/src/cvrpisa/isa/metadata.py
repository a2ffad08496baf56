"""Metadata table (features F, performance Y) and its CSV form.

CSV layout follows the ISA toolkit: ``Instances,Source`` first, then any
free-form attribute columns, ``feature_<name>`` columns and ``algo_<name>``
columns. Empty cells are missing values.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..io_utils import atomic_write_text, fmt_float

FEATURE_PREFIX = "feature_"
ALGO_PREFIX = "algo_"


class MetadataError(ValueError):
    pass


@dataclass
class MetadataTable:
    instances: list[str]
    F: np.ndarray
    feature_names: list[str]
    Y: np.ndarray | None = None
    algorithm_names: list[str] = field(default_factory=list)
    sources: list[str] | None = None
    attributes: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float).reshape(len(self.instances), len(self.feature_names))
        if self.Y is None:
            self.Y = np.zeros((len(self.instances), 0))
        self.Y = np.asarray(self.Y, dtype=float).reshape(len(self.instances), len(self.algorithm_names))
        if self.sources is None:
            self.sources = [source_tag(name) for name in self.instances]
        if len(set(self.instances)) != len(self.instances):
            raise MetadataError("instance names must be unique")

    @property
    def n(self) -> int:
        return len(self.instances)

    def complete_rows(self, features=None) -> np.ndarray:
        cols = slice(None) if features is None else [self.feature_names.index(f) for f in features]
        ok = np.isfinite(self.F[:, cols]).all(axis=1)
        if self.Y.shape[1]:
            ok &= np.isfinite(self.Y).all(axis=1)
        return ok

    def subset(self, rows) -> "MetadataTable":
        rows = np.asarray(rows)
        if rows.dtype == bool:
            rows = np.flatnonzero(rows)
        return MetadataTable(
            instances=[self.instances[i] for i in rows],
            F=self.F[rows],
            feature_names=list(self.feature_names),
            Y=self.Y[rows],
            algorithm_names=list(self.algorithm_names),
            sources=[self.sources[i] for i in rows],
            attributes={k: [v[i] for i in rows] for k, v in self.attributes.items()},
        )

    def column(self, name: str) -> np.ndarray:
        """A feature, algorithm or attribute column as floats, by bare or prefixed name."""
        bare = name.removeprefix(FEATURE_PREFIX).removeprefix(ALGO_PREFIX)
        if name.startswith(ALGO_PREFIX) and bare in self.algorithm_names:
            return self.Y[:, self.algorithm_names.index(bare)]
        if bare in self.feature_names and not name.startswith(ALGO_PREFIX):
            return self.F[:, self.feature_names.index(bare)]
        if bare in self.algorithm_names:
            return self.Y[:, self.algorithm_names.index(bare)]
        if name in self.attributes:
            return np.array([_parse_cell(v) for v in self.attributes[name]])
        raise KeyError(name)


def source_tag(instance_name: str) -> str:
    """Benchmark set from a CVRPLib-style name: ``X-n101-k25`` -> ``X``."""
    return instance_name.split("-", 1)[0] if "-" in instance_name else instance_name


def _parse_cell(v: str) -> float:
    v = v.strip()
    if v == "" or v.lower() in ("nan", "na"):
        return np.nan
    try:
        return float(v)
    except ValueError:
        raise MetadataError(f"not a number: {v!r}") from None


def read_metadata(path: str | Path) -> MetadataTable:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MetadataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "Instances":
        raise MetadataError(f"{path}: first column must be 'Instances'")
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    for r in body:
        if len(r) != len(header):
            raise MetadataError(f"{path}: row {r[:1]} has {len(r)} cells, header has {len(header)}")
    feat_cols = [i for i, h in enumerate(header) if h.startswith(FEATURE_PREFIX)]
    algo_cols = [i for i, h in enumerate(header) if h.startswith(ALGO_PREFIX)]
    src_col = header.index("Source") if "Source" in header else None
    attr_cols = [
        i for i, h in enumerate(header)
        if i > 0 and i != src_col and i not in feat_cols and i not in algo_cols
    ]
    return MetadataTable(
        instances=[r[0].strip() for r in body],
        F=np.array([[_parse_cell(r[i]) for i in feat_cols] for r in body]).reshape(len(body), len(feat_cols)),
        feature_names=[header[i][len(FEATURE_PREFIX):] for i in feat_cols],
        Y=np.array([[_parse_cell(r[i]) for i in algo_cols] for r in body]).reshape(len(body), len(algo_cols)),
        algorithm_names=[header[i][len(ALGO_PREFIX):] for i in algo_cols],
        sources=[r[src_col].strip() for r in body] if src_col is not None else None,
        attributes={header[i]: [r[i].strip() for r in body] for i in attr_cols},
    )


def metadata_csv(table: MetadataTable) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    attrs = list(table.attributes)
    w.writerow(
        ["Instances", "Source"] + attrs
        + [FEATURE_PREFIX + f for f in table.feature_names]
        + [ALGO_PREFIX + a for a in table.algorithm_names]
    )
    for i, name in enumerate(table.instances):
        w.writerow(
            [name, table.sources[i]] + [table.attributes[a][i] for a in attrs]
            + [fmt_float(v) for v in table.F[i]]
            + [fmt_float(v) for v in table.Y[i]]
        )
    return out.getvalue()


def write_metadata(table: MetadataTable, path: str | Path) -> None:
    atomic_write_text(path, metadata_csv(table))


def join_performance(table: MetadataTable, perf: MetadataTable) -> MetadataTable:
    """Append the algorithm columns of ``perf`` to ``table``, matching rows by instance name.

    Instances absent from ``perf`` get NaN performance (the pipeline then
    excludes and reports them); instances only in ``perf`` are ignored.
    """
    clash = set(table.algorithm_names) & set(perf.algorithm_names)
    if clash:
        raise MetadataError(f"algorithm columns present in both tables: {sorted(clash)}")
    index = {name: i for i, name in enumerate(perf.instances)}
    extra = np.full((table.n, len(perf.algorithm_names)), np.nan)
    for i, name in enumerate(table.instances):
        if name in index:
            extra[i] = perf.Y[index[name]]
    return MetadataTable(
        instances=list(table.instances),
        F=table.F,
        feature_names=list(table.feature_names),
        Y=np.hstack([table.Y, extra]),
        algorithm_names=list(table.algorithm_names) + list(perf.algorithm_names),
        sources=list(table.sources),
        attributes=dict(table.attributes),
    )


def table_from_features(vectors, feature_names=None) -> MetadataTable:
    """Stack FeatureVectors into a table; missing features become NaN."""
    from ..features import CATALOG

    vectors = list(vectors)
    names = list(feature_names or CATALOG)
    return MetadataTable(
        instances=[v.instance_name for v in vectors],
        F=np.array([v.as_array(names) for v in vectors]).reshape(len(vectors), len(names)),
        feature_names=names,
        attributes={"n_customers": [str(v.n_customers) for v in vectors]},
    )
