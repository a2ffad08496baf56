"""Linear 2-D projections of feature vectors, including the published CVRP model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .features import CATALOG, PROJECTION_FEATURES
from .io_utils import atomic_write_text
from .isa.prelim import ColumnTransform

# Columns of the published projection matrix (Z1, Z2), one per PROJECTION_FEATURES entry.
PUBLISHED_MATRIX_COLUMNS = (
    (-0.93, -0.34),
    (-0.29, 0.73),
    (-0.67, 0.62),
    (-1.23, 0.89),
    (-1.07, 0.19),
    (-0.91, 0.80),
    (-0.45, 0.35),
    (-0.58, 0.50),
    (-0.43, 0.96),
    (-0.52, 1.12),
    (-0.65, 0.48),
    (-0.48, 0.86),
    (-0.57, 0.86),
    (0.82, 0.61),
    (0.42, 1.12),
    (0.52, 0.85),
    (-0.48, 0.32),
    (0.56, 0.73),
    (0.61, 0.93),
    (0.11, 0.74),
    (0.51, 0.66),
    (-0.19, 0.36),
    (-0.42, 1.63),
)


class MissingFeature(KeyError):
    def __init__(self, names):
        self.names = tuple(names)
        super().__init__(f"missing features: {', '.join(self.names)}")


@dataclass(frozen=True, eq=False)
class ProjectionModel:
    """A 2 x d matrix over named features plus the per-feature normalization.

    ``transform`` maps feature name to the fitted :class:`ColumnTransform`;
    ``None`` means the feature values are used as given.
    """

    feature_names: tuple[str, ...]
    matrix: np.ndarray
    transform: Mapping[str, ColumnTransform] | None = None
    description: str = field(default="", compare=False)

    def __post_init__(self):
        names = tuple(self.feature_names)
        m = np.array(self.matrix, dtype=float, order="C")
        if m.shape != (2, len(names)):
            raise ValueError(f"matrix must be 2 x {len(names)}, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "matrix", m)
        if self.transform is not None:
            missing = set(names) - set(self.transform)
            if missing:
                raise ValueError(f"transform lacks {sorted(missing)}")

    def __eq__(self, other):
        if not isinstance(other, ProjectionModel):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.matrix, other.matrix)
            and _transform_dict(self) == _transform_dict(other)
        )

    __hash__ = None

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """Apply the model's transform to raw values (last axis = features)."""
        v = np.asarray(values, dtype=float)
        if self.transform is None:
            return v
        cols = [self.transform[n].apply(v[..., j]) for j, n in enumerate(self.feature_names)]
        return np.stack(cols, axis=-1)

    def with_transform(self, transform: Mapping[str, ColumnTransform] | None) -> "ProjectionModel":
        return ProjectionModel(self.feature_names, self.matrix, transform, self.description)


def builtin_model() -> ProjectionModel:
    """The published 23-feature CVRP projection, with an identity transform."""
    return ProjectionModel(
        PROJECTION_FEATURES,
        np.array(PUBLISHED_MATRIX_COLUMNS).T,
        None,
        "Published CVRP instance space projection (23 features)",
    )


# alias under the long-form name
builtin_paper_model = builtin_model


def _values_of(model: ProjectionModel, fv) -> np.ndarray:
    get = fv.get if hasattr(fv, "get") else fv.__getitem__
    values, missing = [], []
    for name in model.feature_names:
        v = get(name, None)
        if v is None or not np.isfinite(v):
            missing.append(name)
        else:
            values.append(float(v))
    if missing:
        raise MissingFeature(missing)
    return np.array(values)


def project(model: ProjectionModel, fv) -> tuple[float, float]:
    """Coordinates (Z1, Z2) of one feature vector (a FeatureVector or a name -> value mapping)."""
    z = model.matrix @ model.normalize(_values_of(model, fv))
    return float(z[0]), float(z[1])


@dataclass
class BatchProjection:
    instances: list[str]
    Z: np.ndarray
    excluded: list[tuple[str, tuple[str, ...]]]


def project_batch(model: ProjectionModel, table) -> BatchProjection:
    """Project every complete row of a MetadataTable; incomplete rows are reported, not dropped silently."""
    names, rows, excluded = [], [], []
    cols = {n: j for j, n in enumerate(table.feature_names)}
    for i, inst in enumerate(table.instances):
        missing = [n for n in model.feature_names if n not in cols or not np.isfinite(table.F[i, cols[n]])]
        if missing:
            excluded.append((inst, tuple(missing)))
            continue
        names.append(inst)
        rows.append(table.F[i, [cols[n] for n in model.feature_names]])
    if rows:
        Z = model.normalize(np.array(rows)) @ model.matrix.T
    else:
        Z = np.zeros((0, 2))
    return BatchProjection(names, Z, excluded)


def _transform_dict(model: ProjectionModel):
    if model.transform is None:
        return None
    return {n: model.transform[n].to_dict() for n in model.feature_names}


def model_to_json(model: ProjectionModel) -> str:
    doc = {
        "description": model.description,
        "feature_names": list(model.feature_names),
        "matrix": model.matrix.tolist(),
        "transform": (
            {"kind": "identity"} if model.transform is None
            else {"kind": "columns", "columns": _transform_dict(model)}
        ),
    }
    return json.dumps(doc, indent=2) + "\n"


def model_from_json(text: str, strict: bool = True) -> ProjectionModel:
    """Inverse of :func:`model_to_json`. With ``strict``, every feature must be in the catalog."""
    doc = json.loads(text)
    names = tuple(doc["feature_names"])
    unknown = [n for n in names if n not in CATALOG]
    if strict and unknown:
        raise ValueError(f"features not in the catalog: {unknown}")
    block = doc.get("transform") or {"kind": "identity"}
    if block["kind"] == "identity":
        transform = None
    elif block["kind"] == "columns":
        transform = {n: ColumnTransform.from_dict(block["columns"][n]) for n in names}
    else:
        raise ValueError(f"unknown transform kind {block['kind']!r}")
    return ProjectionModel(names, np.array(doc["matrix"], dtype=float), transform, doc.get("description", ""))


def save_model(model: ProjectionModel, path: str | Path) -> None:
    atomic_write_text(path, model_to_json(model))


def load_model(path: str | Path, strict: bool = True) -> ProjectionModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"), strict)


def fit_transform(model: ProjectionModel, table, bound: bool = False) -> ProjectionModel:
    """Attach a PRELIM transform (Box-Cox + z-score) fitted on a reference table.

    The published matrix comes without its normalization parameters; this
    fits them on whatever corpus the caller supplies.
    """
    from .isa.prelim import fit_column

    cols = {n: j for j, n in enumerate(table.feature_names)}
    missing = [n for n in model.feature_names if n not in cols]
    if missing:
        raise MissingFeature(missing)
    ok = np.isfinite(table.F[:, [cols[n] for n in model.feature_names]]).all(axis=1)
    transform = {n: fit_column(table.F[ok, cols[n]], bound, True) for n in model.feature_names}
    return model.with_transform(transform)
