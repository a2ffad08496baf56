import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvrpisa.features import CATALOG, PROJECTION_FEATURES, FeatureVector
from cvrpisa.isa.metadata import MetadataTable
from cvrpisa.projection import (
    PUBLISHED_MATRIX_COLUMNS,
    MissingFeature,
    ProjectionModel,
    builtin_model,
    fit_transform,
    load_model,
    model_from_json,
    model_to_json,
    project,
    project_batch,
    save_model,
)

MODEL = builtin_model()


def unit(name):
    return {n: float(n == name) for n in PROJECTION_FEATURES}


def test_builtin_shape_and_names():
    assert MODEL.matrix.shape == (2, 23)
    assert MODEL.feature_names == PROJECTION_FEATURES
    assert len(set(PROJECTION_FEATURES)) == 23 and set(PROJECTION_FEATURES) <= set(CATALOG)


@pytest.mark.parametrize("j", range(23))
def test_unit_vectors_recover_columns(j):
    assert project(MODEL, unit(PROJECTION_FEATURES[j])) == pytest.approx(PUBLISHED_MATRIX_COLUMNS[j], abs=1e-12)


def test_spot_values():
    assert project(MODEL, unit("NN3_sd")) == pytest.approx((-0.93, -0.34))
    assert project(MODEL, unit("MST2_mean")) == pytest.approx((-0.42, 1.63))
    assert project(MODEL, unit("G2")) == pytest.approx((0.61, 0.93))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.floats(-10, 10), st.floats(-10, 10))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 23))
    fx = dict(zip(PROJECTION_FEATURES, x))
    fy = dict(zip(PROJECTION_FEATURES, y))
    combo = dict(zip(PROJECTION_FEATURES, a * x + b * y))
    lhs = np.array(project(MODEL, combo))
    rhs = a * np.array(project(MODEL, fx)) + b * np.array(project(MODEL, fy))
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_accepts_feature_vector_with_extra_entries():
    values = dict(zip(PROJECTION_FEATURES, np.linspace(-1, 1, 23)))
    fv = FeatureVector("X-n1-k1", {**values, "G1": 3.0})
    assert project(MODEL, fv) == project(MODEL, values)


def test_missing_features_all_listed():
    values = dict(zip(PROJECTION_FEATURES, np.ones(23)))
    del values["P5_mean"], values["G2"]
    values["NN3_sd"] = float("nan")
    with pytest.raises(MissingFeature) as err:
        project(MODEL, values)
    assert set(err.value.names) == {"P5_mean", "G2", "NN3_sd"}


def table(rows, names=PROJECTION_FEATURES, instances=None):
    F = np.array(rows, dtype=float)
    return MetadataTable(instances or [f"I{i}" for i in range(len(F))], F, list(names))


def test_batch_excludes_incomplete_rows():
    rng = np.random.default_rng(0)
    F = rng.normal(size=(5, 23))
    F[1, 3] = np.nan
    F[4, [0, 22]] = np.nan
    res = project_batch(MODEL, table(F))
    assert res.instances == ["I0", "I2", "I3"]
    assert res.excluded == [("I1", (PROJECTION_FEATURES[3],)), ("I4", (PROJECTION_FEATURES[0], PROJECTION_FEATURES[22]))]
    for name, z in zip(res.instances, res.Z):
        i = int(name[1:])
        assert np.allclose(z, project(MODEL, dict(zip(PROJECTION_FEATURES, F[i]))))


def test_batch_with_column_absent():
    names = list(PROJECTION_FEATURES[:-1])
    res = project_batch(MODEL, table(np.ones((2, 22)), names))
    assert res.Z.shape == (0, 2) and len(res.excluded) == 2


def test_json_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(1)
    m = ProjectionModel(PROJECTION_FEATURES[:4], rng.normal(size=(2, 4)) / 3, None, "random")
    again = model_from_json(model_to_json(m))
    assert again == m
    assert np.array_equal(again.matrix, m.matrix)
    save_model(MODEL, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json") == MODEL
    assert model_to_json(load_model(tmp_path / "m.json")) == model_to_json(MODEL)


def test_strict_catalog():
    m = ProjectionModel(("mystery",), np.ones((2, 1)))
    text = model_to_json(m)
    with pytest.raises(ValueError, match="catalog"):
        model_from_json(text)
    assert model_from_json(text, strict=False) == m
    doc = json.loads(text)
    doc["transform"] = {"kind": "log"}
    with pytest.raises(ValueError):
        model_from_json(json.dumps(doc), strict=False)


def test_fit_transform_standardizes_reference():
    rng = np.random.default_rng(2)
    F = rng.lognormal(size=(60, 23))
    ref = table(F)
    fitted = fit_transform(MODEL, ref)
    assert fitted.transform is not None and MODEL.transform is None
    normed = fitted.normalize(F)
    assert np.abs(normed.mean(0)).max() < 1e-9
    assert np.abs(normed.std(0, ddof=1) - 1).max() < 1e-9
    again = model_from_json(model_to_json(fitted))
    assert again == fitted
    assert np.array_equal(project_batch(again, ref).Z, project_batch(fitted, ref).Z)


def test_fit_transform_missing_column():
    with pytest.raises(MissingFeature):
        fit_transform(MODEL, table(np.ones((3, 2)), ["G1", "G2"]))
