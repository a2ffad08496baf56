import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvrpisa.isa.metadata import MetadataError, MetadataTable, metadata_csv, read_metadata, write_metadata
from cvrpisa.isa.pilot import IllConditioned, objective, pilot, stationarity
from cvrpisa.isa.pipeline import (
    ConfigError,
    OUTPUT_FILES,
    PipelineConfig,
    parse_config,
    run_pipeline,
    write_outputs,
)
from cvrpisa.isa.prelim import ColumnTransform, PrelimConfig, fit_column, iqr_bounds, prelim
from cvrpisa.isa.sifted import (
    cluster_features,
    cluster_metrics,
    correlation_filter,
    k_sweep,
    pearson_matrix,
    select_combination,
)
from cvrpisa.synthetic import synthetic_metadata

PUBLISHED_CONFIG = """# parameters of the published analysis
epsilon = 0.15
k = 23
ntry = 30
phi_max = false
phi_bnd = false
phi_nrm = false
"""


# ---- metadata ---------------------------------------------------------------


def test_metadata_round_trip(tmp_path):
    t = synthetic_metadata(6, 4, 2, seed=0)
    t.F[2, 1] = np.nan
    t.attributes["n_customers"] = [str(i) for i in range(6)]
    write_metadata(t, tmp_path / "m.csv")
    back = read_metadata(tmp_path / "m.csv")
    assert back.instances == t.instances and back.sources == t.sources
    assert np.array_equal(back.F, t.F, equal_nan=True)
    assert np.array_equal(back.Y, t.Y)
    assert back.feature_names == t.feature_names and back.algorithm_names == t.algorithm_names
    assert metadata_csv(back) == metadata_csv(t)
    assert back.column("n_customers").tolist() == list(range(6))


def test_metadata_errors(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("Name,feature_a\nx,1\n")
    with pytest.raises(MetadataError):
        read_metadata(p)
    p.write_text("Instances,feature_a\nx,1,2\n")
    with pytest.raises(MetadataError):
        read_metadata(p)
    p.write_text("Instances,feature_a\nx,abc\n")
    with pytest.raises(MetadataError):
        read_metadata(p)


# ---- PRELIM -----------------------------------------------------------------


def test_pass_through_when_flags_off():
    rng = np.random.default_rng(0)
    F, Y = rng.normal(size=(30, 4)), rng.random((30, 2))
    res = prelim(F, Y, PrelimConfig(0.15, normalized=True))
    assert np.array_equal(res.F, F) and np.array_equal(res.Y, Y)
    assert np.array_equal(res.good, Y <= 0.15)
    res = prelim(F, Y, PrelimConfig(0.15, prenormalized=True))
    assert np.array_equal(res.F, F)


def test_transform_standardizes():
    rng = np.random.default_rng(1)
    z = rng.normal(size=(100, 3))
    z = (z - z.mean(0)) / z.std(0, ddof=1)
    res = prelim(z, rng.random((100, 1)), PrelimConfig())
    assert np.abs(res.F.mean(0)).max() < 1e-9
    assert np.abs(res.F.std(0, ddof=1) - 1).max() < 1e-9


def test_bounding_clamps_outlier():
    rng = np.random.default_rng(2)
    x = rng.normal(10, 1, size=50)
    x[7] = 1000 * x.max()
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    t = fit_column(x, bound=True, transform=False)
    assert t.upper == pytest.approx(med + 5 * (q3 - q1))
    assert t.apply(x).max() == pytest.approx(med + 5 * (q3 - q1))
    assert iqr_bounds(x)[0] == pytest.approx(med - 5 * (q3 - q1))


def test_constant_feature_dropped(caplog):
    rng = np.random.default_rng(3)
    F = np.c_[rng.normal(size=20), np.full(20, 4.0), rng.normal(size=20)]
    res = prelim(F, rng.random((20, 1)), PrelimConfig(), ["a", "b", "c"])
    assert res.kept == [0, 2] and res.dropped == [1]
    assert "dropping constant feature b" in caplog.text


def test_transform_reapplies_to_unseen_values():
    rng = np.random.default_rng(4)
    x = rng.lognormal(size=40)
    t = fit_column(x, bound=False, transform=True)
    again = ColumnTransform.from_dict(t.to_dict())
    assert again == t
    assert np.allclose(again.apply(x), t.apply(x))
    assert abs(t.apply(x).mean()) < 1e-9


def test_labels_use_raw_performance():
    F = np.random.default_rng(5).normal(size=(10, 2))
    Y = np.linspace(0, 0.3, 10)[:, None]
    res = prelim(F, Y, PrelimConfig(epsilon=0.15))
    assert res.good[:, 0].tolist() == (Y[:, 0] <= 0.15).tolist()


# ---- correlation filter -----------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_pearson_properties(seed):
    X = np.random.default_rng(seed).normal(size=(15, 4))
    r = pearson_matrix(X, X)
    assert np.allclose(r, r.T)
    assert np.allclose(np.diag(r), 1)
    assert (np.abs(r) <= 1).all()
    assert np.allclose(r, np.corrcoef(X.T))


def test_filter_examples():
    rng = np.random.default_rng(6)
    n = 200
    F = rng.normal(size=(n, 6))
    Y = 0.9 * F[:, [3]] + rng.normal(0, 0.1, size=(n, 1))
    keep, corr = correlation_filter(np.c_[F, Y], Y)
    assert 3 in keep and 6 in keep and corr[6, 0] == pytest.approx(1)
    assert corr[3, 0] > 0.9
    assert set(keep) == {3, 6}


def test_filter_zero_variance_never_survives():
    rng = np.random.default_rng(7)
    F = np.c_[rng.normal(size=10), np.ones(10)]
    keep, corr = correlation_filter(F, F[:, [0]], 0.5)
    assert corr[1, 0] == 0 and 1 not in keep


def test_filter_min_keep():
    rng = np.random.default_rng(8)
    F, Y = rng.normal(size=(50, 5)), rng.normal(size=(50, 1))
    keep, _ = correlation_filter(F, Y, 0.5, min_keep=3)
    assert len(keep) == 3


# ---- clustering -------------------------------------------------------------


def test_two_perfect_groups():
    rng = np.random.default_rng(9)
    a, b = rng.normal(size=(2, 60))
    X = np.c_[a, 2 * a + 1, -a, b, -3 * b, b + 5]
    labels = cluster_features(X, 2, seed=0)
    assert labels.tolist() == [0, 0, 0, 1, 1, 1]


def test_k_equals_m_gives_singletons():
    X = np.random.default_rng(10).normal(size=(30, 5))
    assert sorted(cluster_features(X, 5)) == [0, 1, 2, 3, 4]


def test_k_too_large():
    with pytest.raises(ValueError):
        cluster_features(np.zeros((5, 3)), 4)


def three_groups(seed, per=4, n=150, noise=0.15):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(n, 3))
    cols = [base[:, g] * rng.choice([-1, 1]) + noise * rng.normal(size=n) for g in range(3) for _ in range(per)]
    return np.column_stack(cols)


def test_silhouette_picks_three_groups():
    X = three_groups(11)
    sweep = k_sweep(X, range(2, 11), seed=0)
    best = max(sweep, key=lambda m: m.silhouette)
    assert best.k == 3
    assert min(sweep, key=lambda m: m.davies_bouldin).k == 3


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 6))
def test_cluster_partition_and_determinism(seed, k):
    X = np.random.default_rng(seed).normal(size=(25, 7))
    a = cluster_features(X, k, seed=3)
    b = cluster_features(X, k, seed=3)
    assert np.array_equal(a, b)
    assert len(a) == 7 and set(a) == set(range(k))


def test_cluster_metrics_finite():
    X = three_groups(12)
    labels = cluster_features(X, 3)
    assert all(math.isfinite(v) for v in cluster_metrics(X, labels))


# ---- combination search -----------------------------------------------------


def test_singletons_have_one_candidate():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(60, 3))
    good = (X[:, [0]] > 0)
    res = select_combination(X, np.array([0, 1, 2]), good, seed=0, n_trees=30)
    assert res.chosen == (0, 1, 2) and len(res.evaluated) == 1 and res.exhaustive


def test_planted_separable_pair():
    rng = np.random.default_rng(14)
    n = 200
    f1, f2 = rng.normal(size=(2, n))
    noise = rng.normal(size=(n, 4))
    X = np.c_[f1, noise[:, 0], f2, noise[:, 1], noise[:, 2], noise[:, 3]]
    labels = np.array([0, 0, 1, 1, 1, 1])
    good = np.c_[f1 + f2 > 0, f1 - f2 > 0]
    res = select_combination(X, labels, good, seed=0, n_trees=100)
    assert tuple(res.chosen) == (0, 2)
    assert res.mean_oob <= 0.15
    assert all(res.mean_oob < e.mean() for c, e in res.evaluated.items() if tuple(c) != (0, 2))


def test_budget_one_returns_sampled_candidate():
    rng = np.random.default_rng(15)
    X = rng.normal(size=(50, 6))
    labels = np.array([0, 0, 1, 1, 2, 2])
    res = select_combination(X, labels, X[:, [0]] > 0, budget=1, seed=0, n_trees=20)
    assert len(res.evaluated) == 1 and not res.exhaustive
    assert res.mean_oob == pytest.approx(res.evaluated[res.chosen].mean())


def test_result_is_minimum_over_evaluated():
    rng = np.random.default_rng(16)
    X = rng.normal(size=(60, 6))
    labels = np.array([0, 0, 1, 1, 2, 2])
    res = select_combination(X, labels, X[:, [0, 3]] > 0, budget=5, seed=1, n_trees=20)
    assert all(res.mean_oob <= e.mean() + 1e-15 for e in res.evaluated.values())
    assert res.n_combinations == 8 and len(res.evaluated) <= 5


# ---- PILOT ------------------------------------------------------------------


def standardized(rng, n, m):
    X = rng.normal(size=(n, m))
    return (X - X.mean(0)) / X.std(0, ddof=1)


def test_exact_reconstruction_possible():
    rng = np.random.default_rng(19)
    F = standardized(rng, 40, 2)
    res = pilot(F, F.copy())
    assert res.objective < 1e-18 + 1e-12 * np.sum(F**2)


def test_analytic_not_worse_than_numeric_and_stationary():
    rng = np.random.default_rng(20)
    F, Y = standardized(rng, 50, 5), standardized(rng, 50, 2)
    a = pilot(F, Y)
    b = pilot(F, Y, ntry=30, numeric=True, seed=0)
    assert a.objective <= b.objective + 1e-6
    assert stationarity(a, F, Y) < 1e-5
    assert stationarity(b, F, Y) < 1e-5
    assert len(b.restart_objectives) == 30


def test_reported_objective_matches_recomputation():
    rng = np.random.default_rng(21)
    F, Y = standardized(rng, 30, 4), standardized(rng, 30, 3)
    res = pilot(F, Y)
    assert res.objective == pytest.approx(objective(res.A, res.B, res.C, F, Y), abs=1e-9)
    assert np.allclose(res.Z, F @ res.A.T)
    direct = np.sum((F.T - res.B @ res.Z.T) ** 2) + np.sum((Y.T - res.C @ res.Z.T) ** 2)
    assert res.objective == pytest.approx(direct, abs=1e-9)


def test_duplicates_get_identical_coordinates():
    rng = np.random.default_rng(22)
    F, Y = standardized(rng, 25, 4), rng.normal(size=(25, 2))
    res = pilot(np.r_[F, F], np.r_[Y, Y])
    assert np.abs(res.Z[:25] - res.Z[25:]).max() < 1e-12


def test_rank_deficient():
    a = np.arange(10.0)
    with pytest.raises(IllConditioned):
        pilot(np.c_[a, 2 * a], a[:, None])


# ---- pipeline ---------------------------------------------------------------


def test_published_config_round_trip(tmp_path):
    cfg, raw = parse_config(PUBLISHED_CONFIG)
    assert (cfg.epsilon, cfg.k, cfg.ntry) == (0.15, 23, 30)
    assert not (cfg.phi_max or cfg.phi_bnd or cfg.phi_nrm or cfg.phi_num)
    res = run_pipeline(synthetic_metadata(50, 10, 3, seed=0), cfg)
    write_outputs(res, cfg, tmp_path, raw)
    log = (tmp_path / "run.log").read_text()
    for line in ("epsilon = 0.15", "k = 23", "ntry = 30", "phi_max = false", "phi_bnd = false", "phi_nrm = false"):
        assert f"config {line}" in log


@pytest.mark.parametrize("key", ["epsilon", "k", "ntry", "phi_max", "phi_bnd", "phi_nrm"])
def test_missing_key_named(key):
    text = "\n".join(line for line in PUBLISHED_CONFIG.splitlines() if not line.startswith(key + " "))
    with pytest.raises(ConfigError, match=key):
        parse_config(text)


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError, match="unknown"):
        parse_config(PUBLISHED_CONFIG + "colour = red\n")
    with pytest.raises(ConfigError):
        parse_config(PUBLISHED_CONFIG.replace("phi_bnd = false", "phi_bnd = maybe"))
    with pytest.raises(ConfigError):
        parse_config(PUBLISHED_CONFIG.replace("epsilon = 0.15", "epsilon = -1"))


def test_pipeline_outputs_and_determinism(tmp_path):
    cfg, raw = parse_config(PUBLISHED_CONFIG + "seed = 4\n")
    table = synthetic_metadata(50, 10, 3, seed=1)
    for out in ("a", "b"):
        write_outputs(run_pipeline(table, cfg), cfg, tmp_path / out, raw)
    for name in OUTPUT_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    coords = (tmp_path / "a" / "coordinates.csv").read_text().splitlines()
    assert coords[0] == "Instances,Z1,Z2" and len(coords) == 51


def test_single_algorithm():
    t = synthetic_metadata(40, 8, 1, seed=2)
    res = run_pipeline(t, PipelineConfig(k=3))
    assert res.sifted.selection.oob.shape == (1,)
    assert res.pilot.Z.shape == (40, 2)


def test_incomplete_rows_excluded_and_reported():
    t = synthetic_metadata(40, 8, 2, seed=3)
    t.F[5, 2] = np.nan
    t.Y[9, 1] = np.nan
    res = run_pipeline(t, PipelineConfig(k=3))
    names = [e[0] for e in res.excluded]
    assert names == [t.instances[5], t.instances[9]]
    assert len(res.instances) == 38 and res.pilot.Z.shape == (38, 2)


def test_model_reproduces_pipeline_coordinates():
    t = synthetic_metadata(50, 10, 3, seed=5)
    res = run_pipeline(t, PipelineConfig(k=4))
    cols = [t.feature_names.index(n) for n in res.model.feature_names]
    Z = res.model.normalize(t.F[:, cols]) @ res.model.matrix.T
    assert np.allclose(Z, res.pilot.Z, atol=1e-9)


def test_no_algorithms_is_an_error():
    t = synthetic_metadata(20, 4, 1, seed=0)
    bare = MetadataTable(t.instances, t.F, t.feature_names)
    with pytest.raises(MetadataError):
        run_pipeline(bare)


def test_join_performance():
    from cvrpisa.isa.metadata import join_performance

    t = synthetic_metadata(5, 3, 1, seed=0)
    perf = MetadataTable(["I9", t.instances[2], t.instances[0]], np.zeros((3, 0)), [], [[0.1], [0.2], [0.3]], ["new"])
    joined = join_performance(t, perf)
    assert joined.algorithm_names == t.algorithm_names + ["new"]
    assert joined.Y[0, 1] == 0.3 and joined.Y[2, 1] == 0.2
    assert np.isnan(joined.Y[[1, 3, 4], 1]).all()
    with pytest.raises(MetadataError):
        join_performance(joined, perf)
