"""PRELIM -> SIFTED -> PILOT over a metadata table, plus config and output files."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ..io_utils import atomic_write_text, fmt_float
from ..projection import ProjectionModel, model_to_json
from .metadata import MetadataError, MetadataTable
from .pilot import PilotResult, pilot
from .prelim import PrelimConfig, PrelimResult, prelim
from .sifted import KMetrics, SelectionResult, cluster_features, correlation_filter, k_sweep, select_combination

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


REQUIRED_KEYS = ("epsilon", "k", "ntry", "phi_max", "phi_bnd", "phi_nrm")


@dataclass(frozen=True)
class PipelineConfig:
    epsilon: float = 0.15
    k: int = 23
    ntry: int = 30
    phi_max: bool = False
    phi_bnd: bool = False
    phi_nrm: bool = False
    phi_num: bool = False
    prenormalized: bool = False
    seed: int = 0
    budget: int = 10_000
    corr_threshold: float = 0.5
    corr_raw_performance: bool = False
    min_features: int = 2
    k_max: int = 30
    trees: int = 100

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if self.ntry < 1:
            raise ConfigError("ntry must be at least 1")
        if self.budget < 1:
            raise ConfigError("budget must be at least 1")

    @property
    def prelim(self) -> PrelimConfig:
        return PrelimConfig(self.epsilon, self.phi_max, self.phi_bnd, self.phi_nrm, self.prenormalized)


_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(key: str, raw: str, kind):
    try:
        if kind is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError
        if kind is int:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot read {raw!r} as {kind.__name__}") from None


def parse_config(text: str) -> tuple[PipelineConfig, dict[str, str]]:
    """Read ``key = value`` lines (``#`` starts a comment).

    Returns the config and the verbatim values as written, for the run log.
    """
    kinds = {f.name: {"float": float, "int": int, "bool": bool}[f.type] for f in fields(PipelineConfig)}
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        raw[key] = value
    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing config key {key!r}")
    values = {k: _convert(k, v, kinds[k]) for k, v in raw.items()}
    return PipelineConfig(**values), raw


def read_config(path: str | Path) -> tuple[PipelineConfig, dict[str, str]]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(cfg: PipelineConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"


@dataclass
class SiftedResult:
    correlation: np.ndarray  # kept features x algorithms
    survivors: list[int]  # indices into the PRELIM-kept features
    k: int
    labels: np.ndarray  # cluster of each survivor
    selection: SelectionResult
    kmetrics: list[KMetrics]
    chosen_names: list[str]


@dataclass
class PipelineResult:
    instances: list[str]
    excluded: list[tuple[str, str]]
    prelim: PrelimResult
    feature_names: list[str]  # names of the PRELIM-kept features
    sifted: SiftedResult
    pilot: PilotResult
    model: ProjectionModel
    algorithm_names: list[str]
    log: list[str] = field(default_factory=list)


def _usable(table: MetadataTable, notes: list[str]) -> tuple[MetadataTable, list[tuple[str, str]]]:
    if table.Y.shape[1] == 0:
        raise MetadataError("metadata has no algo_ columns")
    empty = [f for j, f in enumerate(table.feature_names) if not np.isfinite(table.F[:, j]).any()]
    if empty:
        notes.append(f"dropped {len(empty)} feature(s) with no values: {', '.join(empty)}")
        keep = [j for j, f in enumerate(table.feature_names) if f not in set(empty)]
        table = MetadataTable(
            table.instances, table.F[:, keep], [table.feature_names[j] for j in keep],
            table.Y, table.algorithm_names, table.sources, table.attributes,
        )
    ok = table.complete_rows()
    excluded = []
    for i in np.flatnonzero(~ok):
        gaps = [f for j, f in enumerate(table.feature_names) if not np.isfinite(table.F[i, j])]
        gaps += [f"algo_{a}" for j, a in enumerate(table.algorithm_names) if not np.isfinite(table.Y[i, j])]
        excluded.append((table.instances[i], ";".join(gaps)))
    return table.subset(ok), excluded


def run_pipeline(table: MetadataTable, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    notes: list[str] = []
    table, excluded = _usable(table, notes)
    for name, gaps in excluded:
        notes.append(f"excluded {name}: missing {gaps}")
    if table.n < 3:
        raise MetadataError(f"only {table.n} complete instance(s); need at least 3")
    if len(table.feature_names) < 2:
        raise MetadataError("need at least two features")

    pre = prelim(table.F, table.Y, cfg.prelim, table.feature_names)
    names = [table.feature_names[j] for j in pre.kept]
    for j in pre.dropped:
        notes.append(f"dropped constant feature {table.feature_names[j]}")
    notes.append(f"PRELIM transform {'on' if cfg.prelim.transform else 'off'}, bounding {'on' if cfg.phi_bnd else 'off'}")

    Yc = table.Y if cfg.corr_raw_performance else pre.Y
    survivors, corr = correlation_filter(pre.F, Yc, cfg.corr_threshold, min(cfg.min_features, len(names)))
    survivors = [int(j) for j in survivors]
    notes.append(f"{len(survivors)} of {len(names)} features pass |r| > {cfg.corr_threshold}")

    Xs = pre.F[:, survivors]
    k = min(cfg.k, len(survivors))
    if k != cfg.k:
        notes.append(f"k lowered from {cfg.k} to {k} (surviving feature count)")
    kmetrics = k_sweep(Xs, range(2, min(len(survivors) - 1, cfg.k_max) + 1), cfg.seed)
    labels = cluster_features(Xs, k, cfg.seed)
    sel = select_combination(Xs, labels, pre.good, cfg.budget, cfg.seed, cfg.trees)
    notes.append(
        f"evaluated {len(sel.evaluated)} of {sel.n_combinations} combinations"
        f" ({'exhaustive' if sel.exhaustive else 'sampled + greedy'}); mean OOB {sel.mean_oob:.6g}"
    )
    chosen = [survivors[j] for j in sel.chosen]
    chosen_names = [names[j] for j in chosen]
    sifted = SiftedResult(corr, survivors, k, labels, sel, kmetrics, chosen_names)

    F_sel = pre.F[:, chosen]
    if table.n <= F_sel.shape[1]:
        raise MetadataError(f"PILOT needs more instances ({table.n}) than selected features ({F_sel.shape[1]})")
    fit = pilot(F_sel, pre.Y, cfg.ntry, cfg.phi_num, cfg.seed)
    notes.append(f"PILOT ({fit.method}) objective {fit.objective:.12g}")

    transformed = cfg.prelim.transform or cfg.phi_bnd
    transform = {names[j]: pre.feature_transforms[j] for j in chosen} if transformed else None
    model = ProjectionModel(chosen_names, fit.A, transform, "Fitted by PRELIM/SIFTED/PILOT")
    return PipelineResult(
        table.instances, excluded, pre, names, sifted, fit, model, list(table.algorithm_names), notes
    )


# ---- output files -------------------------------------------------------


def _csv(rows) -> str:
    out = io.StringIO()
    csv.writer(out, lineterminator="\n").writerows(rows)
    return out.getvalue()


def coordinates_csv(instances, Z) -> str:
    return _csv([["Instances", "Z1", "Z2"]] + [[n, fmt_float(z[0]), fmt_float(z[1])] for n, z in zip(instances, Z)])


def selection_csv(res: PipelineResult) -> str:
    """Every evaluated combination, best first; rank 1 is the chosen one."""
    sel, surv = res.sifted.selection, res.sifted.survivors
    algs = res.algorithm_names
    ranked = sorted(sel.evaluated, key=lambda c: (float(sel.evaluated[c].mean()), c))
    rows = [["Rank", "Features", "MeanOOB"] + [f"OOB_{a}" for a in algs]]
    for r, combo in enumerate(ranked, 1):
        errs = sel.evaluated[combo]
        feats = ";".join(res.feature_names[surv[j]] for j in combo)
        rows.append([r, feats, fmt_float(errs.mean())] + [fmt_float(e) for e in errs])
    return _csv(rows)


def clusters_csv(res: PipelineResult) -> str:
    s = res.sifted
    chosen = set(s.chosen_names)
    rows = [["Feature", "Cluster", "MaxAbsR", "Chosen"]]
    for pos, j in enumerate(s.survivors):
        name = res.feature_names[j]
        rows.append([name, int(s.labels[pos]), fmt_float(np.abs(s.correlation[j]).max()), int(name in chosen)])
    return _csv(rows)


def kmetrics_csv(kms: list[KMetrics]) -> str:
    rows = [["K", "silhouette", "db", "ch"]]
    rows += [[m.k, fmt_float(m.silhouette), fmt_float(m.davies_bouldin), fmt_float(m.calinski_harabasz)] for m in kms]
    return _csv(rows)


def run_log(res: PipelineResult, cfg: PipelineConfig, raw: dict[str, str] | None = None) -> str:
    lines = ["# configuration (as written)"]
    for key, value in (raw or {}).items():
        lines.append(f"config {key} = {value}")
    lines.append("# configuration (effective)")
    lines += [f"effective {line}" for line in format_config(cfg).splitlines()]
    lines.append(f"instances used {len(res.instances)}, excluded {len(res.excluded)}")
    lines += res.log
    lines.append(f"chosen features: {', '.join(res.sifted.chosen_names)}")
    lines.append("oob per algorithm: " + json.dumps(dict(zip(res.algorithm_names, res.sifted.selection.oob.tolist()))))
    return "\n".join(lines) + "\n"


OUTPUT_FILES = ("coordinates.csv", "selection.csv", "kmetrics.csv", "model.json", "clusters.csv", "run.log")


def write_outputs(res: PipelineResult, cfg: PipelineConfig, out_dir: str | Path, raw=None) -> None:
    out = Path(out_dir)
    atomic_write_text(out / "coordinates.csv", coordinates_csv(res.instances, res.pilot.Z))
    atomic_write_text(out / "selection.csv", selection_csv(res))
    atomic_write_text(out / "kmetrics.csv", kmetrics_csv(res.sifted.kmetrics))
    atomic_write_text(out / "clusters.csv", clusters_csv(res))
    atomic_write_text(out / "model.json", model_to_json(res.model))
    atomic_write_text(out / "run.log", run_log(res, cfg, raw))
