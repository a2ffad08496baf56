"""Command-line interface: ``cvrpisa <verb> ...``.

Exit codes are 0 for success, 1 when some rows failed but outputs were
written, and 2 for fatal errors. ``extract`` is the exception: it exits 0
whenever at least one instance was extracted, and its failures go to a
report file next to the output.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .features import CATALOG, ExtractionConfig, extract_all
from .instance import read_instance
from .io_utils import atomic_write_text, fmt_float
from .isa.metadata import MetadataError, MetadataTable, join_performance, metadata_csv, read_metadata
from .isa.pipeline import ConfigError, read_config, run_pipeline, write_outputs
from .performance import TrajectoryError, primal_integral, read_trajectory
from .plots import PlotSpec, UnjoinedInstances, write_scatter
from .projection import builtin_model, fit_transform, load_model, project_batch, save_model

log = logging.getLogger("cvrpisa")

OK, PARTIAL, FATAL = 0, 1, 2
INSTANCE_SUFFIXES = (".vrp", ".txt", ".tsp")


class Fatal(Exception):
    pass


def _csv_text(rows) -> str:
    out = io.StringIO()
    csv.writer(out, lineterminator="\n").writerows(rows)
    return out.getvalue()


# ---- extract -------------------------------------------------------------

_EXTRACT_KEYS = {
    "probe_restarts": ("probing", "restarts", int),
    "probe_depth": ("probing", "depth", int),
    "probe_neighbours": ("probing", "neighbours", int),
    "probe_budget": ("probing", "time_budget", float),
    "dbscan_eps": (None, "dbscan_eps", float),
    "dbscan_min_pts": (None, "dbscan_min_pts", int),
}


def read_extraction_config(path: str | Path | None) -> ExtractionConfig:
    cfg = ExtractionConfig()
    if path is None:
        return cfg
    probing: dict = {}
    top: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or key not in _EXTRACT_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown or malformed entry {line!r}")
        group, attr, kind = _EXTRACT_KEYS[key]
        (probing if group else top)[attr] = kind(value)
    return replace(cfg, probing=replace(cfg.probing, **probing), **top)


def instance_seed(seed: int, name: str) -> int:
    """Per-instance stream derived from the global seed and the file name, independent of order."""
    return int(np.random.SeedSequence([seed, zlib.crc32(name.encode())]).generate_state(1)[0])


def _extract_one(args):
    path, config, seed = args
    try:
        inst = read_instance(path)
        fv = extract_all(inst, config, instance_seed(seed, Path(path).name))
        return path, fv, None
    except Exception as exc:  # reported per file, the run continues
        return path, None, f"{type(exc).__name__}: {exc}"


def cmd_extract(args) -> int:
    src = Path(args.instances)
    if src.is_dir():
        files = sorted(p for p in src.iterdir() if p.is_file() and p.suffix.lower() in INSTANCE_SUFFIXES)
    elif src.is_file():
        files = [src]
    else:
        raise Fatal(f"{src}: no such file or directory")
    config = read_extraction_config(args.config)
    work = [(str(p), config, args.seed) for p in files]
    if args.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_extract_one, work))
    else:
        results = [_extract_one(w) for w in work]

    ok = [(p, fv) for p, fv, err in results if fv is not None]
    failures = [(p, err) for p, fv, err in results if fv is None]
    for p, err in failures:
        log.error("%s: %s", p, err)
    out = Path(args.output)
    report = out.with_name(out.stem + ".failures.csv")
    atomic_write_text(report, _csv_text([["file", "error"]] + [[Path(p).name, e] for p, e in failures]))
    if not ok:
        raise Fatal(f"no instance extracted from {len(files)} file(s); see {report}")

    names = [fv.instance_name for _, fv in ok]
    if len(set(names)) != len(names):
        names = [Path(p).stem for p, _ in ok]
    table = MetadataTable(
        instances=names,
        F=np.array([fv.as_array(CATALOG) for _, fv in ok]),
        feature_names=list(CATALOG),
        attributes={
            "n_customers": [str(fv.n_customers) for _, fv in ok],
            "flags": [";".join(fv.flags) for _, fv in ok],
        },
    )
    atomic_write_text(out, metadata_csv(table))
    log.info("extracted %d of %d instance(s) -> %s", len(ok), len(files), out)
    return OK


# ---- pipeline ------------------------------------------------------------


def cmd_pipeline(args) -> int:
    cfg, raw = read_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    table = read_metadata(args.metadata)
    if args.performance:
        table = join_performance(table, read_metadata(args.performance))
    res = run_pipeline(table, cfg)
    write_outputs(res, cfg, args.output, raw)
    for name, gaps in res.excluded:
        log.warning("excluded %s (missing %s)", name, gaps)
    log.info("pipeline outputs written to %s", args.output)
    return PARTIAL if res.excluded else OK


# ---- project -------------------------------------------------------------


def cmd_project(args) -> int:
    if args.builtin == bool(args.model):
        raise Fatal("give exactly one of --model or --builtin")
    model = builtin_model() if args.builtin else load_model(args.model, strict=False)
    if args.fit_transform:
        model = fit_transform(model, read_metadata(args.fit_transform), bound=args.bound)
        if args.save_model:
            save_model(model, args.save_model)
    table = read_metadata(args.metadata)
    batch = project_batch(model, table)
    out = Path(args.output)
    rows = [["Instances", "Z1", "Z2"]] + [[n, fmt_float(z[0]), fmt_float(z[1])] for n, z in zip(batch.instances, batch.Z)]
    atomic_write_text(out, _csv_text(rows))
    report = out.with_name(out.stem + ".excluded.csv")
    atomic_write_text(report, _csv_text([["Instances", "missing"]] + [[n, ";".join(m)] for n, m in batch.excluded]))
    for name, missing in batch.excluded:
        log.warning("excluded %s: missing %s", name, ", ".join(missing))
    if not batch.instances and table.instances:
        raise Fatal("no instance could be projected")
    return PARTIAL if batch.excluded else OK


# ---- pi ------------------------------------------------------------------


def _pi_rows(manifest: Path):
    with open(manifest, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"instance", "algorithm", "bks", "timelimit", "path"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise Fatal(f"{manifest}: header must contain {','.join(sorted(need))}")
        rows = list(reader)
    out = []
    for row in rows:
        path = Path(row["path"])
        if not path.is_absolute():
            path = manifest.parent / path
        try:
            traj = read_trajectory(path, float(row["bks"]), float(row["timelimit"]))
            out.append((row["instance"], row["algorithm"], primal_integral(traj), ""))
        except (OSError, ValueError, TrajectoryError) as exc:
            out.append((row["instance"], row["algorithm"], math.nan, f"{type(exc).__name__}: {exc}"))
    return out


def cmd_pi(args) -> int:
    if args.manifest:
        rows = _pi_rows(Path(args.manifest))
    elif args.trajectory:
        if args.bks is None or args.timelimit is None:
            raise Fatal("--trajectory needs --bks and --timelimit")
        traj = read_trajectory(args.trajectory, args.bks, args.timelimit)
        rows = [(args.instance or Path(args.trajectory).stem, args.algorithm, primal_integral(traj), "")]
    else:
        raise Fatal("give a manifest or --trajectory")
    if not rows:
        raise Fatal("manifest lists no runs")

    if args.wide:
        instances = list(dict.fromkeys(r[0] for r in rows))
        algs = list(dict.fromkeys(r[1] for r in rows))
        cell = {(r[0], r[1]): r[2] for r in rows}
        table = [["Instances"] + [f"algo_{a}" for a in algs]]
        table += [[i] + [fmt_float(cell.get((i, a), math.nan)) for a in algs] for i in instances]
    else:
        table = [["instance", "algorithm", "pi", "error"]] + [[i, a, fmt_float(v), e] for i, a, v, e in rows]
    if args.output:
        atomic_write_text(args.output, _csv_text(table))
    else:
        sys.stdout.write(_csv_text(table))
    failed = [r for r in rows if r[3]]
    for i, a, _, e in failed:
        log.error("%s / %s: %s", i, a, e)
    if len(failed) == len(rows):
        return FATAL
    return PARTIAL if failed else OK


# ---- plot ----------------------------------------------------------------


def read_coordinates(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"Instances", "Z1", "Z2"} <= set(reader.fieldnames):
            raise Fatal(f"{path}: header must be Instances,Z1,Z2")
        rows = list(reader)
    return [r["Instances"] for r in rows], np.array([[float(r["Z1"]), float(r["Z2"])] for r in rows]).reshape(-1, 2)


def cmd_plot(args) -> int:
    names, Z = read_coordinates(args.coordinates)
    values = None
    if args.members is not None:
        members = set(filter(None, (m.strip() for m in args.members.split(","))))
        values = {n: "member" if n in members else "other" for n in names}
    elif args.metadata:
        table = read_metadata(args.metadata)
        if args.column:
            if args.color_by == "performance":
                try:
                    col = table.column(args.column)
                except KeyError:
                    raise Fatal(f"metadata has no column {args.column!r}") from None
                values = {n: float(v) for n, v in zip(table.instances, col) if np.isfinite(v)}
            elif args.column in table.attributes:
                values = dict(zip(table.instances, table.attributes[args.column]))
            else:
                raise Fatal(f"metadata has no column {args.column!r}")
        else:
            values = dict(zip(table.instances, table.sources))
    elif args.color_by != "source":
        raise Fatal(f"--color-by {args.color_by} needs --metadata (or --members)")
    spec = PlotSpec(args.color_by, values, args.title or "")
    write_scatter(args.output, names, Z, spec)
    return OK


# ---- correlate -----------------------------------------------------------


def pearson(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    xc, yc = x - x.mean(), y - y.mean()
    den = math.sqrt(float((xc**2).sum() * (yc**2).sum()))
    return float((xc * yc).sum() / den) if den > 0 else 0.0


def cmd_correlate(args) -> int:
    names, Z = read_coordinates(args.coordinates)
    index = {n: i for i, n in enumerate(names)}
    if args.attribute in ("Z1", "Z2"):
        attr = dict(zip(names, Z[:, 0 if args.attribute == "Z1" else 1]))
    else:
        if not args.metadata:
            raise Fatal("correlating a metadata attribute needs the metadata CSV")
        table = read_metadata(args.metadata)
        try:
            col = table.column(args.attribute)
        except KeyError:
            raise Fatal(f"metadata has no column {args.attribute!r}") from None
        attr = dict(zip(table.instances, col))
    common = [n for n in names if n in attr and np.isfinite(attr[n])]
    unmatched = len(names) - len(common)
    if unmatched:
        log.warning("%d coordinate row(s) have no %s value", unmatched, args.attribute)
    if len(common) < 2:
        raise Fatal(f"need at least two instances with {args.attribute!r}; found {len(common)}")
    a = np.array([attr[n] for n in common])
    zz = Z[[index[n] for n in common]]
    if np.ptp(a) == 0:
        log.warning("attribute %s is constant; correlation reported as 0", args.attribute)
    rows = [["attribute", "axis", "r", "n"]]
    for k, axis in enumerate(("Z1", "Z2")):
        rows.append([args.attribute, axis, fmt_float(pearson(a, zz[:, k])), len(common)])
    text = _csv_text(rows)
    if args.output:
        atomic_write_text(args.output, text)
    sys.stdout.write(text)
    return PARTIAL if unmatched else OK


# ---- entry point ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, defaults: bool):
        # subparsers suppress their defaults so flags given before the verb survive
        d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
        parser.add_argument("--seed", type=int, default=d(None), help="global random seed (default 0)")
        parser.add_argument("--jobs", type=int, default=d(1), help="worker processes for extraction")
        parser.add_argument("--verbose", "-v", action="count", default=d(0))
        return parser

    common = global_flags(argparse.ArgumentParser(add_help=False), defaults=False)
    p = global_flags(argparse.ArgumentParser(prog="cvrpisa", description="Instance space analysis for CVRP"), True)
    sub = p.add_subparsers(dest="verb", required=True)

    e = sub.add_parser("extract", parents=[common], help="compute features for a directory of instances")
    e.add_argument("instances", help="directory of .vrp files (or one file)")
    e.add_argument("-o", "--output", required=True, help="metadata CSV to write")
    e.add_argument("--config", help="key = value extraction settings (probe_restarts, probe_budget, ...)")
    e.set_defaults(func=cmd_extract)

    pl = sub.add_parser("pipeline", parents=[common], help="run PRELIM, SIFTED and PILOT")
    pl.add_argument("metadata")
    pl.add_argument("config")
    pl.add_argument("-o", "--output", required=True, help="output directory")
    pl.add_argument("--performance", metavar="CSV", help="algo_<name> columns to join by instance (e.g. from pi --wide)")
    pl.set_defaults(func=cmd_pipeline)

    pr = sub.add_parser("project", parents=[common], help="project instances with a fitted or the built-in model")
    pr.add_argument("metadata")
    pr.add_argument("--model", help="model.json from the pipeline")
    pr.add_argument("--builtin", action="store_true", help="use the published 23-feature model")
    pr.add_argument("--fit-transform", metavar="CSV", help="fit the normalization on this reference metadata")
    pr.add_argument("--bound", action="store_true", help="clamp outliers when fitting the normalization")
    pr.add_argument("--save-model", metavar="JSON", help="write the model with its fitted normalization")
    pr.add_argument("-o", "--output", required=True)
    pr.set_defaults(func=cmd_project)

    pi = sub.add_parser("pi", parents=[common], help="primal integrals from incumbent trajectories")
    pi.add_argument("manifest", nargs="?", help="CSV with instance,algorithm,bks,timelimit,path")
    pi.add_argument("--trajectory", help="single t,value CSV instead of a manifest")
    pi.add_argument("--bks", type=float)
    pi.add_argument("--timelimit", type=float)
    pi.add_argument("--instance")
    pi.add_argument("--algorithm", default="alg")
    pi.add_argument("--wide", action="store_true", help="write Instances,algo_<name> columns")
    pi.add_argument("-o", "--output")
    pi.set_defaults(func=cmd_pi)

    pt = sub.add_parser("plot", parents=[common], help="SVG scatter of coordinates")
    pt.add_argument("coordinates")
    pt.add_argument("--color-by", choices=("source", "performance", "membership"), default="source")
    pt.add_argument("--metadata", help="metadata CSV to join colour values from")
    pt.add_argument("--column", help="algorithm (performance) or attribute (membership/source) column")
    pt.add_argument("--members", help="comma-separated instance names highlighted as members")
    pt.add_argument("--title")
    pt.add_argument("-o", "--output", required=True)
    pt.set_defaults(func=cmd_plot)

    c = sub.add_parser("correlate", parents=[common], help="Pearson r of an attribute against Z1 and Z2")
    c.add_argument("coordinates")
    c.add_argument("metadata", nargs="?")
    c.add_argument("--attribute", required=True)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_correlate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.verb == "extract" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except (Fatal, ConfigError, MetadataError, UnjoinedInstances, TrajectoryError, OSError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"cvrpisa {args.verb}: {msg}", file=sys.stderr)
        return FATAL


if __name__ == "__main__":
    sys.exit(main())
