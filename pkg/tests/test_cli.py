import csv
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cvrpisa.cli import FATAL, OK, PARTIAL, main
from cvrpisa.instance import format_instance
from cvrpisa.isa.metadata import read_metadata, write_metadata
from cvrpisa.synthetic import synthetic_metadata, x_style_instance

DATA = Path(__file__).parent / "data"

PIPELINE_CONFIG = """epsilon = 0.15
k = 4
ntry = 5
phi_max = false
phi_bnd = false
phi_nrm = false
"""


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    shutil.copy(DATA / "E-n22-k4.vrp", d)
    inst = x_style_instance(30, seed=1, name="X-n31-k3")
    (d / "X-n31-k3.vrp").write_text(format_instance(inst))
    (d / "broken.vrp").write_text("NAME : broken\nTYPE : CVRP\nDIMENSION : 3\n")
    (d / "README.md").write_text("not an instance")
    cfg = d.parent / "extract.cfg"
    cfg.write_text("probe_restarts = 3\nprobe_budget = 5\n")
    return d, cfg


def test_extract_skips_bad_files(corpus, tmp_path, caplog):
    d, cfg = corpus
    out = tmp_path / "meta.csv"
    assert main(["extract", str(d), "-o", str(out), "--config", str(cfg)]) == OK
    table = read_metadata(out)
    assert sorted(table.instances) == ["E-n22-k4", "X-n31-k3"]
    failures = rows(tmp_path / "meta.failures.csv")
    assert failures[0] == ["file", "error"] and len(failures) == 2
    assert failures[1][0] == "broken.vrp"
    assert "broken.vrp" in caplog.text
    assert table.column("n_customers").tolist() == [21, 30]


def test_extract_is_reproducible_across_job_counts(corpus, tmp_path):
    d, cfg = corpus
    outs = []
    for i, jobs in enumerate((1, 1, 2)):
        out = tmp_path / f"m{i}.csv"
        assert main(["--seed", "7", "extract", str(d), "-o", str(out), "--config", str(cfg), "--jobs", str(jobs)]) == OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_extract_nothing_usable(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["extract", str(empty), "-o", str(tmp_path / "m.csv")]) == FATAL
    assert main(["extract", str(tmp_path / "nowhere"), "-o", str(tmp_path / "m.csv")]) == FATAL


def test_bad_extraction_config(corpus, tmp_path):
    d, _ = corpus
    bad = tmp_path / "bad.cfg"
    bad.write_text("probe_colour = 3\n")
    assert main(["extract", str(d), "-o", str(tmp_path / "m.csv"), "--config", str(bad)]) == FATAL


def test_pipeline_project_plot_correlate(tmp_path):
    meta = tmp_path / "meta.csv"
    write_metadata(synthetic_metadata(40, 8, 2, seed=3), meta)
    cfg = tmp_path / "isa.cfg"
    cfg.write_text(PIPELINE_CONFIG)
    out = tmp_path / "run"
    assert main(["--seed", "1", "pipeline", str(meta), str(cfg), "-o", str(out)]) == OK
    assert "config k = 4" in (out / "run.log").read_text()
    assert "effective seed = 1" in (out / "run.log").read_text()

    proj = tmp_path / "proj.csv"
    assert main(["project", str(meta), "--model", str(out / "model.json"), "-o", str(proj)]) == OK
    a, b = rows(proj), rows(out / "coordinates.csv")
    assert a[0] == b[0] == ["Instances", "Z1", "Z2"]
    za = np.array([r[1:] for r in a[1:]], float)
    zb = np.array([r[1:] for r in b[1:]], float)
    assert np.allclose(za, zb, atol=1e-9)

    svg = tmp_path / "p.svg"
    assert main(["plot", str(proj), "--color-by", "performance", "--metadata", str(meta), "--column", "alg1",
                 "-o", str(svg)]) == OK
    assert svg.read_text().count('class="marker"') == 40

    corr = tmp_path / "corr.csv"
    assert main(["correlate", str(proj), "--attribute", "Z1", "-o", str(corr)]) == OK
    assert rows(corr)[1][:2] == ["Z1", "Z1"] and float(rows(corr)[1][2]) == pytest.approx(1)


def test_pipeline_missing_key(tmp_path):
    meta = tmp_path / "meta.csv"
    write_metadata(synthetic_metadata(20, 5, 1, seed=0), meta)
    cfg = tmp_path / "isa.cfg"
    cfg.write_text(PIPELINE_CONFIG.replace("epsilon = 0.15\n", ""))
    assert main(["pipeline", str(meta), str(cfg), "-o", str(tmp_path / "o")]) == FATAL
    assert not (tmp_path / "o").exists()


def test_project_builtin_partial(tmp_path):
    from cvrpisa.features import PROJECTION_FEATURES
    from cvrpisa.isa.metadata import MetadataTable

    F = np.random.default_rng(0).normal(size=(3, 23))
    F[2, 5] = np.nan
    meta = tmp_path / "m.csv"
    write_metadata(MetadataTable(["a", "b", "c"], F, list(PROJECTION_FEATURES)), meta)
    out = tmp_path / "z.csv"
    assert main(["project", str(meta), "--builtin", "-o", str(out)]) == PARTIAL
    assert [r[0] for r in rows(out)[1:]] == ["a", "b"]
    assert rows(tmp_path / "z.excluded.csv")[1] == ["c", PROJECTION_FEATURES[5]]
    assert main(["project", str(meta), "-o", str(out)]) == FATAL


def write_traj(path, points):
    path.write_text("t,value\n" + "".join(f"{t},{v}\n" for t, v in points))


def test_pi_manifest(tmp_path):
    write_traj(tmp_path / "a.csv", [(0, 110), (5, 100)])
    write_traj(tmp_path / "b.csv", [(0, 110), (2, 100)])
    man = tmp_path / "runs.csv"
    man.write_text("instance,algorithm,bks,timelimit,path\nI1,slow,100,10,a.csv\nI1,fast,100,10,b.csv\n"
                   "I2,slow,100,10,missing.csv\n")
    out = tmp_path / "pi.csv"
    assert main(["pi", str(man), "-o", str(out)]) == PARTIAL
    r = rows(out)
    assert r[0] == ["instance", "algorithm", "pi", "error"]
    slow, fast = float(r[1][2]), float(r[2][2])
    assert slow == pytest.approx(5 / 110) and fast == pytest.approx(2 / 110)
    assert fast <= slow
    assert r[3][2] == "" and r[3][3]

    wide = tmp_path / "wide.csv"
    main(["pi", str(man), "--wide", "-o", str(wide)])
    assert rows(wide)[0] == ["Instances", "algo_slow", "algo_fast"]

    man.write_text("instance,algorithm,bks,timelimit,path\n")
    assert main(["pi", str(man)]) == FATAL


def test_pi_single_trajectory(tmp_path, capsys):
    write_traj(tmp_path / "a.csv", [(0, 110), (5, 100)])
    assert main(["pi", "--trajectory", str(tmp_path / "a.csv"), "--bks", "100", "--timelimit", "10"]) == OK
    line = capsys.readouterr().out.splitlines()[1].split(",")
    assert float(line[2]) == pytest.approx(0.04545, abs=1e-4)


def test_correlate_attributes(tmp_path, capsys):
    rng = np.random.default_rng(0)
    n = 200
    Z = rng.normal(size=(n, 2))
    names = [f"I{i}" for i in range(n)]
    coords = tmp_path / "c.csv"
    coords.write_text("Instances,Z1,Z2\n" + "".join(f"{a},{float(z[0])!r},{float(z[1])!r}\n" for a, z in zip(names, Z)))
    meta = tmp_path / "m.csv"
    meta.write_text("Instances,feature_x,size,flat\n"
                    + "".join(f"{a},{float(z[0])!r},{float(rng.normal())!r},5\n" for a, z in zip(names, Z)))
    assert main(["correlate", str(coords), str(meta), "--attribute", "feature_x"]) == OK
    out = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert float(out[1][2]) == pytest.approx(1.0, abs=1e-12)
    assert main(["correlate", str(coords), str(meta), "--attribute", "size"]) == OK
    out = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert abs(float(out[1][2])) < 0.2 and abs(float(out[2][2])) < 0.2
    assert main(["correlate", str(coords), str(meta), "--attribute", "flat"]) == OK
    out = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert float(out[1][2]) == 0 and out[1][3] == "200"
    assert main(["correlate", str(coords), str(meta), "--attribute", "nothing"]) == FATAL


def test_plot_membership_and_unjoined(tmp_path):
    coords = tmp_path / "c.csv"
    coords.write_text("Instances,Z1,Z2\nX-1,0,0\nE-2,1,1\n")
    svg = tmp_path / "p.svg"
    assert main(["plot", str(coords), "--color-by", "membership", "--members", "X-1", "-o", str(svg)]) == OK
    assert "<polygon" in svg.read_text()
    meta = tmp_path / "m.csv"
    meta.write_text("Instances,algo_a\nX-1,0.5\n")
    assert main(["plot", str(coords), "--color-by", "performance", "--metadata", str(meta), "--column", "algo_a",
                 "-o", str(svg)]) == FATAL


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "cvrpisa.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for verb in ("extract", "pipeline", "project", "pi", "plot", "correlate"):
        assert verb in res.stdout


def test_pipeline_joins_performance_table(tmp_path):
    from cvrpisa.isa.metadata import MetadataTable

    full = synthetic_metadata(40, 8, 2, seed=4)
    features = MetadataTable(full.instances, full.F, full.feature_names)
    perf = MetadataTable(full.instances[1:], np.zeros((39, 0)), [], full.Y[1:], full.algorithm_names)
    write_metadata(features, tmp_path / "features.csv")
    write_metadata(perf, tmp_path / "perf.csv")
    cfg = tmp_path / "isa.cfg"
    cfg.write_text(PIPELINE_CONFIG)
    code = main(["pipeline", str(tmp_path / "features.csv"), str(cfg), "--performance", str(tmp_path / "perf.csv"),
                 "-o", str(tmp_path / "out")])
    assert code == PARTIAL
    coords = rows(tmp_path / "out" / "coordinates.csv")
    assert [r[0] for r in coords[1:]] == full.instances[1:]
