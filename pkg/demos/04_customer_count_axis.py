"""Does the built-in projection put larger instances further left on Z1?

The published projection reports a negative correlation between customer
count and Z1 over the public benchmark library. That library is not bundled
here, so this demo builds a stand-in corpus the way the X set was generated
(grid coordinates, three depot placements, three layouts, several demand
schemes, 20 to 300 customers), extracts every feature, fits the PRELIM
normalization on the corpus, projects with the built-in 23-feature model and
reports the correlation of customer count with each axis.

Point CVRPLIB_DIR at a directory of real .vrp files to use those instead.

    python demos/04_customer_count_axis.py [output_dir]
"""

import os
import sys
import time
from pathlib import Path

import numpy as np

from cvrpisa import cli
from cvrpisa.instance import format_instance
from cvrpisa.isa.metadata import read_metadata
from cvrpisa.plots import PlotSpec, write_scatter
from cvrpisa.synthetic import x_style_instance

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output/customer_count_axis")
out.mkdir(parents=True, exist_ok=True)

corpus = os.environ.get("CVRPLIB_DIR")
if corpus is None:
    corpus = out / "instances"
    corpus.mkdir(exist_ok=True)
    rng = np.random.default_rng(2024)
    sizes = np.unique(np.geomspace(20, 300, 60).astype(int))
    for i, n in enumerate(sizes):
        depot = ("central", "eccentric", "random")[i % 3]
        layout = ("random", "clustered", "mixed")[(i // 3) % 3]
        demand = ("unit", "small", "uniform", "quadrant")[int(rng.integers(4))]
        route = float(rng.uniform(3, 25))
        name = f"X-n{n + 1}-{depot[0]}{layout[0]}{demand[0]}"
        inst = x_style_instance(int(n), seed=i, depot=depot, layout=layout, demand=demand, route_size=route, name=name)
        (corpus / f"{name}.vrp").write_text(format_instance(inst))
    print(f"wrote {len(sizes)} synthetic X-style instances to {corpus}")

meta, coords = out / "metadata.csv", out / "coordinates.csv"
t0 = time.perf_counter()
cli.main(["--jobs", str(os.cpu_count() or 1), "extract", str(corpus), "-o", str(meta)])
print(f"feature extraction took {time.perf_counter() - t0:.0f}s")
cli.main(["project", str(meta), "--builtin", "--fit-transform", str(meta),
          "--save-model", str(out / "model.json"), "-o", str(coords)])

table = read_metadata(meta)
size = dict(zip(table.instances, table.column("n_customers")))
rows = [line.split(",") for line in coords.read_text().splitlines()[1:]]
n = np.array([size[r[0]] for r in rows])
Z = np.array([[float(r[1]), float(r[2])] for r in rows])
for k, axis in enumerate(("Z1", "Z2")):
    print(f"r(customer count, {axis}) = {np.corrcoef(n, Z[:, k])[0, 1]:+.3f}   over {len(n)} instances")

# colour by size on the blue-to-red scale: smallest instance blue, largest red
scaled = {r[0]: (size[r[0]] - n.min()) / (n.max() - n.min()) for r in rows}
spec = PlotSpec("performance", scaled, "Built-in projection coloured by customer count",
                legend_labels=(f"{n.min()} customers", f"{(n.min() + n.max()) / 2:g} customers", f"{n.max()} customers"))
write_scatter(out / "by_size.svg", [r[0] for r in rows], Z, spec)
print(f"outputs in {out}")
