"""Read a benchmark file, compute its feature vector and look inside the probing run.

    python demos/01_extract_features.py [path/to/instance.vrp]
"""

import sys
from pathlib import Path

from cvrpisa import CATALOG, PROJECTION_FEATURES, extract_all, read_instance

path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "tests" / "data" / "E-n22-k4.vrp"
inst = read_instance(path)
print(f"{inst.name}: {inst.dimension - 1} customers, capacity {inst.capacity}, {inst.edge_weight_type} distances")

fv = extract_all(inst, seed=0)
print(f"{len(fv.entries)} of {len(CATALOG)} catalog features computed; missing: {list(fv.missing) or 'none'}")

print("\nfeatures used by the built-in projection:")
for name in PROJECTION_FEATURES:
    print(f"  {name:<12} {fv[name]: .6g}")

trace = fv.probing_trace
best = min(r.local_min_cost for r in trace.restarts)
print(f"\nprobing: {len(trace.restarts)} restarts, truncated by the time budget: {trace.partial}")
print(f"  nearest-neighbour tours cost {min(r.construction_cost for r in trace.restarts):.1f} at best")
print(f"  best local minimum {best:.1f}")
for r in trace.restarts[:3]:
    print(f"  restart from node {r.start}: {r.construction_cost:.1f} -> {r.local_min_cost:.1f} in {r.steps} improving moves")
