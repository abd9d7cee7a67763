import json, time
import numpy as np
from cqbem.verify import manufactured_scenario, run_self_convergence_study

sc = manufactured_scenario()   # level-2 icosphere, m=9 pulse, tau 0.3, horizon 4
out = {}
for method in ("backward_euler", "bdf2", "trapezoidal"):
    t0 = time.perf_counter()
    study = run_self_convergence_study(method, (32, 64, 128, 256), sc, quad_order=4)
    wall = time.perf_counter() - t0
    out[method] = {
        "wall_seconds": wall,
        "pair_orders": [float(x) for x in study.pair_orders],
        "observed_order": float(study.observed_order),
        "diffs": [float(x) for x in study.diffs],
        "finest_error": float(study.finest_error),
        "density_diffs": [float(x) for x in study.density_diffs],
        "density_orders": [float(x) for x in study.density_orders],
    }
    print(method, json.dumps(out[method], indent=2), flush=True)
    print(study.summary(), flush=True)
with open("/root/pkg/.scratch/ladders3.json", "w") as fh:
    json.dump(out, fh, indent=2)
print("DONE", flush=True)
