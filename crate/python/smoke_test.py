"""Smoke test for the simplex_geostat_py extension module.

Builds are picked up straight from target/, so run `cargo build -p
simplex-geostat-py` first, then `python3 python/smoke_test.py`.
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "debug" / "libsimplex_geostat_py.so",
        REPO / "target" / "release" / "libsimplex_geostat_py.so",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not built; run `cargo build -p simplex-geostat-py` first")
    stage = Path(tempfile.mkdtemp(prefix="simplex-geostat-py-"))
    shutil.copy(built, stage / "simplex_geostat_py.so")
    sys.path.insert(0, str(stage))
    import simplex_geostat_py

    return simplex_geostat_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    sg = load_module()

    closed = sg.closure([2.0, 1.0, 1.0])
    approx(sum(closed), 1.0, 1e-15)
    approx(closed[0], 0.5, 1e-15)

    approx(sg.half_taxi_distance([0.5, 0.3, 0.2], [0.5, 0.3, 0.2]), 0.0, 1e-15)
    d = sg.half_taxi_distance([0.6, 0.3, 0.1], [0.3, 0.3, 0.4])
    approx(d, 0.3, 1e-12)

    u = sg.ilr([0.6, 0.3, 0.1])
    approx(u[0], 0.490, 5e-3)
    approx(u[1], 1.180, 5e-3)
    back = sg.ilr_inv(u)
    for a, b in zip(back, [0.6, 0.3, 0.1]):
        approx(a, b, 1e-12)

    assert sg.aitchison_inner([1 / 3] * 3, [0.6, 0.3, 0.1]) == 0.0

    rows = [[0.6, 0.3, 0.1], [0.3, 0.3, 0.4]]
    m = sg.mean(rows, "ilr")
    assert m["in_simplex"]
    approx(m["point"][1], 0.325, 5e-4)
    arith = sg.mean(rows, "arith")
    approx(arith["point"][0], 0.45, 1e-12)
    qam = sg.mean(rows, "qam", phi="log")
    assert qam["sum"] < 1.0  # componentwise geometric means under-shoot one

    model = json.dumps(
        {
            "variant": "proportional",
            "sigma": [[1.0, 0.2], [0.2, 0.5]],
            "rho": {"family": "exponential", "range": 1.0, "nugget_fraction": 0.0},
        }
    )
    sites = [[0.0], [1.0], [2.5]]
    report = sg.validate_model(model, sites)
    assert report["valid"]

    sol = sg.krige(model, sites, "cokrige")
    assert sol["weights_equal"]
    for col in sol["lambda"]:
        approx(sum(col), 1.0, 1e-10)

    single = sg.krige(model, sites, "single")
    approx(sum(single["lambda"]), 1.0, 1e-10)

    spec = json.dumps(
        {
            "seed": 5,
            "n": 6,
            "p": 3,
            "d": 1,
            "site_scheme": {"scheme": "uniform-box", "extent": 4.0},
            "data_scheme": {"scheme": "dirichlet", "concentration": 2.0},
        }
    )
    sim_sites, sim_rows = sg.simulate(spec)
    assert len(sim_sites) == 6 and len(sim_rows) == 6
    for row in sim_rows:
        approx(sum(row), 1.0, 1e-12)
    again = sg.simulate(spec)
    assert again == (sim_sites, sim_rows)

    model3 = json.dumps(
        {
            "variant": "proportional",
            "sigma": [[1.0, 0.1, 0.0], [0.1, 0.8, 0.1], [0.0, 0.1, 0.6]],
            "rho": {"family": "gaussian", "range": 2.0, "nugget_fraction": 0.1},
        }
    )
    ck = sg.krige(model3, sim_sites, "walvoort", data=sim_rows)
    approx(sum(ck["estimates"]), 1.0, 1e-9)
    assert all(x >= -1e-12 for x in ck["estimates"])
    assert math.isfinite(ck["objective"])

    print("smoke test passed")


if __name__ == "__main__":
    main()
