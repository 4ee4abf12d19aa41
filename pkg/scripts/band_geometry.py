"""Band angle and three-band area form along the hypotenuse of T_6 (primal hexagon).

Writes one CSV row per sample radius: rho^2, rho~^2, f and angle theta_12.
Where the third band dies out rho~^2 stops tracking rho^2.
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from isosystolic.analysis import band_angle, riemannian_area_form
from isosystolic.mesh import build_mesh
from isosystolic.primal import solve_primal


def main(N_c: int, samples: int, out: Path) -> None:
    sol = solve_primal(build_mesh(3, N_c), max_iter=800_000)
    theta = band_angle(sol, 1, 2)
    rt, f = riemannian_area_form(sol, 1, 2, 3)
    apex = sol.mesh.polygon.apex
    _, idx = sol.mesh._centroid_tree.query(np.linspace(0, 1, samples)[:, None] * apex)
    idx = list(dict.fromkeys(idx.tolist()))
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "rho2", "rho2_tilde", "f", "theta12"])
        for k in idx:
            r = float(np.linalg.norm(sol.mesh.centroids[k]))
            w.writerow([f"{r:.6f}", f"{sol.omega[k]:.6f}", f"{rt[k]:.6f}", f"{f[k]:.6f}", f"{theta[k]:.6f}"])
    print(f"wrote {out}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nc", type=int, default=32)
    ap.add_argument("--samples", type=int, default=60)
    ap.add_argument("--out", type=Path, default=Path("results/band_geometry.csv"))
    a = ap.parse_args()
    main(a.nc, a.samples, a.out)
