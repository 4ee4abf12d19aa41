"""SVG pictures of the systolic bands of dual optima for a few polygons."""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from isosystolic.dual import extract_geodesics, solve_dual, write_geodesics_csv, write_geodesics_svg
from isosystolic.mesh import build_mesh


def draw(n: int, N_c: int, levels: int, out: Path) -> None:
    sol = solve_dual(build_mesh(n, N_c))
    lv = list(abs(sol.nu) / 2 * np.linspace(-1, 1, levels + 2)[1:-1])
    curves = {}
    for alpha in range(1, n + 1):
        for level, line in zip(lv, extract_geodesics(sol, alpha, lv)):
            curves[(alpha, float(level))] = line
    write_geodesics_csv(curves, out / f"geodesics_n{n}_nc{N_c}.csv")
    write_geodesics_svg(curves, sol.mesh.polygon.vertices, out / f"geodesics_n{n}_nc{N_c}.svg")
    print(f"n={n} N_c={N_c}: {len(curves)} curves, nu={sol.nu:.5f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", default="3,4,5")
    ap.add_argument("--nc", type=int, default=16)
    ap.add_argument("--levels", type=int, default=11)
    ap.add_argument("--out", type=Path, default=Path("results/geodesics"))
    a = ap.parse_args()
    a.out.mkdir(parents=True, exist_ok=True)
    for n in map(int, a.ns.split(",")):
        draw(n, a.nc, a.levels, a.out)
