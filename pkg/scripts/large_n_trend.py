"""Dual optimum for growing n and its approach to the hemisphere metric.

The area should fall toward 2/pi and rho^2 near the centre should approach
16/pi^2 / (1 + 4|z|^2)^2.
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from isosystolic import rp2
from isosystolic.dual import solve_dual
from isosystolic.mesh import build_mesh


@dataclass
class TrendConfig:
    ns: list[int] = field(default_factory=lambda: [3, 4, 6, 8, 12, 16])
    N_c: int = 16
    out: Path = Path("results/large_n")


def run(cfg: TrendConfig) -> list[dict]:
    cfg.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in cfg.ns:
        sol = solve_dual(build_mesh(n, cfg.N_c))
        cmp = rp2.polygon_vs_hemisphere(sol)
        rp2.write_comparison_csv(cmp, cfg.out / f"profile_n{n}.csv")
        rows.append({"n": n, "A": sol.objective, "A_minus_2_over_pi": sol.objective - 2 / np.pi,
                     "max_inner_deviation": cmp["max_inner_deviation"],
                     "mean_inner_deviation": cmp["mean_inner_deviation"],
                     "converged": sol.result.converged})
        print(f"n={n:3d}  A={sol.objective:.5f}  max dev={cmp['max_inner_deviation']:.4f}", flush=True)
    with open(cfg.out / "trend.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", default="3,4,6,8,12,16")
    ap.add_argument("--nc", type=int, default=16)
    ap.add_argument("--out", type=Path, default=Path("results/large_n"))
    a = ap.parse_args()
    run(TrendConfig([int(x) for x in a.ns.split(",")], a.nc, a.out))
