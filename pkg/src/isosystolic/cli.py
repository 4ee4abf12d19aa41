"""Command-line front end.

Every subcommand writes its artifacts into the output directory (``--out``,
else ``$ISOSYSTOLIC_OUT``, else ``./out``) and exits non-zero when a solve
did not converge or a check failed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, rp2, variational
from .analysis import SCHEMA_VERSION, write_json
from .dual import extract_geodesics, solve_dual, write_geodesics_csv, write_geodesics_svg, dump_dual
from .mesh import build_mesh
from .primal import dump_primal, solve_primal

log = logging.getLogger("isosystolic")

OUT_ENV = "ISOSYSTOLIC_OUT"


@dataclass
class RunConfig:
    command: str
    n: int = 3
    nc: list[int] = field(default_factory=lambda: [2, 4, 8, 16])
    kind: str = "dual"
    tol: float = 1e-7
    max_iter: int = 200_000
    out: Path = Path("out")
    scheme: str = "auto"
    timestamp: bool = True
    trace: bool = False
    dump: bool = False
    levels: list[float] | int = 9
    quantity: str = "A"
    method: str = "model"
    grid: int = 10
    bands: int = 8
    points: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if any(k < 1 for k in self.nc):
            raise ValueError("every N_c must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.kind not in ("primal", "dual", "both"):
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def stamp(self) -> str | None:
        if not self.timestamp:
            return None
        return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _levels(text: str):
    if "," in text or "." in text:
        try:
            return [float(t) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad level list {text!r}") from exc
    try:
        k = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad level count {text!r}") from exc
    if k < 1:
        raise argparse.ArgumentTypeError("level count must be positive")
    return k


def _envelope(cfg: RunConfig, payload: dict) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": cfg.command}
    stamp = cfg.stamp
    if stamp:
        out["generated"] = stamp
    out.update(payload)
    return out


def _solve_one(cfg: RunConfig, kind: str, N: int):
    mesh = build_mesh(cfg.n, N, cfg.scheme)
    t0 = time.perf_counter()
    solver = solve_primal if kind == "primal" else solve_dual
    sol = solver(mesh, tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed, trace=cfg.trace)
    elapsed = time.perf_counter() - t0
    return mesh, sol, elapsed


def cmd_solve(cfg: RunConfig) -> int:
    kinds = ["primal", "dual"] if cfg.kind == "both" else [cfg.kind]
    ok = True
    for kind in kinds:
        reports = []
        primal_by_N = {}
        for N in cfg.nc:
            mesh, sol, elapsed = _solve_one(cfg, kind, N)
            # wall-clock timings are not reproducible, so they travel with the timestamp
            timings = {"solve_s": elapsed} if cfg.timestamp else {}
            if kind == "primal":
                rep = analysis.report_primal(sol, timings)
                primal_by_N[N] = sol
            else:
                rep = analysis.check_identities(None, sol, timings=timings)
            reports.append(rep)
            ok &= rep.converged
            tag = f"n{cfg.n}_nc{N}_{kind}"
            if cfg.trace:
                sol.result.write_trace(cfg.out / f"trace_{tag}.csv")
            if cfg.dump:
                mesh.dump(cfg.out / f"mesh_n{cfg.n}_nc{N}.json")
                (dump_primal if kind == "primal" else dump_dual)(sol, cfg.out / f"solution_{tag}.csv")
            log.info("%s N_c=%d A=%.6f P=%.5f rho2(0)=%.5f converged=%s", kind, N, rep.A, rep.P,
                     rep.rho2_origin, rep.converged)
            print(f"{kind:6s} N_c={N:4d}  A={rep.A:.5f}  P={rep.P:.4f}  rho2(0,0)={rep.rho2_origin:.5f}"
                  + (f"  2nu={2 * rep.nu:.4f}" if rep.nu is not None else "")
                  + ("" if rep.converged else "  [not converged]"))
        analysis.write_table(reports, cfg.out / f"table_{kind}_n{cfg.n}.csv", cfg.stamp)
        write_json(_envelope(cfg, {"reports": [r.to_dict() for r in reports]}),
                   cfg.out / f"reports_{kind}_n{cfg.n}.json")
    return 0 if ok else 1


def cmd_geodesics(cfg: RunConfig) -> int:
    mesh, sol, _ = _solve_one(cfg, "dual", cfg.nc[0])
    half = abs(sol.nu) / 2
    if isinstance(cfg.levels, int):
        k = cfg.levels
        levels = list(half * np.linspace(-1, 1, k + 2)[1:-1])
    else:
        levels = cfg.levels
    curves = {}
    for alpha in range(1, cfg.n + 1):
        for lv, line in zip(levels, extract_geodesics(sol, alpha, levels)):
            curves[(alpha, float(lv))] = line
    tag = f"n{cfg.n}_nc{cfg.nc[0]}"
    write_geodesics_csv(curves, cfg.out / f"geodesics_{tag}.csv")
    write_geodesics_svg(curves, mesh.polygon.vertices, cfg.out / f"geodesics_{tag}.svg")
    print(f"wrote {len(curves)} polylines for nu={sol.nu:.6f}")
    return 0 if sol.result.converged else 1


QUANTITY = {"A": "A", "P": "P", "rho0": "rho2_origin", "nu": "nu"}


def cmd_converge(cfg: RunConfig) -> int:
    kind = "dual" if cfg.kind == "both" else cfg.kind
    if cfg.quantity == "nu" and kind != "dual":
        print("nu is only defined for the dual program", file=sys.stderr)
        return 2
    samples = []
    ok = True
    for N in cfg.nc:
        _, sol, _ = _solve_one(cfg, kind, N)
        rep = analysis.report_primal(sol) if kind == "primal" else analysis.check_identities(None, sol)
        ok &= rep.converged
        samples.append((N, getattr(rep, QUANTITY[cfg.quantity])))
        print(f"N_c={N:4d}  {cfg.quantity}={samples[-1][1]:.6f}")
    fit = analysis.extrapolate(samples, cfg.quantity, cfg.method)
    print(f"a={fit.a:.6g}  b={fit.b:.4f}  q*={fit.q_star:.6f}")
    write_json(_envelope(cfg, {"kind": kind, "n": cfg.n, "fit": fit.to_dict()}),
               cfg.out / f"converge_{kind}_{cfg.quantity}_n{cfg.n}.json")
    return 0 if ok else 1


def cmd_rp2_check(cfg: RunConfig) -> int:
    pts = rp2.interior_grid(cfg.grid)
    target = np.pi / cfg.n
    sums = np.array([rp2.sum_rule(tuple(p), cfg.n) for p in pts])
    sum_res = float(np.max(np.abs(sums - target)))
    phis = np.linspace(0, np.pi, cfg.bands, endpoint=False)
    aux, calib, orth, dens = 0.0, 0.0, 0.0, 0.0
    nu = 2 / (np.pi * cfg.n)
    for p in pts:
        for phi0 in phis:
            forms = rp2.aux_forms(tuple(p), phi0)
            al, be = rp2.alpha_beta(tuple(p), phi0)
            aux = max(aux, float(np.max(np.abs(forms - (al * al + be * be)))))
            c1, c2 = rp2.calibration_residuals(tuple(p), phi0)
            calib, orth = max(calib, abs(c1)), max(orth, abs(c2))
            dens = max(dens, abs(rp2.band_density(tuple(p), phi0, nu)
                                 - rp2.band_density_reparam(tuple(p), phi0, nu)))
    checks = {
        "sum_rule_max_residual": sum_res,
        "aux_identity_max_residual": aux,
        "calibration_max_residual": calib,
        "orthogonality_max_residual": orth,
        "density_forms_max_residual": dens,
        "rho2_origin_minus_16_over_pi2": rp2.hemisphere_rho2((0.0, 0.0)) - 16 / np.pi**2,
        "disk_area_minus_2_over_pi": rp2.disk_area() - 2 / np.pi,
    }
    passed = sum_res <= 1e-8 and aux <= 1e-12 and calib <= 1e-6 and orth <= 1e-6
    write_json(_envelope(cfg, {"n": cfg.n, "grid": cfg.grid, "bands": cfg.bands, "points": len(pts),
                               "checks": checks, "passed": passed}), cfg.out / f"rp2_check_n{cfg.n}.json")
    for k, v in checks.items():
        print(f"{k:34s} {v:.3e}")
    return 0 if passed else 1


def cmd_variational_check(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    phis = np.linspace(0.3, 2.0, cfg.bands) if cfg.bands > 1 else np.array([0.3])
    new_res, new_chi, unit = 0.0, 0.0, 0.0
    count = 0
    chi = (lambda t: 1 + t * t, lambda t: 2 * t)
    while count < cfg.points:
        X, Y = rng.uniform(0.02, 0.98, 2)
        if np.cos(np.pi * X) ** 2 + np.cos(np.pi * Y) ** 2 > 0.95:
            continue
        count += 1
        f = variational.rp2_off_diagonal(X, Y)
        for phi0 in phis:
            d = variational.z_band(X, Y, phi0)
            new_res = max(new_res, abs(variational.new_eom_residual(
                d, f, variational.multiplier_field(X, Y, phi0, cfg.n))))
            new_chi = max(new_chi, abs(variational.new_eom_residual(
                d, f, variational.multiplier_field(X, Y, phi0, cfg.n, chi))))
            unit = max(unit, abs(d.Z_X**2 + d.Z_Y**2 + 2 * f.f * d.Z_X * d.Z_Y - 1))
    integ = 0.0
    for p in rp2.random_disk_points(rng, 20):
        if abs(p[0] * p[1]) < 1e-6:
            continue
        integ = max(integ, abs(variational.f_eom_integral(tuple(p), cfg.n) + np.pi / cfg.n))
    s = 1e-3
    old = {}
    for a, b in ((s, s), (s, -s), (-s, s), (-s, -s)):
        d = variational.z_band(0.5 + a, 0.5 + b, np.pi / 4)
        old[f"{a:+g},{b:+g}"] = float(variational.calabi_eom_residual(d))
    checks = {
        "new_eom_max_residual": new_res,
        "new_eom_rescaled_max_residual": new_chi,
        "unit_norm_max_residual": unit,
        "f_equation_max_residual": integ,
        "old_eom_residual_near_pole": old,
    }
    passed = new_res <= 1e-8 and new_chi <= 1e-8 and integ <= 1e-8
    write_json(_envelope(cfg, {"n": cfg.n, "points": cfg.points, "bands": list(map(float, phis)),
                               "checks": checks, "passed": passed}),
               cfg.out / f"variational_check_n{cfg.n}.json")
    for k, v in checks.items():
        print(f"{k:32s} {v if isinstance(v, dict) else f'{v:.3e}'}")
    return 0 if passed else 1


def cmd_compare_rp2(cfg: RunConfig) -> int:
    _, sol, _ = _solve_one(cfg, "dual", cfg.nc[0])
    cmp = rp2.polygon_vs_hemisphere(sol)
    rp2.write_comparison_csv(cmp, cfg.out / f"compare_rp2_n{cfg.n}_nc{cfg.nc[0]}.csv", cfg.stamp)
    print(f"A={sol.objective:.5f}  max inner deviation={cmp['max_inner_deviation']:.4f}  "
          f"mean={cmp['mean_inner_deviation']:.4f}")
    return 0 if sol.result.converged else 1


COMMANDS = {
    "solve": cmd_solve,
    "geodesics": cmd_geodesics,
    "converge": cmd_converge,
    "rp2-check": cmd_rp2_check,
    "variational-check": cmd_variational_check,
    "compare-rp2": cmd_compare_rp2,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isosystolic", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or ./out)")
    common.add_argument("--no-timestamp", action="store_true", help="omit timestamps and timings for byte-stable output")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--n", type=int, default=3, help="polygon has 2n sides")
    solver.add_argument("--tol", type=float, default=1e-7)
    solver.add_argument("--max-iter", type=int, default=200_000)
    solver.add_argument("--scheme", choices=["auto", "hexagon", "general"], default="auto")
    solver.add_argument("--trace", action="store_true", help="write iteration trace CSV")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", parents=[common, solver], help="solve primal and/or dual programs")
    p.add_argument("--nc", type=_int_list, default=[2, 4, 8, 16])
    p.add_argument("--kind", choices=["primal", "dual", "both"], default="dual")
    p.add_argument("--dump", action="store_true", help="also write mesh JSON and solution CSV")

    p = sub.add_parser("geodesics", parents=[common, solver], help="iso-lines of the dual potentials")
    p.add_argument("--nc", type=_int_list, default=[16])
    p.add_argument("--levels", type=_levels, default=9, help="count, or comma-separated values")

    p = sub.add_parser("converge", parents=[common, solver], help="refinement study and extrapolation")
    p.add_argument("--nc", type=_int_list, default=[2, 4, 8, 16, 32])
    p.add_argument("--quantity", choices=list(QUANTITY), default="A")
    p.add_argument("--kind", choices=["primal", "dual"], default="dual")
    p.add_argument("--method", choices=["model", "loglog"], default="model", help="extrapolation fit")

    p = sub.add_parser("rp2-check", parents=[common], help="projective-plane identities")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--grid", type=int, default=10)
    p.add_argument("--bands", type=int, default=8)

    p = sub.add_parser("variational-check", parents=[common], help="equations of motion on the projective plane")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--bands", type=int, default=3)

    p = sub.add_parser("compare-rp2", parents=[common, solver], help="dual metric against the hemisphere")
    p.add_argument("--nc", type=_int_list, default=[16])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    out = args.out or Path(os.environ.get(OUT_ENV, "out"))
    kw = {k: getattr(args, k) for k in ("n", "nc", "kind", "tol", "scheme", "trace", "dump", "levels",
                                        "quantity", "method", "grid", "bands", "points", "seed") if hasattr(args, k)}
    if hasattr(args, "max_iter"):
        kw["max_iter"] = args.max_iter
    return RunConfig(command=args.command, out=out, timestamp=not args.no_timestamp, **kw)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    if args.command in ("rp2-check", "variational-check") and cfg.n < 1:
        parser.error("n must be positive")
    cfg.out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[cfg.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
