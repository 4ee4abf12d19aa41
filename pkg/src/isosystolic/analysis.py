"""Post-processing of solved metrics: perimeter, identities, extrapolation, band angles."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .mesh import GEOM_TOL, Mesh
from .polygon import base_one_form

SCHEMA_VERSION = 1

# relative thresholds for the identity flags
NU_IDENTITY_TOL = 5e-3
PERIMETER_IDENTITY_TOL = 2e-2


def edge_samples(mesh: Mesh) -> list[tuple[int, float, float, float]]:
    """Plaquettes with an edge on x = 1/2 overlapping 0 <= y <= half edge.

    Returns (plaquette, y_low, y_high, overlap length) sorted from the axis up.
    """
    poly = mesh.polygon
    x0, top = poly.apothem, poly.half_edge
    out = []
    for f, tri in enumerate(mesh.triangles):
        pts = mesh.vertices[tri]
        on = np.abs(pts[:, 0] - x0) <= GEOM_TOL
        if on.sum() != 2:
            continue
        lo, hi = sorted(pts[on, 1])
        lo_c, hi_c = max(lo, 0.0), min(hi, top)
        if hi_c - lo_c > GEOM_TOL:
            out.append((f, lo_c, hi_c, hi_c - lo_c))
    return sorted(out, key=lambda s: s[1])


def perimeter(rho2: np.ndarray, mesh: Mesh, n: int | None = None, clamp: bool = True) -> float:
    """P = 2n * (length of e~_1) by the midpoint rule over the plaquettes touching e~_1.

    Only the upper half of e~_1 is integrated; the lower half follows by
    symmetry.  With ``clamp`` the sample next to the polygon vertex takes the
    value of its inward neighbour, since the discrete metric blows up there.
    """
    n = mesh.n if n is None else n
    samples = edge_samples(mesh)
    rho = np.sqrt(np.maximum(np.asarray(rho2, dtype=float), 0.0))
    vals = np.array([rho[f] for f, *_ in samples])
    if clamp and len(vals) > 1:
        vals[-1] = vals[-2]
    lengths = np.array([s[3] for s in samples])
    return float(2 * n * 2 * (vals @ lengths))


def origin_plaquettes(mesh: Mesh) -> np.ndarray:
    tri_pts = mesh.vertices[mesh.triangles]
    near = np.linalg.norm(tri_pts, axis=2).min(axis=1) <= GEOM_TOL
    return np.flatnonzero(near)


def rho2_origin(rho2: np.ndarray, mesh: Mesh) -> float:
    """Mean of rho^2 over the plaquettes of Q touching the origin.

    By symmetry every such plaquette carries the same value up to solver error.
    """
    return float(np.mean(np.asarray(rho2)[origin_plaquettes(mesh)]))


@dataclass
class RunReport:
    n: int
    N_c: int
    kind: str
    A: float
    P: float
    L_e: float
    rho2_origin: float
    nu: float | None = None
    residuals: dict[str, float] = field(default_factory=dict)
    flags: dict[str, bool] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    converged: bool = True
    gap: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d


def report_primal(sol, timings: dict | None = None) -> RunReport:
    mesh = sol.mesh
    P = perimeter(sol.omega, mesh)
    return RunReport(
        n=mesh.n, N_c=mesh.N_c, kind="primal", A=sol.objective, P=P,
        L_e=P / (2 * mesh.n), rho2_origin=rho2_origin(sol.omega, mesh),
        residuals={"P_minus_4A": P - 4 * sol.objective},
        timings=timings or {}, converged=sol.result.converged, gap=sol.result.gap,
    )


def check_identities(primal, dual, n: int | None = None, timings: dict | None = None) -> RunReport:
    """Report for the dual solution with the A = n nu, P = 4A, L_e = 2 nu residuals.

    ``primal`` may be None; when given, the sandwich residual dual - primal is added.
    """
    mesh = dual.mesh
    n = mesh.n if n is None else n
    A = dual.objective
    rho2 = dual.rho**2
    P = perimeter(rho2, mesh, n)
    L_e = P / (2 * n)
    res = {
        "A_minus_n_nu": A - n * dual.nu,
        "P_minus_4A": P - 4 * A,
        "L_e_minus_2nu": L_e - 2 * dual.nu,
    }
    flags = {
        "A_equals_n_nu": abs(res["A_minus_n_nu"]) <= NU_IDENTITY_TOL * abs(A),
        "P_equals_4A": abs(res["P_minus_4A"]) <= PERIMETER_IDENTITY_TOL * abs(4 * A),
    }
    if primal is not None:
        res["dual_minus_primal"] = A - primal.objective
        tol = dual.result.tolerance * (1 + abs(A)) + primal.result.tolerance * (1 + abs(primal.objective))
        flags["dual_below_primal"] = res["dual_minus_primal"] <= tol
    return RunReport(
        n=n, N_c=mesh.N_c, kind="dual", A=A, P=P, L_e=L_e,
        rho2_origin=rho2_origin(rho2, mesh), nu=dual.nu, residuals=res, flags=flags,
        timings=timings or {}, converged=dual.result.converged, gap=dual.result.gap,
    )


@dataclass
class ExtrapolationFit:
    quantity: str
    samples: list[tuple[int, float]]
    a: float
    b: float
    q_star: float
    fitted: bool = True
    method: str = "model"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        for k in ("a", "b"):
            if not math.isfinite(d[k]):
                d[k] = None
        return d


def extrapolate(samples, quantity: str = "q", method: str = "model") -> ExtrapolationFit:
    """Fit e(N) = q(N) - q(N_max) by least squares in log |e| and return q(N_max) - a / N_max^b.

    ``method="model"`` fits log |e| to log |a (N^-b - N_max^-b)|, which is what
    q(N) = q* + a / N^b implies once errors are measured against the finest
    sample; it recovers an exact power law exactly.  ``method="loglog"`` fits
    log |e| to log |a| - b log N directly, the cruder classical procedure.
    Samples other than the reference with |e| < 1e-12 are dropped.
    """
    if method not in ("model", "loglog"):
        raise ValueError(f"unknown method {method!r}")
    pts = sorted((int(N), float(q)) for N, q in samples)
    if len(pts) < 4:
        raise ValueError(f"need at least 4 samples, got {len(pts)}")
    N_max, q_max = pts[-1]
    Ns = np.array([p[0] for p in pts[:-1]], dtype=float)
    err = np.array([p[1] for p in pts[:-1]]) - q_max
    keep = np.abs(err) >= 1e-12
    if keep.sum() < 2:
        return ExtrapolationFit(quantity, pts, math.nan, math.nan, q_max, fitted=False, method=method)
    Ns, err = Ns[keep], err[keep]
    logN, loge = np.log(Ns), np.log(np.abs(err))
    slope, intercept = np.polyfit(logN, loge, 1)
    b, log_a = -slope, intercept
    if method == "model":
        def misfit(beta):
            g = np.log(Ns**-beta - N_max**-beta)
            la = np.mean(loge - g)
            return np.sum((loge - la - g) ** 2), la

        opt = optimize.minimize_scalar(lambda t: misfit(t)[0], bounds=(1e-3, 20.0),
                                       method="bounded", options={"xatol": 1e-13})
        b, log_a = float(opt.x), misfit(opt.x)[1]
    # sign of the error model from the dominant (coarsest) samples
    a = float(np.sign(np.sum(err)) * np.exp(log_a))
    return ExtrapolationFit(quantity, pts, a, float(b), q_max - a / N_max**b, method=method)


def band_angle(sol, alpha: int, beta: int) -> np.ndarray:
    """Angle between the calibrations dX^alpha and dX^beta in the metric rho^2 dx^2.

    NaN where rho^2 < 1e-12.
    """
    from .primal import band_fields

    mesh = sol.mesh
    grads = band_fields(mesh, sol.phi1, "primal", np.arange(mesh.n_plaquettes))
    n = mesh.n
    u = grads[:, alpha - 1] + base_one_form(alpha, n)
    v = grads[:, beta - 1] + base_one_form(beta, n)
    rho2 = sol.omega
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.einsum("ij,ij->i", u, v) / rho2
    cos = np.where(rho2 >= 1e-12, np.clip(cos, -1, 1), np.nan)
    return np.arccos(cos)


def riemannian_area_form(sol, alpha: int, beta: int, gamma: int) -> tuple[np.ndarray, np.ndarray]:
    """rho~^2 = |d(X,Y)/d(x,y)| / sqrt(1 - f^2) with X, Y, Z the band potentials.

    Returns (rho~^2, f); entries are NaN where |f| >= 1.
    """
    from .primal import band_fields

    if len({alpha, beta, gamma}) != 3:
        raise ValueError("three distinct bands are needed")
    mesh = sol.mesh
    n = mesh.n
    grads = band_fields(mesh, sol.phi1, "primal", np.arange(mesh.n_plaquettes))
    dX = grads[:, alpha - 1] + base_one_form(alpha, n)
    dY = grads[:, beta - 1] + base_one_form(beta, n)
    dZ = grads[:, gamma - 1] + base_one_form(gamma, n)
    J = np.stack([dX, dY], axis=1)
    det = np.linalg.det(J)
    with np.errstate(divide="ignore", invalid="ignore"):
        ZXY = np.linalg.solve(np.transpose(J, (0, 2, 1)), dZ[:, :, None])[:, :, 0]
        f = (1 - ZXY[:, 0] ** 2 - ZXY[:, 1] ** 2) / (2 * ZXY[:, 0] * ZXY[:, 1])
        out = np.abs(det) / np.sqrt(1 - f**2)
    bad = ~(np.abs(f) < 1)
    out[bad] = np.nan
    return out, f


def write_table(reports: list[RunReport], path: str | Path, timestamp: str | None = None) -> None:
    """Refinement table CSV: kind, N_c, A, P, rho2_origin[, two_nu]."""
    dual = any(r.kind == "dual" for r in reports)
    with open(path, "w", newline="") as fh:
        if timestamp:
            fh.write(f"# generated {timestamp}\n")
        w = csv.writer(fh)
        header = ["kind", "N_c", "A", "P", "rho2_origin"] + (["two_nu"] if dual else [])
        w.writerow(header)
        for r in reports:
            row = [r.kind, r.N_c, f"{r.A:.8f}", f"{r.P:.8f}", f"{r.rho2_origin:.8f}"]
            if dual:
                row.append(f"{2 * r.nu:.8f}" if r.nu is not None else "")
            w.writerow(row)


def write_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
