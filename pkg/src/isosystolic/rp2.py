"""Closed-form extremal metric of the projective plane on the disk |z| <= 1/2.

The disk is the hemisphere of radius 1/pi seen from above and scaled so that
the equator sits at |z| = 1/2.  A band of systolic geodesics is labelled by
the azimuth phi0 of its starting boundary point; x_phi0 is the length along
the geodesics and varphi_phi0 the transverse (dual) coordinate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

QUAD_EPSREL = 1e-10
BOUNDARY_OFFSET = 1e-8


@dataclass(frozen=True)
class DiskPoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if self.x**2 + self.y**2 > 0.25 + 1e-15:
            raise ValueError(f"({self.x}, {self.y}) lies outside the disk |z| <= 1/2")

    @property
    def r2(self) -> float:
        return self.x**2 + self.y**2


@dataclass(frozen=True)
class BandLabel:
    phi0: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi0", float(np.mod(self.phi0, np.pi)))


@dataclass(frozen=True)
class ABPair:
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.a**2 + self.b**2 >= 1:
            raise ValueError("a^2 + b^2 must be < 1")

    @classmethod
    def from_point(cls, x: float, y: float) -> "ABPair":
        q = 1 + 16 * (x * x + y * y) ** 2
        return cls(8 * (x * x - y * y) / q, 16 * x * y / q)


def _xy(p):
    if isinstance(p, DiskPoint):
        return p.x, p.y
    x, y = p
    return float(x), float(y)


def _phi0(band):
    return band.phi0 if isinstance(band, BandLabel) else float(band)


def hemisphere_rho2(p) -> float:
    x, y = _xy(p)
    return 16.0 / (np.pi**2 * (1 + 4 * (x * x + y * y)) ** 2)


def band_length_coordinate(p, band) -> float:
    """x_phi0 in [0, 1] from cos(pi x) = 4 (x cos phi0 + y sin phi0) / (1 + 4|z|^2)."""
    x, y = _xy(p)
    phi0 = _phi0(band)
    c = 4 * (x * np.cos(phi0) + y * np.sin(phi0)) / (1 + 4 * (x * x + y * y))
    return float(np.arccos(np.clip(c, -1.0, 1.0)) / np.pi)


def band_angle_coordinate(p, band) -> float:
    """varphi~_phi0 in [-pi/2, pi/2]; the two-argument arctangent gives the boundary limit."""
    x, y = _xy(p)
    phi0 = _phi0(band)
    num = 4 * (y * np.cos(phi0) - x * np.sin(phi0))
    den = 1 - 4 * (x * x + y * y)
    return float(-np.arctan2(num, max(den, 0.0)))


def band_dual_coordinate(p, band, nu: float) -> float:
    return 0.5 * nu * np.sin(band_angle_coordinate(p, band))


def band_density(p, band, nu: float) -> float:
    """|h_phi0|, the transverse density of the band's geodesics."""
    x, y = _xy(p)
    phi0 = _phi0(band)
    r4 = (x * x + y * y) ** 2
    ab = ABPair.from_point(x, y)
    return float(
        0.5 * np.pi * nu * (1 - 16 * r4) / (1 + 16 * r4)
        / (1 - ab.a * np.cos(2 * phi0) - ab.b * np.sin(2 * phi0))
    )


def band_density_reparam(p, band, nu: float) -> float:
    """Same density from (pi nu / 2) cos(varphi~) / sin(pi x)."""
    return float(
        0.5 * np.pi * nu * np.cos(band_angle_coordinate(p, band))
        / np.sin(np.pi * band_length_coordinate(p, band))
    )


def alpha_beta(p, band) -> tuple[float, float]:
    """Coefficients of the differential -(pi/4) sin(pi x) dx = (alpha dx + beta dy)/(1+4|z|^2)^2."""
    x, y = _xy(p)
    phi0 = _phi0(band)
    c, s = np.cos(phi0), np.sin(phi0)
    alpha = (1 + 4 * (y * y - x * x)) * c - 8 * x * y * s
    beta = (1 + 4 * (x * x - y * y)) * s - 8 * x * y * c
    return float(alpha), float(beta)


def aux_forms(p, band) -> np.ndarray:
    """Four expressions for alpha^2 + beta^2 that must agree."""
    x, y = _xy(p)
    phi0 = _phi0(band)
    c, s = np.cos(phi0), np.sin(phi0)
    r2 = x * x + y * y
    z = complex(x, y)
    w = np.exp(1j * phi0) - 4 * z * z * np.exp(-1j * phi0)
    return np.array([
        1 + 16 * r2 * r2 - 8 * ((x * x - y * y) * np.cos(2 * phi0) + 2 * x * y * np.sin(2 * phi0)),
        (1 - 4 * r2) ** 2 + 16 * (y * c - x * s) ** 2,
        (1 + 4 * r2) ** 2 - 16 * (x * c + y * s) ** 2,
        (w * np.conj(w)).real,
    ])


def conformal_integral_closed(a: float, b: float) -> float:
    """int_0^pi dphi / (1 - a cos 2phi - b sin 2phi) = pi / sqrt(1 - a^2 - b^2)."""
    ABPair(a, b)
    return float(np.pi / np.sqrt(1 - a * a - b * b))


def _quad(fun, lo: float, hi: float) -> float:
    val, err = integrate.quad(fun, lo, hi, epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
    if not np.isfinite(val) or err > 1e3 * QUAD_EPSREL * max(abs(val), 1e-300):
        raise ArithmeticError(f"quadrature did not converge: value {val}, error {err}")
    return float(val)


def sum_rule(p, n: int) -> float:
    """int_0^pi |h_phi0| dphi0 with nu = 2/(pi n); equals pi/n at every point."""
    x, y = _xy(p)
    if x * x + y * y >= 0.25:
        raise ValueError("sum rule needs an interior point")
    nu = 2 / (np.pi * n)
    return _quad(lambda t: band_density((x, y), t, nu), 0.0, np.pi)


def disk_area() -> float:
    """int rho^2 over the disk, in polar coordinates."""
    val, err = integrate.quad(
        lambda r: 2 * np.pi * r * hemisphere_rho2((r, 0.0)), 0.0, 0.5, epsabs=0.0, epsrel=1e-13
    )
    return float(val)


def _polygon_rho2(sol, pts: np.ndarray) -> np.ndarray:
    tree = sol.mesh._centroid_tree
    _, idx = tree.query(pts)
    return (sol.rho**2)[idx]


def polygon_vs_hemisphere(sol, samples: int = 40, inner_radius: float = 0.35) -> dict:
    """Dual rho^2 against the hemisphere along the base and hypotenuse of T_{2n}.

    Points are snapped to the nearest plaquette centroid of Q.  The summary
    statistics cover the inner region |z| <= ``inner_radius``.
    """
    poly = sol.mesh.polygon
    rows = []
    apex = poly.apex
    for side, end in (("base", np.array([poly.apothem, 0.0])), ("hypotenuse", apex)):
        for t in np.linspace(0, 1, samples + 1):
            q = t * end
            rows.append((side, float(q[0]), float(q[1])))
    pts = np.array([[r[1], r[2]] for r in rows])
    # the hemisphere disk has radius 1/2: compare in the same apothem-1/2 units
    poly_vals = _polygon_rho2(sol, pts)
    hemi = np.array([hemisphere_rho2(tuple(p)) if p @ p <= 0.25 else np.nan for p in pts])
    dev = np.abs(poly_vals - hemi)
    inner = np.linalg.norm(pts, axis=1) <= inner_radius
    table = [
        {"side": s, "x": x, "y": y, "rho2_polygon": float(a), "rho2_hemisphere": float(b), "deviation": float(d)}
        for (s, x, y), a, b, d in zip(rows, poly_vals, hemi, dev)
    ]
    return {
        "n": poly.n,
        "N_c": sol.mesh.N_c,
        "inner_radius": inner_radius,
        "max_inner_deviation": float(np.nanmax(dev[inner])),
        "mean_inner_deviation": float(np.nanmean(dev[inner])),
        "rows": table,
    }


def write_comparison_csv(cmp: dict, path: str | Path, timestamp: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if timestamp:
            fh.write(f"# generated {timestamp}\n")
        w = csv.writer(fh)
        w.writerow(["side", "x", "y", "rho2_polygon", "rho2_hemisphere", "deviation"])
        for r in cmp["rows"]:
            w.writerow([r["side"], f"{r['x']:.8f}", f"{r['y']:.8f}", f"{r['rho2_polygon']:.8f}",
                        f"{r['rho2_hemisphere']:.8f}", f"{r['deviation']:.8f}"])


def calibration_residuals(p, band, h: float = 1e-6) -> tuple[float, float]:
    """(|dx|^2 - 1, <dx, dvarphi~>) in the hemisphere metric by central differences."""
    x, y = _xy(p)

    def grad(fun):
        return np.array([
            (fun((x + h, y), band) - fun((x - h, y), band)) / (2 * h),
            (fun((x, y + h), band) - fun((x, y - h), band)) / (2 * h),
        ])

    gx = grad(band_length_coordinate)
    gv = grad(band_angle_coordinate)
    rho2 = hemisphere_rho2((x, y))
    return float(gx @ gx / rho2 - 1), float(gx @ gv / rho2)


def random_disk_points(rng: np.random.Generator, count: int, r_max: float = 0.45) -> np.ndarray:
    """Uniform points in the disk |z| <= r_max."""
    r = r_max * np.sqrt(rng.uniform(0, 1, count))
    t = rng.uniform(0, 2 * np.pi, count)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def interior_grid(g: int, r_max: float = 0.45) -> np.ndarray:
    """g x g grid on [-r_max, r_max]^2 clipped to the disk of radius r_max."""
    t = np.linspace(-r_max, r_max, g)
    pts = np.array([(a, b) for a in t for b in t])
    inside = np.hypot(pts[:, 0], pts[:, 1]) <= r_max
    return pts[inside]
