"""Three-band (Calabi) variational principle and its multi-band extension.

Coordinates (X, Y) are the length potentials of two bands; every further band
is a function Z(X, Y) with |dZ| = 1 in the cotangent metric ((1, f), (f, 1)).
The projective-plane solution has cos(pi Z) = cos(pi X) cos(phi0) + cos(pi Y) sin(phi0)
and f = -cot(pi X) cot(pi Y).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .rp2 import QUAD_EPSREL


@dataclass(frozen=True)
class BandDerivatives:
    Z: float
    Z_X: float
    Z_Y: float
    Z_XX: float
    Z_XY: float
    Z_YY: float


@dataclass(frozen=True)
class MetricOffDiagonal:
    f: float
    f_X: float
    f_Y: float


@dataclass(frozen=True)
class LagrangeMultiplier:
    lam: float
    lam_X: float
    lam_Y: float
    phi0: float | None = None


def calabi_delta(Z_X: float, Z_Y: float) -> float:
    return (2 * Z_X * Z_Y) ** 2 - (Z_X**2 + Z_Y**2 - 1) ** 2


def calabi_lagrangian(Z_X: float, Z_Y: float) -> float:
    delta = calabi_delta(Z_X, Z_Y)
    if delta <= 0:
        raise ValueError(f"degenerate band: Delta = {delta:.3e} <= 0")
    return 2 * abs(Z_X * Z_Y) / np.sqrt(delta)


def off_diagonal_from_band(Z_X: float, Z_Y: float) -> float:
    return (1 - Z_X**2 - Z_Y**2) / (2 * Z_X * Z_Y)


def eom_coefficients(p: float, q: float) -> tuple[float, float, float]:
    """The polynomials multiplying Z_XX, Z_XY, Z_YY (overall 4/Delta^(5/2) removed)."""
    p2, q2 = p * p, q * q
    f = p * q * (
        3 - 5 * p2 - 3 * q2
        + p2**2 + 10 * p2 * q2 - 3 * q2**2
        + p2**3 + p2**2 * q2 - 5 * p2 * q2**2 + 3 * q2**3
    )
    g = (
        1 - 2 * p2 - 2 * q2 + 16 * p2 * q2
        + 2 * p2**3 - 10 * p2**2 * q2 - 10 * p2 * q2**2 + 2 * q2**3
        - p2**4 - 4 * p2**3 * q2 + 10 * p2**2 * q2**2 - 4 * p2 * q2**3 - q2**4
    )
    ft = p * q * (
        3 - 5 * q2 - 3 * p2
        + q2**2 + 10 * p2 * q2 - 3 * p2**2
        + q2**3 + p2 * q2**2 - 5 * p2**2 * q2 + 3 * p2**3
    )
    return f, g, ft


def calabi_eom_residual(d: BandDerivatives) -> float:
    """Left-hand side of the reduced three-band Euler-Lagrange equation."""
    f, g, ft = eom_coefficients(d.Z_X, d.Z_Y)
    return f * d.Z_XX + g * d.Z_XY + ft * d.Z_YY


def _check_domain(X: float, Y: float) -> tuple[float, float]:
    cx, cy = np.cos(np.pi * X), np.cos(np.pi * Y)
    if not (0 < X < 1 and 0 < Y < 1) or cx * cx + cy * cy > 1:
        raise ValueError(f"(X, Y) = ({X}, {Y}) is outside the domain cos^2 pi X + cos^2 pi Y <= 1")
    return cx, cy


def z_band(X: float, Y: float, phi0: float) -> BandDerivatives:
    cx, cy = _check_domain(X, Y)
    c, s = np.cos(phi0), np.sin(phi0)
    sx, sy = np.sin(np.pi * X), np.sin(np.pi * Y)
    cz = np.clip(cx * c + cy * s, -1.0, 1.0)
    Z = np.arccos(cz) / np.pi
    sz = np.sin(np.pi * Z)
    if sz == 0:
        raise ValueError("band endpoint: sin(pi Z) = 0")
    pi = np.pi
    return BandDerivatives(
        Z=float(Z),
        Z_X=sx * c / sz,
        Z_Y=sy * s / sz,
        Z_XX=(cx / sz - sx**2 * cz / sz**3 * c) * pi * c,
        Z_XY=-(sx * sy * cz / sz**3) * pi * c * s,
        Z_YY=(cy / sz - sy**2 * cz / sz**3 * s) * pi * s,
    )


def rp2_off_diagonal(X: float, Y: float) -> MetricOffDiagonal:
    pi = np.pi
    cotx, coty = 1 / np.tan(pi * X), 1 / np.tan(pi * Y)
    cscx2, cscy2 = 1 / np.sin(pi * X) ** 2, 1 / np.sin(pi * Y) ** 2
    return MetricOffDiagonal(f=-cotx * coty, f_X=pi * cscx2 * coty, f_Y=pi * cotx * cscy2)


def _angle_parts(X: float, Y: float, phi0: float):
    """u = N/C with varphi~ = -atan(u), plus the partials of u."""
    cx, cy = _check_domain(X, Y)
    sx, sy = np.sin(np.pi * X), np.sin(np.pi * Y)
    c, s = np.cos(phi0), np.sin(phi0)
    N = cy * c - cx * s
    C = np.sqrt(max(1 - cx * cx - cy * cy, 0.0))
    if C == 0:
        raise ValueError("boundary of the band domain: varphi~ is +-pi/2")
    N_X, N_Y = np.pi * sx * s, -np.pi * sy * c
    C_X, C_Y = np.pi * cx * sx / C, np.pi * cy * sy / C
    u = N / C
    u_X = (N_X * C - N * C_X) / C**2
    u_Y = (N_Y * C - N * C_Y) / C**2
    return u, u_X, u_Y


def band_angle_xy(X: float, Y: float, phi0: float) -> float:
    """varphi~_phi0 expressed through the potentials X, Y."""
    u, _, _ = _angle_parts(X, Y, phi0)
    return float(-np.arctan(u))


def multiplier_field(X: float, Y: float, phi0: float, n: int, chi=None) -> LagrangeMultiplier:
    """lambda = (1/n) cos(varphi~) / sin(pi Z), optionally times chi(varphi~).

    ``chi`` is a pair (function, derivative) of one variable.
    """
    if n < 1:
        raise ValueError("n must be positive")
    d = z_band(X, Y, phi0)
    sz = np.sin(np.pi * d.Z)
    u, u_X, u_Y = _angle_parts(X, Y, phi0)
    beta = 1.0 / n
    lam = beta / (np.sqrt(1 + u * u) * sz)
    cot = np.cos(np.pi * d.Z) / sz
    dl_X = -u * u_X / (1 + u * u) - np.pi * cot * d.Z_X
    dl_Y = -u * u_Y / (1 + u * u) - np.pi * cot * d.Z_Y
    if chi is not None:
        fun, der = chi
        ang = -np.arctan(u)
        ang_X, ang_Y = -u_X / (1 + u * u), -u_Y / (1 + u * u)
        k = fun(ang)
        lam *= k
        dl_X += der(ang) * ang_X / k
        dl_Y += der(ang) * ang_Y / k
    return LagrangeMultiplier(float(lam), float(lam * dl_X), float(lam * dl_Y), phi0)


def harmonic_part(d: BandDerivatives, f: MetricOffDiagonal) -> float:
    return d.Z_XX + d.Z_YY + 2 * f.f * d.Z_XY


def multiplier_part(d: BandDerivatives, f: MetricOffDiagonal, lam: LagrangeMultiplier) -> float:
    return (d.Z_X * (lam.lam_X + f.f * lam.lam_Y) + d.Z_Y * (lam.lam_Y + f.f * lam.lam_X)) / lam.lam


def metric_part(d: BandDerivatives, f: MetricOffDiagonal) -> float:
    return (f.f_X * (d.Z_Y + f.f * d.Z_X) + f.f_Y * (d.Z_X + f.f * d.Z_Y)) / (1 - f.f**2)


def new_eom_residual(d: BandDerivatives, f: MetricOffDiagonal, lam: LagrangeMultiplier) -> float:
    """Expanded d*(lambda dZ) = 0 divided by lambda sqrt(g)."""
    if 1 - f.f**2 <= 0:
        raise ValueError(f"|f| = {abs(f.f):.6g} >= 1")
    return harmonic_part(d, f) + multiplier_part(d, f, lam) + metric_part(d, f)


def potentials_from_disk(x: float, y: float) -> tuple[float, float]:
    """(X, Y) = band length coordinates for phi0 = 0 and pi/2."""
    q = 1 + 4 * (x * x + y * y)
    return float(np.arccos(4 * x / q) / np.pi), float(np.arccos(4 * y / q) / np.pi)


def f_eom_integral(p, n: int) -> float:
    """2 (1 - f^2)/f * int_0^pi lambda Z_X Z_Y dphi0 at a disk point or (a, b) pair."""
    from .rp2 import ABPair

    if isinstance(p, ABPair):
        x, y = _disk_from_ab(p.a, p.b)
    else:
        x, y = (p.x, p.y) if hasattr(p, "x") else map(float, p)
    X, Y = potentials_from_disk(x, y)
    f = rp2_off_diagonal(X, Y).f
    if abs(f) < 1e-12:
        raise ValueError("f vanishes at this point; the prefactor is singular")

    def integrand(phi0):
        d = z_band(X, Y, phi0)
        return multiplier_field(X, Y, phi0, n).lam * d.Z_X * d.Z_Y

    val, err = integrate.quad(integrand, 0.0, np.pi, epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
    if not np.isfinite(val):
        raise ArithmeticError(f"quadrature failed: {val}, error {err}")
    return float(2 * (1 - f * f) / f * val)


def _disk_from_ab(a: float, b: float) -> tuple[float, float]:
    """Invert a = 8(x^2-y^2)/(1+16|z|^4), b = 16xy/(1+16|z|^4) with x > 0."""
    s = np.hypot(a, b)
    if s == 0:
        return 0.0, 0.0
    # 8 r^2 / (1 + 16 r^4) = s, smaller root
    r2 = (1 - np.sqrt(1 - s * s)) / (4 * s)
    ang = 0.5 * np.arctan2(b, a)
    r = np.sqrt(r2)
    return float(r * np.cos(ang)), float(r * np.sin(ang))


def sin2_weighted_integral_closed(a: float, b: float) -> float:
    """int_0^pi sin 2phi / (1 - a cos 2phi - b sin 2phi)^2 dphi = pi b / (1 - a^2 - b^2)^(3/2)."""
    return float(np.pi * b / (1 - a * a - b * b) ** 1.5)


def three_band_pieces(p: float, q: float, Z_XX: float, Z_XY: float, Z_YY: float):
    """f and lambda of the three-band system eliminated in terms of the jet of Z.

    f = (1 - p^2 - q^2)/(2pq) from |dZ| = 1 and lambda = -f / (2 (1 - f^2) p q)
    from the f equation; partials follow by the chain rule.
    """
    f = off_diagonal_from_band(p, q)
    f_p = -1 / q - f / p
    f_q = -1 / p - f / q
    f_X = f_p * Z_XX + f_q * Z_XY
    f_Y = f_p * Z_XY + f_q * Z_YY
    lam = -f / (2 * (1 - f * f) * p * q)
    k = 1 / f + 2 * f / (1 - f * f)
    dl_X = k * f_X - Z_XX / p - Z_XY / q
    dl_Y = k * f_Y - Z_XY / p - Z_YY / q
    return MetricOffDiagonal(f, f_X, f_Y), LagrangeMultiplier(lam, lam * dl_X, lam * dl_Y)
