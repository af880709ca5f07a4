"""
Closed-form heat kernel of the purely magnetic operator, e^{-tL}(x, y) = G_h + D_h.

With theta the wrapped angle difference theta1 - theta2 in [0, 2 pi) and
alpha the reduced flux,

    G_h = e^{-|x-y|^2/4t} / (4 pi t) * g * e^{i alpha theta} * (1 if theta <= pi else e^{-2 pi i alpha}),
    D_h = -e^{-(r1+r2)^2/4t} / (4 pi^2 t) * g * int_0^inf e^{-z (cosh s - 1)} S(s, theta) ds,

where z = r1 r2 / 2t, g = e^{i int_{theta2}^{theta1} A - i alpha (theta1 - theta2)}
is the gauge factor relative to the reduced Aharonov-Bohm field, and

    S = sin(|alpha| pi) e^{-|alpha| s}
        + sin(alpha pi) [(e^{-s} - cos(theta+pi)) sinh(alpha s) - i sin(theta+pi) cosh(alpha s)]
          / (cosh s - cos(theta+pi)).

The oracle is the partial-wave sum with modified Bessel functions,
sum_k psi_k(theta1) conj(psi_k(theta2)) (1/2t) e^{-(r1^2+r2^2)/4t} I_{nu_k}(z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import special

from .angular import AngularField, TWO_PI
from .quadrature import DEFAULT_SPEC, QuadratureSpec, adaptive_gl
from .specfun import WEBER_C

HEAT_CSV_COLUMNS = ("alpha,t,r1,theta1,r2,theta2,ReG,ImG,ReD,ImD,ReK,ImK,err,bound_ratio").split(",")


def wrap_angle(d) -> np.ndarray:
    """Angle difference reduced into [0, 2 pi)."""
    out = np.mod(np.asarray(d, dtype=float), TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def distance_sq(x, y) -> float:
    r1, t1 = x
    r2, t2 = y
    return r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * math.cos(t1 - t2)


def diffraction_sum(s, theta: float, alpha: float) -> np.ndarray:
    """S(s, theta) for reduced flux alpha, written without cancellation.

    The denominator cosh s - cos(theta+pi) is sinh^2(s/2) + sin^2((theta+pi)/2)
    (up to a factor 2) and e^{-s} - cos(theta+pi) is expm1(-s) + 2 sin^2((theta+pi)/2).
    """
    s = np.asarray(s, dtype=float)
    c = theta + math.pi
    sc2 = math.sin(0.5 * c) ** 2
    den = 2.0 * (np.sinh(0.5 * s) ** 2 + sc2)
    num = (np.expm1(-s) + 2.0 * sc2) * np.sinh(alpha * s) - 1j * math.sin(c) * np.cosh(alpha * s)
    a = abs(alpha)
    return math.sin(a * math.pi) * np.exp(-a * s) + math.sin(alpha * math.pi) * num / den


def diffraction_breakpoints(theta: float, upper: float, extra: Iterable[float] = ()) -> list[float]:
    """Panel edges resolving the near-singular quotient at small s."""
    b = abs(math.sin(0.5 * (theta + math.pi)))
    pts = {1.0}
    if b < 0.5:
        x = max(b, 1e-300)
        while x < 1.0:
            pts.add(x)
            x *= 2.0
    pts.update(extra)
    return sorted(p for p in pts if 0.0 < p < upper)


@dataclass(frozen=True)
class HeatEval:
    """Heat kernel value with its geometric and diffractive parts."""

    t: float
    x: tuple
    y: tuple
    geometric: complex
    diffractive: complex
    total: complex
    err_est: float


def _check_field(field: AngularField):
    if not field.closed_form_ok():
        raise ValueError("closed-form kernels need a purely magnetic field (a = 0)")


def heat_geometric(field: AngularField, t: float, x: tuple, y: tuple, variant: str = "resolved") -> complex:
    """Gaussian part of the heat kernel.

    ``variant="printed"`` uses the opposite orientation of the phase
    integral (int_{theta1}^{theta2}); it exists so the oracle can show
    which orientation is correct.
    """
    _check_field(field)
    if not t > 0:
        raise ValueError("t must be positive")
    al = field.reduced_flux()
    th = float(wrap_angle(x[1] - y[1]))
    g = complex(field.gauge(x[1], y[1]))
    if variant == "resolved":
        ph = g * np.exp(1j * al * th)
    elif variant == "printed":
        ph = np.conj(g * np.exp(1j * al * th))
    else:
        raise ValueError("variant must be 'resolved' or 'printed'")
    ind = 1.0 if th <= math.pi else np.exp(-2j * math.pi * al)
    return complex(WEBER_C / (TWO_PI * t) * math.exp(-distance_sq(x, y) / (4 * t)) * ph * ind)


def heat_diffractive(field: AngularField, t: float, x: tuple, y: tuple,
                     q: QuadratureSpec = DEFAULT_SPEC, with_err: bool = False):
    """Diffractive part of the heat kernel (zero for integer flux)."""
    _check_field(field)
    if not t > 0:
        raise ValueError("t must be positive")
    r1, r2 = x[0], y[0]
    if not r1 * r2 > 0:
        raise ValueError("heat_diffractive needs r1 r2 > 0")
    al = field.reduced_flux()
    if al == 0.0:
        return (0j, 0.0) if with_err else 0j
    th = float(wrap_angle(x[1] - y[1]))
    z = r1 * r2 / (2.0 * t)
    s_max = math.acosh(1.0 + 40.0 / z)
    extra = [m / math.sqrt(z) for m in (1, 2, 4, 8)]
    brk = diffraction_breakpoints(th, s_max, extra)

    def f(s):
        return np.exp(-2.0 * z * np.sinh(0.5 * s) ** 2) * diffraction_sum(s, th, al)

    res = adaptive_gl(f, 0.0, s_max, q, brk)
    g = complex(field.gauge(x[1], y[1]))
    pref = -WEBER_C / (2.0 * math.pi ** 2 * t) * math.exp(-(r1 + r2) ** 2 / (4 * t))
    val = complex(pref * g * res.value)
    err = abs(pref) * res.err_est
    return (val, err) if with_err else val


def heat_kernel(field: AngularField, t: float, x: tuple, y: tuple,
                q: QuadratureSpec = DEFAULT_SPEC) -> HeatEval:
    """G_h + D_h at (t, x, y); x and y are polar points (r, theta)."""
    G = heat_geometric(field, t, x, y)
    D, err = heat_diffractive(field, t, x, y, q, with_err=True)
    return HeatEval(t, tuple(x), tuple(y), G, D, G + D, err + 1e-15 * abs(G))


def _mode_sum_scipy(al, z, d, pref, tol):
    re, im, mag = [], [], []
    lead = None
    k = 0
    while True:
        ks = np.array([0] if k == 0 else [-k, k])
        terms = pref * special.ive(np.abs(ks + al), z) * np.exp(-1j * (ks + al) * d)
        re.extend(terms.real)
        im.extend(terms.imag)
        mags = np.abs(terms)
        mag.extend(mags)
        lead = mags[0] if lead is None else lead
        if k > z and mags.max() < tol * lead:
            break
        k += 1
    return complex(math.fsum(re), math.fsum(im)), math.fsum(mag)


def _mode_sum_mpmath(al, r1, r2, t, d, dps):
    import mpmath

    with mpmath.workdps(dps):
        al = mpmath.mpf(al)
        z = mpmath.mpf(r1) * r2 / (2 * mpmath.mpf(t))
        d = mpmath.mpf(d)
        pref = mpmath.exp(-(mpmath.mpf(r1) - r2) ** 2 / (4 * mpmath.mpf(t))) / (2 * t) / (2 * mpmath.pi)
        total = mpmath.mpc(0)
        lead = None
        small = mpmath.mpf(10) ** (-dps + 5)
        k = 0
        while True:
            ks = [0] if k == 0 else [-k, k]
            terms = [pref * mpmath.besseli(abs(kk + al), z) * mpmath.exp(-z) * mpmath.expj(-(kk + al) * d)
                     for kk in ks]
            total += mpmath.fsum(terms)
            m = max(abs(v) for v in terms)
            lead = m if lead is None else lead
            if k > z and m < small * lead:
                break
            k += 1
        return complex(total)


def heat_mode_sum(field: AngularField, t: float, x: tuple, y: tuple, tol: float = 1e-17,
                  backend: str = "auto") -> complex:
    """Partial-wave oracle sum_k psi_k(theta1) conj(psi_k(theta2)) (1/2t) e^{-(r1^2+r2^2)/4t} I_{nu_k}(z).

    The double-precision sum uses scipy's exponentially scaled I_nu.
    Near the antipodal direction at small t the terms are O(1) while the
    sum is exponentially small, so with ``backend="auto"`` the sum is
    redone in mpmath with enough digits to absorb the cancellation.
    """
    _check_field(field)
    if backend not in ("auto", "scipy", "mpmath"):
        raise ValueError("backend must be 'auto', 'scipy' or 'mpmath'")
    r1, t1 = x
    r2, t2 = y
    al = field.reduced_flux()
    z = r1 * r2 / (2.0 * t)
    d = t1 - t2
    # psi_k(theta1) conj(psi_k(theta2)) = e^{-i(k+alpha) d + i int_{theta2}^{theta1} A} / 2 pi
    hol = complex(np.exp(1j * field.phase_integral(t1, t2)))
    if backend != "mpmath":
        pref = 1.0 / (2.0 * t) * math.exp(-(r1 - r2) ** 2 / (4.0 * t)) / TWO_PI
        val, mag = _mode_sum_scipy(al, z, d, pref, tol)
        loss = mag / max(abs(val), 1e-300)
        if backend == "scipy" or loss < 1e3:
            return hol * val
        dps = 30 + int(math.log10(loss))
    else:
        dps = 40
    return hol * _mode_sum_mpmath(al, r1, r2, t, d, dps)


def gaussian_bound_ratio(ev: HeatEval) -> float:
    """|K| t e^{|x-y|^2/4t}."""
    return abs(ev.total) * ev.t * math.exp(distance_sq(ev.x, ev.y) / (4 * ev.t))


def heat_dt_bound_check(field: AngularField, t: float, x: tuple, y: tuple,
                        q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """|d/dt K| / (t^-2 e^{-|x-y|^2/8t}) by a Richardson-extrapolated centered difference.

    Returns NaN when |K| is below 1e-250, where the difference is noise.
    """
    k0 = heat_kernel(field, t, x, y, q).total
    if abs(k0) < 1e-250:
        return math.nan
    h = t * 1e-4

    def cd(hh):
        kp = heat_kernel(field, t + hh, x, y, q).total
        km = heat_kernel(field, t - hh, x, y, q).total
        return (kp - km) / (2 * hh)

    d = (4.0 * cd(0.5 * h) - cd(h)) / 3.0
    return abs(d) * t * t * math.exp(distance_sq(x, y) / (8 * t))


def heat_row(field: AngularField, ev: HeatEval) -> list:
    return [field.flux(), ev.t, ev.x[0], ev.x[1], ev.y[0], ev.y[1],
            ev.geometric.real, ev.geometric.imag, ev.diffractive.real, ev.diffractive.imag,
            ev.total.real, ev.total.imag, ev.err_est, gaussian_bound_ratio(ev)]


ORACLE_GRID = dict(
    alpha=(1 / 3, -1 / 3, 0.5, 0.9),
    t=(0.1, 1.0, 10.0),
    r=(0.5, 1.0, 2.0),
    dtheta=(0.0, math.pi / 4, math.pi - 1e-3, math.pi + 1e-3, 1.5 * math.pi),
)


def oracle_points(grid: Optional[dict] = None, theta2: float = 0.3) -> list[tuple]:
    """(alpha, t, x, y) tuples on the product grid; 135 points per flux by default."""
    g = ORACLE_GRID if grid is None else grid
    pts = []
    for al in g["alpha"]:
        for t in g["t"]:
            for r1 in g["r"]:
                for r2 in g["r"]:
                    for d in g["dtheta"]:
                        pts.append((al, t, (r1, theta2 + d), (r2, theta2)))
    return pts


def heat_oracle(points: Sequence[tuple], q: QuadratureSpec = DEFAULT_SPEC) -> list[dict]:
    """Closed form vs partial-wave sum at each (alpha, t, x, y)."""
    out = []
    for al, t, x, y in points:
        f = AngularField.ab(al)
        ev = heat_kernel(f, t, x, y, q)
        ref = heat_mode_sum(f, t, x, y)
        out.append({"alpha": al, "t": t, "x": x, "y": y, "closed": ev.total, "oracle": ref,
                    "rel_err": abs(ev.total - ref) / abs(ref)})
    return out
