"""
Closed-form kernel of sin(t sqrt(L)) / sqrt(L) for the purely magnetic operator.

Per angular mode the kernel depends on the cone region of (t, r1, r2):

* I   (|t| < |r1 - r2|): 0;
* II  (|r1 - r2| < |t| < r1 + r2): (1/pi) int_0^{beta1} cos(nu s) / sqrt(2 r1 r2 (cos s - cos beta1)) ds;
* III (r1 + r2 < |t|): (cos(pi nu)/pi) int_{beta2}^inf e^{-nu s} / sqrt(2 r1 r2 (cosh s - cosh beta2)) ds,
  or equivalently
  (1/pi) [int_0^pi cos(nu s) / sqrt(t^2 - r1^2 - r2^2 + 2 r1 r2 cos s) ds
          - sin(pi nu) int_0^{beta2} e^{-nu s} / sqrt(2 r1 r2 (cosh beta2 - cosh s)) ds].

Summed over modes the kernel is G_w + D_w with

    G_w = (t^2 - |x-y|^2)^{-1/2} / 2 pi * g * e^{i alpha theta} * indicators,
    D_w = -(1 / 2 pi^2) * g * int_0^{beta2} S(s, theta) / sqrt(2 r1 r2 (cosh beta2 - cosh s)) ds,

where theta, g and S are as in :mod:`abwave.heatkernel`. The kernel is odd in t.
All square-root endpoint singularities are removed by s = beta -/+ u^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .angular import AngularField, TWO_PI
from .heatkernel import diffraction_breakpoints, diffraction_sum, distance_sq, wrap_angle
from .quadrature import DEFAULT_SPEC, QuadratureSpec, SpecEval, adaptive_gl, gauss_legendre

WAVE_CSV_COLUMNS = ("alpha,t,r1,theta1,r2,theta2,region,ReG,ImG,ReD,ImD,ReK,ImK,err,G_ratio,D_ratio").split(",")

SINGULAR = "singular-neighborhood"


class RepresentationMismatch(RuntimeError):
    """The two region-III mode kernel representations disagree."""


@dataclass(frozen=True)
class ConeGeometry:
    """Cone region of (|t|, r1, r2) with the angles beta1 (II) or beta2 (III).

    ``gamma1 = pi - beta1`` is stored separately so that both are accurate
    near either end of region II. ``boundary`` marks |t| equal to
    |r1 - r2| or r1 + r2; such points belong to the lower closed region.
    """

    t: float
    r1: float
    r2: float
    region: str
    beta1: float = math.nan
    gamma1: float = math.nan
    beta2: float = math.nan
    boundary: bool = False


def classify(t: float, r1: float, r2: float) -> ConeGeometry:
    """Region and angles for (t, r1, r2); uses |t|."""
    if r1 < 0 or r2 < 0:
        raise ValueError("radii must be nonnegative")
    ta = abs(float(t))
    lo, hi = abs(r1 - r2), r1 + r2
    if ta <= lo:
        return ConeGeometry(t, r1, r2, "I", boundary=(ta == lo))
    if ta <= hi:
        # tan(beta1/2)^2 = (t^2 - (r1-r2)^2) / ((r1+r2)^2 - t^2), factored to avoid cancellation
        p = math.sqrt((ta - lo) * (ta + lo))
        m = math.sqrt((hi - ta) * (hi + ta))
        return ConeGeometry(t, r1, r2, "II", beta1=2 * math.atan2(p, m), gamma1=2 * math.atan2(m, p),
                            boundary=(ta == hi))
    if r1 * r2 == 0:
        return ConeGeometry(t, r1, r2, "III", beta2=math.inf)
    # cosh(beta2) - 1 = 2 sinh(beta2/2)^2 = (t^2 - (r1+r2)^2) / (2 r1 r2)
    b2 = 2 * math.asinh(math.sqrt((ta - hi) * (ta + hi) / (4 * r1 * r2)))
    return ConeGeometry(t, r1, r2, "III", beta2=b2)


def _sqrt_breaks(width: float, upper: float) -> list[float]:
    """Geometric breakpoints 2^k sqrt(width) below ``upper`` for a peak of width ``width`` in u^2."""
    out = []
    x = math.sqrt(max(width, 1e-300))
    while x < upper:
        out.append(x)
        x *= 2.0
    return out


def _sin_ratio(u2):
    """sin(u^2/2) / u^2, finite at u = 0."""
    return 0.5 * np.sinc(u2 / (2 * math.pi))


def _sinh_ratio(u2):
    """sinh(u^2/2) / u^2, finite at u = 0."""
    small = u2 < 1e-4
    safe = np.where(small, 1.0, u2)
    return np.where(small, 0.5 + u2 * u2 / 48.0, np.sinh(0.5 * safe) / safe)


def _region2(nu: float, g: ConeGeometry, q: QuadratureSpec) -> SpecEval:
    b1, g1 = g.beta1, g.gamma1
    scale = 2.0 * g.r1 * g.r2
    U = math.sqrt(b1)

    def f(u):
        u2 = u * u
        # sin(beta1 - u^2/2) = sin(gamma1 + u^2/2); use the better-conditioned form
        s1 = np.sin(b1 - 0.5 * u2) if b1 < 0.5 * math.pi else np.sin(g1 + 0.5 * u2)
        # ds = 2u du cancels the u in sqrt(sin(u^2/2))
        return 2.0 * np.cos(nu * (b1 - u2)) / np.sqrt(scale * 2.0 * s1 * _sin_ratio(u2))

    brk = _sqrt_breaks(2 * g1, U) + list(np.linspace(0, U, int(nu * b1 / 4) + 2)[1:-1])
    r = adaptive_gl(f, 0.0, U, q, brk)
    return SpecEval(r.value / math.pi, r.err_est / math.pi, r.nodes_used)


def _region3_form1(nu: float, g: ConeGeometry, q: QuadratureSpec) -> SpecEval:
    b2 = g.beta2
    c = math.cos(math.pi * nu)
    scale = 2.0 * g.r1 * g.r2
    U = math.sqrt(45.0 / (nu + 0.5))

    def f(u):
        u2 = u * u
        return 2.0 * np.exp(-nu * (b2 + u2)) / np.sqrt(scale * 2.0 * np.sinh(b2 + 0.5 * u2) * _sinh_ratio(u2))

    brk = _sqrt_breaks(2 * b2, U) + [1.0 / math.sqrt(nu + 0.5)]
    r = adaptive_gl(f, 0.0, U, q, brk)
    return SpecEval(c * r.value / math.pi, abs(c) * r.err_est / math.pi, r.nodes_used)


def _region3_form2(nu: float, g: ConeGeometry, q: QuadratureSpec) -> SpecEval:
    b2 = g.beta2
    t, r1, r2 = abs(g.t), g.r1, g.r2
    hi = r1 + r2
    delta = (t - hi) * (t + hi)

    def f1(s):
        # t^2 - r1^2 - r2^2 + 2 r1 r2 cos s = delta + 4 r1 r2 cos^2(s/2)
        return np.cos(nu * s) / np.sqrt(delta + 4 * r1 * r2 * np.cos(0.5 * s) ** 2)

    w = math.sqrt(delta / (r1 * r2))
    brk = [math.pi - x for x in _sqrt_breaks(w * w, math.pi)] + list(np.linspace(0, math.pi, int(nu / 2) + 2)[1:-1])
    a = adaptive_gl(f1, 0.0, math.pi, q, brk)
    val, err, nodes = a.value, a.err_est, a.nodes_used
    sn = math.sin(math.pi * nu)
    if abs(sn) > 0:
        scale = 2.0 * r1 * r2
        U = math.sqrt(b2)

        def f2(u):
            u2 = u * u
            return 2.0 * np.exp(-nu * (b2 - u2)) / np.sqrt(scale * 2.0 * np.sinh(b2 - 0.5 * u2) * _sinh_ratio(u2))

        b = adaptive_gl(f2, 0.0, U, q, [x for x in _sqrt_breaks(2 * b2, U)])
        val -= sn * b.value
        err += abs(sn) * b.err_est
        nodes += b.nodes_used
    return SpecEval(val / math.pi, err / math.pi, nodes)


def mode_kernel_forms(nu: float, geom: ConeGeometry, q: QuadratureSpec = DEFAULT_SPEC):
    """Both region-III representations as (form1, form2) SpecEvals."""
    if geom.region != "III" or math.isinf(geom.beta2):
        raise ValueError("two representations exist only in region III with r1 r2 > 0")
    return _region3_form1(nu, geom, q), _region3_form2(nu, geom, q)


def mode_kernel_eval(nu: float, geom: ConeGeometry, q: QuadratureSpec = DEFAULT_SPEC,
                     cross_check: bool = True) -> SpecEval:
    """Mode kernel K_nu(|t|, r1, r2) with an error estimate.

    In region III both representations are evaluated when ``cross_check``
    is set; a disagreement beyond 10 times the combined error estimate
    raises :class:`RepresentationMismatch`.
    """
    if not nu >= 0:
        raise ValueError("nu must be nonnegative")
    if geom.region == "I":
        return SpecEval(0.0, 0.0, 0)
    if geom.region == "II":
        return _region2(nu, geom, q)
    if math.isinf(geom.beta2):
        # r1 r2 = 0: only nu = 0 survives, with the free value 1/sqrt(t^2 - r^2)
        if nu != 0:
            return SpecEval(0.0, 0.0, 0)
        r = geom.r1 + geom.r2
        ta = abs(geom.t)
        return SpecEval(1.0 / math.sqrt((ta - r) * (ta + r)), 0.0, 0)
    f1 = _region3_form1(nu, geom, q)
    if not cross_check:
        return f1
    f2 = _region3_form2(nu, geom, q)
    tol = 10.0 * (f1.err_est + f2.err_est)
    if abs(f1.value - f2.value) > tol:
        raise RepresentationMismatch(
            f"region-III forms disagree at nu={nu}, {geom}: {f1.value!r} vs {f2.value!r} (tol {tol:.2e})")
    return SpecEval(f1.value, max(f1.err_est, abs(f1.value - f2.value)), f1.nodes_used + f2.nodes_used)


def mode_kernel(nu: float, geom: ConeGeometry, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Mode kernel for signed t: odd extension of the |t| formulas."""
    v = mode_kernel_eval(nu, geom, q).value
    return -v if geom.t < 0 else v


def mode_kernel_batch_region2(nus: np.ndarray, geom: ConeGeometry, n_panels: int = 64,
                              order: int = 24) -> np.ndarray:
    """Region-II mode kernels for many orders on one fixed composite Gauss rule.

    Panels are graded toward the peak near u = 0 and uniform elsewhere;
    intended for the damped mode-sum oracle, validated against
    :func:`mode_kernel_eval` in the tests.
    """
    if geom.region != "II":
        raise ValueError("region II geometry required")
    nus = np.asarray(nus, dtype=float)
    b1, g1 = geom.beta1, geom.gamma1
    U = math.sqrt(b1)
    edges = sorted(set([0.0, U] + _sqrt_breaks(2 * g1, U) + list(np.linspace(0, U, n_panels + 1))))
    x, w = gauss_legendre(order)
    e = np.asarray(edges)
    h = 0.5 * np.diff(e)
    m = 0.5 * (e[1:] + e[:-1])
    u = (m[:, None] + h[:, None] * x[None, :]).ravel()
    wt = (h[:, None] * w[None, :]).ravel()
    u2 = u * u
    s1 = np.sin(b1 - 0.5 * u2) if b1 < 0.5 * math.pi else np.sin(g1 + 0.5 * u2)
    base = wt * 2.0 / np.sqrt(2.0 * geom.r1 * geom.r2 * 2.0 * s1 * _sin_ratio(u2))
    return np.cos(np.multiply.outer(nus, b1 - u2)) @ base / math.pi


@dataclass(frozen=True)
class WaveEval:
    """Wave kernel value; ``status`` is ``"ok"`` or ``"singular-neighborhood"``."""

    t: float
    x: tuple
    y: tuple
    region: str
    geometric: complex
    diffractive: complex
    total: complex
    err_est: float
    status: str = "ok"


def _check_field(field: AngularField):
    if not field.closed_form_ok():
        raise ValueError("closed-form kernels need a purely magnetic field (a = 0)")


def wave_geometric(field: AngularField, t: float, x: tuple, y: tuple) -> complex:
    """Geometric part; zero outside the light cone, signed infinity on it."""
    _check_field(field)
    sign = -1.0 if t < 0 else 1.0
    ta = abs(t)
    r1, r2 = x[0], y[0]
    geom = classify(ta, r1, r2)
    if geom.region == "I":
        return 0j
    al = field.reduced_flux()
    th = float(wrap_angle(x[1] - y[1]))
    if geom.region == "II":
        if th <= geom.beta1:
            ind = 1.0
        elif th >= TWO_PI - geom.beta1:
            ind = np.exp(-2j * math.pi * al)
        else:
            return 0j
    else:
        ind = 1.0 if th <= math.pi else np.exp(-2j * math.pi * al)
    d2 = ta * ta - distance_sq(x, y)
    if d2 <= 0:
        if d2 == 0:
            return complex(math.copysign(math.inf, sign), 0.0)
        return 0j
    ph = complex(field.gauge(x[1], y[1])) * np.exp(1j * al * th) * ind
    return complex(sign * ph / (TWO_PI * math.sqrt(d2)))


def wave_diffractive(field: AngularField, t: float, x: tuple, y: tuple,
                     q: QuadratureSpec = DEFAULT_SPEC, with_err: bool = False, variant: str = "resolved"):
    """Diffractive part; zero unless |t| > r1 + r2.

    ``variant="printed"`` flips the overall sign and the sign of the
    imaginary quotient term, so the oracle can show which one is correct.
    """
    _check_field(field)
    if variant not in ("resolved", "printed"):
        raise ValueError("variant must be 'resolved' or 'printed'")
    sign = -1.0 if t < 0 else 1.0
    geom = classify(abs(t), x[0], y[0])
    al = field.reduced_flux()
    if geom.region != "III" or al == 0.0:
        return (0j, 0.0) if with_err else 0j
    if math.isinf(geom.beta2):
        raise ValueError("wave_diffractive needs r1 r2 > 0")
    th = float(wrap_angle(x[1] - y[1]))
    b2 = geom.beta2
    scale = 2.0 * x[0] * y[0]
    U = math.sqrt(b2)
    th_s = th if variant == "resolved" else TWO_PI - th

    def f(u):
        u2 = u * u
        S = diffraction_sum(b2 - u2, th_s, al)
        if variant == "printed":
            # conj flips only the quotient's imaginary part; the real parts are even in theta
            S = np.conj(S)
        return 2.0 * S / np.sqrt(scale * 2.0 * np.sinh(b2 - 0.5 * u2) * _sinh_ratio(u2))

    brk = [math.sqrt(b2 - s) for s in diffraction_breakpoints(th, b2)] + _sqrt_breaks(2 * b2, U)
    res = adaptive_gl(f, 0.0, U, q, brk)
    pref = (-1.0 if variant == "resolved" else 1.0) / (2.0 * math.pi ** 2)
    g = complex(field.gauge(x[1], y[1]))
    val = complex(sign * pref * g * res.value)
    err = abs(pref) * res.err_est
    return (val, err) if with_err else val


def cone_delta(t: float) -> float:
    return 1e-3 * (1.0 + abs(t))


def wave_kernel(field: AngularField, t: float, x: tuple, y: tuple,
                q: QuadratureSpec = DEFAULT_SPEC, delta_cone: Optional[float] = None) -> WaveEval:
    """G_w + D_w at signed t; points within ``delta_cone`` of either cone get no numeric total."""
    _check_field(field)
    dc = cone_delta(t) if delta_cone is None else delta_cone
    ta = abs(t)
    geom = classify(ta, x[0], y[0])
    dist = math.sqrt(max(distance_sq(x, y), 0.0))
    if abs(ta - dist) < dc or (field.reduced_flux() != 0 and abs(ta - (x[0] + y[0])) < dc):
        nan = complex(math.nan, math.nan)
        return WaveEval(t, tuple(x), tuple(y), geom.region, nan, nan, nan, math.nan, SINGULAR)
    G = wave_geometric(field, t, x, y)
    D, err = wave_diffractive(field, t, x, y, q, with_err=True)
    return WaveEval(t, tuple(x), tuple(y), geom.region, G, D, G + D, err + 1e-15 * abs(G))


def _damped_sum_region2(al, geom, d, eps, kmax):
    k = np.arange(-kmax, kmax + 1)
    nus = np.abs(k + al)
    vals = mode_kernel_batch_region2(nus, geom, n_panels=max(64, int(kmax * geom.beta1 / 3)))
    terms = np.exp(-eps * nus ** 2) * vals * np.exp(-1j * (k + al) * d) / TWO_PI
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def wave_mode_sum(field: AngularField, t: float, x: tuple, y: tuple,
                  q: QuadratureSpec = DEFAULT_SPEC, eps: Sequence[float] = (4e-4, 2e-4, 1e-4),
                  tol: float = 1e-14) -> tuple[complex, float]:
    """Partial-wave oracle sum_k psi_k(theta1) conj(psi_k(theta2)) K_{nu_k}(t, r1, r2).

    Region III converges geometrically (form-1 kernels carry e^{-nu beta2})
    and is summed until terms fall below ``tol`` of the leading one.
    Region II converges only conditionally; the sum is damped by
    e^{-eps nu^2} and extrapolated to eps = 0 with a two-step Richardson
    scheme on eps, 2 eps, 4 eps.

    Returns
    -------
    value : complex
    err_est : float
        Extrapolation spread (region II) or the truncated tail (region III).
    """
    _check_field(field)
    r1, t1 = x
    r2, t2 = y
    sign = -1.0 if t < 0 else 1.0
    geom = classify(abs(t), r1, r2)
    al = field.reduced_flux()
    d = t1 - t2
    hol = complex(np.exp(1j * field.phase_integral(t1, t2)))
    if geom.region == "I":
        return 0j, 0.0
    if geom.region == "II":
        e = sorted(eps)
        if len(e) != 3 or not (math.isclose(e[1], 2 * e[0]) and math.isclose(e[2], 4 * e[0])):
            raise ValueError("eps must be (4e, 2e, e)")
        v = [_damped_sum_region2(al, geom, d, ee, int(math.sqrt(40.0 / ee)) + 2) for ee in e]
        v1, v2, v4 = v
        val = (8 * v1 - 6 * v2 + v4) / 3.0
        # spread between the one- and two-step extrapolants
        err = abs(val - (2 * v1 - v2))
        return sign * hol * val, err
    re, im = [], []
    lead = None
    k = 0
    err = 0.0
    while True:
        ks = [0] if k == 0 else [-k, k]
        mags = []
        for kk in ks:
            nu = abs(kk + al)
            ev = mode_kernel_eval(nu, geom, q, cross_check=False)
            term = ev.value * np.exp(-1j * (kk + al) * d) / TWO_PI
            re.append(term.real)
            im.append(term.imag)
            mags.append(abs(term))
            err += ev.err_est / TWO_PI
        lead = max(mags) if lead is None else lead
        if k > 2 and max(mags) < tol * lead:
            break
        k += 1
    return sign * hol * complex(math.fsum(re), math.fsum(im)), err


def bound_ratios(ev: WaveEval) -> tuple[float, float]:
    """(|G_w| sqrt(t^2 - |x-y|^2), |D_w| sqrt(t^2 - (r1+r2)^2)); zero where the part vanishes."""
    if ev.status != "ok":
        return math.nan, math.nan
    ta = abs(ev.t)
    d2 = ta * ta - distance_sq(ev.x, ev.y)
    g = abs(ev.geometric) * math.sqrt(d2) if ev.geometric != 0 else 0.0
    hi = ev.x[0] + ev.y[0]
    dd = abs(ev.diffractive) * math.sqrt((ta - hi) * (ta + hi)) if ev.diffractive != 0 else 0.0
    return g, dd


def wave_row(field: AngularField, ev: WaveEval) -> list:
    g, d = bound_ratios(ev)
    return [field.flux(), ev.t, ev.x[0], ev.x[1], ev.y[0], ev.y[1], ev.region,
            ev.geometric.real, ev.geometric.imag, ev.diffractive.real, ev.diffractive.imag,
            ev.total.real, ev.total.imag, ev.err_est, g, d]


ORACLE_GRID = dict(
    alpha=(1 / 3, -1 / 3, 0.5, 0.9),
    t=(1.0, 2.5, 5.0),
    r=(0.5, 1.0, 2.0),
    dtheta=(0.0, math.pi / 3, 0.75 * math.pi, math.pi + 0.3, 1.6 * math.pi),
)


def off_cone(t: float, x: tuple, y: tuple, margin: float = 0.1) -> bool:
    """True when |t| is at least ``margin * |t|`` away from both cones."""
    ta = abs(t)
    dist = math.sqrt(max(distance_sq(x, y), 0.0))
    return abs(ta - dist) > margin * ta and abs(ta - (x[0] + y[0])) > margin * ta


def oracle_points(grid: Optional[dict] = None, theta2: float = 0.3, margin: float = 0.1,
                  keep_cone: bool = False) -> list[tuple]:
    """(alpha, t, x, y) on the product grid, by default restricted to off-cone points."""
    g = ORACLE_GRID if grid is None else grid
    pts = []
    for al in g["alpha"]:
        for t in g["t"]:
            for r1 in g["r"]:
                for r2 in g["r"]:
                    for dd in g["dtheta"]:
                        x, y = (r1, theta2 + dd), (r2, theta2)
                        if keep_cone or off_cone(t, x, y, margin):
                            pts.append((al, t, x, y))
    return pts


def structural_zero(field: AngularField, t: float, x: tuple, y: tuple) -> bool:
    """True where the kernel vanishes identically.

    That is region I, region II outside the light cone, and region III
    with half-integer flux, where every mode kernel carries cos(pi nu) = 0.
    """
    geom = classify(t, x[0], y[0])
    if geom.region == "I":
        return True
    if geom.region == "II":
        return t * t < distance_sq(x, y)
    return abs(abs(field.reduced_flux()) - 0.5) < 1e-15


def wave_oracle(points: Sequence[tuple], q: QuadratureSpec = DEFAULT_SPEC) -> list[dict]:
    """Closed form vs mode sum; points in a cone neighborhood are listed as skipped.

    ``rel_err`` is |closed - oracle| / |oracle|. Where the kernel is zero
    by structure (see :func:`structural_zero`) a relative error is
    undefined; there it is the larger of the cancellation
    |G_w + D_w| / (|G_w| + |D_w|) and |closed - oracle| measured in units of
    the free-kernel scale 1 / (2 pi |t|).
    """
    out = []
    for al, t, x, y in points:
        f = AngularField.ab(al)
        ev = wave_kernel(f, t, x, y, q)
        if ev.status != "ok":
            out.append({"alpha": al, "t": t, "x": x, "y": y, "status": ev.status})
            continue
        ref, rerr = wave_mode_sum(f, t, x, y, q)
        row = {"alpha": al, "t": t, "x": x, "y": y, "status": "ok", "region": ev.region,
               "closed": ev.total, "oracle": ref, "oracle_err": rerr}
        if structural_zero(f, t, x, y):
            mag = abs(ev.geometric) + abs(ev.diffractive)
            canc = abs(ev.total) / mag if mag > 0 else 0.0
            row["measure"] = "structural-zero"
            row["rel_err"] = max(canc, abs(ev.total - ref) * TWO_PI * abs(t))
        else:
            row["measure"] = "relative"
            row["rel_err"] = abs(ev.total - ref) / abs(ref)
        out.append(row)
    return out
