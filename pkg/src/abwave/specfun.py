"""
Special functions from their integral representations.

``bessel_j`` uses the Poisson representation

    J_nu(r) = (r/2)^nu / (Gamma(nu+1/2) Gamma(1/2)) * int_{-1}^{1} e^{isr} (1-s^2)^{nu-1/2} ds,

and ``mod_bessel_i`` the Schlaefli-type representation

    I_nu(z) = (1/pi) int_0^pi e^{z cos s} cos(nu s) ds
              - (sin(nu pi)/pi) int_0^inf e^{-z cosh s - nu s} ds.

Both are evaluated with the adaptive rules of :mod:`abwave.quadrature`
and return a :class:`~abwave.quadrature.SpecEval`. Bulk vectorized work
elsewhere in the package uses ``scipy.special``; these routines are the
reference path and are cross-checked against scipy in the tests.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import special

from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    SpecEval,
    adaptive_gl,
    tanh_sinh,
)

R_MAX = 1e4
_LOG_SQRT_PI = 0.5 * math.log(math.pi)


def gamma(x: float) -> float:
    """Gamma function for x > 0.

    Wraps ``math.gamma`` (a fixed-coefficient Lanczos approximation);
    the test suite checks it against 30 high-precision reference values.

    Raises
    ------
    ValueError
        If ``x <= 0``.
    """
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma: domain error, x={x} <= 0")
    return math.gamma(x)


def _bessel_prefactor_log(nu: float, r: float) -> float:
    return nu * math.log(0.5 * r) - math.lgamma(nu + 0.5) - _LOG_SQRT_PI


def bessel_j(nu: float, r: float, q: QuadratureSpec = DEFAULT_SPEC) -> SpecEval:
    """Bessel function J_nu(r) of real order nu > -1/2.

    The integrand is even in the imaginary part's absence: the sine part
    of e^{isr} is odd on [-1, 1] and integrates to zero exactly, so
    the cosine integral over [0, 1] is evaluated and doubled.

    Parameters
    ----------
    nu : float
        Order, ``nu > -1/2``.
    r : float
        Argument, ``0 <= r <= 1e4``.
    q : QuadratureSpec

    Returns
    -------
    SpecEval
    """
    nu = float(nu)
    r = float(r)
    if not nu > -0.5:
        raise ValueError("bessel_j requires nu > -1/2")
    if r < 0:
        raise ValueError("bessel_j requires r >= 0")
    if r > R_MAX:
        raise ValueError(f"bessel_j: r={r} beyond the supported range {R_MAX}")
    if r == 0.0:
        return SpecEval(1.0 if nu == 0.0 else 0.0, 0.0, 0)
    p = nu - 0.5
    log_pref = _bessel_prefactor_log(nu, r)
    # accuracy is measured against the local envelope min(1, sqrt(2/(pi r)))
    # of J_nu, which is what matters near its zeros
    envelope = min(1.0, math.sqrt(2.0 / (math.pi * r))) * math.exp(-log_pref) / 2.0
    # cos(r s) carries a relative error of order r * eps
    cond = 8.0 * np.finfo(float).eps * max(1.0, r)
    q = replace(q, abs_floor=max(q.abs_floor, q.rel_tol * envelope, cond))

    def g(s):
        return np.cos(r * s) * (1.0 - s * s) ** p

    def g_end(s, dl, dr):
        return np.cos(r * s) * (dr * (2.0 - dr)) ** p

    # panels on the oscillation scale for large arguments
    n_pan = max(1, int(math.ceil(r / math.pi))) if r > 50 else 1
    edges = list(np.linspace(0.0, 1.0, n_pan + 1)[1:-1])
    # a fractional power at s = 1 defeats polynomial rules; only integer p is smooth
    if p < 0 or p != math.floor(p):
        h = 1.0 / n_pan if n_pan > 1 else 0.5
        body = adaptive_gl(g, 0.0, 1.0 - h, q, [e for e in edges if e < 1.0 - h])
        tail = tanh_sinh(g_end, 1.0 - h, 1.0, q, with_dist=True)
        integral = body.value + tail.value
        err = body.err_est + tail.err_est
        nodes = body.nodes_used + tail.nodes_used
    else:
        body = adaptive_gl(g, 0.0, 1.0, q, edges)
        integral, err, nodes = body.value, body.err_est, body.nodes_used
    scale = math.exp(log_pref)
    return SpecEval(float(2.0 * scale * integral), float(2.0 * scale * err), nodes)


def poisson_bound(nu: float, r: float) -> float:
    """(r/2)^nu / (Gamma(nu+1/2) Gamma(1/2)) * (1 + 1/(nu+1/2))."""
    if r == 0:
        return 0.0 if nu > 0 else 1.0 / (math.gamma(nu + 0.5) * math.sqrt(math.pi)) * (1 + 1 / (nu + 0.5))
    return math.exp(_bessel_prefactor_log(nu, r)) * (1.0 + 1.0 / (nu + 0.5))


def mod_bessel_i(nu: float, z: float, q: QuadratureSpec = DEFAULT_SPEC) -> SpecEval:
    """Modified Bessel function I_nu(z) for nu >= 0, z >= 0.

    For ``z > 700`` the result would overflow, so ``e^{-z} I_nu(z)`` is
    returned with ``scaled=True``.

    The semi-infinite integral is truncated at
    ``s* = max(10, acosh((z + 745)/z))`` where ``e^{-z cosh s} < 1e-300``;
    the truncation bound ``e^{-z cosh s*}/nu`` is added to ``err_est``.
    """
    nu = float(nu)
    z = float(z)
    if nu < 0 or z < 0:
        raise ValueError("mod_bessel_i requires nu >= 0 and z >= 0")
    if z == 0.0:
        return SpecEval(1.0 if nu == 0.0 else 0.0, 0.0, 0)

    # everything is computed for e^{-z} I_nu(z)
    def first(s):
        return np.exp(z * (np.cos(s) - 1.0)) * np.cos(nu * s)

    peak = min(math.pi, 10.0 / math.sqrt(z))
    brk = [peak] if peak < math.pi else []
    a = adaptive_gl(first, 0.0, math.pi, q, brk)
    value = a.value / math.pi
    err = a.err_est / math.pi
    nodes = a.nodes_used
    coef = math.sin(nu * math.pi)
    if abs(coef) > 1e-15:
        s_star = max(10.0, math.acosh((z + 745.0) / z))

        def second(s):
            return np.exp(-z * (np.cosh(s) + 1.0) - nu * s)

        b = adaptive_gl(second, 0.0, s_star, q, [1.0] if s_star > 1 else [])
        value -= coef / math.pi * b.value
        trunc = math.exp(-z * (math.cosh(s_star) + 1.0)) / max(nu, 1e-300)
        err += abs(coef) / math.pi * (b.err_est + trunc)
        nodes += b.nodes_used
    if z > 700.0:
        return SpecEval(float(value), float(err), nodes, scaled=True)
    ez = math.exp(z)
    return SpecEval(float(value * ez), float(err * ez), nodes)


def dyadic_bessel_l2(nu: float, R: float, q: QuadratureSpec = DEFAULT_SPEC,
                     jfun: Optional[Callable] = None) -> float:
    """int_R^{2R} |J_nu(r)|^2 dr.

    Parameters
    ----------
    nu : float
        Order, ``nu > -1/2``.
    R : float
        Left end, ``R > 0``.
    q : QuadratureSpec
    jfun : callable, optional
        Vectorized ``J(nu, r)``; defaults to ``scipy.special.jv``.
    """
    if not nu > -0.5:
        raise ValueError("dyadic_bessel_l2 requires nu > -1/2")
    if not R > 0:
        raise ValueError("dyadic_bessel_l2 requires R > 0")
    jfun = special.jv if jfun is None else jfun
    n = int(R / math.pi)
    brk = [R + k * math.pi for k in range(1, n + 1)]
    res = adaptive_gl(lambda r: jfun(nu, r) ** 2, R, 2 * R, q, brk)
    return float(res.value)


def weber_lhs(t: float, r1: float, r2: float, nu: float,
              q: QuadratureSpec = DEFAULT_SPEC, jfun: Optional[Callable] = None) -> float:
    """Direct quadrature of int_0^inf e^{-t rho^2} J_nu(r1 rho) J_nu(r2 rho) rho d rho."""
    jfun = special.jv if jfun is None else jfun
    cut = math.sqrt(40.0 / t)
    period = math.pi / max(r1 + r2, 1e-12)
    n = min(int(cut / period), 4000)
    brk = list(np.linspace(0.0, cut, n + 2)[1:-1]) if n > 0 else []

    def f(rho):
        return np.exp(-t * rho * rho) * jfun(nu, r1 * rho) * jfun(nu, r2 * rho) * rho

    return float(adaptive_gl(f, 0.0, cut, q, brk).value)


def weber_rhs_unit(t: float, r1: float, r2: float, nu: float,
                   q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """e^{-(r1^2+r2^2)/4t} I_nu(r1 r2 / 2t) / t, with I_nu from :func:`mod_bessel_i`."""
    z = r1 * r2 / (2.0 * t)
    ive = mod_bessel_i(nu, z, q)
    scaled = ive.value if ive.scaled else ive.value * math.exp(-z)
    return math.exp(-(r1 - r2) ** 2 / (4.0 * t)) * scaled / t


WEBER_CANDIDATES = (0.5, 1.0)


def resolve_weber_constant(samples: Iterable[tuple[float, float, float, float]],
                           q: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float, list]:
    """Pick the constant c in {1/2, 1} matching lhs = c * rhs_unit.

    Parameters
    ----------
    samples : iterable of (t, r1, r2, nu)

    Returns
    -------
    c : float
        The candidate with smallest worst-case relative residual.
    residual : float
        That worst-case residual.
    table : list of dict
        Per-sample lhs, rhs and ratio.
    """
    table = []
    for t, r1, r2, nu in samples:
        lhs = weber_lhs(t, r1, r2, nu, q)
        rhs = weber_rhs_unit(t, r1, r2, nu, q)
        table.append({"t": t, "r1": r1, "r2": r2, "nu": nu, "lhs": lhs, "rhs_unit": rhs,
                      "ratio": lhs / rhs})
    best = None
    for c in WEBER_CANDIDATES:
        res = max(abs(row["lhs"] - c * row["rhs_unit"]) / abs(row["lhs"]) for row in table)
        if best is None or res < best[1]:
            best = (c, res)
    return best[0], best[1], table


# Resolved once by resolve_weber_constant (see tests); used by the heat kernel.
WEBER_C = 0.5
