"""
Verification suites shared by the command line and the acceptance tests.

Each suite returns a list of :class:`~abwave.estimates.CheckReport`.
Work items inside a suite are independent; with ``jobs > 1`` they run in
worker processes and are merged back in submission order, so reports do
not depend on scheduling.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import heatkernel as hk
from . import wavekernel as wk
from .angular import AngularField, angular_eigs, dist_to_integers, exact_modes, hardy_constant
from .estimates import (CheckReport, admissible, band_limited_draw, check_propagation_field,
                        convolution_bounds_check, dispersive_check, field_modes, local_smoothing_norm,
                        localized_draw, q_slopes, local_smoothing_Q, sobolev_embedding_ratio,
                        strichartz_field, strichartz_quotients)
from .transform import bump

SUITES = ("decay", "bounds", "smoothing", "strichartz", "hardy")

DECAY_ALPHAS = (1 / 3, 0.5, 0.9)
DECAY_SEEDS = (0, 1, 2)
Q_NUS = (1 / 3, 0.5, 4 / 3)
HARDY_FLUXES = (1 / 3, 0.5, 0.8)


def pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Ordered map, in worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _rel_drift(a: float, b: float) -> float:
    return abs(b - a) / abs(a)


# ---------------------------------------------------------------- decay

def _decay_item(args):
    alpha, seed, K, res = args
    t0 = time.perf_counter()
    f = AngularField.ab(alpha)
    modes = exact_modes(f, -K, K)
    d = localized_draw(modes, seed, 0)
    fit = dispersive_check(f, 0, d, res=res)
    fit2 = dispersive_check(f, 0, d, res=2 * res)
    small = dispersive_check(f, 0, d, t_grid=np.array([1e-3, 1e-2, 0.1]), res=res, l1_norm=fit.l1_norm)
    return fit, fit2, small, time.perf_counter() - t0


def suite_decay(alphas: Iterable[float] = DECAY_ALPHAS, seeds: Iterable[int] = DECAY_SEEDS, K: int = 4,
                res: float = 1.0, jobs: int = 1, scaling: bool = True) -> list[CheckReport]:
    """Fitted exponent of ||sin(t sqrt L)/sqrt L P_0 f||_inf on t in [1, 100] and its normalized sup."""
    items = [(a, s, K, res) for a in alphas for s in seeds]
    out = []
    for (a, s, _, _), (fit, fit2, small, rt) in zip(items, pmap(_decay_item, items, jobs)):
        par = {"alpha": a, "seed": s, "K": K, "j": 0, "res": res, "t_min": 1.0, "t_max": 100.0}
        dev = abs(fit.exponent + 0.5)
        out.append(CheckReport("decay.exponent", dict(par, fit_residual=fit.residual), fit.exponent,
                               "-0.5 +- 0.05", dev / 0.05, dev <= 0.05, rt))
        drift = _rel_drift(fit.sup_ratio, fit2.sup_ratio)
        out.append(CheckReport("decay.sup_ratio", par, fit.sup_ratio, "finite, drift < 0.1 on doubling", drift,
                               bool(np.isfinite(fit.sup_ratio) and drift < 0.1), 0.0))
        out.append(CheckReport("decay.small_t", par, float(small.norms.max()), "bounded as t -> 0",
                               float(small.norms.max() / fit.norms[0]), bool(np.all(np.isfinite(small.norms))), 0.0))
    if scaling:
        t0 = time.perf_counter()
        f = AngularField.ab(1 / 3)
        modes = exact_modes(f, -K, K)
        r0 = dispersive_check(f, 0, localized_draw(modes, 1, 0), res=res)
        r2 = dispersive_check(f, 2, localized_draw(modes, 1, 2), res=res)
        diff = max(_rel_drift(r0.sup_ratio, r2.sup_ratio), abs(r0.exponent - r2.exponent))
        out.append(CheckReport("decay.scaling_j2", {"alpha": 1 / 3, "seed": 1, "K": K},
                               [r0.sup_ratio, r2.sup_ratio], "equal under rescaling", diff, diff < 1e-6,
                               time.perf_counter() - t0))
    return out


# ---------------------------------------------------------------- pointwise bounds

def _heat_item(args):
    al, t, x, y, with_dt = args
    f = AngularField.ab(al)
    ev = hk.heat_kernel(f, t, x, y)
    g = hk.gaussian_bound_ratio(ev)
    d = hk.heat_dt_bound_check(f, t, x, y) if with_dt else math.nan
    return g, d


def _wave_item(args):
    al, t, x, y = args
    ev = wk.wave_kernel(AngularField.ab(al), t, x, y)
    return wk.bound_ratios(ev)


def suite_bounds(alphas: Optional[Iterable[float]] = None, jobs: int = 1) -> list[CheckReport]:
    """Gaussian heat bounds, light-cone wave bounds and the two convolution bounds."""
    out = []
    hg = dict(hk.ORACLE_GRID)
    wg = dict(wk.ORACLE_GRID)
    if alphas is not None:
        hg["alpha"] = wg["alpha"] = tuple(alphas)
    t0 = time.perf_counter()
    pts = [p + (True,) for p in hk.oracle_points(hg)]
    res = pmap(_heat_item, pts, jobs)
    g = max(r[0] for r in res)
    d = np.nanmax([r[1] for r in res])
    rt = time.perf_counter() - t0
    par = {"grid": "heat oracle grid", "n_points": len(pts), "alpha": list(hg["alpha"])}
    out.append(CheckReport("bounds.heat_gaussian", par, g, 5.0, g / 5.0, g <= 5.0, rt))
    out.append(CheckReport("bounds.heat_dt", par, float(d), 50.0, float(d) / 50.0, bool(d <= 50.0), 0.0))

    t0 = time.perf_counter()
    wpts = wk.oracle_points(wg)
    wres = pmap(_wave_item, wpts, jobs)
    gw = float(np.nanmax([r[0] for r in wres]))
    dw = float(np.nanmax([r[1] for r in wres]))
    rt = time.perf_counter() - t0
    par = {"grid": "wave off-cone grid", "n_points": len(wpts), "alpha": list(wg["alpha"])}
    gb = 1 / (2 * math.pi) + 1e-6
    out.append(CheckReport("bounds.wave_geometric", par, gw, gb, gw / gb, gw <= gb, rt))
    out.append(CheckReport("bounds.wave_diffractive", par, dw, 5.0, dw / 5.0, dw <= 5.0, 0.0))

    t0 = time.perf_counter()
    ratios = []
    unit = lambda r, th: bump(np.minimum(r, 1.0))
    from .quadrature import fixed_gl
    l1 = 2 * math.pi * float(fixed_gl(lambda r: bump(r) * r, 0.0, 1.0, 64, 8))
    for t in (0.5, 1.0, 10.0, 100.0):
        xr = sorted({0.0, 0.5 * t, max(t - 1.0, 0.0), t - 0.5 if t > 0.5 else 0.0, t, t + 0.5})
        cb = convolution_bounds_check(unit, t, l1, xr)
        ratios.append((t, cb.cone_ratio, cb.diffractive_ratio))
    worst = max(max(r[1], r[2]) for r in ratios)
    out.append(CheckReport("bounds.convolution", {"f": "unit bump", "t": [r[0] for r in ratios]},
                           [[r[1], r[2]] for r in ratios], 5.0, worst / 5.0, worst <= 5.0,
                           time.perf_counter() - t0))
    return out


# ---------------------------------------------------------------- local smoothing

def _ls_item(args):
    seed, T, res = args
    fld = AngularField.ab(1 / 3)
    d = band_limited_draw(exact_modes(fld, -3, 3), seed)
    return local_smoothing_norm(fld, 1.0, d, T, res)["quotient"]


def suite_smoothing(nus: Iterable[float] = Q_NUS, seeds: Iterable[int] = (0, 1, 2), T: float = 200.0,
                    res: float = 1.0, jobs: int = 1) -> list[CheckReport]:
    """Q_k(R, M) slopes in R, M bookkeeping and the windowed local smoothing quotient."""
    out = []
    for nu in nus:
        t0 = time.perf_counter()
        s_small, s_large, _, _ = q_slopes(nu)
        rt = time.perf_counter() - t0
        target = 2 * nu + 1
        dev = abs(s_small - target) / target
        out.append(CheckReport("smoothing.Q_small_R", {"nu": nu, "R": "2^-10..2^-4", "M": 1.0}, s_small,
                               f"{target!r} +- 5%", dev / 0.05, dev <= 0.05, rt))
        out.append(CheckReport("smoothing.Q_large_R", {"nu": nu, "R": "2^4..2^10", "M": 1.0}, s_large,
                               "0 +- 0.05", abs(s_large) / 0.05, abs(s_large) <= 0.05, 0.0))
    # M bookkeeping: for b(rho) = rho^2 supported everywhere, Q(R, 2M) = 4^2 Q(R, M)
    b = lambda r: np.asarray(r) ** 2
    q1 = local_smoothing_Q(0.5, 3.0, 1.0, b)
    q2 = local_smoothing_Q(0.5, 3.0, 2.0, b)
    out.append(CheckReport("smoothing.Q_M_scaling", {"nu": 0.5, "R": 3.0, "b": "rho^2"}, q2 / q1, 16.0,
                           abs(q2 / q1 / 16 - 1), abs(q2 / q1 / 16 - 1) < 1e-12, 0.0))
    seeds = list(seeds)
    items = [(s, T, res) for s in seeds] + [(s, 2 * T, res) for s in seeds] + [(s, T, 2 * res) for s in seeds]
    t0 = time.perf_counter()
    vals = pmap(_ls_item, items, jobs)
    rt = time.perf_counter() - t0
    n = len(seeds)
    for i, s in enumerate(seeds):
        base, win, fine = vals[i], vals[n + i], vals[2 * n + i]
        drift = max(_rel_drift(base, win), _rel_drift(base, fine))
        out.append(CheckReport("smoothing.local_norm", {"alpha": 1 / 3, "beta": 1.0, "seed": s, "T": T, "res": res},
                               base, "drift < 0.1 on window and resolution doubling", drift, drift < 0.1,
                               rt / n))
    return out


# ---------------------------------------------------------------- Strichartz

STRICHARTZ_PAIRS = ((math.inf, 2.0), (8.0, 4.0), (6.0, 6.0))


def _strichartz_item(args):
    field, pairs, seed, K, T, res = args
    d = band_limited_draw(field_modes(field, K), seed)
    t0 = time.perf_counter()
    base = strichartz_quotients(field, pairs, d, T, res)
    win = strichartz_quotients(field, pairs, d, 2 * T, res)
    fine = strichartz_quotients(field, pairs, d, T, 2 * res)
    emb = [sobolev_embedding_ratio(d, p, res) for p in (4.0, 8.0)]
    return ([r.quotient for r in base], [r.quotient for r in win], [r.quotient for r in fine],
            [r.tail for r in base], emb, time.perf_counter() - t0)


def suite_strichartz(field: Optional[AngularField] = None, n_draws: int = 20, K: int = 3, T: float = 200.0,
                     res: float = 1.0, seed0: int = 0, jobs: int = 1) -> list[CheckReport]:
    """Strichartz quotients over a band-limited random ensemble, with window and resolution doubling."""
    field = strichartz_field() if field is None else field
    check_propagation_field(field)
    pairs = []
    skipped = []
    for q, r in STRICHARTZ_PAIRS:
        p = admissible(q, r)
        (pairs if p is not None else skipped).append(p if p is not None else (q, r))
    items = [(field, pairs, seed0 + i, K, T, res) for i in range(n_draws)]
    res_all = pmap(_strichartz_item, items, jobs)
    rt = sum(r[-1] for r in res_all)
    out = []
    for ip, p in enumerate(pairs):
        base = np.array([r[0][ip] for r in res_all])
        win = np.array([r[1][ip] for r in res_all])
        fine = np.array([r[2][ip] for r in res_all])
        tails = np.array([r[3][ip] for r in res_all])
        par = {"pair": p.label, "s": p.s, "n_draws": n_draws, "K": K, "T": T, "res": res,
               "flux": field.flux(), "max_tail_fraction": float(tails.max())}
        if math.isinf(p.q) and p.r == 2:
            dev = float(np.max(np.abs(base - 1)))
            out.append(CheckReport("strichartz.energy", par, float(base.max()), "1 +- 1e-6", dev / 1e-6,
                                   dev <= 1e-6, rt / len(pairs)))
            continue
        dw = float(np.max(np.abs(win - base) / base))
        dr = float(np.max(np.abs(fine - base) / base))
        out.append(CheckReport("strichartz.quotient", dict(par, drift_window=dw, drift_resolution=dr),
                               float(base.max()), "drift < 0.1 on window and resolution doubling",
                               max(dw, dr), max(dw, dr) < 0.1, rt / len(pairs)))
    for q, r in skipped:
        out.append(CheckReport("strichartz.skipped", {"pair": [q, r]}, None, "not admissible", None, True, 0.0))
    for k, p in enumerate((4.0, 8.0)):
        e = np.array([r[4][k] for r in res_all])
        out.append(CheckReport("strichartz.sobolev_embedding", {"p": p, "n_draws": n_draws},
                               float(e.max()), "uniform constant", float(e.max() / e.min()),
                               bool(np.all(np.isfinite(e))), 0.0))
    return out


# ---------------------------------------------------------------- Hardy

def hardy_profiles(flux: float, n_theta: int = 128) -> list[AngularField]:
    """Three distinct tangential potentials with circle average ``flux``."""
    fns = (lambda th: flux + 0.0 * th,
           lambda th: flux + 0.4 * np.cos(th) - 0.2 * np.sin(3 * th),
           lambda th: flux + 0.7 * np.sin(2 * th) + 0.3 * np.cos(5 * th + 0.4))
    return [AngularField.from_functions(f, None, n_theta) for f in fns]


def suite_hardy(fluxes: Iterable[float] = HARDY_FLUXES) -> list[CheckReport]:
    """mu_1(A, 0) = dist(flux, Z)^2 for three profiles per flux, and mu_1 > 0 under admissible a < 0."""
    out = []
    for fl in fluxes:
        for i, fld in enumerate(hardy_profiles(fl)):
            t0 = time.perf_counter()
            mu1 = angular_eigs(fld, 1)[0].mu
            h = hardy_constant(fld)
            err = abs(mu1 - h)
            out.append(CheckReport("hardy.first_eigenvalue", {"flux": fl, "profile": i}, mu1, h, err / 1e-8,
                                   err < 1e-8, time.perf_counter() - t0))
        d2 = dist_to_integers(fl) ** 2
        base = hardy_profiles(fl)[1]
        a = -0.9 * d2 * (0.5 + 0.5 * np.cos(base.theta))
        fld = AngularField.sampled(base.A_vals, a)
        t0 = time.perf_counter()
        mu1 = angular_eigs(fld, 1)[0].mu
        out.append(CheckReport("hardy.negative_a", {"flux": fl, "a_minus": fld.a_minus(),
                                                    "admissible": fld.admissible()},
                               mu1, "> 0", None, bool(fld.admissible() and mu1 > 0), time.perf_counter() - t0))
    return out


def run_suite(name: str, **kw) -> list[CheckReport]:
    fns = {"decay": suite_decay, "bounds": suite_bounds, "smoothing": suite_smoothing,
           "strichartz": suite_strichartz, "hardy": suite_hardy}
    if name not in fns:
        raise ValueError(f"unknown suite {name!r}")
    return fns[name](**kw)
