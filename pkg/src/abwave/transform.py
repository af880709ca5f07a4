"""
Hankel transforms, spectral data and the partial-wave functional calculus.

A function on the plane is stored mode by mode, f = sum_k c_k(r) psi_k(theta).
Its spectral profile is b_k = H_{nu_k} c_k with

    (H_nu f)(rho) = int_0^inf J_nu(r rho) f(r) r dr,

which is its own inverse. Functions of the operator act on b_k by
multiplication, so most of the package works with :class:`SpectralData`
(profiles b_k on Gauss-Legendre nodes in rho) and synthesizes c_k(r)
only where physical values are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .angular import AngularField, ModeData, TWO_PI, exact_modes, mode_order, theta_grid
from .quadrature import DEFAULT_SPEC, QuadratureSpec, SpecEval, adaptive_gl, gauss_legendre
from .specfun import poisson_bound


# ---------------------------------------------------------------- grids

@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes and weights for int ... r dr.

    Composite Gauss-Legendre panels, either uniform in log r (default
    [1e-4, 1e3], 2048 nodes) or uniform in r on [0, r_max].
    """

    r: np.ndarray
    w: np.ndarray
    r_max: float
    kind: str

    @property
    def n_r(self) -> int:
        return int(self.r.shape[0])

    @property
    def key(self) -> tuple:
        return (self.kind, float(self.r[0]), self.r_max, self.n_r)

    @classmethod
    def log_uniform(cls, r_min: float = 1e-4, r_max: float = 1e3, n: int = 2048,
                    order: int = 16) -> "RadialGrid":
        """Log-uniform panels on [r_min, r_max] plus one panel on [0, r_min]."""
        if n % order:
            raise ValueError("n must be a multiple of the panel order")
        x, wx = gauss_legendre(order)
        edges = np.linspace(math.log(r_min), math.log(r_max), n // order)
        h = 0.5 * np.diff(edges)
        u = ((edges[:-1] + edges[1:])[:, None] * 0.5 + h[:, None] * x).ravel()
        wu = (h[:, None] * wx).ravel()
        r_log = np.exp(u)
        r0 = 0.5 * r_min * (x + 1.0)
        w0 = 0.5 * r_min * wx * r0
        r = np.concatenate([r0, r_log])
        w = np.concatenate([w0, wu * r_log * r_log])
        return cls._make(r, w, r_max, "log")

    @classmethod
    def uniform(cls, r_max: float, n: int, order: int = 16) -> "RadialGrid":
        if n % order:
            raise ValueError("n must be a multiple of the panel order")
        x, wx = gauss_legendre(order)
        edges = np.linspace(0.0, r_max, n // order + 1)
        h = 0.5 * np.diff(edges)
        r = ((edges[:-1] + edges[1:])[:, None] * 0.5 + h[:, None] * x).ravel()
        w = (h[:, None] * wx).ravel() * r
        return cls._make(r, w, r_max, "uniform")

    @classmethod
    def _make(cls, r, w, r_max, kind):
        r.setflags(write=False)
        w.setflags(write=False)
        return cls(r, w, float(r_max), kind)

    def measure_error(self) -> float:
        """Relative error of int_0^{r_max} r dr on the grid."""
        exact = 0.5 * self.r_max ** 2
        return abs(self.w.sum() - exact) / exact


DEFAULT_GRID_SPEC = dict(r_min=1e-4, r_max=1e3, n=2048)


@lru_cache(maxsize=1)
def default_grid() -> RadialGrid:
    return RadialGrid.log_uniform(**DEFAULT_GRID_SPEC)


# ---------------------------------------------------------------- Hankel

@lru_cache(maxsize=6)
def _bessel_matrix(nu: float, out_key: tuple, in_key: tuple, out_r: bytes, in_r: bytes) -> np.ndarray:
    a = np.frombuffer(out_r)
    b = np.frombuffer(in_r)
    return special.jv(nu, np.outer(a, b))


def bessel_matrix(nu: float, out_nodes: np.ndarray, in_nodes: np.ndarray) -> np.ndarray:
    """J_nu(out_i * in_j), cached for repeated transforms between the same grids."""
    out_nodes = np.ascontiguousarray(out_nodes, dtype=float)
    in_nodes = np.ascontiguousarray(in_nodes, dtype=float)
    return _bessel_matrix(float(nu), (out_nodes.size,), (in_nodes.size,),
                          out_nodes.tobytes(), in_nodes.tobytes())


class TruncationError(ValueError):
    """The sampled function has not decayed by the end of the grid."""


def check_decay(f: np.ndarray, grid: RadialGrid, tol: float = 1e-8) -> None:
    f = np.asarray(f)
    peak = float(np.max(np.abs(f))) if f.size else 0.0
    if peak == 0.0:
        return
    if abs(f[-1]) * grid.r_max ** 2 > tol * peak:
        raise TruncationError(
            f"|f(r_max)| r_max^2 = {abs(f[-1]) * grid.r_max ** 2:.3e} exceeds {tol:.1e} * max|f|")


def hankel(nu: float, f: np.ndarray, grid: RadialGrid, rho, check: bool = True):
    """Order-nu Hankel transform of samples ``f`` on ``grid`` at ``rho``.

    Parameters
    ----------
    nu : float
        Order, ``nu >= 0``.
    f : ndarray
        Samples at ``grid.r``.
    grid : RadialGrid
    rho : float or ndarray
        Output frequencies, ``rho > 0``.
    check : bool
        Reject samples that have not decayed by ``grid.r_max``.

    Returns
    -------
    complex or ndarray
    """
    if nu < 0:
        raise ValueError("hankel order must be nonnegative")
    if check:
        check_decay(f, grid)
    rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho_arr <= 0):
        raise ValueError("rho must be positive")
    J = bessel_matrix(nu, rho_arr, grid.r)
    out = J @ (np.asarray(f) * grid.w)
    return out[0] if np.ndim(rho) == 0 else out


def hankel_grid(nu: float, f: np.ndarray, grid: RadialGrid, out: RadialGrid, check: bool = True) -> np.ndarray:
    """Hankel transform sampled at the nodes of another grid."""
    return hankel(nu, f, grid, out.r, check)


# ---------------------------------------------------------------- windows

def _glue(x):
    """Smooth step: 0 for x <= 0, 1 for x >= 1, built from e^{-1/x}."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def phi(lam) -> np.ndarray:
    """Dyadic profile with supp [1/2, 2], 0 <= phi <= 1 and sum_j phi(2^-j lam) = 1.

    In u = log2(lam): phi = step(u + 1) on (-1, 0] and 1 - step(u) on (0, 1).
    """
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        u = np.log2(np.where(lam > 0, lam, np.nan))
    out = np.where(u <= 0, _glue(u + 1.0), 1.0 - _glue(u))
    out = np.where((u > -1) & (u < 1), out, 0.0)
    return np.nan_to_num(out)


def bump(x) -> np.ndarray:
    """C-infinity bump e^{1 - 1/(1-x^2)} on (-1, 1), equal to 1 at 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    return out


@dataclass(frozen=True)
class DyadicWindow:
    """phi_j(lam) = phi(2^-j lam), supported in [2^(j-1), 2^(j+1)]."""

    j: int

    def __call__(self, lam) -> np.ndarray:
        return phi(np.asarray(lam, dtype=float) * 2.0 ** (-self.j))

    @property
    def support(self) -> tuple[float, float]:
        return 2.0 ** (self.j - 1), 2.0 ** (self.j + 1)


def partition_residual(lam) -> float:
    """max |sum_j phi(2^-j lam) - 1| over the given positive lam."""
    lam = np.asarray(lam, dtype=float)
    u = np.log2(lam)
    js = np.arange(int(np.floor(u.min())) - 2, int(np.ceil(u.max())) + 3)
    total = sum(DyadicWindow(int(j))(lam) for j in js)
    return float(np.max(np.abs(total - 1.0)))


# ---------------------------------------------------------------- mode functions

@dataclass(frozen=True, eq=False)
class ModeFunction:
    """Radial samples c_k(r_i) of one angular mode."""

    mode: ModeData
    grid: RadialGrid
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex)
        if c.shape != self.grid.r.shape:
            raise ValueError("samples must match the grid")
        if not np.all(np.isfinite(c)):
            raise ValueError("mode function samples must be finite")
        object.__setattr__(self, "c", c)

    def l2_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.c) ** 2 * self.grid.w))


def mode_functions_to_text(fs: Sequence[ModeFunction]) -> str:
    """``k,nu,r,Re(c),Im(c)`` rows."""
    rows = ["k,nu,r,Re(c),Im(c)"]
    for f in fs:
        for r, c in zip(f.grid.r, f.c):
            rows.append(f"{int(f.mode.k)},{float(f.mode.nu)!r},{float(r)!r},{float(c.real)!r},{float(c.imag)!r}")
    return "\n".join(rows) + "\n"


def mode_functions_from_text(text: str, grid: RadialGrid) -> list[ModeFunction]:
    """Inverse of :func:`mode_functions_to_text` for samples on ``grid``.

    The restored modes use psi_k = e^{-ik theta}/sqrt(2 pi), which is the
    exact eigenfunction of a reduced Aharonov-Bohm field.
    """
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if lines[0].replace(" ", "") != "k,nu,r,Re(c),Im(c)":
        raise ValueError("bad header")
    rows: dict[int, list] = {}
    nus: dict[int, float] = {}
    for ln in lines[1:]:
        k, nu, r, re, im = ln.split(",")
        rows.setdefault(int(k), []).append((float(r), complex(float(re), float(im))))
        nus[int(k)] = float(nu)
    out = []
    for k, vals in rows.items():
        r = np.array([v[0] for v in vals])
        if r.shape != grid.r.shape or not np.allclose(r, grid.r, rtol=1e-14):
            raise ValueError("radial nodes do not match the grid")
        nu = nus[k]
        out.append(ModeFunction(ModeData(k, nu, nu * nu), grid, np.array([v[1] for v in vals])))
    return out


# ---------------------------------------------------------------- spectral data

def rho_nodes(lo: float, hi: float, n: int = 160, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [lo, hi] and weights for rho d rho."""
    x, wx = gauss_legendre(order)
    panels = max(1, n // order)
    edges = np.linspace(lo, hi, panels + 1)
    h = 0.5 * np.diff(edges)
    rho = ((edges[:-1] + edges[1:])[:, None] * 0.5 + h[:, None] * x).ravel()
    w = (h[:, None] * wx).ravel() * rho
    return rho, w


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Profiles b_k(rho) of a finite set of modes on shared rho nodes.

    ``w`` are weights for rho d rho, so c_k(r) = sum_i J_nu(r rho_i) b_k(rho_i) w_i.
    """

    modes: tuple
    rho: np.ndarray
    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=complex)
        if b.shape != (len(self.modes), self.rho.shape[0]):
            raise ValueError("b must have shape (n_modes, n_rho)")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "modes", tuple(self.modes))

    @classmethod
    def from_profiles(cls, modes: Sequence[ModeData], profiles: Sequence[Callable],
                      lo: float, hi: float, n: int = 160) -> "SpectralData":
        rho, w = rho_nodes(lo, hi, n)
        b = np.array([p(rho) for p in profiles], dtype=complex)
        return cls(tuple(modes), rho, w, b)

    def with_b(self, b: np.ndarray) -> "SpectralData":
        return SpectralData(self.modes, self.rho, self.w, b)

    def multiply(self, m) -> "SpectralData":
        """Apply a multiplier m(rho) (or an (n_modes, n_rho) array)."""
        mv = m(self.rho) if callable(m) else np.asarray(m)
        return self.with_b(self.b * mv)

    def synthesize(self, r) -> np.ndarray:
        """c_k(r) for every mode, shape (n_modes, len(r))."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((len(self.modes), r.size), dtype=complex)
        for i, md in enumerate(self.modes):
            out[i] = bessel_matrix(md.nu, r, self.rho) @ (self.b[i] * self.w)
        return out

    def to_mode_functions(self, grid: RadialGrid) -> list[ModeFunction]:
        c = self.synthesize(grid.r)
        return [ModeFunction(md, grid, c[i]) for i, md in enumerate(self.modes)]

    def evaluate(self, r, theta) -> np.ndarray:
        """f(r_i, theta_j) on the tensor grid, shape (len(r), len(theta))."""
        c = self.synthesize(r)
        P = np.array([md.psi(np.asarray(theta, dtype=float)) for md in self.modes])
        return c.T @ P

    def l2_norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.b) ** 2 * self.w)))

    def sobolev_norm(self, s: float) -> float:
        """(sum_k int |rho^s b_k|^2 rho d rho)^(1/2)."""
        return math.sqrt(float(np.sum(np.abs(self.b) ** 2 * self.rho ** (2 * s) * self.w)))


def spectral_from_mode_functions(fs: Sequence[ModeFunction], rho_grid: RadialGrid) -> SpectralData:
    """Forward Hankel of each mode onto the nodes of ``rho_grid``."""
    b = np.array([hankel(f.mode.nu, f.c, f.grid, rho_grid.r) for f in fs])
    return SpectralData(tuple(f.mode for f in fs), rho_grid.r, rho_grid.w, b)


# ---------------------------------------------------------------- functional calculus

@dataclass(frozen=True)
class KernelValue:
    """Kernel value with error estimate and truncation data."""

    value: complex
    err_est: float
    n_modes: int
    tail_bound: float
    converged: bool


class TailNotConverged(RuntimeError):
    def __init__(self, partial: KernelValue):
        super().__init__(f"mode sum not converged after {partial.n_modes} modes "
                         f"(partial={partial.value!r}, tail={partial.tail_bound:.2e})")
        self.partial = partial


def radial_kernel(F: Callable, nu: float, r1: float, r2: float, rho_max: float,
                  q: QuadratureSpec = DEFAULT_SPEC) -> SpecEval:
    """int_0^rho_max F(rho^2) J_nu(r1 rho) J_nu(r2 rho) rho d rho."""
    period = math.pi / max(r1 + r2, 1e-12)
    n = min(int(rho_max / period), 20000)
    brk = list(np.linspace(0.0, rho_max, n + 2)[1:-1]) if n > 0 else []

    def f(rho):
        return F(rho * rho) * special.jv(nu, r1 * rho) * special.jv(nu, r2 * rho) * rho

    return adaptive_gl(f, 0.0, rho_max, q, brk)


def _tail_guard(F, nu, r1, r2, rho_max):
    """Poisson-bound majorant of one mode's radial kernel."""
    rho, w = rho_nodes(0.0, rho_max, 64)
    Fa = np.abs(F(rho * rho))
    b1 = np.array([poisson_bound(nu, r1 * x) for x in rho])
    b2 = np.array([poisson_bound(nu, r2 * x) for x in rho])
    return float(np.sum(Fa * np.minimum(b1, 1.0) * np.minimum(b2, 1.0) * w))


def functional_calculus(F: Callable, x: tuple, y: tuple, modes: Optional[Sequence[ModeData]] = None,
                        field: Optional[AngularField] = None, rho_max: float = 50.0,
                        q: QuadratureSpec = DEFAULT_SPEC, max_modes: int = 400) -> KernelValue:
    """Kernel of F(L) at (x, y) by the partial-wave sum.

    Parameters
    ----------
    F : callable
        Function of lambda^2 (vectorized). Its rho-integral is truncated
        at ``rho_max``; F must be negligible beyond it.
    x, y : (r, theta)
        Polar points.
    modes : sequence of ModeData, optional
        A fixed truncated mode list.
    field : AngularField, optional
        When given instead of ``modes``, exact modes are generated in
        the order 0, -1, 1, -2, ... and the sum stops once the last three
        contributions fall below ``rel_tol`` times the partial sum.
    """
    r1, t1 = x
    r2, t2 = y
    re_parts: list[float] = []
    im_parts: list[float] = []
    err = 0.0
    count = 0
    guard = 0.0

    def add(md):
        nonlocal err, count
        k = radial_kernel(F, md.nu, r1, r2, rho_max, q)
        ph = md.psi(t1) * np.conj(md.psi(t2))
        term = complex(ph * k.value)
        re_parts.append(term.real)
        im_parts.append(term.imag)
        err += abs(ph) * k.err_est
        count += 1
        return abs(term)

    if modes is not None:
        for md in modes:
            add(md)
        last = modes[-1]
        guard = _tail_guard(F, last.nu + 1.0, r1, r2, rho_max) / TWO_PI
        total = complex(math.fsum(re_parts), math.fsum(im_parts))
        return KernelValue(total, err, count, guard, True)
    if field is None:
        raise ValueError("give either modes or field")
    if not field.a_is_zero():
        raise ValueError("adaptive mode generation needs a = 0")
    small = 0
    j = 0
    while True:
        ks = [0] if j == 0 else [-j, j]
        mags = [add(md) for md in exact_modes(field, min(ks), max(ks)) if md.k in ks]
        total = complex(math.fsum(re_parts), math.fsum(im_parts))
        if all(m <= q.rel_tol * abs(total) for m in mags):
            small += 1
        else:
            small = 0
        al = field.reduced_flux()
        nu_next = min(abs(-j - 1 + al), abs(j + 1 + al))
        guard = 2 * _tail_guard(F, nu_next, r1, r2, rho_max) / TWO_PI
        if small >= 3:
            return KernelValue(total, err, count, guard, True)
        if count >= max_modes:
            raise TailNotConverged(KernelValue(total, err, count, guard, False))
        j += 1


# ---------------------------------------------------------------- norms

def sobolev_norm(f: Sequence[ModeFunction], s: float, field: Optional[AngularField] = None,
                 rho_grid: Optional[RadialGrid] = None) -> float:
    """(sum_k int |rho^s b_k|^2 rho d rho)^(1/2) with b_k = H_{nu_k} c_k.

    The orders are taken from each mode, so modes built from a field
    with a != 0 give the norm of that operator. ``field`` is accepted for
    symmetry with the other norms and used only for validation.
    """
    if not -1.0 <= s <= 1.0:
        raise ValueError("s must lie in [-1, 1]")
    # a purely magnetic field always gives a nonnegative operator
    if field is not None and not (field.admissible() or field.a_is_zero()):
        raise ValueError("field is not admissible")
    rho_grid = f[0].grid if rho_grid is None else rho_grid
    data = spectral_from_mode_functions(f, rho_grid)
    if s <= -1.0:
        low = np.abs(data.b[:, 0])
        if np.any(low > 1e-10 * max(1.0, float(np.max(np.abs(data.b))))):
            raise ValueError("divergent low-frequency integral for s <= -1")
    return data.sobolev_norm(s)


def polar_lp_norm(u: np.ndarray, r_grid: RadialGrid, n_theta: int, p: float) -> float:
    """L^p norm of samples u(r_i, theta_j) on a polar tensor grid."""
    a = np.abs(u)
    if math.isinf(p):
        return float(a.max())
    dth = TWO_PI / n_theta
    return float((np.sum(a ** p * r_grid.w[:, None]) * dth) ** (1.0 / p))


def lp_norm(data: SpectralData, p: float, r_grid: RadialGrid, n_theta: int = 64) -> float:
    th = theta_grid(n_theta)
    return polar_lp_norm(data.evaluate(r_grid.r, th), r_grid, n_theta, p)


def lp_project(f, j: int, window: Optional[DyadicWindow] = None,
               rho_grid: Optional[RadialGrid] = None):
    """P_j = phi_j(sqrt(L)).

    Accepts :class:`SpectralData` (returned multiplied by phi_j) or a list
    of :class:`ModeFunction` (transformed, multiplied and transformed back
    on the same radial grid).
    """
    window = DyadicWindow(j) if window is None else window
    if window.j != j:
        raise ValueError("window index does not match j")
    if isinstance(f, SpectralData):
        return f.multiply(window)
    grid = f[0].grid
    rho_grid = grid if rho_grid is None else rho_grid
    out = []
    for g in f:
        b = hankel(g.mode.nu, g.c, g.grid, rho_grid.r) * window(rho_grid.r)
        c = hankel(g.mode.nu, b, rho_grid, grid.r, check=False)
        out.append(ModeFunction(g.mode, grid, c))
    return out


def dyadic_range(data: SpectralData, tol: float = 1e-14) -> range:
    """Indices j whose window meets the support of the profiles."""
    mask = np.max(np.abs(data.b), axis=0) > tol * max(1e-300, float(np.max(np.abs(data.b))))
    if not np.any(mask):
        return range(0)
    lo = data.rho[mask].min()
    hi = data.rho[mask].max()
    return range(int(math.floor(math.log2(lo))) - 1, int(math.ceil(math.log2(hi))) + 2)


def besov_norm_11half(f: SpectralData, r_grid: RadialGrid, n_theta: int = 64,
                      tol: float = 1e-12) -> float:
    """sum_j 2^(j/2) ||P_j f||_{L^1}, L^1 by polar quadrature."""
    if not np.any(f.b):
        return 0.0
    total = 0.0
    for j in dyadic_range(f):
        pj = lp_project(f, j)
        if not np.any(np.abs(pj.b) > tol * float(np.max(np.abs(f.b)))):
            continue
        total += 2.0 ** (0.5 * j) * lp_norm(pj, 1.0, r_grid, n_theta)
    return total


def bernstein_ratio(f: SpectralData, j: int, p: float, q_exp: float, r_grid: RadialGrid,
                    n_theta: int = 64) -> float:
    """||P_j f||_q / (2^(2j(1/p - 1/q)) ||f||_p)."""
    pj = lp_project(f, j)
    num = lp_norm(pj, q_exp, r_grid, n_theta)
    inv_q = 0.0 if math.isinf(q_exp) else 1.0 / q_exp
    den = 2.0 ** (2 * j * (1.0 / p - inv_q)) * lp_norm(f, p, r_grid, n_theta)
    return num / den
