"""
Numerical verification of dispersive, local smoothing and Strichartz estimates.

Solutions of the wave equation u_tt + L u = 0 with data (f, g) are built
mode by mode from spectral profiles b_k:

    u_k(t, r) = int J_{nu_k}(r rho) [cos(t rho) b_k^f + sin(t rho)/rho b_k^g] rho d rho.

:class:`WaveEvolution` evaluates u on polar grids. Up to a switch time
it uses the Bessel kernel directly. Beyond it the wave lives near r = |t|.
There J cos and J sin split into an outgoing Hankel part that varies
slowly in rho and a part oscillating like e^{i(r+t) rho}. The second is
dropped; the tests bound it against the direct evaluation.
All grid scales are set by the spectral band of the data, so the cost
does not depend on the dyadic location.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import special

from .angular import AngularField, ModeData, TWO_PI, angular_eigs, dist_to_integers, exact_modes, hardy_constant
from .quadrature import gauss_legendre
from .specfun import dyadic_bessel_l2
from .transform import DyadicWindow, SpectralData, bump, rho_nodes


# ---------------------------------------------------------------- exponents

@dataclass(frozen=True)
class AdmissiblePair:
    """Exponents with 2/q + 1/r <= 1/2 and gap s = 2(1/2 - 1/r) - 1/q in [0, 1)."""

    q: float
    r: float
    s: float

    @property
    def label(self) -> str:
        qs = "inf" if math.isinf(self.q) else f"{self.q:g}"
        return f"({qs},{self.r:g})"


def admissible(q: float, r: float) -> Optional[AdmissiblePair]:
    """The pair (q, r) with its gap s, or None when it is not admissible."""
    if not (q >= 2 and r >= 2) or math.isinf(r):
        raise ValueError("need q, r >= 2 and r finite")
    iq = 0.0 if math.isinf(q) else 1.0 / q
    if 2 * iq + 1.0 / r > 0.5 + 1e-15:
        return None
    s = 2 * (0.5 - 1.0 / r) - iq
    if not 0 <= s < 1:
        return None
    return AdmissiblePair(float(q), float(r), s)


# ---------------------------------------------------------------- field checks

def first_eigenvalue(field: AngularField, n_modes: int = 1) -> float:
    if field.a_is_zero():
        return hardy_constant(field)
    return angular_eigs(field, n_modes)[0].mu


def check_propagation_field(field: Optional[AngularField]) -> None:
    """Reject fields whose angular operator has a negative eigenvalue.

    The sufficient condition is sup a_- < dist(flux, Z)^2; the flux-zero
    free case (mu_1 = 0) is allowed.
    """
    if field is None or field.a_is_zero():
        return
    mu1 = first_eigenvalue(field)
    if mu1 < 0:
        d = dist_to_integers(field.flux())
        raise ValueError(
            f"field not admissible: sup a_- = {field.a_minus():.6g} exceeds dist(flux, Z)^2 = {d * d:.6g} "
            f"and the first angular eigenvalue is {mu1:.6g} < 0")


# ---------------------------------------------------------------- data

@dataclass(frozen=True)
class BumpProfile:
    """coef * rho^power * bump((log2 rho - u0) / h), support [2^(u0-h), 2^(u0+h)]."""

    coef: complex
    u0: float
    h: float
    power: float = 0.0
    scale: float = 1.0

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            x = (np.log2(np.where(rho > 0, rho, np.nan)) - self.u0) / self.h
        out = bump(np.nan_to_num(x, nan=2.0))
        return self.scale * self.coef * rho ** self.power * out

    @property
    def support(self) -> tuple[float, float]:
        return 2.0 ** (self.u0 - self.h), 2.0 ** (self.u0 + self.h)


@dataclass(frozen=True)
class ProfileData:
    """Initial data (f, g) as spectral profiles per mode, vanishing outside [lo, hi]."""

    modes: tuple
    f: tuple
    g: tuple
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "g", tuple(self.g))
        if not (len(self.f) == len(self.g) == len(self.modes)):
            raise ValueError("one f and one g profile per mode (None for zero)")
        if not 0 < self.lo < self.hi:
            raise ValueError("need 0 < lo < hi")
        if any(not md.nu >= 0 for md in self.modes):
            raise ValueError("a mode has negative eigenvalue; the field is not admissible")

    def profile_values(self, which: str, rho: np.ndarray) -> np.ndarray:
        prof = self.f if which == "f" else self.g
        return np.array([np.zeros_like(rho, dtype=complex) if p is None else np.asarray(p(rho), dtype=complex)
                         for p in prof])

    def spectral(self, which: str = "f", n: int = 320) -> SpectralData:
        rho, w = rho_nodes(self.lo, self.hi, n)
        return SpectralData(self.modes, rho, w, self.profile_values(which, rho))

    def only(self, which: str) -> "ProfileData":
        """Data with the other component set to zero."""
        z = (None,) * len(self.modes)
        return ProfileData(self.modes, self.f if which == "f" else z, self.g if which == "g" else z, self.lo, self.hi)

    def g_as_f(self) -> "ProfileData":
        """g moved into the f slot, to synthesize g itself at t = 0."""
        return ProfileData(self.modes, self.g, (None,) * len(self.modes), self.lo, self.hi)

    def sobolev_norm(self, which: str, s: float, n: int = 320) -> float:
        return self.spectral(which, n).sobolev_norm(s)


def localized_draw(modes: Sequence[ModeData], seed: int, j: int = 0) -> ProfileData:
    """Random g data with spectral support inside [2^(j-1), 2^(j+1)].

    Per mode (in the given order): a complex normal coefficient, a bump
    half width h ~ U(0.4, 0.6) in log2 rho and a centre u0 ~ U(-(1-h), 1-h).
    The profile is rho * bump, so the solution multiplier sin(t rho)/rho
    acts on a plain bump. Rescaling to level j is exact: f_j(x) = f(2^j x).
    """
    rng = np.random.default_rng(seed)
    prof = []
    for _ in modes:
        c = complex(rng.normal(), rng.normal()) / math.sqrt(2.0)
        h = rng.uniform(0.4, 0.6)
        u0 = rng.uniform(-(1.0 - h), 1.0 - h)
        # b_j(rho) = 2^{-2j} b(2^{-j} rho)
        prof.append(BumpProfile(c * 2.0 ** (-3 * j), u0 + j, h, power=1.0))
    return ProfileData(tuple(modes), (None,) * len(modes), tuple(prof), 2.0 ** (j - 1), 2.0 ** (j + 1))


def band_limited_draw(modes: Sequence[ModeData], seed: int, m_range: tuple[int, int] = (-2, 3)) -> ProfileData:
    """Random (f, g) whose profiles are bumps inside one random dyadic band [2^m, 2^(m+1)].

    m is uniform in ``m_range`` (inclusive), so all spectral support lies
    in [2^-2, 2^4] by default. g carries an extra factor rho so that its
    negative-order Sobolev norm is comparable to the norm of f.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    fs, gs = [], []
    for _ in modes:
        cf = complex(rng.normal(), rng.normal()) / math.sqrt(2.0)
        cg = complex(rng.normal(), rng.normal()) / math.sqrt(2.0)
        h = rng.uniform(0.3, 0.5)
        u0 = rng.uniform(m + h, m + 1 - h)
        fs.append(BumpProfile(cf, u0, h))
        gs.append(BumpProfile(cg, u0, h, power=1.0))
    return ProfileData(tuple(modes), tuple(fs), tuple(gs), 2.0 ** m, 2.0 ** (m + 1))


def localization_residual(data: ProfileData, j: int, which: str = "g", n: int = 2048) -> float:
    """max |(P_{j-1} + P_j + P_{j+1}) b - b| / max |b| on [2^(j-3), 2^(j+3)].

    The three windows sum to one exactly on [2^(j-1), 2^(j+1)], so this is
    zero iff the data is localized there.
    """
    rho = np.geomspace(2.0 ** (j - 3), 2.0 ** (j + 3), n)
    b = data.profile_values(which, rho)
    peak = float(np.max(np.abs(b)))
    if peak == 0:
        return 0.0
    w = DyadicWindow(j - 1)(rho) + DyadicWindow(j)(rho) + DyadicWindow(j + 1)(rho)
    return float(np.max(np.abs(b * w - b)) / peak)


# ---------------------------------------------------------------- propagation

def propagate(field: Optional[AngularField], f: SpectralData, g: Optional[SpectralData], t: float) -> SpectralData:
    """Profiles of u(t) = cos(t sqrt L) f + sin(t sqrt L)/sqrt L g.

    f and g must share modes and rho nodes. The orders are those carried
    by the modes, so solver modes of a field with a != 0 propagate with
    nu_k = sqrt(mu_k).
    """
    check_propagation_field(field)
    b = np.cos(t * f.rho) * f.b
    if g is not None:
        if g.b.shape != f.b.shape or not np.array_equal(g.rho, f.rho):
            raise ValueError("f and g must share modes and rho nodes")
        # sin(t rho)/rho at rho -> 0 is t
        b = b + t * np.sinc(t * g.rho / math.pi) * g.b
    return f.with_b(b)


def propagate_velocity(f: SpectralData, g: Optional[SpectralData], t: float) -> SpectralData:
    """Profiles of du/dt."""
    b = -f.rho * np.sin(t * f.rho) * f.b
    if g is not None:
        b = b + np.cos(t * g.rho) * g.b
    return f.with_b(b)


def energy(f: SpectralData, g: Optional[SpectralData], t: float) -> float:
    """||u(t)||^2 in the homogeneous H^1 of the operator plus ||u_t(t)||^2, computed spectrally."""
    u = propagate(None, f, g, t)
    v = propagate_velocity(f, g, t)
    return u.sobolev_norm(1.0) ** 2 + v.l2_norm() ** 2


def propagate_mode_functions(field, fs, gs, t, rho_grid):
    """Mode-function version of :func:`propagate` (forward Hankel, multiply, inverse)."""
    from .transform import ModeFunction, hankel

    check_propagation_field(field)
    out = []
    for i, fi in enumerate(fs):
        b = hankel(fi.mode.nu, fi.c, fi.grid, rho_grid.r) * np.cos(t * rho_grid.r)
        if gs is not None:
            gi = gs[i]
            b = b + hankel(gi.mode.nu, gi.c, gi.grid, rho_grid.r) * t * np.sinc(t * rho_grid.r / math.pi)
        c = hankel(fi.mode.nu, b, rho_grid, fi.grid.r, check=False)
        out.append(ModeFunction(fi.mode, fi.grid, c))
    return out


# ---------------------------------------------------------------- evaluation on polar grids

def _gl_panels(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(order)
    e = np.asarray(edges, dtype=float)
    h = 0.5 * np.diff(e)
    m = 0.5 * (e[1:] + e[:-1])
    return (m[:, None] + h[:, None] * x).ravel(), (h[:, None] * w).ravel()


@dataclass
class Frame:
    """Radial mode values of u at one time: C[k, i] = u_k(t, r_i)."""

    t: float
    r: np.ndarray
    w: np.ndarray
    C: np.ndarray


class WaveEvolution:
    """Evaluator of u(t) for :class:`ProfileData` on |t| <= t_max.

    Parameters
    ----------
    data : ProfileData
    t_max : float
    res : float
        Resolution multiplier for all radial, spectral and angular grids.
    halo : float
        Half width of the radial window around r = |t| (band units).
    t_switch : float
        Time (band units) after which the outgoing split is used.
    nodes_per_wavelength : float
        Radial nodes per shortest wavelength 2 pi / hi at ``res = 1``.
    n_theta : int, optional
        Angular nodes; default 8 (2K+1) rounded up to a power of two.
    grade_levels : int
        Geometric panels [2^-(m+1), 2^-m] wavelengths below the first
        wavelength, resolving the r^nu behaviour at the origin.
    """

    def __init__(self, data: ProfileData, t_max: float, res: float = 1.0, halo: float = 60.0,
                 t_switch: float = 150.0, nodes_per_wavelength: float = 12.0,
                 n_theta: Optional[int] = None, grade_levels: int = 12):
        self.data = data
        self.t_max = float(t_max)
        self.res = res
        unit = 1.0 / math.sqrt(data.lo * data.hi)
        self.halo = halo * unit
        self.t_switch = t_switch * unit
        wl = TWO_PI / data.hi
        order_r = 8
        plen = wl * order_r / (nodes_per_wavelength * res)
        nm = len(data.modes)
        if n_theta is None:
            n_theta = 1 << max(5, int(math.ceil(math.log2(8 * nm))))
            n_theta = int(n_theta * (2 if res > 1 else 1))
        self.n_theta = n_theta
        self.theta = np.arange(n_theta) * (TWO_PI / n_theta)
        self.P = np.array([md.psi(self.theta) for md in data.modes])
        self.nus = np.array([md.nu for md in data.modes])

        # direct region: exact Bessel kernel
        t_dir = min(self.t_max, self.t_switch)
        r_end = t_dir + self.halo
        grade = [wl * 2.0 ** (-k) for k in range(grade_levels, 0, -1)]
        uni = np.arange(wl, r_end + plen, plen)
        self.r_dir, wr = _gl_panels(np.concatenate([[0.0], grade, uni]), order_r)
        self.w_dir = wr * self.r_dir
        self.rho_dir, self.wrho_dir = self._rho_nodes(2 * t_dir + self.halo)
        self.J = [special.jv(nu, np.outer(self.r_dir, self.rho_dir)) for nu in self.nus]
        self.Bf_dir, self.Bg_dir = self._weights(self.rho_dir, self.wrho_dir)

        # slow region: outgoing Hankel part only
        self.H = None
        if self.t_max > self.t_switch:
            lo_r = self.t_switch - self.halo
            self.r_slow, wr = _gl_panels(np.arange(lo_r, self.t_max + self.halo + plen, plen), order_r)
            self.w_slow = wr * self.r_slow
            self.rho_slow, self.wrho_slow = self._rho_nodes(self.halo)
            self.H = [special.hankel1(nu, np.outer(self.r_slow, self.rho_slow)) for nu in self.nus]
            self.Bf_slow, self.Bg_slow = self._weights(self.rho_slow, self.wrho_slow)

    def _rho_nodes(self, freq: float):
        d = self.data
        order = 16
        periods = (d.hi - d.lo) * freq / TWO_PI
        panels = max(2, int(math.ceil(periods * 4.0 * self.res / order)) + 1)
        x, w = _gl_panels(np.linspace(d.lo, d.hi, panels + 1), order)
        return x, w * x

    def _weights(self, rho, w):
        bf = self.data.profile_values("f", rho) * w
        bg = self.data.profile_values("g", rho) * w / rho
        return bf, bg

    def frame(self, t: float, direct: Optional[bool] = None) -> Frame:
        """Radial values at time t; ``direct`` forces a method (for tests)."""
        ta = abs(t)
        if ta > self.t_max * (1 + 1e-12):
            raise ValueError("t beyond the evaluator's t_max")
        use_direct = ta <= self.t_switch if direct is None else direct
        if use_direct:
            if ta > self.t_switch * (1 + 1e-12):
                raise ValueError("direct evaluation only up to t_switch")
            rows = self.r_dir <= ta + self.halo
            ct = np.cos(t * self.rho_dir)
            st = np.sin(t * self.rho_dir)
            C = np.array([J[rows] @ (ct * bf + st * bg)
                          for J, bf, bg in zip(self.J, self.Bf_dir, self.Bg_dir)])
            return Frame(t, self.r_dir[rows], self.w_dir[rows], C)
        if self.H is None:
            raise ValueError("no outgoing-split tables; t_max <= t_switch")
        rows = np.abs(self.r_slow - ta) <= self.halo
        sg = 1.0 if t >= 0 else -1.0
        em = np.exp(-1j * ta * self.rho_slow)
        C = []
        for H, bf, bg in zip(self.H, self.Bf_slow, self.Bg_slow):
            Hr = H[rows]
            bgs = sg * bg
            a = Hr @ (em * (0.25 * bf - bgs / 4j))
            # H2 = conj(H1) on the real axis
            b = np.conj(Hr) @ (np.conj(em) * (0.25 * bf + bgs / 4j))
            C.append(a + b)
        return Frame(t, self.r_slow[rows], self.w_slow[rows], np.array(C))

    def values(self, fr: Frame) -> np.ndarray:
        """u(r_i, theta_j) on the frame's radial nodes."""
        return fr.C.T @ self.P

    def lp(self, fr: Frame, p: float) -> float:
        U = np.abs(self.values(fr))
        if math.isinf(p):
            return float(U.max())
        dth = TWO_PI / self.n_theta
        return float((np.sum(U ** p * fr.w[:, None]) * dth) ** (1.0 / p))

    def weighted_l2_sq(self, fr: Frame, beta: float) -> float:
        """||r^-beta u||_2^2, using orthonormality of the angular modes."""
        return float(np.sum(np.abs(fr.C) ** 2 * (fr.r ** (-2 * beta) * fr.w)[None, :]))


def simpson_weights(n_intervals: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    if n_intervals % 2:
        raise ValueError("Simpson needs an even number of intervals")
    x = np.linspace(a, b, n_intervals + 1)
    w = np.ones(n_intervals + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return x, w * (b - a) / (3 * n_intervals)


def time_grid(T: float, res: float = 1.0, n_uniform: int = 32, n_log: int = 96) -> tuple[np.ndarray, np.ndarray]:
    """Composite Simpson nodes on [0, T]: uniform on [0, 1], uniform in log t on [1, T]."""
    if not T > 1:
        raise ValueError("window must extend beyond t = 1")
    nu_ = 2 * int(math.ceil(n_uniform * res / 2))
    nl = 2 * int(math.ceil(n_log * res / 2))
    t1, w1 = simpson_weights(nu_, 0.0, 1.0)
    s, ws = simpson_weights(nl, 0.0, math.log(T))
    t2 = np.exp(s)
    w2 = ws * t2
    t = np.concatenate([t1, t2[1:]])
    w = np.concatenate([w1[:-1], [w1[-1] + w2[0]], w2[1:]])
    return t, w


# ---------------------------------------------------------------- dispersive decay

@dataclass
class DecayFit:
    """Log-log least squares fit norm ~ constant * t^exponent."""

    j: int
    t: np.ndarray
    norms: np.ndarray
    exponent: float
    constant: float
    residual: float
    sup_ratio: float
    l1_norm: float


def data_l1_norm(data: ProfileData, which: str = "g", res: float = 1.0, extent: float = 400.0) -> float:
    """||f||_{L^1} of one data component by polar quadrature out to ``extent`` band units."""
    src = data.g_as_f() if which == "g" else data.only("f")
    unit = 1.0 / math.sqrt(data.lo * data.hi)
    ev = WaveEvolution(src, 0.0, res=res, halo=extent)
    fr = ev.frame(0.0)
    U = np.abs(ev.values(fr))
    return float(np.sum(U * fr.w[:, None]) * TWO_PI / ev.n_theta)


def dispersive_check(field: AngularField, j: int, data: ProfileData, t_grid: Optional[np.ndarray] = None,
                     res: float = 1.0, l1_norm: Optional[float] = None) -> DecayFit:
    """Sup norm of sin(t sqrt L)/sqrt L g over t, its power-law fit and normalized sup.

    The normalized quantity is norm (2^-j + t)^{1/2} 2^{-j/2} / ||g||_{L^1}.
    """
    if not field.a_is_zero():
        raise ValueError("dispersive check needs a = 0")
    resid = localization_residual(data, j)
    if resid > 1e-8:
        raise ValueError(f"data not localized at level {j}: residual {resid:.2e}")
    if t_grid is None:
        t_grid = np.geomspace(1.0, 100.0, 25) * 2.0 ** (-j)
    t_grid = np.asarray(t_grid, dtype=float)
    ev = WaveEvolution(data.only("g"), float(t_grid.max()), res=res)
    norms = np.array([ev.lp(ev.frame(t), math.inf) for t in t_grid])
    A = np.vstack([np.log(t_grid), np.ones_like(t_grid)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(norms), rcond=None)
    fit = A @ coef
    residual = float(np.sqrt(np.mean((np.log(norms) - fit) ** 2)))
    l1 = data_l1_norm(data, "g", res) if l1_norm is None else l1_norm
    ratio = norms * np.sqrt(2.0 ** (-j) + t_grid) * 2.0 ** (-0.5 * j) / l1
    return DecayFit(j, t_grid, norms, float(coef[0]), float(math.exp(coef[1])), residual,
                    float(ratio.max()), l1)


# ---------------------------------------------------------------- convolution bounds

@dataclass(frozen=True)
class ConvolutionBounds:
    t: float
    cone_sup: float
    diffractive_sup: float
    cone_ratio: float
    diffractive_ratio: float


def convolution_bounds_check(f: Callable, t: float, l1_norm: float, x_radii: Sequence[float],
                             x_angles: Sequence[float] = (0.0,), scale: float = 0.25,
                             n_theta: int = 64) -> ConvolutionBounds:
    """Sup over sample points x of the two singular convolutions.

    cone:        int_{|x-y| < t} f(y) / sqrt(t^2 - |x-y|^2) dy
    diffractive: int_{|x| + |y| < t} f(y) / sqrt(t^2 - (|x| + |y|)^2) dy

    Both singular weights are removed by the substitutions |x-y| = t sin psi
    and |x| + |y| = t sin psi. ``f(r, theta)`` must be vectorized and
    nonnegative with smallest length scale about ``scale``; node spacing is
    scale/2 in the radial and circumferential directions. ``n_theta``
    nodes resolve f in its own angle. Ratios are to (1 + t)^{-1/2} ||f||_{L^1}.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    h = 0.5 * scale
    order = 8

    def psi_nodes(lo):
        n = max(4, int(math.ceil(t * (0.5 * math.pi - lo) / (h * order))))
        return _gl_panels(np.linspace(lo, 0.5 * math.pi, n + 1), order)

    psi, wpsi = psi_nodes(0.0)
    n_phi = max(64, int(math.ceil(TWO_PI * t / h)))
    phi = np.arange(n_phi) * (TWO_PI / n_phi)
    th2 = np.arange(n_theta) * (TWO_PI / n_theta)
    cone, diff = 0.0, 0.0
    for r1 in x_radii:
        for a1 in x_angles:
            x1, x2 = r1 * math.cos(a1), r1 * math.sin(a1)
            tot = 0.0
            for k in range(0, psi.size, 64):
                rho = t * np.sin(psi[k:k + 64])
                y1 = x1 + np.outer(rho, np.cos(phi))
                y2 = x2 + np.outer(rho, np.sin(phi))
                vals = f(np.hypot(y1, y2), np.arctan2(y2, y1))
                tot += float(np.sum(wpsi[k:k + 64] * rho * vals.sum(axis=1)))
            cone = max(cone, tot * TWO_PI / n_phi)
        if r1 < t:
            ps, wps = psi_nodes(math.asin(r1 / t))
            r2 = t * np.sin(ps) - r1
            vals = f(np.repeat(r2[:, None], n_theta, axis=1), np.broadcast_to(th2, (r2.size, n_theta)))
            diff = max(diff, float(np.sum(wps * r2 * vals.sum(axis=1)) * TWO_PI / n_theta))
    scale_ = l1_norm / math.sqrt(1.0 + t)
    return ConvolutionBounds(float(t), cone, diff, cone / scale_, diff / scale_)


def gradient_bernstein_ratio(data: ProfileData, j: int, which: str = "f", res: float = 1.0) -> float:
    """||grad_A f||_{L^1} / (2^j ||f||_{L^1}) for exact-mode data localized at level j.

    The covariant derivative has components d_r f and r^-1 (i d_theta + A) f;
    the angular part multiplies mode k by k + alpha.
    """
    if any(not md.exact for md in data.modes):
        raise ValueError("gradient check needs exact modes")
    src = data.only(which) if which == "f" else data.g_as_f()
    ev = WaveEvolution(src, 0.0, res=res, halo=400.0)
    rho, w = ev.rho_dir, ev.wrho_dir
    bf = ev.Bf_dir
    r = ev.r_dir
    dC = np.array([(rho[None, :] * special.jvp(nu, np.outer(r, rho))) @ b for nu, b in zip(ev.nus, bf)])
    C = np.array([J @ b for J, b in zip(ev.J, bf)])
    kap = np.array([md.k + md.flux for md in data.modes])
    Ur = dC.T @ ev.P
    Ut = (C * kap[:, None]).T @ ev.P / r[:, None]
    U = C.T @ ev.P
    dth = TWO_PI / ev.n_theta
    g1 = float(np.sum(np.sqrt(np.abs(Ur) ** 2 + np.abs(Ut) ** 2) * ev.w_dir[:, None]) * dth)
    f1 = float(np.sum(np.abs(U) * ev.w_dir[:, None]) * dth)
    return g1 / (2.0 ** j * f1)


# ---------------------------------------------------------------- local smoothing

def chi_default(rho) -> np.ndarray:
    """Smooth bump supported in [1, 2]."""
    return bump(2.0 * np.asarray(rho, dtype=float) - 3.0)


def local_smoothing_Q(nu: float, R: float, M: float, b: Callable, chi: Callable = chi_default,
                      n: int = 48) -> float:
    """Q(R, M) = int_R^{2R} int_0^inf |J_nu(r rho) b(M rho) chi(rho)|^2 d rho dr.

    With chi supported in [1, 2] the order of integration is swapped:
    Q = int_1^2 |b(M rho) chi(rho)|^2 rho^{-1} int_{R rho}^{2 R rho} J_nu^2 ds d rho.
    """
    rho, w = _gl_panels(np.linspace(1.0, 2.0, 3), n // 2)
    inner = np.array([dyadic_bessel_l2(nu, R * x) for x in rho])
    weight = np.abs(np.asarray(b(M * rho)) * chi(rho)) ** 2 / rho
    return float(np.sum(w * weight * inner))


def local_smoothing_envelope(nu: float, R: float, M: float, b: Callable, chi: Callable = chi_default,
                             n: int = 48) -> float:
    """Predicted size: R^{2 nu + 1} (small R) or 1 (large R), times int |b(M rho) chi(rho)|^2 d rho."""
    rho, w = _gl_panels(np.linspace(1.0, 2.0, 3), n // 2)
    mass = float(np.sum(w * np.abs(np.asarray(b(M * rho)) * chi(rho)) ** 2))
    return mass * min(R ** (2 * nu + 1), 1.0)


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def q_slopes(nu: float, b: Callable = None, M: float = 1.0,
             small=tuple(2.0 ** k for k in range(-10, -3)), large=tuple(2.0 ** k for k in range(4, 11))):
    """(small-R slope, large-R slope, small table, large table)."""
    b = (lambda r: np.ones_like(r)) if b is None else b
    qs = np.array([local_smoothing_Q(nu, R, M, b) for R in small])
    ql = np.array([local_smoothing_Q(nu, R, M, b) for R in large])
    return loglog_slope(np.array(small), qs), loglog_slope(np.array(large), ql), qs, ql


def local_smoothing_norm(field: Optional[AngularField], beta: float, data: ProfileData, T: float = 200.0,
                         res: float = 1.0, nu0: Optional[float] = None, grade_levels: int = 12) -> dict:
    """Windowed ||r^-beta e^{it sqrt L} f||_{L^2_t L^2_x} over [-T, T] divided by ||f||_{H^{beta-1/2}}.

    The admissible range is 1/2 < beta < 1 + nu0 with nu0 the smallest
    order among the data's modes (or the given ``nu0``). The tail beyond
    the window is bounded by 2 ||f||_2^2 (T - halo)^{1-2 beta} / (2 beta - 1).
    Near the upper endpoint the r -> 0 integrand approaches r^-1, so the
    quotient grows with ``grade_levels`` instead of converging.
    """
    check_propagation_field(field)
    n0 = min(md.nu for md in data.modes) if nu0 is None else nu0
    if not 0.5 < beta < 1 + n0:
        raise ValueError(f"beta must lie in (1/2, {1 + n0:.6g})")
    fdata = data.only("f")
    # e^{it rho} b = cos(t rho) b + sin(t rho)/rho (i rho b)
    gprof = tuple(None if p is None else _TimesIRho(p) for p in fdata.f)
    d2 = ProfileData(fdata.modes, fdata.f, gprof, data.lo, data.hi)
    ev = WaveEvolution(d2, T, res=res, grade_levels=grade_levels)
    t, w = time_grid(T, res)
    vals = np.array([ev.weighted_l2_sq(ev.frame(s), beta) + ev.weighted_l2_sq(ev.frame(-s), beta) for s in t])
    num = float(np.sum(w * vals))
    den = data.sobolev_norm("f", beta - 0.5)
    l2 = data.sobolev_norm("f", 0.0)
    tail = 2 * l2 ** 2 * max(T - ev.halo, 1.0) ** (1 - 2 * beta) / (2 * beta - 1)
    return {"quotient": math.sqrt(num) / den, "numerator_sq": num, "denominator": den, "tail_sq": tail}


@dataclass(frozen=True)
class _TimesIRho:
    p: object

    def __call__(self, rho):
        return 1j * np.asarray(rho) * self.p(rho)


# ---------------------------------------------------------------- Strichartz

@dataclass(frozen=True)
class StrichartzResult:
    pair: AdmissiblePair
    T: float
    res: float
    quotient: float
    numerator: float
    denominator: float
    tail: float


def _energy_quotient(data: ProfileData, t: np.ndarray) -> float:
    f = data.spectral("f")
    g = data.spectral("g")
    vals = [propagate(None, f, g, s).l2_norm() for s in t]
    return max(vals) / (f.l2_norm() + g.sobolev_norm(-1.0))


def strichartz_quotients(field: Optional[AngularField], pairs: Sequence[AdmissiblePair], data: ProfileData,
                         T: float = 200.0, res: float = 1.0) -> list[StrichartzResult]:
    """||u||_{L^q_t([0,T]; L^r)} / (||f||_{H^s} + ||g||_{H^{s-1}}) for several pairs sharing u.

    q = inf uses the sup over the time grid. The pair (inf, 2) is computed
    spectrally (Parseval) from the f part alone, where the energy identity
    makes the quotient exactly 1 (attained at t = 0).
    ``tail`` is the fraction int_T^inf ||u||^q / int_0^T ||u||^q from a
    power fit of the last decade of the window.
    """
    check_propagation_field(field)
    t, w = time_grid(T, res)
    out = []
    finite_r = [p for p in pairs if not (math.isinf(p.q) and p.r == 2)]
    ev = WaveEvolution(data, T, res=res) if finite_r else None
    norms = {}
    if ev is not None:
        frames = (ev.frame(s) for s in t)
        rs = sorted({p.r for p in finite_r})
        table = {r: [] for r in rs}
        for fr in frames:
            for r in rs:
                table[r].append(ev.lp(fr, r))
        norms = {r: np.array(v) for r, v in table.items()}
    for p in pairs:
        den = data.sobolev_norm("f", p.s) + data.sobolev_norm("g", p.s - 1.0)
        if math.isinf(p.q) and p.r == 2:
            fo = data.only("f")
            den = fo.sobolev_norm("f", 0.0)
            q = _energy_quotient(fo, t)
            out.append(StrichartzResult(p, T, res, q, q * den, den, 0.0))
            continue
        n = norms[p.r]
        if math.isinf(p.q):
            num = float(n.max())
            tail = 0.0
        else:
            num_q = float(np.sum(w * n ** p.q))
            num = num_q ** (1.0 / p.q)
            sel = t >= T / 10
            sig = -loglog_slope(t[sel], n[sel])
            c = float(np.exp(np.mean(np.log(n[sel]) + sig * np.log(t[sel]))))
            tail = (c ** p.q * T ** (1 - sig * p.q) / (sig * p.q - 1) / num_q) if sig * p.q > 1 else math.inf
        out.append(StrichartzResult(p, T, res, num / den, num, den, tail))
    return out


def strichartz_field(alpha: float = 1 / 3, a: float = -0.05, n_theta: int = 64) -> AngularField:
    """Constant potential alpha with constant a: the reference field for the Strichartz suite."""
    return AngularField.sampled(np.full(n_theta, alpha), np.full(n_theta, a))


def field_modes(field: AngularField, K: int) -> list[ModeData]:
    """The 2K+1 lowest angular modes: exact when a = 0, solver modes otherwise."""
    if field.a_is_zero():
        return exact_modes(field, -K, K)
    return angular_eigs(field, 2 * K + 1)


def sobolev_embedding_ratio(data: ProfileData, p: float, res: float = 1.0) -> float:
    """||f||_{L^p} / ||f||_{H^{1 - 2/p}} at t = 0."""
    ev = WaveEvolution(data.only("f"), 0.0, res=res, halo=200.0)
    return ev.lp(ev.frame(0.0), p) / data.sobolev_norm("f", 1.0 - 2.0 / p)


# ---------------------------------------------------------------- Hardy

def hardy_table(fields: Iterable[AngularField]) -> list[dict]:
    """mu_1 from the angular solver against dist(flux, Z)^2."""
    rows = []
    for f in fields:
        mu1 = angular_eigs(f, 1)[0].mu
        h = hardy_constant(f)
        rows.append({"flux": f.flux(), "mu1": mu1, "hardy": h, "abs_err": abs(mu1 - h),
                     "a_minus": f.a_minus()})
    return rows


# ---------------------------------------------------------------- reports

@dataclass
class CheckReport:
    """One verification result in the JSON report layout."""

    check_id: str
    parameters: dict
    measured: object
    bound: object
    ratio: object
    passed: bool
    runtime_s: float = 0.0

    def to_dict(self) -> dict:
        return {"check_id": self.check_id, "parameters": self.parameters, "measured": self.measured,
                "bound": self.bound, "ratio": self.ratio, "pass": bool(self.passed),
                "runtime_s": self.runtime_s}


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False
