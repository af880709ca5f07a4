"""
The circle operator (i d/dtheta + A(theta))^2 + a(theta).

Two kinds of field are supported. ``ab_exact`` is the pure Aharonov-Bohm
potential A = alpha, a = 0, whose spectrum is known in closed form.
``sampled`` holds A and a on a uniform periodic grid; its spectrum comes
from a dense Fourier-Galerkin eigensolver.

Convention for the exact modes: psi_k(theta) = e^{-i(k+flux) theta + i P(theta)} / sqrt(2 pi)
with P(theta) = int_0^theta A and order nu_k = |k + flux|, where flux is
reduced into (-1, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def reduce_flux(alpha: float) -> float:
    """Reduce a flux into (-1, 1) keeping its sign (``math.fmod``)."""
    return math.fmod(float(alpha), 1.0)


def dist_to_integers(x: float) -> float:
    return abs(x - round(x))


@dataclass(frozen=True, eq=False)
class AngularField:
    """Potential pair (A, a) on the unit circle.

    Use :meth:`ab` or :meth:`sampled` / :meth:`from_functions` rather than
    the raw constructor.
    """

    kind: str
    alpha: float = 0.0
    A_vals: Optional[np.ndarray] = None
    a_vals: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "ab_exact":
            return
        if self.kind != "sampled":
            raise ValueError(f"unknown field kind {self.kind!r}")
        A = np.asarray(self.A_vals, dtype=float)
        a = np.asarray(self.a_vals, dtype=float)
        n = A.shape[0] if A.ndim == 1 else -1
        if A.ndim != 1 or a.shape != A.shape:
            raise ValueError("A_vals and a_vals must be 1-D arrays of equal length")
        if n < 16 or n % 2:
            raise ValueError("n_theta must be an even integer >= 16")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(a))):
            raise ValueError("field samples must be finite")
        A.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "A_vals", A)
        object.__setattr__(self, "a_vals", a)

    # constructors
    @classmethod
    def ab(cls, alpha: float) -> "AngularField":
        return cls("ab_exact", alpha=float(alpha))

    @classmethod
    def sampled(cls, A_vals, a_vals=None) -> "AngularField":
        A = np.asarray(A_vals, dtype=float)
        a = np.zeros_like(A) if a_vals is None else a_vals
        return cls("sampled", A_vals=A, a_vals=a)

    @classmethod
    def from_functions(cls, A: Callable, a: Optional[Callable] = None, n_theta: int = 256) -> "AngularField":
        th = theta_grid(n_theta)
        Av = np.broadcast_to(np.asarray(A(th), dtype=float), th.shape).copy()
        av = np.zeros_like(th) if a is None else np.broadcast_to(np.asarray(a(th), dtype=float), th.shape).copy()
        return cls.sampled(Av, av)

    # basic data
    @property
    def n_theta(self) -> Optional[int]:
        return None if self.kind == "ab_exact" else int(self.A_vals.shape[0])

    @property
    def theta(self) -> np.ndarray:
        return theta_grid(self.n_theta)

    @cached_property
    def _A_hat(self) -> np.ndarray:
        return fourier_coefficients(self.A_vals)

    @cached_property
    def _a_hat(self) -> np.ndarray:
        return fourier_coefficients(self.a_vals)

    def flux(self) -> float:
        """Circle average of A; the trapezoid rule on the periodic grid."""
        if self.kind == "ab_exact":
            return self.alpha
        return float(np.mean(self.A_vals))

    def reduced_flux(self) -> float:
        return reduce_flux(self.flux())

    def a_is_zero(self, tol: float = 1e-14) -> bool:
        return self.kind == "ab_exact" or float(np.max(np.abs(self.a_vals))) <= tol

    def a_minus(self) -> float:
        """sup of the negative part of a."""
        if self.kind == "ab_exact":
            return 0.0
        return float(max(0.0, -np.min(self.a_vals)))

    def admissible(self) -> bool:
        """Flux not an integer and ||a_-||_inf below dist(flux, Z)^2."""
        d = dist_to_integers(self.flux())
        return d > 1e-12 and self.a_minus() < d * d

    def antiderivative(self, theta) -> np.ndarray:
        """P(theta) = int_0^theta A for real theta (any range)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "ab_exact":
            return self.alpha * theta
        c = self._A_hat
        n = len(c) // 2
        p = np.arange(-n, n + 1)
        nz = p != 0
        ph = np.exp(1j * np.multiply.outer(theta, p[nz]))
        per = ((ph - 1.0) / (1j * p[nz])) @ c[nz]
        return self.flux() * theta + per.real

    def phase_integral(self, theta1, theta2) -> np.ndarray:
        """int_{theta2}^{theta1} A."""
        return self.antiderivative(theta1) - self.antiderivative(theta2)

    def gauge(self, theta1, theta2) -> np.ndarray:
        """e^{i int_{theta2}^{theta1} A - i alpha (theta1 - theta2)}, alpha the reduced flux.

        Relates the kernels of this field to those of the reduced
        Aharonov-Bohm field with the same flux. Equals 1 for
        ``ab_exact`` with alpha already in (-1, 1).
        """
        t1 = np.asarray(theta1, dtype=float)
        t2 = np.asarray(theta2, dtype=float)
        return np.exp(1j * (self.phase_integral(t1, t2) - self.reduced_flux() * (t1 - t2)))

    def closed_form_ok(self) -> bool:
        """Closed-form kernels need a = 0."""
        return self.a_is_zero()


def theta_grid(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def fourier_coefficients(vals: np.ndarray) -> np.ndarray:
    """Coefficients F_p, |p| < n/2, of samples on the uniform grid.

    F(theta) = sum_p F_p e^{i p theta}. A direct DFT (no FFT) keeps the
    index bookkeeping explicit; the Nyquist term is dropped.
    """
    vals = np.asarray(vals)
    n = vals.shape[0]
    m = n // 2 - 1
    p = np.arange(-m, m + 1)
    th = theta_grid(n)
    return np.exp(-1j * np.outer(p, th)) @ vals / n


def tangential_component(A_vec: Callable, theta) -> np.ndarray:
    """A(theta) = A_vec(cos theta, sin theta) . (-sin theta, cos theta)."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    ax, ay = A_vec(c, s)
    return -s * ax + c * ay


def ab_vector_potential(alpha: float):
    """alpha (-x2/|x|^2, x1/|x|^2) as a callable of (x1, x2)."""
    def pot(x1, x2):
        r2 = x1 * x1 + x2 * x2
        return -alpha * x2 / r2, alpha * x1 / r2
    return pot


def flux(field: AngularField) -> float:
    return field.flux()


def hardy_constant(field_or_flux) -> float:
    """dist(flux, Z)^2."""
    phi = field_or_flux.flux() if isinstance(field_or_flux, AngularField) else float(field_or_flux)
    return dist_to_integers(phi) ** 2


@dataclass(frozen=True, eq=False)
class ModeData:
    """One angular eigenpair.

    Attributes
    ----------
    k : int
        Angular index for exact modes; spectral position for solver modes.
    nu : float
        Order sqrt(mu); NaN when mu < 0.
    mu : float
        Eigenvalue.
    flux : float
        Reduced flux, used by the exact phase formula.
    field : AngularField or None
        Supplies P(theta) for the exact phase formula.
    coeffs : ndarray or None
        Fourier coefficients c_m, m = -M..M, for solver modes:
        psi = sum_m c_m e^{i m theta} / sqrt(2 pi).
    label : int or None
        Dominant angular index in the e^{-ik theta} convention (k = -m).
    """

    k: int
    nu: float
    mu: float
    flux: float = 0.0
    field: Optional[AngularField] = None
    coeffs: Optional[np.ndarray] = None
    label: Optional[int] = None

    @property
    def exact(self) -> bool:
        return self.coeffs is None

    def psi(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.coeffs is None:
            P = self.field.antiderivative(theta) if self.field is not None else self.flux * theta
            return np.exp(-1j * (self.k + self.flux) * theta + 1j * P) / math.sqrt(TWO_PI)
        M = len(self.coeffs) // 2
        m = np.arange(-M, M + 1)
        return np.exp(1j * np.multiply.outer(theta, m)) @ self.coeffs / math.sqrt(TWO_PI)


def exact_modes(field: AngularField, k_min: int, k_max: int) -> list[ModeData]:
    """Closed-form eigenpairs of a purely magnetic field (a = 0)."""
    if k_min > k_max:
        raise ValueError("k_min must not exceed k_max")
    if not field.a_is_zero():
        raise ValueError("exact modes need a = 0; use angular_eigs")
    al = field.reduced_flux()
    return [ModeData(k, abs(k + al), (k + al) ** 2, al, field, None, k)
            for k in range(k_min, k_max + 1)]


def ab_modes(alpha: float, k_min: int, k_max: int) -> list[ModeData]:
    """Aharonov-Bohm modes: nu_k = |k + alpha|, alpha reduced into (-1, 1)."""
    return exact_modes(AngularField.ab(alpha), k_min, k_max)


def mode_order(k_max: int) -> list[int]:
    """0, -1, 1, -2, 2, ... up to |k| = k_max."""
    out = [0]
    for j in range(1, k_max + 1):
        out += [-j, j]
    return out


def galerkin_matrix(field: AngularField) -> tuple[np.ndarray, np.ndarray]:
    """Operator matrix in the basis e^{i m theta}/sqrt(2 pi), |m| <= n/2 - 1.

    Returns the matrix and the index vector m. The matrix is checked for
    Hermitian symmetry (tolerance 1e-10 relative) and then symmetrized.
    """
    if field.kind != "sampled":
        raise ValueError("angular_eigs needs a sampled field")
    A = field.A_vals
    Ah = fourier_coefficients(A)
    half = len(Ah) // 2
    p = np.arange(-half, half + 1)
    dAh = 1j * p * Ah                       # spectral derivative
    Wh = fourier_coefficients(A * A + field.a_vals)
    M = half
    m = np.arange(-M, M + 1)
    diff = m[:, None] - m[None, :]          # n - m
    inside = np.abs(diff) <= half

    def toeplitz(c):
        out = np.zeros(diff.shape, dtype=complex)
        out[inside] = c[diff[inside] + half]
        return out

    # (i d)^2 + A^2 + a + i A' + A (i d) + (i d) A; i d acts as -m on e^{i m theta}
    D = np.diag(-m.astype(float))
    H = D @ D + toeplitz(Wh) + 1j * toeplitz(dAh) + 2 * toeplitz(Ah) @ D
    scale = max(1.0, float(np.max(np.abs(H))))
    asym = float(np.max(np.abs(H - H.conj().T)))
    if asym > 1e-10 * scale:
        raise ValueError(f"non-Hermitian assembly (defect {asym:.2e}); inconsistent A' evaluation")
    return 0.5 * (H + H.conj().T), m


def angular_eigs(field: AngularField, n_modes: int, cluster_tol: float = 1e-9) -> list[ModeData]:
    """The n_modes smallest eigenpairs of the sampled circle operator.

    Modes whose dominant Fourier index lies within 25% of the Nyquist
    index are discarded as unresolved. Degenerate clusters are rotated
    to diagonalize the angular momentum and ordered by ascending label.
    """
    n = field.n_theta
    if n is None:
        raise ValueError("angular_eigs needs a sampled field")
    if n_modes > n // 2:
        raise ValueError("n_modes must not exceed n_theta/2")
    H, m = galerkin_matrix(field)
    w, V = np.linalg.eigh(H)
    # group near-degenerate eigenvalues, rotate to eigenvectors of -m
    groups = []
    i = 0
    while i < len(w):
        j = i + 1
        while j < len(w) and abs(w[j] - w[i]) <= cluster_tol * max(1.0, abs(w[i])):
            j += 1
        groups.append((i, j))
        i = j
    modes = []
    guard = 0.75 * (n // 2)
    vals = []
    vecs = []
    for i, j in groups:
        Vc = V[:, i:j]
        if j - i > 1:
            Dc = Vc.conj().T @ (-m[:, None] * Vc)
            lam, U = np.linalg.eigh(0.5 * (Dc + Dc.conj().T))
            Vc = Vc @ U
        for c in range(Vc.shape[1]):
            vals.append(w[i:j].mean() if j - i > 1 else w[i])
            vecs.append(Vc[:, c])
        # within the cluster sort by label ascending
        block = list(range(len(vals) - (j - i), len(vals)))
        labels = [-int(m[np.argmax(np.abs(vecs[b]))]) for b in block]
        order = sorted(range(len(block)), key=lambda b: labels[b])
        vb = [vecs[block[b]] for b in order]
        for b, v in zip(block, vb):
            vecs[b] = v
    for mu, v in zip(vals, vecs):
        dom = int(np.argmax(np.abs(v)))
        if abs(m[dom]) > guard:
            continue
        v = v * np.exp(-1j * np.angle(v[dom]))
        v = v / np.linalg.norm(v)
        v.setflags(write=False)
        nu = math.sqrt(mu) if mu >= 0 else math.nan
        modes.append(ModeData(len(modes), nu, float(mu), field.reduced_flux(), field, v, -int(m[dom])))
        if len(modes) == n_modes:
            break
    if len(modes) < n_modes:
        raise ValueError("not enough resolved modes; increase n_theta")
    return modes


def gram_matrix(modes: Sequence[ModeData], n_theta: int = 512) -> np.ndarray:
    """Gram matrix of the eigenfunctions by the trapezoid rule."""
    th = theta_grid(n_theta)
    P = np.array([md.psi(th) for md in modes])
    return P.conj() @ P.T * (TWO_PI / n_theta)


def field_to_text(field: AngularField) -> str:
    """Plain-text form: ``alpha=<value>`` or ``theta,A,a`` rows."""
    if field.kind == "ab_exact":
        return f"alpha={field.alpha!r}\n"
    rows = ["theta,A,a"]
    for th, A, a in zip(field.theta, field.A_vals, field.a_vals):
        rows.append(f"{float(th)!r},{float(A)!r},{float(a)!r}")
    return "\n".join(rows) + "\n"


def field_from_text(text: str) -> AngularField:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty field description")
    if lines[0].startswith("alpha="):
        return AngularField.ab(float(lines[0].split("=", 1)[1]))
    if lines[0].replace(" ", "") != "theta,A,a":
        raise ValueError("field table must start with the header theta,A,a")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError("field rows must have three columns")
    n = data.shape[0]
    if not np.allclose(data[:, 0], theta_grid(n), atol=1e-12):
        raise ValueError("theta column must be the uniform grid 2 pi j / n")
    return AngularField.sampled(data[:, 1], data[:, 2])
