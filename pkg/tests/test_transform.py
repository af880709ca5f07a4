import math

import numpy as np
import pytest

from abwave.angular import AngularField, ModeData, exact_modes
from abwave.transform import (DyadicWindow, ModeFunction, RadialGrid, SpectralData, TruncationError,
                              bernstein_ratio, default_grid, functional_calculus, hankel, hankel_grid,
                              lp_project, mode_functions_from_text, mode_functions_to_text, partition_residual,
                              phi, sobolev_norm)


def test_grid_measure():
    assert default_grid().measure_error() < 1e-12
    assert RadialGrid.uniform(10.0, 256).measure_error() < 1e-13
    with pytest.raises(ValueError):
        RadialGrid.log_uniform(n=2050)


def test_hankel_gaussian():
    g = default_grid()
    assert hankel(0.0, np.exp(-g.r ** 2 / 2), g, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-10)
    # H_nu (r^nu e^{-r^2/2}) = rho^nu e^{-rho^2/2}
    for nu in (1 / 3, 0.5, 2.0):
        rho = np.array([0.3, 1.0, 2.5])
        got = hankel(nu, g.r ** nu * np.exp(-g.r ** 2 / 2), g, rho)
        assert np.allclose(got, rho ** nu * np.exp(-rho ** 2 / 2), rtol=1e-9, atol=1e-14)


def test_hankel_rejects_truncated_samples():
    g = RadialGrid.uniform(5.0, 128)
    with pytest.raises(TruncationError):
        hankel(0.0, np.exp(-g.r), g, 1.0)
    with pytest.raises(ValueError):
        hankel(-0.5, np.exp(-g.r ** 2), g, 1.0)


@pytest.mark.parametrize("nu", [0.0, 1 / 3, 0.5, 4 / 3])
def test_hankel_inversion_and_isometry(nu):
    g = RadialGrid.log_uniform(1e-4, 40.0, 2048)
    f = g.r ** nu * np.exp(-g.r ** 2) * (1 + 0.5 * np.cos(g.r ** 2 / 3))
    b = hankel_grid(nu, f, g, g)
    back = hankel_grid(nu, b, g, g, check=False)
    assert np.max(np.abs(back - f)) < 1e-9
    assert np.sum(np.abs(b) ** 2 * g.w) == pytest.approx(np.sum(f ** 2 * g.w), rel=1e-10)


def test_dyadic_partition():
    lam = np.geomspace(1e-3, 1e4, 4001)
    assert partition_residual(lam) < 1e-12
    v = phi(lam)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[(lam <= 0.5) | (lam >= 2)] == 0)
    assert DyadicWindow(3).support == (4.0, 16.0)


def _data():
    modes = [ModeData(0, 1 / 3, 1 / 9, 1 / 3), ModeData(-1, 2 / 3, 4 / 9, 1 / 3)]
    profs = [lambda x: np.exp(-(x - 3) ** 2), lambda x: x * np.exp(-(x - 5) ** 2 / 4)]
    return SpectralData.from_profiles(modes, profs, 0.01, 14.0, 320)


def test_lp_project_sum_and_disjointness():
    d = _data()
    total = sum(lp_project(d, j).b for j in range(-8, 6))
    assert np.max(np.abs(total - d.b)) < 1e-12
    p1 = lp_project(d, 1).b
    p4 = lp_project(d, 4).b
    assert np.max(np.abs(p1 * p4)) == 0.0
    with pytest.raises(ValueError):
        lp_project(d, 1, DyadicWindow(2))


def test_lp_project_mode_functions_matches_spectral():
    g = RadialGrid.log_uniform(1e-4, 60.0, 2048)
    md = ModeData(0, 0.5, 0.25, 0.5)
    c = g.r ** 0.5 * np.exp(-g.r ** 2 / 2)
    pj = lp_project([ModeFunction(md, g, c)], 0)[0].c
    # P_0 of r^nu e^{-r^2/2} has profile phi(rho) rho^nu e^{-rho^2/2}
    ref = SpectralData.from_profiles([md], [lambda x: phi(x) * x ** 0.5 * np.exp(-x ** 2 / 2)], 0.5, 2.0, 640)
    r = np.array([0.5, 1.0, 3.0])
    idx = [int(np.argmin(np.abs(g.r - x))) for x in r]
    assert np.allclose(pj[idx], ref.synthesize(g.r[idx])[0], atol=1e-8)


def test_bernstein_ratio_bounded():
    d = _data()
    g = RadialGrid.uniform(60.0, 4096)
    for j in (1, 2, 3):
        assert bernstein_ratio(d, j, 2.0, math.inf, g) < 5.0


def test_sobolev_norm_s0_is_l2():
    g = RadialGrid.log_uniform(1e-4, 40.0, 2048)
    md = ModeData(0, 1 / 3, 1 / 9, 1 / 3)
    c = g.r ** (1 / 3) * np.exp(-g.r ** 2)
    f = [ModeFunction(md, g, c)]
    assert sobolev_norm(f, 0.0) == pytest.approx(math.sqrt(np.sum(c ** 2 * g.w)), rel=1e-10)
    # profile of r^nu e^{-r^2} is rho^nu e^{-rho^2/4} / 2^(nu+1)
    ref1 = math.sqrt(sum(2.0 ** (-2 * (1 / 3 + 1)) * x ** (2 / 3 + 2) * math.exp(-x * x / 2) * w
                         for x, w in zip(g.r, g.w)))
    assert sobolev_norm(f, 1.0) == pytest.approx(ref1, rel=1e-8)
    with pytest.raises(ValueError):
        sobolev_norm(f, 1.5)


def test_functional_calculus_free_heat():
    # alpha = 0, t = 1, |x - y| = 1 gives e^{-1/4} / (4 pi)
    kv = functional_calculus(lambda lam: np.exp(-lam), (1.0, 0.0), (1.0, math.pi / 3), field=AngularField.ab(0.0),
                             rho_max=14.0)
    assert kv.converged
    assert kv.value.real == pytest.approx(math.exp(-0.25) / (4 * math.pi), rel=1e-8)
    assert abs(kv.value.imag) < 1e-12


def test_mode_function_text_round_trip():
    g = RadialGrid.uniform(8.0, 64)
    modes = exact_modes(AngularField.ab(1 / 3), -1, 1)
    fs = [ModeFunction(m, g, np.exp(-g.r ** 2) * (1 + 1j * m.k)) for m in modes]
    back = mode_functions_from_text(mode_functions_to_text(fs), g)
    assert [b.mode.k for b in back] == [f.mode.k for f in fs]
    for a, b in zip(fs, back):
        assert np.array_equal(a.c, b.c) and a.mode.nu == b.mode.nu
    with pytest.raises(ValueError):
        mode_functions_from_text("k,r\n", g)


@pytest.mark.parametrize("nu", [0.0, 1 / 3, 0.5, 1.0, 4 / 3])
def test_hankel_diagonalizes_the_radial_operator(nu):
    # H_nu(A_nu f) = rho^2 H_nu f with A_nu = -d_r^2 - d_r / r + nu^2 / r^2, A_nu f by finite differences
    g = RadialGrid.log_uniform(1e-4, 40.0, 2048)
    f = lambda r: r ** nu * np.exp(-r * r) * (1 + 0.3 * r * r)
    r = g.r
    h = 1e-3 * r
    d1 = (f(r + h) - f(r - h)) / (2 * h)
    d2 = (f(r + h) - 2 * f(r) + f(r - h)) / (h * h)
    Af = -d2 - d1 / r + nu * nu / (r * r) * f(r)
    rho = np.array([0.5, 1.0, 2.0])
    lhs = hankel(nu, Af, g, rho)
    rhs = rho ** 2 * hankel(nu, f(r), g, rho)
    assert np.max(np.abs(lhs - rhs)) < 1e-4 * np.max(np.abs(rhs))


def test_mode_sum_tail_doubling():
    F = lambda lam: np.exp(-lam)
    field = AngularField.ab(1 / 3)
    x, y = (1.0, 0.4), (2.0, 1.9)
    a = functional_calculus(F, x, y, modes=exact_modes(field, -8, 8), rho_max=14.0)
    b = functional_calculus(F, x, y, modes=exact_modes(field, -16, 16), rho_max=14.0)
    assert abs(a.value - b.value) < 1e-8
    assert abs(a.value - b.value) <= 2 * a.tail_bound


def test_functional_calculus_diagonal_window_is_positive():
    w = DyadicWindow(0)
    kv = functional_calculus(lambda lam: w(np.sqrt(lam)), (1.0, 0.5), (1.0, 0.5), field=AngularField.ab(0.0),
                             rho_max=2.0)
    assert kv.value.real > 0 and abs(kv.value.imag) < 1e-14


def test_functional_calculus_matches_heat_closed_form():
    from abwave.heatkernel import heat_kernel
    field = AngularField.ab(1 / 3)
    x, y = (1.0, 0.3 + math.pi / 2), (1.0, 0.3)
    kv = functional_calculus(lambda lam: np.exp(-lam), x, y, field=field, rho_max=14.0)
    ref = heat_kernel(field, 1.0, x, y).total
    assert abs(kv.value - ref) < 1e-8 * abs(ref)


def test_single_band_sobolev_norm_bounds():
    md = ModeData(0, 1 / 3, 1 / 9, 1 / 3)
    d = SpectralData.from_profiles([md], [lambda x: phi(x) * (x > 1) * (x < 2)], 1.0, 2.0, 320)
    l2 = d.l2_norm()
    assert l2 <= d.sobolev_norm(1.0) <= 2 * l2


def test_besov_examples():
    from abwave.transform import besov_norm_11half, dyadic_range
    md = ModeData(0, 1 / 3, 1 / 9, 1 / 3)
    d = SpectralData.from_profiles([md], [lambda x: np.exp(-1 / ((x - 1) * (2 - x)))], 1.0, 2.0, 320)
    assert set(dyadic_range(d)) >= {0, 1}
    g = RadialGrid.uniform(400.0, 16384)
    assert besov_norm_11half(d, g) > 0
    assert besov_norm_11half(d.with_b(np.zeros_like(d.b)), g) == 0.0
