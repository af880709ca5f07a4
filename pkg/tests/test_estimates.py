import math

import numpy as np
import pytest
from scipy import special

from abwave.angular import AngularField, ModeData, exact_modes
from abwave.estimates import (BumpProfile, CheckReport, ProfileData, WaveEvolution, admissible, band_limited_draw,
                              check_propagation_field, convolution_bounds_check, data_l1_norm, dispersive_check,
                              energy, field_modes, first_eigenvalue, gradient_bernstein_ratio, hardy_table,
                              local_smoothing_Q, local_smoothing_envelope, local_smoothing_norm, localization_residual,
                              localized_draw, propagate, propagate_mode_functions, q_slopes, sobolev_embedding_ratio,
                              strichartz_field, strichartz_quotients, time_grid)
from abwave.transform import RadialGrid, SpectralData, hankel


def test_admissible_examples():
    p = admissible(math.inf, 2)
    assert p.s == 0 and p.label == "(inf,2)"
    assert admissible(8, 4).s == pytest.approx(3 / 8)
    assert admissible(6, 6).s == pytest.approx(1 / 2)
    assert admissible(4, 3) is None
    assert admissible(2, 100) is None
    with pytest.raises(ValueError):
        admissible(1.5, 4)
    with pytest.raises(ValueError):
        admissible(4, math.inf)


def _gauss_data():
    md = [ModeData(0, 0.0, 0.0, 0.0)]
    return SpectralData.from_profiles(md, [lambda x: 0.5 * np.exp(-x * x / 4)], 1e-9, 30.0, 960)


def test_propagate_at_zero_and_energy_conservation():
    f = SpectralData.from_profiles([ModeData(0, 1 / 3, 1 / 9, 1 / 3)], [lambda x: x * np.exp(-(x - 2) ** 2)],
                                   1e-6, 12.0, 640)
    g = f.multiply(lambda x: np.cos(x))
    assert np.array_equal(propagate(None, f, g, 0.0).b, f.b)
    e0 = energy(f, g, 0.0)
    assert max(abs(energy(f, g, t) - e0) for t in np.linspace(0, 100, 21)) < 1e-10 * e0


def test_free_wave_from_gaussian_is_dawson_at_origin():
    # H_0 e^{-r^2} = e^{-rho^2/4}/2 and int_0^inf sin(t rho) e^{-rho^2/4} d rho = 2 dawsn(t)
    g = _gauss_data()
    for t in (0.5, 2.0, 5.0):
        u = propagate(None, g.with_b(np.zeros_like(g.b)), g, t)
        assert u.synthesize([0.0])[0, 0].real == pytest.approx(special.dawsn(t), rel=1e-10)


def test_mode_function_propagation_matches_spectral():
    grid = RadialGrid.log_uniform(1e-4, 60.0, 2048)
    md = exact_modes(AngularField.ab(1 / 3), 0, 0)[0]
    from abwave.transform import ModeFunction
    c = grid.r ** md.nu * np.exp(-grid.r ** 2)
    out = propagate_mode_functions(None, [ModeFunction(md, grid, c)], None, 1.5, grid)[0]
    b = hankel(md.nu, c, grid, grid.r)
    ref = hankel(md.nu, b * np.cos(1.5 * grid.r), grid, grid.r, check=False)
    assert np.max(np.abs(out.c - ref)) < 1e-12


def test_evolution_matches_synthesis():
    modes = exact_modes(AngularField.ab(1 / 3), -2, 2)
    data = band_limited_draw(modes, 4)
    errs = []
    for res in (1.0, 2.0):
        ev = WaveEvolution(data, 10.0, res=res)
        fr = ev.frame(7.0)
        u = propagate(None, data.spectral("f", 8192), data.spectral("g", 8192), 7.0)
        idx = np.arange(0, fr.r.size, 97)
        errs.append(np.max(np.abs(fr.C[:, idx] - u.synthesize(fr.r[idx]))) / np.max(np.abs(fr.C)))
    # sampling error of the evaluator, shrinking with the resolution multiplier
    assert errs[0] < 1e-5 and errs[1] < 0.1 * errs[0]


def test_outgoing_split_matches_direct():
    modes = exact_modes(AngularField.ab(0.5), -1, 1)
    data = band_limited_draw(modes, 1, (0, 0))
    unit = 1 / math.sqrt(data.lo * data.hi)
    t = 150 * unit
    ev = WaveEvolution(data, 1.5 * t)
    a = ev.frame(t, direct=True)
    b = ev.frame(t, direct=False)
    assert abs(ev.lp(a, 2) - ev.lp(b, 2)) < 1e-4 * ev.lp(a, 2)
    with pytest.raises(ValueError):
        ev.frame(1.2 * t, direct=True)
    with pytest.raises(ValueError):
        ev.frame(2 * t)


def test_localized_draw_scaling_and_residual():
    modes = exact_modes(AngularField.ab(1 / 3), -2, 2)
    for j in (-1, 0, 2):
        d = localized_draw(modes, 3, j)
        assert localization_residual(d, j) < 1e-15
        assert d.lo == 2.0 ** (j - 1)
    d0, d2 = localized_draw(modes, 3, 0), localized_draw(modes, 3, 2)
    rho = np.linspace(0.6, 1.9, 7)
    assert np.allclose(d2.profile_values("g", 4 * rho), d0.profile_values("g", rho) / 16, rtol=1e-13)
    with pytest.raises(ValueError):
        dispersive_check(AngularField.ab(1 / 3), 1, d0)


def test_dispersive_decay_short_window():
    modes = exact_modes(AngularField.ab(0.5), -2, 2)
    d = localized_draw(modes, 1, 0)
    fit = dispersive_check(AngularField.ab(0.5), 0, d, np.geomspace(10, 100, 6))
    assert fit.exponent == pytest.approx(-0.5, abs=0.05)
    assert fit.sup_ratio < 10
    with pytest.raises(ValueError):
        dispersive_check(AngularField.sampled(np.full(32, 0.5), np.full(32, 0.01)), 0, d)


def test_data_l1_norm_converges_with_resolution():
    modes = [ModeData(0, 0.0, 0.0, 0.0)]
    d = ProfileData(modes, (None,), (BumpProfile(1.0, 0.0, 0.5, power=1.0),), 0.5, 2.0)
    a, b, c = (data_l1_norm(d, "g", res) for res in (1.0, 2.0, 4.0))
    assert abs(b - c) < 1e-4 * c
    assert abs(a - c) < 2e-3 * c


def test_convolution_bounds_examples():
    f = lambda r, th: np.exp(-r * r)
    # at x = 0 the cone term is close to ||f||_1 / t
    assert convolution_bounds_check(f, 20.0, math.pi, [0.0]).cone_sup == pytest.approx(math.pi / 20, rel=2e-3)
    res = convolution_bounds_check(f, 20.0, math.pi, [0.0, 5.0, 15.0])
    assert res.cone_ratio < 2.5 and res.diffractive_ratio < 2.5
    with pytest.raises(ValueError):
        convolution_bounds_check(f, 0.0, math.pi, [0.0])


def test_convolution_diffractive_at_origin():
    # x = 0: int_{|y|<t} f / sqrt(t^2 - |y|^2) exactly equals the cone term
    f = lambda r, th: np.exp(-r * r)
    res = convolution_bounds_check(f, 3.0, math.pi, [0.0])
    assert res.diffractive_sup == pytest.approx(res.cone_sup, rel=1e-8)


def test_gradient_bernstein():
    modes = exact_modes(AngularField.ab(1 / 3), -1, 1)
    d = localized_draw(modes, 0, 0).g_as_f()
    assert 0.2 < gradient_bernstein_ratio(d, 0) < 5.0


def test_q_table_scaling():
    b = lambda r: r * r
    for nu in (1 / 3, 2.0):
        q1 = local_smoothing_Q(nu, 0.5, 1.0, b)
        q2 = local_smoothing_Q(nu, 0.5, 2.0, b)
        assert q2 / q1 == pytest.approx(16.0, rel=1e-12)
    small, large, qs, ql = q_slopes(1 / 3)
    assert small == pytest.approx(2 / 3 + 1, rel=1e-3)
    assert abs(large) < 1e-2
    assert local_smoothing_envelope(1 / 3, 2.0 ** -8, 1.0, lambda r: np.ones_like(r)) > 0


def test_local_smoothing_norm_range_and_value():
    modes = exact_modes(AngularField.ab(1 / 3), -1, 1)
    d = band_limited_draw(modes, 2)
    with pytest.raises(ValueError):
        local_smoothing_norm(None, 0.5, d)
    with pytest.raises(ValueError):
        local_smoothing_norm(None, 1 + 1 / 3, d)
    out = local_smoothing_norm(None, 1.0, d, T=50.0)
    assert 0 < out["quotient"] < 10 and out["tail_sq"] < out["numerator_sq"]


def test_strichartz_energy_pair_is_exact():
    field = strichartz_field()
    modes = field_modes(field, 1)
    d = band_limited_draw(modes, 0)
    (r,) = strichartz_quotients(field, [admissible(math.inf, 2)], d, T=20.0)
    assert r.quotient == pytest.approx(1.0, abs=1e-12)


def test_inadmissible_field_is_rejected():
    bad = AngularField.sampled(np.full(32, 1 / 3), np.full(32, -0.3))
    assert first_eigenvalue(bad) < 0
    with pytest.raises(ValueError, match="exceeds dist"):
        check_propagation_field(bad)
    with pytest.raises(ValueError):
        propagate(bad, _gauss_data(), None, 1.0)
    check_propagation_field(AngularField.ab(0.0))


def test_sobolev_embedding_ratio_is_finite():
    modes = exact_modes(AngularField.ab(1 / 3), -1, 1)
    d = band_limited_draw(modes, 5)
    assert 0 < sobolev_embedding_ratio(d, 4.0) < 5


def test_hardy_table_and_report():
    rows = hardy_table([AngularField.sampled(np.full(64, 0.3)),
                        AngularField.from_functions(lambda th: 0.6 + np.sin(th), None, 64)])
    assert all(r["abs_err"] < 1e-10 for r in rows)
    rep = CheckReport("x", {}, 1.0, 2.0, 0.5, True).to_dict()
    assert rep["pass"] is True and set(rep) == {"check_id", "parameters", "measured", "bound", "ratio", "pass",
                                                "runtime_s"}


def test_time_grid_integrates_exactly():
    t, w = time_grid(100.0)
    assert np.sum(w) == pytest.approx(100.0, rel=1e-7)
    assert np.sum(w / (1 + t) ** 2) == pytest.approx(1 - 1 / 101, rel=1e-6)
    with pytest.raises(ValueError):
        time_grid(1.0)
