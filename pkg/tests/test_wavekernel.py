import math

import numpy as np
import pytest
from scipy import integrate

from abwave.angular import AngularField
from abwave.wavekernel import (SINGULAR, WAVE_CSV_COLUMNS, bound_ratios, classify, mode_kernel, mode_kernel_batch_region2,
                               mode_kernel_eval, mode_kernel_forms, oracle_points, structural_zero, wave_diffractive,
                               wave_geometric, wave_kernel, wave_mode_sum, wave_oracle, wave_row)

X = (1.0, 0.3 + math.pi / 3)
Y = (1.0, 0.3)
# partial-wave value, error estimate 6e-17
FROZEN = 0.0034981981037075075 - 0.0009067065894129169j


def test_classify_examples():
    assert classify(0.5, 2.0, 1.0).region == "I"
    g = classify(1.0, 2.0, 1.0)
    assert g.region == "I" and g.boundary
    g = classify(1.0, 1.0, 1.0)
    assert g.region == "II"
    assert g.beta1 == pytest.approx(2 * math.asin(0.5), rel=1e-14)
    assert g.beta1 + g.gamma1 == pytest.approx(math.pi, rel=1e-15)
    g = classify(3.0, 1.0, 1.0)
    assert g.region == "III"
    assert math.cosh(g.beta2) == pytest.approx(1 + 5 / 2, rel=1e-14)
    assert classify(-3.0, 1.0, 1.0).region == "III"
    with pytest.raises(ValueError):
        classify(1.0, -1.0, 1.0)


@pytest.mark.parametrize("nu", [0.0, 1 / 3, 0.5, 2 / 3, 4.5, 11.2])
def test_region3_forms_agree(nu):
    f1, f2 = mode_kernel_forms(nu, classify(4.0, 1.0, 2.0))
    assert abs(f1.value - f2.value) < 1e-11


def test_region3_nu0_against_direct_quadrature():
    t, r1, r2 = 4.0, 1.0, 2.0
    ref = integrate.quad(lambda s: 1 / math.sqrt(t * t - r1 * r1 - r2 * r2 + 2 * r1 * r2 * math.cos(s)),
                         0, math.pi, epsabs=1e-14)[0] / math.pi
    assert mode_kernel_eval(0.0, classify(t, r1, r2)).value == pytest.approx(ref, rel=1e-12)


def test_region3_origin_is_free_value():
    ev = mode_kernel_eval(0.0, classify(3.0, 0.0, 1.0))
    assert ev.value == pytest.approx(1 / math.sqrt(8.0), rel=1e-15)
    assert mode_kernel_eval(0.5, classify(3.0, 0.0, 1.0)).value == 0.0


def test_batch_matches_adaptive():
    g = classify(1.7, 1.0, 1.2)
    nus = np.array([0.0, 1 / 3, 0.5, 2.0, 7.3, 20.0])
    batch = mode_kernel_batch_region2(nus, g)
    ref = [mode_kernel_eval(nu, g).value for nu in nus]
    assert np.max(np.abs(batch - ref)) < 1e-11
    with pytest.raises(ValueError):
        mode_kernel_batch_region2(nus, classify(5.0, 1.0, 1.0))


def test_mode_kernel_odd_in_t():
    for t in (0.7, 1.5, 3.0):
        a = mode_kernel(1 / 3, classify(t, 1.0, 1.2))
        b = mode_kernel(1 / 3, classify(-t, 1.0, 1.2))
        assert a == -b


def test_frozen_value():
    f = AngularField.ab(1 / 3)
    val, err = wave_mode_sum(f, 5.0, X, Y)
    assert abs(val - FROZEN) < 1e-14 and err < 1e-12
    assert abs(wave_kernel(f, 5.0, X, Y).total - FROZEN) < 1e-10


def test_oracle_subset():
    pts = [p for p in oracle_points() if p[0] in (1 / 3, 0.5) and p[1] == 2.5]
    rows = [r for r in wave_oracle(pts) if r["status"] == "ok"]
    assert len(rows) > 40
    assert max(r["rel_err"] for r in rows) < 1e-4
    assert any(r["measure"] == "structural-zero" for r in rows)


def test_kernel_is_odd():
    f = AngularField.ab(0.37)
    for t, x in [(5.0, X), (1.5, (1.2, 0.5))]:
        a = wave_kernel(f, t, x, Y).total
        b = wave_kernel(f, -t, x, Y).total
        assert a == -b


def test_free_kernel():
    f = AngularField.ab(0.0)
    x, y = (1.0, 0.0), (0.5, 1.0)
    d2 = 1.25 - math.cos(1.0)
    ev = wave_kernel(f, 2.0, x, y)
    assert ev.diffractive == 0
    assert ev.total == pytest.approx(1 / (2 * math.pi * math.sqrt(4 - d2)), rel=1e-14)


def test_cone_neighborhoods_are_flagged():
    f = AngularField.ab(1 / 3)
    x, y = (1.0, 0.0), (1.0, 0.0)
    ev = wave_kernel(f, 2.0 + 1e-5, x, y)
    assert ev.status == SINGULAR and math.isnan(ev.total.real)
    assert all(math.isnan(v) for v in bound_ratios(ev))
    # both parties at the same point: the light cone is t = 0
    assert wave_kernel(f, 1e-4, x, y).status == SINGULAR
    # integer flux has no diffractive cone
    assert wave_kernel(AngularField.ab(0.0), 2.0 + 1e-5, x, (1.0, 1.0)).status == "ok"
    assert wave_geometric(f, 2.0, (1.0, 0.0), (1.0, math.pi)) == math.inf


def test_printed_variant_disagrees():
    f = AngularField.ab(1 / 3)
    printed = wave_geometric(f, 5.0, X, Y) + wave_diffractive(f, 5.0, X, Y, variant="printed")
    assert abs(printed - FROZEN) > 1e-2 * abs(FROZEN)
    with pytest.raises(ValueError):
        wave_diffractive(f, 5.0, X, Y, variant="x")


def test_flux_shift_changes_only_a_phase():
    for t, x in [(5.0, X), (1.8, (1.0, 2.0))]:
        a = wave_kernel(AngularField.ab(0.9), t, x, Y).total
        b = wave_kernel(AngularField.ab(-0.1), t, x, Y).total
        assert abs(a) == pytest.approx(abs(b), rel=1e-10)


def test_support_and_structural_zeros():
    f = AngularField.ab(1 / 3)
    # region I
    assert wave_kernel(f, 0.5, (2.0, 0.0), (1.0, 0.0)).total == 0
    # region II outside the light cone
    x, y = (1.0, math.pi), (1.0, 0.0)
    assert structural_zero(f, 1.5, x, y)
    assert wave_kernel(f, 1.5, x, y).total == 0
    # half-integer flux vanishes beyond r1 + r2
    h = AngularField.ab(0.5)
    assert structural_zero(h, 5.0, X, Y)
    assert abs(wave_kernel(h, 5.0, X, Y).total) < 1e-12
    assert not structural_zero(f, 5.0, X, Y)


def test_symmetry_in_radii():
    f = AngularField.ab(1 / 3)
    a = wave_kernel(f, 4.0, (1.0, 1.0), (2.0, 0.0)).total
    b = wave_kernel(f, 4.0, (2.0, 0.0), (1.0, 1.0)).total
    assert abs(a - np.conj(b)) < 1e-12 * abs(a)


def test_rows_and_bounds():
    f = AngularField.ab(1 / 3)
    ev = wave_kernel(f, 5.0, X, Y)
    row = wave_row(f, ev)
    assert len(row) == len(WAVE_CSV_COLUMNS) and row[6] == "III"
    g, d = bound_ratios(ev)
    assert g <= 1 / (2 * math.pi) + 1e-12 and d > 0
    with pytest.raises(ValueError):
        wave_kernel(AngularField.sampled(np.full(32, 0.2), np.full(32, 0.01)), 5.0, X, Y)
