import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abwave.angular import (AngularField, ab_modes, ab_vector_potential, angular_eigs, exact_modes, field_from_text,
                            field_to_text, flux, gram_matrix, hardy_constant, tangential_component, theta_grid)


def test_flux_examples():
    assert flux(AngularField.ab(0.3)) == 0.3
    f = AngularField.from_functions(np.cos, lambda th: 0.2 + 0 * th, 64)
    assert abs(flux(f)) < 1e-15
    A = tangential_component(ab_vector_potential(0.7), theta_grid(32))
    assert np.allclose(A, 0.7, atol=1e-14)


def test_hardy_constant_examples():
    assert hardy_constant(0.5) == 0.25
    assert hardy_constant(0.0) == 0.0
    assert hardy_constant(1.3) == pytest.approx(0.09, abs=1e-15)


def test_ab_modes_examples():
    assert [m.nu for m in ab_modes(1 / 3, -1, 1)] == pytest.approx([2 / 3, 1 / 3, 4 / 3])
    assert sorted(m.nu for m in ab_modes(0.0, -2, 2)) == [0, 1, 1, 2, 2]
    assert [m.nu for m in ab_modes(0.5, -1, 0)] == [0.5, 0.5]
    # flux is reduced into (-1, 1)
    assert [m.nu for m in ab_modes(1.3, 0, 1)] == pytest.approx([0.3, 1.3])


def test_exact_mode_normalization():
    th = theta_grid(256)
    for m in exact_modes(AngularField.ab(0.37), -3, 3):
        norm = np.sum(np.abs(m.psi(th)) ** 2) * 2 * math.pi / 256
        assert norm == pytest.approx(1.0, abs=1e-12)


def test_angular_eigs_constant_potential_matches_exact():
    for al in (0.2, 1 / 3, 0.5, -0.7):
        f = AngularField.sampled(np.full(64, al))
        mus = [m.mu for m in angular_eigs(f, 9)]
        ref = sorted(m.mu for m in exact_modes(AngularField.ab(al), -6, 6))[:9]
        assert mus == pytest.approx(ref, abs=1e-10)


def test_angular_eigs_constant_a_shift():
    f = AngularField.sampled(np.full(64, 1 / 3), np.full(64, 0.4))
    ref = sorted((k + 1 / 3) ** 2 + 0.4 for k in range(-6, 7))[:7]
    assert [m.mu for m in angular_eigs(f, 7)] == pytest.approx(ref, abs=1e-10)


def test_gauge_invariance_and_resolution():
    al = 0.3
    f1 = AngularField.from_functions(lambda th: al + 0.1 * np.cos(th), None, 128)
    f2 = AngularField.from_functions(lambda th: al + 0.5 * np.sin(2 * th) - 0.2 * np.cos(3 * th), None, 128)
    f3 = AngularField.from_functions(lambda th: al + 0.5 * np.sin(2 * th) - 0.2 * np.cos(3 * th), None, 256)
    m1 = [m.mu for m in angular_eigs(f1, 8)]
    m2 = [m.mu for m in angular_eigs(f2, 8)]
    m3 = [m.mu for m in angular_eigs(f3, 8)]
    ref = sorted(m.mu for m in ab_modes(al, -6, 6))[:8]
    assert m1 == pytest.approx(ref, abs=1e-9)
    assert m2 == pytest.approx(ref, abs=1e-9)
    assert max(abs(a - b) for a, b in zip(m2, m3)) < 1e-8
    assert m1[0] == pytest.approx(hardy_constant(al), abs=1e-9)


def test_eigs_sorted_orthonormal_and_positive_when_admissible():
    th_fun = lambda th: 0.4 + 0.3 * np.cos(th)
    a_fun = lambda th: -0.05 * (1 + np.sin(2 * th))
    f = AngularField.from_functions(th_fun, a_fun, 128)
    assert f.admissible()
    modes = angular_eigs(f, 10)
    mus = np.array([m.mu for m in modes])
    assert np.all(np.diff(mus) >= -1e-12)
    assert mus[0] > 0
    G = gram_matrix(modes)
    assert np.max(np.abs(G - np.eye(len(modes)))) < 1e-10


def test_half_integer_degeneracy_tie_break():
    modes = angular_eigs(AngularField.sampled(np.full(64, 0.5)), 4)
    assert modes[0].mu == pytest.approx(modes[1].mu, abs=1e-12)
    assert modes[0].label < modes[1].label


def test_admissibility_predicate():
    assert AngularField.sampled(np.full(32, 1 / 3), np.full(32, -0.05)).admissible()
    assert not AngularField.sampled(np.full(32, 1 / 3), np.full(32, -0.2)).admissible()
    assert not AngularField.ab(1.0).admissible()


def test_sampled_field_validation():
    with pytest.raises(ValueError):
        AngularField.sampled(np.zeros(8))
    with pytest.raises(ValueError):
        AngularField.sampled(np.zeros(33))
    with pytest.raises(ValueError):
        AngularField.sampled(np.full(32, np.nan))


def test_text_round_trip():
    f = AngularField.from_functions(lambda th: 0.3 + np.cos(th), lambda th: -0.01 * np.sin(th), 32)
    g = field_from_text(field_to_text(f))
    assert np.array_equal(g.A_vals, f.A_vals) and np.array_equal(g.a_vals, f.a_vals)
    h = field_from_text(field_to_text(AngularField.ab(1 / 3)))
    assert h.kind == "ab_exact" and h.alpha == 1 / 3
    with pytest.raises(ValueError):
        field_from_text("theta,A\n0,1\n")


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(-0.5, 0.5), st.integers(1, 4))
def test_first_eigenvalue_is_hardy_constant_for_any_profile(al, amp, p):
    f = AngularField.from_functions(lambda th: al + amp * np.cos(p * th), None, 96)
    assert angular_eigs(f, 1)[0].mu == pytest.approx(hardy_constant(al), abs=1e-8)
