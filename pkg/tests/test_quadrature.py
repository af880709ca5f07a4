import math

import numpy as np
import pytest

from abwave.quadrature import (DEFAULT_SPEC, QuadratureError, QuadratureSpec, SpecEval, adaptive_gl,
                               fixed_gl, integrate, semi_infinite, tanh_sinh)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_nodes=4)
    with pytest.raises(ValueError):
        QuadratureSpec(singularity_hint=-1.5)
    with pytest.raises(ValueError):
        QuadratureSpec(rule="simpson")
    assert QuadratureSpec(singularity_hint=-0.5).singularity_hint == -0.5


def test_speceval_rejects_negative_error():
    with pytest.raises(ValueError):
        SpecEval(1.0, -1e-3, 10)


def test_adaptive_gl_polynomial_and_oscillatory():
    r = adaptive_gl(lambda x: x ** 5 - 2 * x, 0.0, 2.0)
    assert r.value == pytest.approx(64 / 6 - 4, rel=1e-13)
    r = adaptive_gl(np.cos, 0.0, 100.0, DEFAULT_SPEC, list(np.arange(1, 100) * 1.0))
    assert r.value == pytest.approx(math.sin(100.0), rel=1e-10)
    assert r.nodes_used <= DEFAULT_SPEC.max_nodes


def test_adaptive_gl_reversed_limits():
    a = adaptive_gl(np.exp, 0.0, 1.0).value
    b = adaptive_gl(np.exp, 1.0, 0.0).value
    assert b == pytest.approx(-a, rel=1e-15)


def test_tanh_sinh_endpoint_singularity():
    # int_0^1 x^{-1/2} dx = 2
    r = tanh_sinh(lambda x: x ** -0.5, 0.0, 1.0)
    assert r.value == pytest.approx(2.0, rel=1e-10)
    # distance form keeps 1 - x accurate near the right end
    r = tanh_sinh(lambda x, dl, dr: dr ** -0.5, 0.0, 1.0, with_dist=True)
    assert r.value == pytest.approx(2.0, rel=1e-10)


def test_semi_infinite():
    r = semi_infinite(lambda x: np.exp(-x), 0.0)
    assert r.value == pytest.approx(1.0, rel=1e-10)


def test_budget_exhaustion_carries_best_value():
    spec = QuadratureSpec(max_nodes=40, rel_tol=1e-14)
    with pytest.raises(QuadratureError) as info:
        adaptive_gl(lambda x: np.sin(1.0 / (x + 1e-3)), 0.0, 1.0, spec)
    assert info.value.nodes_used > 0
    assert np.isfinite(info.value.err_est)


def test_fixed_gl_and_dispatch():
    assert fixed_gl(lambda x: x * x, 0.0, 3.0, 8, 2) == pytest.approx(9.0, rel=1e-14)
    r = integrate(lambda x: x ** -0.5, 0.0, 1.0, QuadratureSpec(rule="double_exponential_endpoint"))
    assert r.value == pytest.approx(2.0, rel=1e-10)
