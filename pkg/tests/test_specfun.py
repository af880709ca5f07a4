import csv
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy import special

from abwave.quadrature import QuadratureSpec
from abwave.specfun import (WEBER_C, bessel_j, dyadic_bessel_l2, gamma, mod_bessel_i, poisson_bound,
                            resolve_weber_constant, weber_lhs, weber_rhs_unit)

DATA = Path(__file__).parent / "data" / "gamma_reference.csv"


def _gamma_reference():
    with DATA.open() as fh:
        rows = [r for r in fh if not r.startswith("#")]
    return [(float(r["x"]), float(r["gamma"])) for r in csv.DictReader(rows)]


def test_gamma_exact_values():
    assert gamma(0.5) == pytest.approx(1.7724538509055159, rel=1e-15)
    assert gamma(1.0) == 1.0
    assert gamma(5.0) == 24.0


def test_gamma_against_reference_fixture():
    ref = _gamma_reference()
    assert len(ref) == 30
    for x, g in ref:
        assert abs(gamma(x) - g) / g <= 1e-13, x


def test_gamma_domain():
    for x in (0.0, -1.5):
        with pytest.raises(ValueError):
            gamma(x)


def test_bessel_j_examples():
    assert bessel_j(0.0, 0.0).value == 1.0
    assert bessel_j(1.0, 0.0).value == 0.0
    assert abs(bessel_j(0.5, math.pi).value) < 1e-10
    assert bessel_j(0.5, math.pi / 2).value == pytest.approx(2 / math.pi, rel=1e-10)


def _series(n, r):
    # the alternating series cancels to ~e^r, so sum it in exact rational arithmetic
    x = Fraction(r) / 2
    total = sum((-1) ** m * x ** (2 * m + n) / (math.factorial(m) * math.factorial(m + n)) for m in range(160))
    return float(total)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_bessel_j_integer_orders_against_power_series(n):
    # relative to the local envelope min(1, sqrt(2 / pi r)), which stays meaningful at the zeros
    for r in np.linspace(0.0, 40.0, 41):
        got = bessel_j(n, float(r)).value
        ref = _series(n, float(r))
        env = min(1.0, math.sqrt(2 / (math.pi * r))) if r > 0 else 1.0
        assert abs(got - ref) <= 1e-10 * env + 1e-14, (n, r)


def test_bessel_j_half_integer_closed_forms():
    for r in (0.2, 1.0, 3.3, 17.0):
        j12 = math.sqrt(2 / (math.pi * r)) * math.sin(r)
        j32 = math.sqrt(2 / (math.pi * r)) * (math.sin(r) / r - math.cos(r))
        assert bessel_j(0.5, r).value == pytest.approx(j12, rel=1e-9, abs=1e-12)
        assert bessel_j(1.5, r).value == pytest.approx(j32, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("nu", [-0.4, -0.25, 0.0, 1 / 3, 0.5, 0.9, 2.0, 4 / 3, 7.5])
def test_bessel_j_matches_scipy_and_poisson_bound(nu):
    for r in (0.01, 0.7, 5.0, 60.0, 300.0):
        ev = bessel_j(nu, r)
        env = min(1.0, math.sqrt(2 / (math.pi * r)))
        # high orders at r >> nu lose digits to cancellation; err_est reports it
        tol = 1e-9 * env + 1e-13 if nu <= 2 else ev.err_est + 1e-13
        assert abs(ev.value - special.jv(nu, r)) <= tol
        assert abs(ev.value) <= 2 * poisson_bound(nu, r) + ev.err_est
        assert ev.err_est >= 0 and ev.nodes_used <= QuadratureSpec().max_nodes


def test_bessel_j_domain():
    with pytest.raises(ValueError):
        bessel_j(-0.5, 1.0)
    with pytest.raises(ValueError):
        bessel_j(1.0, 2e4)


def test_mod_bessel_i_examples_and_scipy():
    assert mod_bessel_i(0.0, 0.0).value == 1.0
    assert mod_bessel_i(2.0, 0.0).value == 0.0
    assert mod_bessel_i(0.5, 1.0).value == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-10)
    for nu in (0.0, 1 / 3, 0.5, 2.0, 2.5):
        prev = 0.0
        for z in (0.05, 0.5, 2.0, 10.0, 50.0):
            v = mod_bessel_i(nu, z).value
            assert v > prev
            prev = v
            assert v == pytest.approx(special.iv(nu, z), rel=1e-9)


def test_mod_bessel_i_scaled_beyond_overflow():
    ev = mod_bessel_i(1 / 3, 800.0)
    assert ev.scaled
    assert ev.value == pytest.approx(special.ive(1 / 3, 800.0), rel=1e-9)


def test_dyadic_bessel_l2():
    v = dyadic_bessel_l2(0.0, 100.0)
    assert 0 < v <= 1.0
    assert v == pytest.approx(math.log(2) / math.pi, rel=1e-2)
    assert dyadic_bessel_l2(5.0, 1e-3) < 1e-20
    vals = [dyadic_bessel_l2(nu, 2.0 ** k) for nu in (0.0, 1 / 3, 0.5, 2.0) for k in range(11)]
    assert max(vals) <= 1.0


WEBER_SAMPLES = [(1.0, 1.0, 1.0, 0.0), (0.5, 0.7, 1.3, 1 / 3), (2.0, 1.0, 2.0, 0.5), (0.3, 0.4, 0.5, 2.0),
                 (1.0, 2.0, 0.5, 4 / 3)]


def test_weber_constant_resolution():
    c, residual, table = resolve_weber_constant(WEBER_SAMPLES)
    assert c == 0.5 == WEBER_C
    assert residual < 1e-8
    assert all(abs(row["ratio"] - 0.5) < 1e-8 for row in table)


def test_weber_free_heat_kernel():
    # with c resolved, mode 0 of alpha = 0 at r2 = 0 is the free heat kernel times 2 pi
    t, r1 = 0.7, 1.3
    lhs = weber_lhs(t, r1, 1e-12, 0.0)
    free = math.exp(-r1 * r1 / (4 * t)) / (4 * math.pi * t)
    assert lhs / (2 * math.pi) == pytest.approx(free, rel=1e-8)
    assert WEBER_C * weber_rhs_unit(t, r1, 1e-12, 0.0) / (2 * math.pi) == pytest.approx(free, rel=1e-8)
