import math

import mpmath
import numpy as np
import pytest
from scipy.linalg import expm

from tripartite import criteria, undepleted
from tripartite.gaussian import linear_transform, vacuum

G = np.ones((3, 3)) - np.eye(3)


def test_abcd_at_zero():
    p = undepleted.abcd(0.0)
    assert (p.a, p.b, p.c, p.d) == (3.0, 0.0, 0.0, 0.0)


def test_abcd_tau_one():
    assert undepleted.abcd(1.0).a == pytest.approx(math.cosh(2) + 2 * math.cosh(1), rel=1e-15)
    # cosh 2 + 2 cosh 1 = 6.84836 (not 6.8479)
    assert undepleted.abcd(1.0).a == pytest.approx(6.84836, abs=1e-5)


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        undepleted.abcd(-0.1)


@pytest.mark.parametrize("tau", [0.0, 0.1, 0.7, 2.0, 4.5])
def test_maps_match_matrix_exponential(tau):
    # generator of the linearized equations: X' = G X, Y' = -G Y
    mx, my = undepleted.quadrature_maps(tau)
    np.testing.assert_allclose(mx, expm(tau * G), rtol=1e-12)
    np.testing.assert_allclose(my, expm(-tau * G), rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("tau", [0.0, 0.3, 1.0, 3.0])
def test_table_from_propagation(tau):
    mx, my = undepleted.quadrature_maps(tau)
    direct = linear_transform(vacuum(3), mx, my)
    t = undepleted.moment_table(tau)
    np.testing.assert_allclose(t.vxx, direct.vxx, rtol=1e-12)
    np.testing.assert_allclose(t.vyy, direct.vyy, rtol=1e-10)


def test_tau_zero_is_vacuum():
    t = undepleted.moment_table(0.0)
    np.testing.assert_allclose(t.vxx, np.eye(3), atol=1e-15)
    assert undepleted.v3_closed(0.0) == 5.0
    assert undepleted.epr_curves(0.0) == (4.0, 1.0)


@pytest.mark.parametrize("tau", np.linspace(0.05, 4, 12))
def test_physical_and_symmetric(tau):
    t = undepleted.moment_table(tau)
    assert np.all(t.vxx.diagonal() * t.vyy.diagonal() >= 1)
    v = criteria.vlf_triplet(t)
    assert max(v) - min(v) <= 1e-12 * max(v)


def test_stable_v3_oracle():
    # the maps diagonalize on the symmetric / antisymmetric subspaces; the
    # A, B, C, D form cancels catastrophically in doubles, so keep tau small here
    tau = np.linspace(0, 2, 21)
    np.testing.assert_allclose(undepleted.v3_closed(tau), 2 * np.exp(-2 * tau) + 3 * np.exp(-4 * tau),
                               rtol=1e-9)


def test_reference_values():
    assert undepleted.v3_closed(0.5) == pytest.approx(1.1417647, abs=1e-7)
    one, two = undepleted.epr_curves(0.5)
    assert one == pytest.approx(0.79522, abs=1e-5)
    assert two == pytest.approx(0.19880, abs=1e-5)


@pytest.mark.parametrize("tau", [0.1, 0.9, 2.2, 4.0])
def test_epr_factor_four(tau):
    one, two = undepleted.epr_curves(tau)
    assert one == pytest.approx(4 * two, rel=1e-10)
    assert two < 1 and one < 4


def test_v3_decreasing():
    with mpmath.workdps(60):
        v = [undepleted.v3_closed(mpmath.mpf(k) / 20) for k in range(201)]
    assert all(b < a for a, b in zip(v, v[1:]))


def test_mpmath_route():
    with mpmath.workdps(50):
        tau = mpmath.mpf(5)
        t = undepleted.moment_table(tau)
        assert t.vxx.dtype == object
        v = criteria.vlf_triplet(t)[0]
        exact = 2 * mpmath.exp(-2 * tau) + 3 * mpmath.exp(-4 * tau)
        assert abs(v - exact) / exact < mpmath.mpf(10) ** -30
        assert abs(undepleted.v3_closed(tau) - exact) / exact < mpmath.mpf(10) ** -30


def test_overflow_limit():
    # variances grow like exp(4 tau)/9; doubles run out near tau = 177
    with np.errstate(over="ignore"):
        assert np.isfinite(undepleted.moment_table(170.0).vxx).all()
        assert not np.isfinite(undepleted.moment_table(180.0).vxx).all()
