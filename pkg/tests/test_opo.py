import warnings

import numpy as np
import pytest

from tripartite.opo import Branch, NearThresholdWarning, OpoParams, critical_pump, spectrum


def test_critical_pump_values():
    assert critical_pump(OpoParams(1, 1, 1e-2)) == pytest.approx(100.0)
    assert critical_pump(OpoParams(2, 3, 6)) == 1.0
    assert critical_pump(OpoParams(2, 3, 12)) == 0.5


def test_invalid_params():
    with pytest.raises(ValueError):
        OpoParams(0, 1, 1)
    with pytest.raises(ValueError):
        OpoParams(1, 1, 1, -1.0)


def test_zero_pump_is_vacuum():
    sp = spectrum(OpoParams(1, 1, 1e-2, 0.0), np.linspace(-3, 3, 7), "below")
    np.testing.assert_array_equal(sp.s_x, 1.0)
    np.testing.assert_array_equal(sp.s_y, 1.0)


def test_half_threshold_line_centre():
    sp = spectrum(OpoParams.at_ratio(1, 1, 1e-2, 0.5), 0.0, Branch.BELOW)
    assert sp.s_x == pytest.approx(9.0, rel=1e-14)
    assert sp.s_y == pytest.approx(1 / 9, rel=1e-14)
    assert sp.s_x * sp.s_y == pytest.approx(1.0, rel=1e-14)


def test_above_branch_high_frequency_vacuum():
    sp = spectrum(OpoParams.at_ratio(1, 2, 1e-2, 1.5), 1e6, "above")
    assert sp.s_x == pytest.approx(1.0, abs=1e-9)
    assert sp.s_y == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("branch,ratio", [("below", 0.3), ("below", 0.9), ("above", 1.2), ("above", 3.0)])
def test_even_and_positive(branch, ratio):
    w = np.linspace(0, 50, 2001)
    p = OpoParams.at_ratio(1.3, 0.7, 1e-2, ratio)
    a = spectrum(p, w, branch)
    b = spectrum(p, -w, branch)
    np.testing.assert_array_equal(a.s_x, b.s_x)
    np.testing.assert_array_equal(a.s_y, b.s_y)
    assert np.all(a.s_y > 0)
    assert np.all(a.s_x > 0)


@pytest.mark.parametrize("ratio", np.linspace(0.01, 0.99, 15))
def test_below_squeezed_in_y(ratio):
    sp = spectrum(OpoParams.at_ratio(1, 1, 1e-2, ratio), np.linspace(0, 10, 50), "below")
    assert np.all(sp.s_y < 1) and np.all(sp.s_x > 1)


def test_branch_mismatch():
    with pytest.raises(ValueError):
        spectrum(OpoParams.at_ratio(1, 1, 1, 0.5), 0.0, "above")
    with pytest.raises(ValueError):
        spectrum(OpoParams.at_ratio(1, 1, 1, 1.5), 0.0, "below")


def test_warning_band():
    with pytest.warns(NearThresholdWarning):
        sp = spectrum(OpoParams.at_ratio(1, 1, 1, 0.99), 0.0, "below")
    assert sp.near_threshold
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not spectrum(OpoParams.at_ratio(1, 1, 1, 0.9), 0.0, "below").near_threshold
