import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tripartite import criteria
from tripartite.beamsplitter import AokiNetwork, default_inputs, propagate_static
from tripartite.gaussian import Axis, MomentTable, SqueezerSpec, direct_sum, linear_transform, squeezed, vacuum

BS50 = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def aoki(r):
    return propagate_static(default_inputs(r), AokiNetwork())


def random_physical(seed):
    rng = np.random.default_rng(seed)
    t = direct_sum([squeezed(SqueezerSpec(r, ax)) for r, ax in
                    zip(rng.uniform(0, 2, 3), rng.choice(["X", "Y"], 3))])
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return linear_transform(t, q)


def test_vlf_vacuum():
    assert criteria.vlf_triplet(vacuum(3)) == (5.0, 5.0, 5.0)


def test_vlf_aoki_r1():
    for v in criteria.vlf_triplet(aoki(1.0)):
        assert v == pytest.approx(5 * math.exp(-1), rel=1e-12)


def test_vlf_needs_three_modes():
    with pytest.raises(ValueError):
        criteria.vlf_triplet(vacuum(2))


def test_duan_fifty_fifty_two_squeezers():
    r = 0.8
    t = linear_transform(direct_sum([squeezed(SqueezerSpec(r, Axis.Y)), squeezed(SqueezerSpec(r, Axis.X))]), BS50)
    assert criteria.duan_pair(t, 0, 1) == pytest.approx(4 * math.exp(-r), rel=1e-12)


def test_duan_squeezer_and_vacuum():
    r = 1.3
    # X1 - X2 picks up input 2 only, Y1 + Y2 input 1 only
    t = linear_transform(direct_sum([vacuum(1), squeezed(SqueezerSpec(r, Axis.X))]), BS50)
    assert criteria.duan_pair(t, 0, 1) == pytest.approx(2 * (1 + math.exp(-r)), rel=1e-12)


def test_duan_index_errors():
    with pytest.raises(IndexError):
        criteria.duan_pair(vacuum(3), 0, 3)
    with pytest.raises(ValueError):
        criteria.duan_pair(vacuum(3), 1, 1)


def test_optimal_gain_vacuum():
    g = criteria.optimal_gain(vacuum(3), 0, (1, 2, "+"))
    assert g.a_min == 0.0
    assert g.variance_at_min == 1.0


def test_optimal_gain_aoki_r1():
    # 3 / (2 e + 1/e) = 0.51685...
    g = criteria.optimal_gain(aoki(1.0), 0, (1, 2, +1), "x")
    assert g.variance_at_min == pytest.approx(3 / (2 * math.e + 1 / math.e), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_optimal_gain_beats_random_gains(seed):
    t = random_physical(seed)
    g = criteria.optimal_gain(t, 1, (0, 2, -1), "y")
    gains = np.random.default_rng(seed).normal(scale=3, size=100)
    est = np.array([criteria.estimate_variance(t, 1, (0, 2, -1), a, "y") for a in gains])
    assert np.all(est >= g.variance_at_min - 1e-12)


def test_degenerate_inference_raises():
    t = MomentTable(np.diag([1.0, 0.0, 0.0]), np.eye(3))
    with pytest.raises(criteria.DegenerateInferenceError):
        criteria.optimal_gain(t, 0, (1, 2, +1))


def test_epr_vacuum_boundaries():
    assert criteria.epr_two_mode(vacuum(3), 0, (1, 2, +1)).product == 1.0
    assert criteria.epr_one_mode(vacuum(3), (1, 2, +1), 0).product == 4.0


@pytest.mark.parametrize("r", [0.0, 0.4, 1.0, 2.5])
def test_epr_aoki_closed_forms(r):
    t = aoki(r)
    den = 5 + 4 * math.cosh(2 * r)
    assert criteria.epr_two_mode(t, 0, (1, 2, +1)).product == pytest.approx(9 / den, rel=1e-10)
    assert criteria.epr_one_mode(t, (1, 2, +1), 0).product == pytest.approx(36 / den, rel=1e-10)


def test_epr_two_mode_r1_value():
    # 9/(5 + 4 cosh 2) = 0.44891
    assert criteria.epr_two_mode(aoki(1.0), 0, (1, 2, +1)).product == pytest.approx(0.448905058516, rel=1e-10)


def test_bad_sign():
    with pytest.raises(ValueError):
        criteria.epr_two_mode(vacuum(3), 0, (1, 2, 0))


@given(seed=st.integers(0, 2**32 - 1), sign=st.sampled_from([1, -1]))
@settings(max_examples=60, deadline=None)
def test_one_mode_forms_agree(seed, sign):
    t = random_physical(seed)
    for i in range(3):
        j, k = (m for m in range(3) if m != i)
        a = criteria.epr_one_mode(t, (j, k, sign), i)
        b = criteria.epr_one_mode_alt(t, (j, k, sign), i)
        assert a.vinf_x == pytest.approx(b.vinf_x, abs=1e-12)
        assert a.vinf_y == pytest.approx(b.vinf_y, abs=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_conditioning_never_increases_variance(seed):
    t = random_physical(seed)
    e = criteria.epr_two_mode(t, 2, (0, 1, -1))
    assert -1e-12 <= e.vinf_x <= t.vxx[2, 2] + 1e-12
    assert -1e-12 <= e.vinf_y <= t.vyy[2, 2] + 1e-12


def test_closed_forms_monotone():
    r = np.linspace(0, 5, 200)
    assert np.all(np.diff(5 * np.exp(-r)) < 0)
    assert np.all(np.diff(9 / (5 + 4 * np.cosh(2 * r))) < 0)


def test_report_vacuum_no_flags():
    rep = criteria.full_report(vacuum(3))
    assert not any(rep.flags["vlf"].values())
    assert not any(bool(v) for v in rep.flags["epr_two_mode"].values())
    assert not any(bool(v) for v in rep.flags["epr_one_mode"].values())
    assert not any(bool(v) for v in rep.tripartite_confirmed.values())


def test_report_aoki_symmetric_and_confirmed():
    rep = criteria.full_report(aoki(0.9))
    assert rep.permutation_symmetric
    assert all(bool(v) for v in rep.tripartite_confirmed.values())
    d = rep.to_dict()
    assert set(d["epr_one_mode"]) == {"1-2", "0-2", "0-1"}


def test_report_picks_better_sign():
    t = aoki(1.0)
    rep = criteria.full_report(t)
    plus = criteria.epr_two_mode(t, 0, (1, 2, +1)).product
    minus = criteria.epr_two_mode(t, 0, (1, 2, -1)).product
    assert rep.epr_two_mode[0].product == min(plus, minus)


def test_xy_correlations_flagged():
    t = MomentTable(np.eye(3), np.eye(3), 0.1 * np.eye(3))
    assert criteria.full_report(t).xy_correlations_present


def test_report_batched():
    t = MomentTable(np.stack([np.eye(3)] * 4), np.stack([np.eye(3)] * 4))
    rep = criteria.full_report(t)
    assert np.shape(rep.v12) == (4,)
