from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swent.errors import HorizonError, ValidationError
from swent.switching import (DeclaredAsymptotics, SwitchingSignal, asymptotic_rates,
                             candidate_times, make_constant, make_explicit, make_periodic,
                             make_setpoint, tail_window)

from oracles import exact_active_times, setpoint_switches


@pytest.fixture(scope="module")
def sigma1():
    return make_periodic([1000, 1000])


@pytest.fixture(scope="module")
def sigma2():
    return make_setpoint()


def test_periodic_mode_lookup_is_right_continuous(sigma1):
    assert sigma1.mode_at(0) == 0
    assert sigma1.mode_at(999.999) == 0
    assert sigma1.mode_at(1000) == 1
    assert sigma1.mode_at(2000) == 0
    assert list(sigma1.switch_times[:3]) == [1000, 2000, 3000]


def test_setpoint_mode_lookup(sigma2):
    assert sigma2.mode_at(0.5) == 0
    assert sigma2.mode_at(5) == 1
    assert sigma2.mode_at(10) == 0


def test_lookup_beyond_horizon_raises():
    sig = make_explicit(0, [1.0, 2.0], [1, 0], horizon=3.0)
    with pytest.raises(HorizonError):
        sig.mode_at(3.5)
    with pytest.raises(HorizonError):
        sig.active_time(0, 4.0)


def test_active_times_and_rates(sigma1, sigma2):
    assert sigma1.active_time(0, 1500) == pytest.approx(1000)
    assert sigma1.active_rate(0, 1500) == pytest.approx(2 / 3)
    assert sigma2.active_time(0, 10) == pytest.approx(1)
    assert sigma2.active_rate(1, 10) == pytest.approx(0.9)
    assert sigma1.active_rate(0, 0) == 1.0
    assert sigma1.active_rate(1, 0) == 0.0


def test_setpoint_matches_closed_form_exactly(sigma2):
    exact = sigma2.exact_switch_times
    assert exact[0] == 1
    for k in range(2, 13):
        assert exact[k - 1] == Fraction(9) ** (k - 1) + Fraction(9) ** (k - 2)
    assert exact[:4] == (1, 10, 90, 810)
    assert sigma2.horizon == float(9 ** 11 + 9 ** 10)


def test_setpoint_matches_rate_search_oracle():
    for ratio in (Fraction(9, 10), Fraction(3, 4), Fraction(2, 3)):
        sig = make_setpoint(ratio, 1, num_switches=10)
        assert list(sig.exact_switch_times) == setpoint_switches(ratio, Fraction(1), 10)


def test_setpoint_two_thirds_second_switch_at_three():
    # (t - 1) / t = 2/3 at t = 3
    sig = make_setpoint(Fraction(2, 3), 1, num_switches=3)
    assert sig.exact_switch_times[1] == 3
    assert sig.active_rate(1, 3) == pytest.approx(2 / 3)


def test_setpoint_rejects_ratio_outside_open_interval():
    for r in (Fraction(1, 2), Fraction(1, 3), 1, Fraction(11, 10)):
        with pytest.raises(ValidationError):
            make_setpoint(r)


def test_setpoint_declared_rates(sigma2):
    assert sigma2.declared.rho_hat == pytest.approx((0.9, 0.9))
    assert not sigma2.declared.convergent


def test_periodic_declared_rates():
    sig = make_periodic([1, 3], horizon=100)
    assert sig.declared.rho_hat == pytest.approx((0.25, 0.75))
    one = make_periodic([5.0])
    assert one.num_switches == 0
    with pytest.raises(ValidationError):
        make_periodic([])
    with pytest.raises(ValidationError):
        make_periodic([1, -1])


def test_constructor_validation():
    with pytest.raises(ValidationError):
        make_explicit(0, [2.0, 1.0], [1, 0])
    with pytest.raises(ValidationError):
        make_explicit(0, [1.0], [0])
    with pytest.raises(ValidationError):
        make_explicit(0, [1.0, 2.0], [1])
    with pytest.raises(ValidationError):
        make_explicit(0, [1.0, 5.0], [1, 0], horizon=3.0)


def test_asymptotic_rates_periodic(sigma1):
    prof = asymptotic_rates(sigma1.truncated(1e5), use_declared=False)
    assert prof.rho_hat == pytest.approx([0.5, 0.5], abs=1e-2)
    assert prof.persistent == prof.strongly_persistent == frozenset({0, 1})
    declared = asymptotic_rates(sigma1, 1e5)
    assert declared.declared and list(declared.rho_hat) == [0.5, 0.5]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_periodic_estimate_converges_to_declared():
    for H in (1e4, 1e5, 1e6):
        sig = make_periodic([1000, 3000], horizon=H)
        prof = asymptotic_rates(sig, use_declared=False)
        assert np.all(np.abs(prof.estimated_rho_hat - np.array([0.25, 0.75])) <= 4000 / H + 1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_asymptotic_rates_setpoint_estimate():
    sig = make_setpoint(horizon=1e7)
    prof = asymptotic_rates(sig, tail_fraction=0.5, use_declared=False)
    assert prof.rho_hat == pytest.approx([0.9, 0.9], abs=0.01)
    assert prof.persistent == frozenset({0, 1})


def test_asymptotic_rates_constant_signal():
    sig = make_constant(1, horizon=50, num_modes=3)
    prof = asymptotic_rates(sig, use_declared=False)
    assert prof.rho_hat == pytest.approx([0, 1, 0])
    assert prof.persistent == prof.strongly_persistent == frozenset({1})


def test_few_switches_warns():
    sig = make_explicit(0, [1.0, 2.0], [1, 0], horizon=10.0)
    with pytest.warns(RuntimeWarning):
        prof = asymptotic_rates(sig)
    assert prof.warning


def test_mode_only_active_early_is_not_persistent():
    times = [5.0 + 10 * k for k in range(1000)]
    modes = [1 + k % 2 for k in range(1000)]
    early = make_explicit(0, times, modes, horizon=times[-1] + 10, num_modes=3)
    prof = asymptotic_rates(early, use_declared=False)
    assert 0 not in prof.persistent
    assert prof.strongly_persistent <= prof.persistent


def test_tail_window_includes_a_full_round_of_modes(sigma2):
    w0, H = tail_window(sigma2)
    assert H == sigma2.horizon
    assert w0 <= sigma2.switch_times[-3]
    cand = candidate_times(sigma2)
    assert cand[0] == w0 and cand[-1] == H
    assert set(sigma2.switch_times[-3:]) <= set(cand)


def test_breakpoints_and_segments():
    sig = make_explicit(0, [1.0, 2.5, 4.0], [1, 2, 0], horizon=5.0)
    assert list(sig.breakpoints()) == [0.0, 1.0, 2.5, 4.0]
    assert list(sig.breakpoints(2.5)) == [0.0, 1.0, 2.5]
    assert sig.segments(0.5, 3.0) == [(0.5, 1.0, 0), (1.0, 2.5, 1), (2.5, 3.0, 2)]


def test_round_trip_through_dict(sigma1, sigma2):
    for sig in (sigma1.truncated(1e4), sigma2, make_constant(0, 3.0),
                make_explicit(1, [0.5, 2.0], [0, 2], horizon=4.0)):
        back = SwitchingSignal.from_dict(sig.to_dict())
        assert back.same_as(sig)
        assert back.declared == sig.declared
    d = DeclaredAsymptotics((0.5, 0.5), frozenset({0, 1}), frozenset({0, 1}), ((0.5, 0.5),))
    assert DeclaredAsymptotics.from_dict(d.to_dict()) == d


@st.composite
def signals(draw):
    num_modes = draw(st.integers(1, 4))
    k = draw(st.integers(0, 12)) if num_modes > 1 else 0
    gaps = draw(st.lists(st.floats(0.01, 10), min_size=k, max_size=k))
    modes = [draw(st.integers(0, num_modes - 1))]
    for _ in range(k):
        modes.append(draw(st.sampled_from([m for m in range(num_modes) if m != modes[-1]])))
    times = list(np.cumsum(gaps))
    horizon = (times[-1] if times else 0) + draw(st.floats(0.01, 10))
    return make_explicit(modes[0], times, modes[1:], horizon=horizon, num_modes=num_modes)


@settings(max_examples=80, deadline=None)
@given(signals(), st.floats(0, 1))
def test_active_times_partition_time(sig, frac):
    t = frac * sig.horizon
    tau = sig.active_times(t)
    assert tau.sum() == pytest.approx(t, rel=1e-12, abs=1e-12)
    if t > 0:
        rho = sig.active_rates(t)
        assert np.all(rho >= -1e-15) and np.all(rho <= 1 + 1e-15)
        assert rho.sum() == pytest.approx(1.0, abs=1e-12)
    oracle = exact_active_times(sig.initial_mode, [Fraction(s) for s in sig.switch_times],
                                sig.mode_sequence, sig.num_modes, Fraction(t))
    assert np.allclose(tau, [float(x) for x in oracle], rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(signals())
def test_active_times_nondecreasing_and_persistence_nested(sig):
    ts = np.linspace(0, sig.horizon, 50)
    tau = sig.active_times(ts)
    assert np.all(np.diff(tau, axis=0) >= -1e-12)
    prof = asymptotic_rates(sig, use_declared=False) if sig.num_switches >= 10 else None
    if prof is not None:
        assert prof.strongly_persistent <= prof.persistent
