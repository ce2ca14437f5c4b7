import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridwind import filter as F
from hybridwind.errors import ConfigurationError, ResolutionError


def test_cpmg_pulse_times():
    seq = F.build_sequence("cpmg", 1.0, 4)
    assert seq.pulse_times == (0.125, 0.375, 0.625, 0.875)


def test_xy8_shares_cpmg_timing():
    assert F.build_sequence("xy8", 2.0, 16).pulse_times == F.build_sequence("cpmg", 2.0, 16).pulse_times


@pytest.mark.parametrize("kind,n", [("ramsey", 1), ("hahn", 2), ("cpmg", 0), ("xy8", 12), ("cpmg", 2.5)])
def test_inconsistent_pulse_count(kind, n):
    with pytest.raises(ConfigurationError):
        F.build_sequence(kind, 1.0, n)


def test_cpmg_requires_count():
    with pytest.raises(ConfigurationError):
        F.build_sequence("cpmg", 1.0)


@pytest.mark.parametrize("tau", [0.0, -1.0, math.inf])
def test_bad_duration(tau):
    with pytest.raises(ConfigurationError):
        F.build_sequence("ramsey", tau)


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        F.build_sequence("udd", 1.0, 4)


def test_toggling_values_and_flips():
    seq = F.build_sequence("cpmg", 1.0, 5)
    t = np.linspace(-0.1, 1.1, 12001)
    y = F.toggling(seq, t)
    assert set(np.unique(y)) <= {-1.0, 0.0, 1.0}
    inside = y[(t > 0) & (t < 1)]
    assert np.count_nonzero(np.diff(inside)) == 5
    assert inside[0] == 1.0


def test_ramsey_dc_value():
    seq = F.build_sequence("ramsey", 0.3)
    assert F.filter_numeric(seq, [0.0]).magnitude[0] == pytest.approx(0.3, rel=1e-15)
    assert F.filter_analytic_ramsey(0.3, 0.0) == 0.3


def test_echo_has_zero_dc():
    for seq in (F.build_sequence("hahn", 1.0), F.build_sequence("cpmg", 1.0, 8)):
        assert F.filter_numeric(seq, [0.0]).magnitude[0] == pytest.approx(0.0, abs=1e-15)
        assert F.filter_magnitude(seq, 0.0) == 0.0


def test_hahn_closed_form():
    # |Y| = (4/w) sin^2(w tau / 4)
    seq = F.build_sequence("hahn", 2.0)
    w = np.linspace(0.1, 30, 300)
    expected = 4 / w * np.sin(w * 2.0 / 4) ** 2
    np.testing.assert_allclose(F.filter_numeric(seq, w).magnitude, expected, rtol=1e-12)


def test_cpmg_pole_value():
    # at the passband pole the array factor is exactly N
    seq = F.build_sequence("cpmg", 1.0, 8)
    w = 2 * math.pi * 4.0
    assert F.filter_magnitude(seq, w) == pytest.approx(F.filter_numeric(seq, [w]).magnitude[0], rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(["ramsey", "hahn", "cpmg", "xy8"]), n=st.integers(1, 64),
       tau=st.floats(1e-5, 10.0), xi=st.floats(0.0, 200.0))
def test_filter_bounds_and_parity(kind, n, tau, xi):
    n_pi = {"ramsey": 0, "hahn": 1, "cpmg": n, "xy8": 8 * max(1, n // 8)}[kind]
    seq = F.build_sequence(kind, tau, n_pi)
    w = 2 * math.pi * xi / tau
    y = F.filter_numeric(seq, [-w, w] if w > 0 else [w])
    mag = y.magnitude
    assert np.all(mag <= tau * (1 + 1e-12))
    if w > 0:
        assert mag[0] == pytest.approx(mag[1], rel=1e-12, abs=1e-15 * tau)


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(["hahn", "cpmg", "xy8"]), n=st.integers(1, 40), tau=st.floats(1e-4, 5.0),
       xi=st.floats(0.01, 100.0))
def test_analytic_matches_numeric(kind, n, tau, xi):
    n_pi = {"hahn": 1, "cpmg": n, "xy8": 8 * max(1, n // 8)}[kind]
    seq = F.build_sequence(kind, tau, n_pi)
    w = 2 * math.pi * xi / tau
    num = F.filter_numeric(seq, [w]).magnitude[0]
    ana = F.filter_magnitude(seq, w)
    assert ana == pytest.approx(num, rel=1e-9, abs=1e-13 * tau)


def test_tau_scaling():
    # Y_tau(w) = tau Y_1(w tau)
    s1, s2 = F.build_sequence("cpmg", 1.0, 6), F.build_sequence("cpmg", 0.01, 6)
    xi = np.linspace(0.05, 10, 50)
    a = F.filter_numeric(s1, 2 * np.pi * xi).magnitude
    b = F.filter_numeric(s2, 2 * np.pi * xi / 0.01).magnitude
    np.testing.assert_allclose(b, 0.01 * a, rtol=1e-10, atol=1e-16)


def test_grid_validation():
    seq = F.build_sequence("ramsey", 1.0)
    with pytest.raises(ConfigurationError):
        F.filter_numeric(seq, [1.0, 0.5])
    with pytest.raises(ConfigurationError):
        F.filter_numeric(seq, [0.0, math.nan])


def test_combined_response():
    seq = F.build_sequence("hahn", 1.0)
    w = np.linspace(0, 20, 101)
    fe, yn = F.electron_filter(seq, w), F.filter_numeric(seq, w)
    h = F.combined_response(fe, yn)
    np.testing.assert_allclose(h.magnitude, fe.magnitude * yn.magnitude, rtol=1e-15)
    with pytest.raises(ConfigurationError):
        F.combined_response(fe, F.filter_numeric(seq, w[:-1]))


def test_normalized_power_ramsey_dc():
    resp = F.filter_numeric(F.build_sequence("ramsey", 2.0), [0.0, 1.0])
    assert resp.normalized_power()[0] == pytest.approx(1.0)


def test_passband_cpmg8():
    pb = F.sequence_passband(F.build_sequence("cpmg", 1.0, 8))
    assert pb.center == pytest.approx(4.0428, abs=2e-3)
    assert pb.fwhm == pytest.approx(0.8798, abs=2e-3)
    assert pb.contains(pb.center)
    assert not pb.contains(2 * pb.f_high)


def test_passband_rescales_with_tau():
    a = F.sequence_passband(F.build_sequence("cpmg", 1.0, 16))
    b = F.sequence_passband(F.build_sequence("cpmg", 1e-3, 16))
    assert b.center == pytest.approx(1e3 * a.center, rel=1e-12)
    assert b.q == pytest.approx(a.q, rel=1e-12)


def test_ramsey_is_lowpass():
    pb = F.sequence_passband(F.build_sequence("ramsey", 1.0))
    assert pb.center == 0.0 and pb.f_low == 0.0
    assert pb.f_high == pytest.approx(0.4429, abs=1e-3)


def test_q_grows_with_pulses():
    qs = [F.sequence_passband(F.build_sequence("cpmg", 1.0, n)).q for n in (4, 8, 16, 32)]
    assert all(b > a for a, b in zip(qs, qs[1:]))


def test_under_resolved_passband():
    seq = F.build_sequence("cpmg", 1.0, 16)
    coarse = F.filter_numeric(seq, F.xi_grid(1.0, 16, 40))
    with pytest.raises(ResolutionError, match="grid spacing"):
        F.passband_analysis(coarse)


def test_grid_missing_edge():
    seq = F.build_sequence("cpmg", 1.0, 8)
    resp = F.filter_numeric(seq, F.xi_grid(1.0, 4.05, 400, xi_min=3.9))
    with pytest.raises(ResolutionError):
        F.passband_analysis(resp)
