import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from pulsed_cascade.pulse import PulseParams, default_start, envelope, support_window, unit_envelope


def test_peak_value():
    p = PulseParams(area=np.pi, t0=0.0, fwhm=1.0)
    assert p.nu == pytest.approx(0.42466, abs=1e-5)
    assert envelope(0.0, p) == pytest.approx(np.pi / np.sqrt(2 * np.pi * p.nu**2), rel=1e-15)
    assert envelope(0.0, p) == pytest.approx(2.9510, abs=5e-4)


def test_half_maximum_at_half_width():
    p = PulseParams(area=np.pi, t0=0.3, fwhm=1.0)
    for t in (p.t0 - 0.5, p.t0 + 0.5):
        assert envelope(t, p) == pytest.approx(0.5 * p.peak, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    area=st.floats(0.0, 20.0),
    t0=st.floats(-5.0, 5.0),
    fwhm=st.floats(1e-3, 5.0),
)
def test_area_is_integral(area, t0, fwhm):
    p = PulseParams(area=area, t0=t0, fwhm=fwhm)
    val, _ = quad(lambda t: envelope(t, p), t0 - 12 * p.nu, t0 + 12 * p.nu, points=[t0], epsabs=0, epsrel=1e-12)
    assert val == pytest.approx(area, rel=1e-8, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(delta=st.floats(0.0, 3.0), fwhm=st.floats(1e-2, 3.0))
def test_envelope_even(delta, fwhm):
    p = PulseParams(area=2.0, t0=0.0, fwhm=fwhm)
    assert envelope(delta, p) == envelope(-delta, p)
    shifted = PulseParams(area=2.0, t0=1.25, fwhm=fwhm)
    a, b = envelope(1.25 + delta, shifted), envelope(1.25 - delta, shifted)
    assert abs(a - b) <= 1e-12 * shifted.peak


def test_unit_envelope_scales():
    p = PulseParams(area=3.0, fwhm=0.7)
    t = np.linspace(-2, 2, 11)
    assert np.allclose(envelope(t, p), 3.0 * unit_envelope(t, p), rtol=1e-15)


def test_support_window_half_max():
    lo, hi = support_window(PulseParams(area=np.pi, t0=0, fwhm=1), 0.5)
    assert lo == pytest.approx(-0.5, abs=1e-14) and hi == pytest.approx(0.5, abs=1e-14)


def test_support_window_tail():
    p = PulseParams(area=np.pi, t0=0, fwhm=1)
    lo, hi = support_window(p, 1e-8)
    assert hi == pytest.approx(2.577, abs=1e-3)
    assert lo == -hi


def test_support_window_degenerate_and_invalid():
    lo, hi = support_window(PulseParams(t0=2.0), 1.0)
    assert lo == hi == 2.0
    with pytest.raises(ValueError):
        support_window(PulseParams(), 0.0)


def test_default_start():
    p = PulseParams(t0=1.0, fwhm=1.0)
    assert default_start(p) == pytest.approx(1.0 - 5 * p.nu)


@pytest.mark.parametrize("kw", [{"area": -1.0}, {"fwhm": 0.0}, {"fwhm": -1.0}, {"area": float("nan")}])
def test_invalid_pulse(kw):
    with pytest.raises(ValueError):
        PulseParams(**kw)
