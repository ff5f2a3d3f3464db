import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from lsort.errors import InvalidBand
from oracles import df2_reference
from lsort.filter import (
    STATE_BITS,
    BandpassDesign,
    FilterState,
    default_coeffs,
    design_bandpass,
    filter_step,
    quantize_coeff,
    quantize_coeffs,
)

FS = 30000.0


def run_fixed(x, coeffs=None):
    coeffs = coeffs or default_coeffs()
    st_ = FilterState(1)
    return np.array([filter_step(st_, 0, int(v), coeffs) for v in x]), st_


def test_highpass_has_zero_at_dc():
    d = design_bandpass(FS, 300, 6000)
    assert d.highpass.b0 == -d.highpass.b1


def test_half_power_at_band_edges():
    d = design_bandpass(FS, 300, 6000)
    for sec, f in ((d.highpass, 300.0), (d.lowpass, 6000.0)):
        z = np.exp(-1j * 2 * math.pi * f / FS)
        h = (sec.b0 + sec.b1 * z) / (1 + sec.a1 * z)
        passband = 1.0  # both sections have unit passband gain
        assert abs(abs(h) - passband / math.sqrt(2)) < 1e-12


def test_design_matches_scipy_butterworth():
    d = design_bandpass(FS, 300, 6000)
    b, a = signal.butter(1, 300, "highpass", fs=FS)
    assert np.allclose([d.highpass.b0, d.highpass.b1, d.highpass.a1], [b[0], b[1], a[1]])
    b, a = signal.butter(1, 6000, "lowpass", fs=FS)
    assert np.allclose([d.lowpass.b0, d.lowpass.b1, d.lowpass.a1], [b[0], b[1], a[1]])


def test_inverted_band_rejected():
    with pytest.raises(InvalidBand):
        design_bandpass(FS, 6000, 300)


@pytest.mark.parametrize("c, raw", [(0.5, 512), (-1.0, -1024), (0.96906, 992)])
def test_quantize_coeff(c, raw):
    assert quantize_coeff(c) == raw


def test_default_coefficients():
    co = default_coeffs()
    assert co.highpass == (993, -993, -962)
    assert co.lowpass == (431, 431, -162)
    assert quantize_coeffs(design_bandpass()) == co


def test_reference_agrees_with_scipy_lfilter():
    d = design_bandpass()
    x = np.random.default_rng(3).integers(-512, 512, 2000).astype(float)
    y = signal.lfilter([d.highpass.b0, d.highpass.b1], [1, d.highpass.a1], x)
    y = signal.lfilter([d.lowpass.b0, d.lowpass.b1], [1, d.lowpass.a1], y)
    assert np.allclose(df2_reference(x, d), y)


def test_zero_in_zero_out():
    y, st_ = run_fixed([0] * 200)
    assert not y.any()
    assert st_.hp == [0] and st_.lp == [0]


def test_dc_decays_monotonically():
    y, _ = run_fixed([1000] * 6000)
    mags = np.abs(y[3:])
    assert np.all(np.diff(mags) <= 0)
    assert mags[-1] == 0


def test_impulse_matches_reference():
    x = np.zeros(64)
    x[0] = 1024
    y, _ = run_fixed(x)
    ref = df2_reference(x, design_bandpass())
    assert np.max(np.abs(y - ref)) <= 4


def test_white_noise_fidelity():
    x = np.random.default_rng(11).integers(-512, 512, 20000)
    y, st_ = run_fixed(x)
    ref = df2_reference(x.astype(float), design_bandpass())
    assert np.max(np.abs(y[25:] - ref[25:])) <= 4
    assert st_.saturations == 0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-256, 255), min_size=50, max_size=300), st.sampled_from([1, 2]))
def test_linearity_within_quantization(xs, alpha):
    y1, _ = run_fixed(xs)
    y2, _ = run_fixed([alpha * v for v in xs])
    assert np.max(np.abs(y2 - alpha * y1)) <= 4


def test_state_serialization_roundtrip():
    st_ = FilterState(2)
    co = default_coeffs()
    for v in (2047, -2048, 1500, 900):
        filter_step(st_, 1, v, co)
    word = st_.pack(1)
    assert word < (1 << STATE_BITS)
    other = FilterState(2)
    other.unpack(1, word)
    assert (other.hp[1], other.lp[1]) == (st_.hp[1], st_.lp[1])


def test_state_width_is_28_bits():
    assert STATE_BITS == 28


def test_channels_are_independent():
    co = default_coeffs()
    a, b = FilterState(2), FilterState(1)
    xs = np.random.default_rng(0).integers(-900, 900, 300)
    for v in xs:
        filter_step(a, 0, 777, co)
        assert filter_step(a, 1, int(v), co) == filter_step(b, 0, int(v), co)
