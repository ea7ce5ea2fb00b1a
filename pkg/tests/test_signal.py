"""Trace synthesis and single-frequency amplitude extraction."""

import math

import numpy as np
import pytest

from lightpos.signal import (
    NyquistError,
    OOK_FUNDAMENTAL,
    ResolutionError,
    SampleTrace,
    WaveComponent,
    extract_amplitude,
    identify_lamps,
    synthesize_trace,
)


def test_component_validation():
    with pytest.raises(ValueError):
        WaveComponent(0.0, 1.0, "sine")  # dc must use the dc shape
    with pytest.raises(ValueError):
        WaveComponent(10.0, 1.0, "dc")
    with pytest.raises(ValueError):
        WaveComponent(10.0, 1.0, "triangle")


def test_synthesis_rejects_nyquist_violation():
    with pytest.raises(NyquistError):
        synthesize_trace([WaveComponent(400.0, 1.0, "sine")], 640.0, 1.0)


def test_pure_sine_extraction_exact():
    trace = synthesize_trace([WaveComponent(65.0, 3.5, "sine")], 640.0, 1.0)
    assert extract_amplitude(trace, 65.0) == pytest.approx(3.5, rel=1e-12)


def test_ook_square_fundamental():
    trace = synthesize_trace([WaveComponent(65.0, 100.0, "square_ook")],
                             640.0, 1.0)
    expected = OOK_FUNDAMENTAL * 100.0
    assert extract_amplitude(trace, 65.0) == pytest.approx(expected, rel=1e-9)


def test_ook_time_average_is_half_peak():
    trace = synthesize_trace([WaveComponent(65.0, 100.0, "square_ook")],
                             640.0, 1.0)
    assert np.mean(trace.samples) == pytest.approx(50.0, rel=1e-9)


def test_dc_rejection_exact():
    trace = synthesize_trace([WaveComponent(0.0, 850.0, "dc")], 640.0, 1.0)
    assert extract_amplitude(trace, 65.0) == 0.0


def test_extraction_linearity():
    base = synthesize_trace([WaveComponent(65.0, 1.0, "square_ook")],
                            640.0, 1.0)
    scaled = synthesize_trace([WaveComponent(65.0, 7.25, "square_ook")],
                              640.0, 1.0)
    a1 = extract_amplitude(base, 65.0)
    a2 = extract_amplitude(scaled, 65.0)
    assert a2 == pytest.approx(7.25 * a1, rel=1e-12)


def test_interferers_leave_target_amplitude_intact():
    comps = [
        WaveComponent(65.0, 100.0, "square_ook"),
        WaveComponent(0.0, 850.0, "dc"),
        WaveComponent(100.0, 30.0, "sine"),
    ]
    trace = synthesize_trace(comps, 640.0, 1.0)
    got = extract_amplitude(trace, 65.0)
    assert got == pytest.approx(OOK_FUNDAMENTAL * 100.0, rel=0.02)


def test_three_ook_lamps_separate_exactly_when_commensurate():
    # 0.4 s at 640 Hz holds an integer number of periods of every tone,
    # so the single-bin projection separates them exactly.
    comps = [WaveComponent(f, p, "square_ook")
             for f, p in ((55.0, 80.0), (65.0, 50.0), (75.0, 20.0))]
    trace = synthesize_trace(comps, 640.0, 0.4)
    for f, p in ((55.0, 80.0), (65.0, 50.0), (75.0, 20.0)):
        got = extract_amplitude(trace, f)
        assert got == pytest.approx(OOK_FUNDAMENTAL * p, rel=1e-9)


def test_three_ook_lamps_short_window_leakage_bounded():
    # A 0.3 s window truncates the tones mid-period; the resulting
    # leakage is bounded but not zero, worst for the weakest lamp.
    comps = [WaveComponent(f, p, "square_ook")
             for f, p in ((55.0, 80.0), (65.0, 50.0), (75.0, 20.0))]
    trace = synthesize_trace(comps, 640.0, 0.3)
    for f, p in ((55.0, 80.0), (65.0, 50.0), (75.0, 20.0)):
        got = extract_amplitude(trace, f)
        assert got == pytest.approx(OOK_FUNDAMENTAL * p, rel=0.16)


def test_noise_seeded_and_deterministic():
    comps = [WaveComponent(65.0, 10.0, "square_ook")]
    a = synthesize_trace(comps, 640.0, 1.0, gaussian_noise_sd=1.0, seed=5)
    b = synthesize_trace(comps, 640.0, 1.0, gaussian_noise_sd=1.0, seed=5)
    c = synthesize_trace(comps, 640.0, 1.0, gaussian_noise_sd=1.0, seed=6)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_extract_rejects_out_of_band_frequency():
    trace = synthesize_trace([WaveComponent(65.0, 1.0, "sine")], 640.0, 1.0)
    with pytest.raises(ValueError):
        extract_amplitude(trace, 0.0)
    with pytest.raises(ValueError):
        extract_amplitude(trace, 320.0)


def test_extract_needs_one_full_period():
    trace = SampleTrace(640.0, np.zeros(64))  # 0.1 s
    with pytest.raises(ValueError):
        extract_amplitude(trace, 5.0)


def test_identify_lamps_resolution_guard():
    trace = synthesize_trace([WaveComponent(65.0, 1.0, "sine")], 640.0, 0.3)
    with pytest.raises(ResolutionError):
        identify_lamps(trace, [65.0, 66.0])


def test_identify_lamps_noise_floor_zeroes_absent_lamps():
    comps = [WaveComponent(65.0, 100.0, "square_ook")]
    trace = synthesize_trace(comps, 640.0, 0.3, gaussian_noise_sd=0.5, seed=1)
    readings = {r.freq_hz: r.amplitude
                for r in identify_lamps(trace, [55.0, 65.0, 75.0])}
    assert readings[55.0] == 0.0
    assert readings[75.0] == 0.0
    assert readings[65.0] == pytest.approx(OOK_FUNDAMENTAL * 100.0, rel=0.03)
