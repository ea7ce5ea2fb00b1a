"""Time-domain light-sensor trace synthesis and single-frequency
amplitude extraction.

Lamps flash on/off at distinct rates; the per-lamp intensity is
recovered as the amplitude of the fundamental at the lamp's flash
frequency.  Extraction uses a single-bin discrete Fourier projection
(Goertzel-style) over a window trimmed to an integer number of periods,
which is exact for commensurate tones and rejects DC exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SHAPE_DC = "dc"
SHAPE_SINE = "sine"
SHAPE_SQUARE_OOK = "square_ook"

# Fundamental amplitude of a 0-to-peak 50%-duty square wave, per unit peak.
OOK_FUNDAMENTAL = 2.0 / math.pi


class NyquistError(ValueError):
    """Raised when a component frequency violates the sampling rate."""


class ResolutionError(ValueError):
    """Raised when candidate frequencies are closer than the window
    resolution."""


@dataclass(frozen=True)
class WaveComponent:
    """One additive component of a sensor trace.

    ``square_ook`` alternates between 0 and ``peak`` at 50% duty;
    synthesis band-limits it at Nyquist (the sensor sees no energy above
    rate/2), so its time average is exactly peak/2 and its fundamental
    exactly (2/pi) * peak.
    """

    freq_hz: float
    peak: float
    shape: str = SHAPE_SQUARE_OOK

    def __post_init__(self):
        if self.shape not in (SHAPE_DC, SHAPE_SINE, SHAPE_SQUARE_OOK):
            raise ValueError(f"unknown shape {self.shape!r}")
        if (self.freq_hz == 0) != (self.shape == SHAPE_DC):
            raise ValueError("freq_hz must be 0 exactly for dc components")
        if self.freq_hz < 0 or self.peak < 0:
            raise ValueError("frequency and peak must be nonnegative")


@dataclass(frozen=True)
class SampleTrace:
    rate_hz: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.rate_hz <= 0 or len(self.samples) < 2:
            raise ValueError("trace needs a positive rate and at least 2 samples")


@dataclass(frozen=True)
class PeakReading:
    freq_hz: float
    amplitude: float


def synthesize_trace(components, rate_hz: float, duration_s: float,
                     gaussian_noise_sd: float = 0.0, seed=None) -> SampleTrace:
    """Sum the components at rate_hz over duration_s, plus seeded
    Gaussian noise.  Deterministic per seed."""
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    fmax = max((c.freq_hz for c in components), default=0.0)
    if rate_hz <= 2 * fmax:
        raise NyquistError(f"rate {rate_hz} Hz <= 2 x {fmax} Hz component")
    n = int(round(rate_hz * duration_s))
    t = np.arange(n) / rate_hz
    x = np.zeros(n)
    for c in components:
        if c.shape == SHAPE_DC:
            x += c.peak
        elif c.shape == SHAPE_SINE:
            x += c.peak * np.sin(2 * math.pi * c.freq_hz * t)
        else:
            # Band-limited OOK square: DC peak/2 plus odd sine harmonics
            # strictly below Nyquist.
            x += 0.5 * c.peak
            h = 1
            while c.freq_hz * h < rate_hz / 2:
                x += (2 * c.peak / (math.pi * h)) * np.sin(
                    2 * math.pi * c.freq_hz * h * t
                )
                h += 2
    if gaussian_noise_sd > 0:
        rng = np.random.default_rng(seed)
        x = x + rng.normal(0.0, gaussian_noise_sd, size=n)
    return SampleTrace(rate_hz, x)


def _trim_window(trace: SampleTrace, freq_hz: float) -> int:
    """Window length in samples covering a whole number of periods."""
    periods = math.floor(len(trace.samples) * freq_hz / trace.rate_hz)
    if periods < 1:
        raise ValueError(
            f"trace shorter than one period of {freq_hz} Hz"
        )
    return min(int(round(periods * trace.rate_hz / freq_hz)), len(trace.samples))


def extract_amplitude(trace: SampleTrace, freq_hz: float) -> float:
    """Amplitude of the sinusoidal component at freq_hz.

    Single-bin DFT projection over a period-trimmed window; the window
    mean is removed first, so a pure DC trace extracts exactly 0.
    """
    if not 0 < freq_hz < trace.rate_hz / 2:
        raise ValueError(f"frequency {freq_hz} Hz outside (0, rate/2)")
    m = _trim_window(trace, freq_hz)
    w = trace.samples[:m] - np.mean(trace.samples[:m])
    phase = -2j * math.pi * freq_hz / trace.rate_hz * np.arange(m)
    return 2.0 * abs(np.sum(w * np.exp(phase))) / m


def identify_lamps(trace: SampleTrace, candidates) -> list[PeakReading]:
    """Per-candidate amplitudes, zeroing readings below the noise floor.

    The floor is 3x the median off-candidate DFT bin magnitude of the
    trace.  Candidates must be separated by more than the window's
    frequency resolution rate/N.
    """
    candidates = [float(f) for f in candidates]
    n = len(trace.samples)
    resolution = trace.rate_hz / n
    for i, f in enumerate(candidates):
        for g in candidates[i + 1:]:
            if abs(f - g) <= resolution:
                raise ResolutionError(
                    f"candidates {f} and {g} Hz closer than the "
                    f"{resolution:.3f} Hz window resolution"
                )

    spectrum = np.abs(np.fft.rfft(trace.samples - np.mean(trace.samples)))
    freqs = np.fft.rfftfreq(n, d=1.0 / trace.rate_hz)
    off = np.ones(len(freqs), dtype=bool)
    off[0] = False
    for f in candidates:
        off &= np.abs(freqs - f) > resolution
    floor = 3.0 * 2.0 * np.median(spectrum[off]) / n if np.any(off) else 0.0

    out = []
    for f in candidates:
        amp = extract_amplitude(trace, f)
        out.append(PeakReading(f, amp if amp > floor else 0.0))
    return out
