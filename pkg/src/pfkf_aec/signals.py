"""Deterministic test-signal generation and WAV I/O.

Randomness comes from numpy's ``Generator`` over the PCG64 bit generator,
seeded explicitly through :func:`make_rng`; trial ``t`` of a run with base
seed ``s`` uses seed ``s + t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.io.wavfile
import scipy.signal

from .errors import FormatError, ParameterError

# First 8 taps of the AR(1) response 1 / (1 - 0.95 z^-1): a speech-like
# low-pass tilt (about 30 dB from DC to Nyquist).
SPEECH_SHAPING = 0.95 ** np.arange(8)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator; extra ``stream`` keys select independent child streams."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=stream)))


def gen_white_noise(rng: np.random.Generator, n: int, variance: float = 1.0) -> np.ndarray:
    if variance < 0:
        raise ParameterError(f"negative variance {variance}")
    if n < 0:
        raise ParameterError(f"negative sample count {n}")
    return math.sqrt(variance) * rng.standard_normal(n)


def fir_filter(x, h) -> np.ndarray:
    """``y[n] = sum_j h[j] x[n-j]`` with zero history; output has the length of ``x``."""
    h = np.asarray(h, dtype=float)
    if h.size == 0:
        raise ParameterError("empty filter")
    x = np.asarray(x, dtype=float)
    return scipy.signal.lfilter(h, [1.0], x)


def design_coloring_filter(kind: str) -> np.ndarray:
    """Fixed coloring filters of the illustrating example.

    ``lowpass4``     4-tap decaying lowpass [0.5, 0.3, 0.15, 0.05] (unit DC
                     gain, minimum phase). Its zeros lie strictly inside the
                     unit circle, so the reference PSD has no nulls and the
                     256-tap autocorrelation matrix stays well conditioned
                     (condition number ~11).
    ``boxcar4``      4-tap moving average. Exact spectral nulls at half and
                     full Nyquist make the Wiener solution dominated by
                     near-null eigenmodes; kept for comparison only.
    ``highpass512``  512-tap Hamming-windowed sinc, cutoff at half Nyquist.
                     An even-length symmetric FIR cannot pass Nyquist, so the
                     half-band lowpass is modulated by (-1)^n instead, giving
                     an antisymmetric filter with an exact zero at DC.
    """
    if kind == "lowpass4":
        return np.array([0.5, 0.3, 0.15, 0.05])
    if kind == "boxcar4":
        return np.full(4, 0.25)
    if kind == "highpass512":
        lp = scipy.signal.firwin(512, 0.5, window="hamming")
        return lp * (-1.0) ** np.arange(512)
    raise ParameterError(f"unknown coloring filter {kind!r}")


def gen_synthetic_rir(rng: np.random.Generator, n_taps: int, rt60_s: float,
                      fs_hz: float) -> np.ndarray:
    """Exponentially decaying Gaussian noise, peak-normalized.

    The amplitude envelope ``exp(-3 ln(10) t / rt60)`` makes the energy fall
    by 60 dB after ``rt60_s`` seconds.
    """
    if n_taps <= 0 or rt60_s <= 0 or fs_hz <= 0:
        raise ParameterError("n_taps, rt60_s and fs_hz must all be positive")
    t = np.arange(n_taps) / fs_hz
    h = rng.standard_normal(n_taps) * np.exp(-3.0 * math.log(10.0) * t / rt60_s)
    return h / np.max(np.abs(h))


def speech_shaped_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """Unit-variance white noise through :data:`SPEECH_SHAPING` (unit output power)."""
    h = SPEECH_SHAPING / np.linalg.norm(SPEECH_SHAPING)
    return fir_filter(gen_white_noise(rng, n), h)


def mix_at_snr(echo, rng: np.random.Generator, snr_db: float):
    """Add white Gaussian noise at ``snr_db`` measured over the whole record.

    Returns ``(microphone, noise, noise_variance)``. The noise realization is
    rescaled so the measured ratio hits ``snr_db`` exactly; ``snr_db = inf``
    adds nothing.
    """
    echo = np.asarray(echo, dtype=float)
    p_echo = float(np.mean(echo**2)) if echo.size else 0.0
    if p_echo == 0.0:
        raise ParameterError("echo has zero power")
    if math.isinf(snr_db) and snr_db > 0:
        noise = np.zeros_like(echo)
        return echo.copy(), noise, 0.0
    variance = p_echo / 10.0 ** (snr_db / 10.0)
    raw = rng.standard_normal(echo.size)
    noise = raw * math.sqrt(variance / np.mean(raw**2))
    return echo + noise, noise, variance


@dataclass
class Scene:
    """Reference, microphone and noise streams with ``y = w0 * x + s``."""

    reference: np.ndarray
    microphone: np.ndarray
    noise: np.ndarray
    noise_variance: float
    echo_path: np.ndarray

    @classmethod
    def build(cls, reference, echo_path, rng: np.random.Generator, snr_db: float) -> "Scene":
        echo = fir_filter(reference, echo_path)
        mic, noise, var = mix_at_snr(echo, rng, snr_db)
        return cls(np.asarray(reference, float), mic, noise, var, np.asarray(echo_path, float))


def load_wav(path) -> tuple[np.ndarray, int]:
    """Read a mono PCM16 or float32 WAV file; samples are scaled to [-1, 1]."""
    try:
        fs, data = scipy.io.wavfile.read(path)
    except (ValueError, EOFError) as exc:
        raise FormatError(f"{path}: malformed WAV file ({exc})") from None
    if data.ndim != 1:
        raise FormatError(f"{path}: expected mono audio, found {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(float) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(float)
    else:
        raise FormatError(f"{path}: unsupported sample format {data.dtype}")
    return samples, int(fs)


def write_wav(path, samples, fs_hz: int, pcm16: bool = False) -> None:
    samples = np.asarray(samples, dtype=float)
    if pcm16:
        data = np.clip(np.round(samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = samples.astype(np.float32)
    scipy.io.wavfile.write(path, int(fs_hz), data)
