"""Block DFT primitives, overlap-save framing and the two constraint projections.

Conventions: the forward transform is unnormalized and the inverse carries the
1/M factor, so ``inverse_dft(forward_dft(x) * forward_dft(h))`` is the circular
convolution of ``x`` and ``h`` with no extra scaling.

Every function operates on the last axis, so a stack of ``B`` partition
blocks with shape ``(B, M)`` is transformed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FrameGeometry:
    """Partitioned-block layout: ``n_taps = partitions * shift``, ``size = 2 * shift``."""

    n_taps: int
    partitions: int

    def __post_init__(self):
        if self.n_taps <= 0 or self.partitions <= 0:
            raise ParameterError("n_taps and partitions must be positive")
        if self.n_taps % self.partitions:
            raise ParameterError(
                f"n_taps={self.n_taps} is not divisible by partitions={self.partitions}"
            )
        if not _is_pow2(self.shift):
            raise ParameterError(f"block shift {self.shift} is not a power of two")

    @property
    def shift(self) -> int:
        """Block shift L (new samples per frame, taps per partition)."""
        return self.n_taps // self.partitions

    @property
    def size(self) -> int:
        """Transform size M = 2L."""
        return 2 * self.shift

    @classmethod
    def from_shift(cls, shift: int, partitions: int) -> "FrameGeometry":
        return cls(shift * partitions, partitions)


def _check_block(a: np.ndarray, size: int | None) -> int:
    if a.ndim == 0:
        raise DimensionError("expected at least a 1-D block")
    m = a.shape[-1]
    if size is not None and m != size:
        raise DimensionError(f"block length {m} != expected {size}")
    if m < 2 or not _is_pow2(m):
        raise DimensionError(f"block length {m} is not a power of two >= 2")
    return m


def forward_dft(block, size: int | None = None) -> np.ndarray:
    """Unnormalized DFT ``X[j] = sum_n x[n] exp(-2j*pi*j*n/M)`` along the last axis."""
    block = np.asarray(block)
    _check_block(block, size)
    return np.fft.fft(block, axis=-1)


def inverse_dft(spec, size: int | None = None) -> np.ndarray:
    """Inverse of :func:`forward_dft` (carries the 1/M factor). Returns complex values."""
    spec = np.asarray(spec)
    _check_block(spec, size)
    return np.fft.ifft(spec, axis=-1)


def _time_window(spec, geom: FrameGeometry, keep_first: bool) -> np.ndarray:
    spec = np.asarray(spec)
    _check_block(spec, geom.size)
    t = np.fft.ifft(spec, axis=-1)
    if keep_first:
        t[..., geom.shift:] = 0
    else:
        t[..., : geom.shift] = 0
    return np.fft.fft(t, axis=-1)


def project_causal(spec, geom: FrameGeometry) -> np.ndarray:
    """Apply ``F diag(I_L, 0_L) F^-1``: zero the last L time-domain samples."""
    return _time_window(spec, geom, keep_first=True)


def project_anticausal(spec, geom: FrameGeometry) -> np.ndarray:
    """Apply ``F diag(0_L, I_L) F^-1``: zero the first L time-domain samples."""
    return _time_window(spec, geom, keep_first=False)


def make_reference_spectrum(x_b, geom: FrameGeometry) -> np.ndarray:
    """Spectrum of the M most recent reference samples of one (or each) partition.

    Multiplying by the diagonal reference matrix is an elementwise product
    with this spectrum, i.e. circular convolution with ``x_b``.
    """
    return forward_dft(np.asarray(x_b, dtype=float), geom.size)


def partition_windows(history: np.ndarray, geom: FrameGeometry) -> np.ndarray:
    """Slice a reference history of ``(B + 1) * L`` samples into B overlapping windows.

    Row ``b`` holds the M samples ending ``b * L`` samples before the newest one,
    so row 0 is the current frame and row ``B - 1`` the oldest partition.
    """
    L, B = geom.shift, geom.partitions
    if history.shape[-1] != (B + 1) * L:
        raise DimensionError(
            f"reference history has {history.shape[-1]} samples, expected {(B + 1) * L}"
        )
    starts = (B - 1 - np.arange(B)) * L
    idx = starts[:, None] + np.arange(geom.size)[None, :]
    return history[idx]
