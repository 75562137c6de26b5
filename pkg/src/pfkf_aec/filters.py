"""Streaming frequency-domain adaptive filters for echo cancellation.

All filters share one interface: ``step(x_new, y)`` consumes ``L`` new
reference samples and the matching ``L`` microphone samples and returns a
:class:`FilterOutput`; ``time_weights()`` exports the length-``N`` time-domain
coefficient vector.

* :class:`PFKF`  partitioned-block frequency-domain Kalman filter; the gain is
  constrained after the step-size product.
* :class:`MPFKF` the modified form: the causal constraint is applied to the
  correlation ``conj(X_b) * E`` before the step size, and the stored weights
  are constrained only when the echo estimate is formed. Its steady state is
  the Wiener solution even when the filter is shorter than the echo path.
* :class:`FKF`   full-band Kalman filter, the one-partition PFKF at frame ``2N``.
* :class:`FBLMS` constrained, bin-normalized frequency-domain block LMS.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionError, ParameterError
from .spectral import FrameGeometry, partition_windows


@dataclass
class FilterOutput:
    echo_estimate: np.ndarray
    error: np.ndarray


@dataclass
class KalmanParams:
    """Noise model and tuning of the Kalman filters.

    ``process_noise`` is either the string ``"scaled"`` (process-noise PSD
    ``(1 - A**2) * |W_b|**2``, which vanishes for a static path ``A = 1``) or
    a non-negative constant added to every bin.
    """

    psd_noise: Union[np.ndarray, float]
    transition: float = 1.0
    process_noise: Union[str, float] = "scaled"
    epsilon: float = 1e-10
    p_init: float = 10.0
    p_floor: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.transition <= 1.0:
            raise ParameterError(f"transition parameter {self.transition} not in (0, 1]")
        if self.epsilon <= 0:
            raise ParameterError("epsilon must be positive")
        if self.p_init <= 0:
            raise ParameterError("p_init must be positive")
        if np.any(np.asarray(self.psd_noise) < 0):
            raise ParameterError("observation-noise PSD must be non-negative")
        if isinstance(self.process_noise, str):
            if self.process_noise != "scaled":
                raise ParameterError(f"unknown process-noise rule {self.process_noise!r}")
        elif self.process_noise < 0:
            raise ParameterError("constant process noise must be non-negative")

    def process_noise_psd(self, weights: np.ndarray):
        if self.process_noise == "scaled":
            return (1.0 - self.transition**2) * np.abs(weights) ** 2
        return float(self.process_noise)


def default_epsilon(reference) -> float:
    """Regularizer scaled to the mean reference power."""
    return 1e-10 * (float(np.mean(np.square(reference))) + 1.0)


def compute_step_size(P, X, psd_noise, epsilon, geom: FrameGeometry) -> np.ndarray:
    """Per-partition, per-bin step sizes.

    ``mu_b[j] = (L/M) P_b[j] / (sum_m |X_m[j]|^2 P_m[j] + psd_noise[j] + epsilon)``.
    Every matrix involved is diagonal, so the inverse is elementwise.
    """
    P = np.asarray(P, dtype=float)
    X = np.asarray(X)
    if P.shape != X.shape or P.shape[-1] != geom.size:
        raise DimensionError(f"P {P.shape} and X {X.shape} must both be (B, {geom.size})")
    denom = np.sum(np.abs(X) ** 2 * P, axis=0) + psd_noise + epsilon
    return (geom.shift / geom.size) * P / denom


def update_err_cov(P, X, mu, transition, geom: FrameGeometry, process_noise=0.0,
                   floor: float = 0.0) -> np.ndarray:
    """``P_b <- A^2 (1 - (L/M) mu_b |X_b|^2) P_b + process_noise``, clamped at ``floor``."""
    P = np.asarray(P, dtype=float)
    shrink = 1.0 - (geom.shift / geom.size) * mu * np.abs(X) ** 2
    P_new = transition**2 * shrink * P + process_noise
    return np.maximum(P_new, floor)


class _BlockFilter:
    """Shared framing: reference history, partition spectra, error spectrum."""

    def __init__(self, geom: FrameGeometry):
        self.geom = geom
        B, M = geom.partitions, geom.size
        self.weights = np.zeros((B, M), dtype=complex)
        self.history = np.zeros((B + 1) * geom.shift)

    def _push(self, x_new, y):
        L = self.geom.shift
        x_new = np.asarray(x_new, dtype=float)
        y = np.asarray(y, dtype=float)
        if x_new.shape != (L,) or y.shape != (L,):
            raise DimensionError(
                f"expected {L} reference and microphone samples, got {x_new.shape} and {y.shape}"
            )
        self.history = np.concatenate([self.history[L:], x_new])
        return np.fft.fft(partition_windows(self.history, self.geom), axis=-1), y

    def _error(self, X, W, y):
        """Overlap-save echo estimate from weight spectra ``W``; returns (echo, e, E)."""
        L = self.geom.shift
        echo = np.fft.ifft(np.sum(X * W, axis=0)).real[L:]
        e = y - echo
        E = np.fft.fft(np.concatenate([np.zeros(L), e]))
        return echo, e, E

    def _constrain(self, spec):
        t = np.fft.ifft(spec, axis=-1)
        t[..., self.geom.shift:] = 0
        return np.fft.fft(t, axis=-1)

    def time_weights(self) -> np.ndarray:
        """Causal time-domain taps, concatenated over partitions (length N)."""
        L = self.geom.shift
        return np.fft.ifft(self.weights, axis=-1).real[:, :L].reshape(-1)

    def load_time_weights(self, w) -> None:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.geom.n_taps,):
            raise DimensionError(f"expected {self.geom.n_taps} taps, got {w.shape}")
        blocks = np.zeros((self.geom.partitions, self.geom.size))
        blocks[:, : self.geom.shift] = w.reshape(self.geom.partitions, -1)
        self.weights = np.fft.fft(blocks, axis=-1)


class PFKF(_BlockFilter):
    """Partitioned-block frequency-domain Kalman filter (simplified, diagonal).

    >>> geom = FrameGeometry(n_taps=256, partitions=4)
    >>> f = PFKF(geom, KalmanParams(psd_noise=0.01 * geom.size))
    """

    modified = False

    def __init__(self, geom: FrameGeometry, params: KalmanParams):
        super().__init__(geom)
        self.params = params
        psd = np.asarray(params.psd_noise, dtype=float)
        if psd.ndim and psd.shape != (geom.size,):
            raise DimensionError(f"psd_noise must be scalar or length {geom.size}")
        self.err_cov = np.full((geom.partitions, geom.size), float(params.p_init))

    def _output_weights(self):
        return self.weights

    def step(self, x_new, y) -> FilterOutput:
        p = self.params
        X, y = self._push(x_new, y)
        W_out = self._output_weights()
        echo, e, E = self._error(X, W_out, y)

        mu = compute_step_size(self.err_cov, X, p.psd_noise, p.epsilon, self.geom)
        corr = np.conj(X) * E
        if self.modified:
            gain = mu * self._constrain(corr)
        else:
            gain = self._constrain(mu * corr)

        # Process noise follows the causal (modelled) part of each partition only.
        psi = p.process_noise_psd(W_out)
        self.err_cov = update_err_cov(
            self.err_cov, X, mu, p.transition, self.geom, psi, p.p_floor
        )
        self.weights = p.transition * (self.weights + gain)
        return FilterOutput(echo, e)


class MPFKF(PFKF):
    """PFKF with the causal constraint moved ahead of the step size.

    The stored weight blocks carry a non-zero wraparound half, which is
    removed (one FFT pair per partition) before the echo estimate is formed.
    """

    modified = True

    def _output_weights(self):
        return self._constrain(self.weights)


class FKF(PFKF):
    """Full-band frequency-domain Kalman filter: one partition, frame size 2N."""

    def __init__(self, n_taps: int, params: KalmanParams):
        super().__init__(FrameGeometry(n_taps, 1), params)


class FBLMS(_BlockFilter):
    """Constrained overlap-save FDAF with per-bin power normalization.

    ``W <- W + G_causal[mu conj(X) E / (P_x + eps)]`` with
    ``P_x <- a P_x + (1 - a) |X|^2``; ``P_x`` starts from the first frame's ``|X|^2``.
    """

    def __init__(self, n_taps: int, step_size: float = 0.5, power_smoothing: float = 0.9,
                 epsilon: float = 1e-10):
        if not 0.0 <= power_smoothing < 1.0:
            raise ParameterError("power_smoothing must lie in [0, 1)")
        if step_size <= 0:
            raise ParameterError("step_size must be positive")
        super().__init__(FrameGeometry(n_taps, 1))
        self.step_size = step_size
        self.power_smoothing = power_smoothing
        self.epsilon = epsilon
        self.power = None

    def step(self, x_new, y) -> FilterOutput:
        X, y = self._push(x_new, y)
        echo, e, E = self._error(X, self.weights, y)
        a = self.power_smoothing
        inst = np.abs(X[0]) ** 2
        self.power = inst if self.power is None else a * self.power + (1 - a) * inst
        grad = self.step_size * np.conj(X) * E / (self.power + self.epsilon)
        self.weights = self.weights + self._constrain(grad)
        return FilterOutput(echo, e)
