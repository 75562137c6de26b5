"""Optimal finite-length (Wiener) solution used as the misalignment reference."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError, ParameterError

log = logging.getLogger(__name__)

# Reflection coefficients closer to 1 than this hand over to Cholesky.
REFLECTION_LIMIT = 1.0 - 1e-12


@dataclass
class CorrelationModel:
    """Reference autocorrelation ``R_x(i)`` and cross-correlation ``p_i``, ``i = 0..N-1``."""

    autocorr: np.ndarray
    crosscorr: np.ndarray

    def __post_init__(self):
        self.autocorr = np.asarray(self.autocorr, dtype=float)
        self.crosscorr = np.asarray(self.crosscorr, dtype=float)
        if self.autocorr.shape != self.crosscorr.shape or self.autocorr.ndim != 1:
            raise ParameterError("autocorr and crosscorr must be 1-D of equal length")

    @property
    def n(self) -> int:
        return self.autocorr.size

    def toeplitz(self) -> np.ndarray:
        return scipy.linalg.toeplitz(self.autocorr)


def estimate_correlations(x, y, n: int) -> CorrelationModel:
    """Biased time-average estimates ``(1/T) sum_t x(t) x(t-i)`` and ``(1/T) sum_t y(t) x(t-i)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ParameterError("x and y must have equal length")
    T = x.size
    if n < 1 or T < 10 * n:
        raise ParameterError(f"need at least {10 * n} samples for {n} lags, got {T}")
    nfft = 1 << int(np.ceil(np.log2(2 * T)))
    Xf = np.fft.rfft(x, nfft)
    rx = np.fft.irfft(np.abs(Xf) ** 2, nfft)[:n] / T
    p = np.fft.irfft(np.fft.rfft(y, nfft) * np.conj(Xf), nfft)[:n] / T
    return CorrelationModel(rx, p)


def analytic_correlations(coloring, w0, noise_var: float, n: int) -> CorrelationModel:
    """Exact correlations for unit-variance white noise colored by ``coloring``.

    The observation noise is independent of the reference, so ``noise_var``
    does not enter ``p``; it is accepted for symmetry with the scene description.
    """
    h = np.asarray(coloring, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    full = np.correlate(h, h, mode="full")  # lags -(len-1)..(len-1)
    centre = h.size - 1

    def rx(lag):
        lag = np.abs(lag)
        out = np.zeros(lag.shape)
        ok = lag <= centre
        out[ok] = full[centre + lag[ok]]
        return out

    lags = np.arange(n)
    autocorr = rx(lags)
    j = np.arange(w0.size)
    crosscorr = np.array([np.dot(w0, rx(i - j)) for i in lags])
    return CorrelationModel(autocorr, crosscorr)


def levinson_solve(r, b) -> tuple[np.ndarray, float]:
    """Solve the symmetric Toeplitz system ``toeplitz(r) x = b`` by Levinson recursion.

    Returns the solution and the largest reflection-coefficient magnitude seen.
    Raises :class:`NumericalError` if the recursion breaks down.
    """
    r = np.asarray(r, dtype=float)
    b = np.asarray(b, dtype=float)
    n = r.size
    if r[0] <= 0:
        raise NumericalError(f"R_x(0) = {r[0]} is not positive")
    a = np.zeros(n)  # forward predictor, a[0] == 1 implicitly
    a[0] = 1.0
    x = np.zeros(n)
    err = r[0]
    x[0] = b[0] / r[0]
    kmax = 0.0
    for m in range(1, n):
        # reflection coefficient for order m
        k = -np.dot(a[:m], r[m:0:-1]) / err
        kmax = max(kmax, abs(k))
        if abs(k) >= REFLECTION_LIMIT:
            raise NumericalError(f"reflection coefficient |k|={abs(k):.15f} at order {m}")
        a[: m + 1] = a[: m + 1] + k * a[m::-1]
        err *= 1.0 - k * k
        # extend the solution with the backward predictor a[::-1]
        mu = (b[m] - np.dot(x[:m], r[m:0:-1])) / err
        x[: m + 1] += mu * a[m::-1]
    return x, kmax


def solve_wiener(model: CorrelationModel) -> np.ndarray:
    """Wiener solution ``R_x^-1 p`` for the N x N Toeplitz autocorrelation matrix."""
    try:
        w, _ = levinson_solve(model.autocorr, model.crosscorr)
    except NumericalError as exc:
        log.info("Levinson recursion failed (%s); falling back to Cholesky", exc)
        R = model.toeplitz()
        try:
            c = scipy.linalg.cho_factor(R)
        except np.linalg.LinAlgError:
            cond = np.linalg.cond(R) if R.size else np.inf
            raise NumericalError(
                f"autocorrelation matrix is not positive definite (cond={cond:.3e})"
            ) from None
        w = scipy.linalg.cho_solve(c, model.crosscorr)
    if not np.all(np.isfinite(w)):
        raise NumericalError("non-finite Wiener solution")
    return w
