"""Normalized misalignment and trace aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

FLOOR_DB = -300.0


def misalignment_db(w_hat, w_ref) -> float:
    """``10 log10(||w_hat - w_ref||^2 / ||w_ref||^2)``, clamped at -300 dB.

    Normalization uses ``w_ref`` only, so the arguments are not interchangeable.
    """
    w_hat = np.asarray(w_hat, dtype=float)
    w_ref = np.asarray(w_ref, dtype=float)
    if w_hat.shape != w_ref.shape:
        raise ParameterError(f"shape mismatch {w_hat.shape} vs {w_ref.shape}")
    ref = float(np.dot(w_ref, w_ref))
    if ref == 0.0:
        raise ParameterError("reference weights have zero norm")
    d = w_hat - w_ref
    num = float(np.dot(d, d))
    if num == 0.0:
        return FLOOR_DB
    return max(10.0 * math.log10(num / ref), FLOOR_DB)


@dataclass
class MisalignmentTrace:
    values: np.ndarray
    label: str
    frame_shift: int
    trial: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.maximum(np.asarray(self.values, dtype=float), FLOOR_DB)

    def __len__(self):
        return self.values.size


def average_traces(traces: list[MisalignmentTrace]) -> MisalignmentTrace:
    """Per-frame mean of the dB values of several trials."""
    if not traces:
        raise ParameterError("no traces to average")
    first = traces[0]
    for t in traces[1:]:
        if len(t) != len(first):
            raise ParameterError(f"trace lengths differ: {len(t)} vs {len(first)}")
        if t.label != first.label or t.frame_shift != first.frame_shift:
            raise ParameterError("cannot average traces of different algorithms/frame shifts")
    mean = np.mean(np.stack([t.values for t in traces]), axis=0)
    return MisalignmentTrace(mean, first.label, first.frame_shift)


def steady_state_value(trace, fraction: float = 0.1) -> float:
    """Mean over the final ``ceil(fraction * len)`` frames."""
    values = trace.values if isinstance(trace, MisalignmentTrace) else np.asarray(trace, float)
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"fraction {fraction} not in (0, 1]")
    if values.size == 0:
        raise ParameterError("empty trace")
    k = max(1, math.ceil(fraction * values.size - 1e-9))
    return float(np.mean(values[-k:]))
