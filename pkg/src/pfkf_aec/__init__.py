"""Partitioned-block frequency-domain Kalman echo cancellers.

Implements the partitioned-block frequency-domain Kalman filter (PFKF), a
modified variant whose steady state is the Wiener solution even when the
adaptive filter is shorter than the echo path (MPFKF), the full-band FKF and
constrained FBLMS baselines, a Toeplitz Wiener solver and a seeded experiment
harness.
"""

from .errors import ConfigError, DimensionError, FormatError, NumericalError, ParameterError
from .spectral import (
    FrameGeometry,
    forward_dft,
    inverse_dft,
    make_reference_spectrum,
    project_anticausal,
    project_causal,
)
from .filters import (
    FBLMS,
    FKF,
    MPFKF,
    PFKF,
    FilterOutput,
    KalmanParams,
    compute_step_size,
    update_err_cov,
)
from .wiener import (
    CorrelationModel,
    analytic_correlations,
    estimate_correlations,
    levinson_solve,
    solve_wiener,
)
from .metrics import MisalignmentTrace, average_traces, misalignment_db, steady_state_value

__version__ = "0.1.0"
