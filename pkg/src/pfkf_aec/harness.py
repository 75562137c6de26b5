"""Seeded experiment runner: scenes, trial loop, averaging and CSV output.

A run is fully determined by its :class:`ExperimentSpec`. Trial ``t`` draws
every random quantity from ``make_rng(seed + t)``, so trials can run in any
order or in parallel and still reduce to the same averaged traces.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError, FormatError, ParameterError
from .filters import FBLMS, FKF, MPFKF, PFKF, KalmanParams, default_epsilon
from .metrics import MisalignmentTrace, average_traces, misalignment_db, steady_state_value
from .signals import (
    Scene,
    design_coloring_filter,
    fir_filter,
    gen_synthetic_rir,
    gen_white_noise,
    load_wav,
    make_rng,
    speech_shaped_noise,
)
from .spectral import FrameGeometry
from .wiener import analytic_correlations, estimate_correlations, solve_wiener

log = logging.getLogger(__name__)

ALGORITHMS = ("pfkf", "mpkf", "fkf", "fblms")
SCENES = ("illustrating", "aec", "custom")
SWEEP_A = (0.999, 0.9999, 1.0)
SWEEP_ALGORITHMS = ("pfkf", "mpkf")
AEC_FS = 16000
AEC_RIR_TAPS = 2048
AEC_RT60 = 1.2
STEADY_FRACTION = 0.1
ROOM_STREAM = 1
FBLMS_STEP = 0.5
FBLMS_SMOOTHING = 0.9

SCENE_DEFAULTS = {
    "illustrating": dict(n=256, partitions=4, frames=4000, trials=20),
    "aec": dict(n=1024, partitions=16, frames=8000, trials=5),
    "custom": dict(n=1024, partitions=16, frames=8000, trials=5),
}


@dataclass
class ExperimentSpec:
    scene: str = "illustrating"
    algorithms: tuple = ALGORITHMS
    n: int = 256
    partitions: int = 4
    snr_db: float = 20.0
    transition_a: tuple = (1.0,)
    trials: int = 20
    seed: int = 0
    frames: int = 4000
    reference_wav: str | None = None
    out: str = "results"
    jobs: int = 1

    def __post_init__(self):
        self.algorithms = tuple(self.algorithms)
        self.transition_a = tuple(float(a) for a in self.transition_a)

    @classmethod
    def for_scene(cls, scene: str, **overrides) -> "ExperimentSpec":
        if scene not in SCENE_DEFAULTS:
            raise ConfigError(f"unknown scene {scene!r}; choose from {', '.join(SCENES)}")
        values = dict(SCENE_DEFAULTS[scene], scene=scene)
        values.update(overrides)
        # a transition sweep compares the two Kalman variants unless told otherwise
        if "algorithms" not in overrides and len(tuple(values.get("transition_a", ()))) > 1:
            values["algorithms"] = SWEEP_ALGORITHMS
        return cls(**values)

    @property
    def geometry(self) -> FrameGeometry:
        return FrameGeometry(self.n, self.partitions)

    def validate(self) -> None:
        if self.scene not in SCENES:
            raise ConfigError(f"unknown scene {self.scene!r}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ConfigError(f"unknown algorithms {bad}; choose from {', '.join(ALGORITHMS)}")
        try:
            self.geometry
        except ParameterError as exc:
            raise ConfigError(f"invalid geometry: {exc}") from None
        if {"fkf", "fblms"} & set(self.algorithms) and self.n & (self.n - 1):
            raise ConfigError(f"fkf/fblms need a power-of-two filter length, got {self.n}")
        if self.trials < 1 or self.frames < 1 or self.jobs < 1:
            raise ConfigError("trials, frames and jobs must be >= 1")
        if not self.transition_a:
            raise ConfigError("at least one transition parameter is required")
        for a in self.transition_a:
            if not 0.0 < a <= 1.0:
                raise ConfigError(f"transition parameter {a} outside (0, 1]")
        if math.isnan(self.snr_db):
            raise ConfigError("snr_db is NaN")
        if self.scene == "custom" and not self.reference_wav:
            raise ConfigError("scene 'custom' needs --reference-wav")
        if self.scene == "illustrating" and self.reference_wav:
            raise ConfigError("--reference-wav only applies to the aec/custom scenes")

    @property
    def n_samples(self) -> int:
        return self.frames * self.geometry.shift


# --- manifest (flat "key = json" text) -------------------------------------

def write_manifest(spec: ExperimentSpec, path) -> None:
    with open(path, "w") as fh:
        for f in fields(spec):
            value = getattr(spec, f.name)
            if isinstance(value, tuple):
                value = list(value)
            fh.write(f"{f.name} = {json.dumps(value)}\n")


def read_config(path) -> dict:
    known = {f.name for f in fields(ExperimentSpec)}
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in known:
                raise ConfigError(f"{path}:{lineno}: unrecognized line {line!r}")
            try:
                out[key] = json.loads(value.strip())
            except json.JSONDecodeError:
                out[key] = value.strip()
    return out


# --- scenes ------------------------------------------------------------------

@dataclass
class TrialResult:
    trial: int
    traces: dict
    final_taps: dict
    wiener: np.ndarray


def illustrating_reference(n: int) -> np.ndarray:
    """Wiener solution of the illustrating scene from exact correlations."""
    lp = design_coloring_filter("lowpass4")
    hp = design_coloring_filter("highpass512")
    return solve_wiener(analytic_correlations(lp, hp, 0.0, n))


def _load_reference_wav(spec: ExperimentSpec) -> np.ndarray:
    try:
        samples, fs = load_wav(spec.reference_wav)
    except FileNotFoundError:
        raise ConfigError(f"reference WAV {spec.reference_wav!r} not found") from None
    except FormatError as exc:
        raise ConfigError(str(exc)) from None
    if fs != AEC_FS:
        raise ConfigError(f"reference WAV must be sampled at {AEC_FS} Hz, got {fs} Hz")
    if samples.size < spec.n_samples:
        raise ConfigError(
            f"reference WAV has {samples.size} samples; {spec.frames} frames need {spec.n_samples}"
        )
    if not np.any(samples[: spec.n_samples]):
        raise ConfigError("reference WAV is silent")
    return samples[: spec.n_samples]


def build_scene(spec: ExperimentSpec, trial: int, wav=None) -> Scene:
    rng = make_rng(spec.seed + trial)
    n = spec.n_samples
    if spec.scene == "illustrating":
        x = fir_filter(gen_white_noise(rng, n), design_coloring_filter("lowpass4"))
        path = design_coloring_filter("highpass512")
    else:
        # one fixed room per run; the reference and noise vary per trial
        path = gen_synthetic_rir(make_rng(spec.seed, ROOM_STREAM), AEC_RIR_TAPS, AEC_RT60, AEC_FS)
        x = wav if wav is not None else speech_shaped_noise(rng, n)
    return Scene.build(x, path, rng, spec.snr_db)


def make_filters(spec: ExperimentSpec, scene: Scene, transition: float) -> dict:
    geom = spec.geometry
    eps = default_epsilon(scene.reference)
    var = scene.noise_variance

    def kalman(size):
        return KalmanParams(psd_noise=var * size, transition=transition, epsilon=eps)

    makers = {
        "pfkf": lambda: PFKF(geom, kalman(geom.size)),
        "mpkf": lambda: MPFKF(geom, kalman(geom.size)),
        "fkf": lambda: FKF(spec.n, kalman(2 * spec.n)),
        "fblms": lambda: FBLMS(spec.n, FBLMS_STEP, FBLMS_SMOOTHING, eps),
    }
    return {name: makers[name]() for name in spec.algorithms}


def run_filter(filt, x, y, w_ref, frame_shift: int, frames: int) -> np.ndarray:
    """Run one filter over the record; misalignment sampled every ``frame_shift`` samples.

    Filters with a longer block shift hold their last value between updates.
    """
    S = filt.geom.shift
    n_steps = (frame_shift * frames) // S
    per_step = np.empty(n_steps + 1)
    per_step[0] = misalignment_db(filt.time_weights(), w_ref)
    for k in range(n_steps):
        filt.step(x[k * S:(k + 1) * S], y[k * S:(k + 1) * S])
        per_step[k + 1] = misalignment_db(filt.time_weights(), w_ref)
    done = (np.arange(1, frames + 1) * frame_shift) // S
    return per_step[done]


def run_trial(spec: ExperimentSpec, trial: int, transition: float,
              w_ref=None, wav=None) -> TrialResult:
    scene = build_scene(spec, trial, wav)
    if w_ref is None:
        w_ref = solve_wiener(estimate_correlations(scene.reference, scene.microphone, spec.n))
    traces, taps = {}, {}
    for name, filt in make_filters(spec, scene, transition).items():
        traces[name] = run_filter(
            filt, scene.reference, scene.microphone, w_ref, spec.geometry.shift, spec.frames
        )
        taps[name] = filt.time_weights()
    return TrialResult(trial, traces, taps, w_ref)


def _trial_job(args):
    return run_trial(*args)


def run_trials(spec: ExperimentSpec, transition: float) -> list[TrialResult]:
    wav = _load_reference_wav(spec) if spec.reference_wav else None
    w_ref = illustrating_reference(spec.n) if spec.scene == "illustrating" else None
    jobs = [(spec, t, transition, w_ref, wav) for t in range(spec.trials)]
    if spec.jobs > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_trial_job, jobs))
    else:
        results = [_trial_job(j) for j in jobs]
    return sorted(results, key=lambda r: r.trial)


def aggregate(spec: ExperimentSpec, results: list[TrialResult]) -> dict:
    L = spec.geometry.shift
    return {
        name: average_traces(
            [MisalignmentTrace(r.traces[name], name, L, r.trial) for r in results]
        )
        for name in spec.algorithms
    }


# --- output --------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(round(float(v), 9))


def _a_tag(a: float) -> str:
    return f"A{a:g}"


def write_trace_csv(path, trace: MisalignmentTrace) -> None:
    L = trace.frame_shift
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "samples_elapsed", f"{trace.label}_misalignment_db"])
        for k, v in enumerate(trace.values, 1):
            w.writerow([k, k * L, _fmt(v)])


def write_tap_dump(path, wiener, taps: dict, count: int = 10) -> None:
    n = wiener.size
    start = max(0, n - count)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tap_index", "wiener", *taps])
        for i in range(start, n):
            w.writerow([i, _fmt(wiener[i]), *(_fmt(t[i]) for t in taps.values())])


@dataclass
class RunReport:
    traces: dict = field(default_factory=dict)  # (A, alg) -> averaged trace
    steady_state: dict = field(default_factory=dict)  # (A, alg) -> dB
    final_taps: dict = field(default_factory=dict)  # A -> {alg: mean taps}
    wiener: dict = field(default_factory=dict)  # A -> mean Wiener reference
    files: list = field(default_factory=list)


def _run_one(spec: ExperimentSpec, transition: float, report: RunReport, tap_dump: bool):
    results = run_trials(spec, transition)
    averaged = aggregate(spec, results)
    os.makedirs(spec.out, exist_ok=True)
    for name, trace in averaged.items():
        path = os.path.join(spec.out, f"{spec.scene}_{_a_tag(transition)}_{name}.csv")
        write_trace_csv(path, trace)
        report.files.append(path)
        report.traces[transition, name] = trace
        report.steady_state[transition, name] = steady_state_value(trace, STEADY_FRACTION)
    taps = {name: np.mean([r.final_taps[name] for r in results], axis=0) for name in spec.algorithms}
    wiener = np.mean([r.wiener for r in results], axis=0)
    report.final_taps[transition] = taps
    report.wiener[transition] = wiener
    if tap_dump:
        path = os.path.join(spec.out, f"{spec.scene}_{_a_tag(transition)}_taps.csv")
        write_tap_dump(path, wiener, taps)
        report.files.append(path)


def run_illustrating_example(spec: ExperimentSpec) -> RunReport:
    """Under-modeling example: averaged traces for each algorithm plus a tap dump."""
    spec.validate()
    report = RunReport()
    _run_one(spec, spec.transition_a[0], report, tap_dump=True)
    return report


def run_transition_sweep(spec: ExperimentSpec) -> RunReport:
    """One averaged trace per algorithm for every value in ``spec.transition_a``."""
    spec.validate()
    report = RunReport()
    for a in spec.transition_a:
        _run_one(spec, a, report, tap_dump=False)
    return report


def run_aec_example(spec: ExperimentSpec) -> RunReport:
    """Echo-path example with a synthetic 2048-tap room response at 16 kHz."""
    spec.validate()
    report = RunReport()
    _run_one(spec, spec.transition_a[0], report, tap_dump=True)
    return report


def run_experiment(spec: ExperimentSpec) -> RunReport:
    spec.validate()
    os.makedirs(spec.out, exist_ok=True)
    write_manifest(spec, os.path.join(spec.out, "manifest.txt"))
    if len(spec.transition_a) > 1:
        report = run_transition_sweep(spec)
    elif spec.scene == "illustrating":
        report = run_illustrating_example(spec)
    else:
        report = run_aec_example(spec)
    with open(os.path.join(spec.out, "summary.txt"), "w") as fh:
        for (a, name), value in report.steady_state.items():
            fh.write(f"{spec.scene} A={a:g} {name} steady_state_db={value:.3f}\n")
    return report
