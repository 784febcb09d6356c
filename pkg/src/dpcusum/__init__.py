"""Differentially private CUSUM change detection.

Library layout:

* ``models``:    pre/post distribution pairs, llr, sensitivity, a_delta
* ``noise``:     Laplace sampling and reproducible random streams
* ``detectors``: CUSUM and its private variants as per-step state machines
* ``calibrate``: privacy factor, ARL lower bound, threshold selection
* ``harness``:   vectorized Monte Carlo estimation, sweeps, privacy audit
* ``cli``:       command-line front end over the above
"""

from .calibrate import (
    CalibrationResult,
    HeatmapCell,
    WaddBoundTerms,
    arl_lower_bound,
    default_heatmap_axes,
    h_factor,
    heatmap_grid,
    solve_threshold,
    wadd_bound_terms,
)
from .detectors import (
    CUSUM,
    DELTA_DP_CUSUM,
    DP_CUSUM,
    ONLINE_PCPD,
    Decision,
    DetectorConfig,
    DetectorState,
    init,
    run_to_stop,
    step,
)
from .errors import ConfigError, InputError
from .harness import (
    SWEEP_CSV_HEADER,
    AuditReport,
    ComparisonReport,
    ExperimentReport,
    MatchedCurve,
    SweepRow,
    TailOracleReport,
    arl_horizon,
    compare_detectors,
    estimate_arl,
    estimate_wadd,
    interp_wadd_at_arl,
    matched_curve,
    privacy_audit,
    simulate_stopping_times,
    sweep_delay_vs_arl,
    sweep_rows_to_csv,
    tail_oracle_suite,
    tune_threshold,
)
from .models import ModelPair, Regime, SensitivityInfo, a_delta, kl_post, llr, sample, sensitivity
from .noise import NoiseScale, RngStream, detector_scale, lap_sample

__all__ = [
    "CalibrationResult",
    "HeatmapCell",
    "WaddBoundTerms",
    "arl_lower_bound",
    "default_heatmap_axes",
    "h_factor",
    "heatmap_grid",
    "solve_threshold",
    "wadd_bound_terms",
    "SWEEP_CSV_HEADER",
    "AuditReport",
    "ComparisonReport",
    "ExperimentReport",
    "MatchedCurve",
    "SweepRow",
    "TailOracleReport",
    "arl_horizon",
    "compare_detectors",
    "estimate_arl",
    "estimate_wadd",
    "interp_wadd_at_arl",
    "matched_curve",
    "privacy_audit",
    "simulate_stopping_times",
    "sweep_delay_vs_arl",
    "sweep_rows_to_csv",
    "tail_oracle_suite",
    "tune_threshold",
    "CUSUM",
    "DELTA_DP_CUSUM",
    "DP_CUSUM",
    "ONLINE_PCPD",
    "Decision",
    "DetectorConfig",
    "DetectorState",
    "init",
    "run_to_stop",
    "step",
    "ConfigError",
    "InputError",
    "ModelPair",
    "Regime",
    "SensitivityInfo",
    "a_delta",
    "kl_post",
    "llr",
    "sample",
    "sensitivity",
    "NoiseScale",
    "RngStream",
    "detector_scale",
    "lap_sample",
]

__version__ = "0.1.0"
