import math

import numpy as np
import pytest

from dpcusum.detectors import CUSUM, DP_CUSUM, ONLINE_PCPD, DetectorConfig, run_to_stop
from dpcusum.errors import ConfigError, InputError
from dpcusum.harness import (
    LANE_ARL,
    LANE_WADD,
    SWEEP_CSV_HEADER,
    _trial_stream,
    estimate_arl,
    estimate_wadd,
    interp_wadd_at_arl,
    privacy_audit,
    simulate_stopping_times,
    sweep_delay_vs_arl,
    sweep_rows_to_csv,
    tail_oracle_suite,
    tune_threshold,
)
from dpcusum.models import ModelPair, Regime

LAP = ModelPair.laplace_shift(0.4)
BERN = ModelPair.bernoulli_shift(0.3, 0.6)


@pytest.mark.parametrize(
    "model,variant,kwargs",
    [
        (LAP, CUSUM, {}),
        (LAP, DP_CUSUM, {"epsilon": 1.0}),
        (LAP, ONLINE_PCPD, {"epsilon": 1.0, "window": 25}),
        (ModelPair.gaussian_shift(0.4), "delta_dp_cusum", {"epsilon": 1.0, "delta": 0.1}),
        (BERN, DP_CUSUM, {"epsilon": 1.0}),
    ],
)
@pytest.mark.parametrize("regime", [Regime.PRE, Regime.POST])
def test_engine_matches_scalar_path(model, variant, kwargs, regime):
    cfg = DetectorConfig.for_model(variant, model, 3.0, **kwargs)
    trials, horizon, seed = 40, 1200, 20260821
    stop, cens = simulate_stopping_times(cfg, model, regime, trials, horizon, seed, LANE_ARL)
    tau = horizon + 1 if regime is Regime.PRE else 0
    for t in range(trials):
        out = run_to_stop(cfg, model, tau, horizon, _trial_stream(seed, LANE_ARL, t))
        assert stop[t] == out.stopping_time
        assert cens[t] == out.censored


def test_report_determinism():
    cfg = DetectorConfig.for_model(DP_CUSUM, LAP, 3.0, epsilon=0.8)
    a = estimate_arl(cfg, LAP, 50, 2000, 7)
    b = estimate_arl(cfg, LAP, 50, 2000, 7)
    assert a == b
    assert a.metric == "arl"
    assert a.config["detector"]["variant"] == "dp_cusum"
    assert a.config["model"] == LAP.to_dict()
    assert a.master_seed == 7


def test_jobs_do_not_change_results():
    cfg = DetectorConfig.for_model(DP_CUSUM, LAP, 3.0, epsilon=0.8)
    serial = estimate_arl(cfg, LAP, 80, 1500, 7, jobs=1)
    parallel = estimate_arl(cfg, LAP, 80, 1500, 7, jobs=2)
    assert serial == parallel


def test_arl_and_wadd_use_disjoint_streams():
    cfg = DetectorConfig.for_model(DP_CUSUM, LAP, 3.0, epsilon=0.8)
    a, _ = simulate_stopping_times(cfg, LAP, Regime.PRE, 60, 2000, 7, LANE_ARL)
    w, _ = simulate_stopping_times(cfg, LAP, Regime.PRE, 60, 2000, 7, LANE_WADD)
    assert not np.array_equal(a, w)


def test_negative_threshold_stops_at_one():
    cfg = DetectorConfig(variant=CUSUM, b=-1.0)
    rep = estimate_arl(cfg, ModelPair.laplace_shift(0.2), 200, 100, 3)
    assert rep.estimate == 1.0
    assert rep.std_error == 0.0
    assert rep.censored_fraction == 0.0


def test_infinite_threshold_censors_all():
    cfg = DetectorConfig(variant=CUSUM, b=math.inf)
    rep = estimate_arl(cfg, LAP, 30, 500, 3)
    assert rep.estimate == 500.0
    assert rep.censored_fraction == 1.0


def test_wadd_slope_near_inverse_kl():
    # unit-variance gaussian shift 0.5: I0 = 0.125, so delay/b -> 8
    model = ModelPair.gaussian_shift(0.5)
    cfg = DetectorConfig(variant=CUSUM, b=25.0)
    rep = estimate_wadd(cfg, model, 1500, 20_000, 13)
    assert rep.censored_fraction == 0.0
    assert rep.estimate / 25.0 == pytest.approx(8.0, rel=0.10)


def test_wadd_monotone_in_threshold():
    model = ModelPair.gaussian_shift(0.5)
    prev = 0.0
    for b in (5.0, 10.0, 20.0):
        cfg = DetectorConfig(variant=CUSUM, b=b)
        est = estimate_wadd(cfg, model, 300, 20_000, 13).estimate
        assert est >= prev
        prev = est


def test_noiseless_dp_matches_cusum_estimates():
    cusum = DetectorConfig(variant=CUSUM, b=2.5)
    noiseless = DetectorConfig.for_model(DP_CUSUM, LAP, 2.5, epsilon=math.inf)
    a = estimate_wadd(cusum, LAP, 120, 4000, 21)
    b = estimate_wadd(noiseless, LAP, 120, 4000, 21)
    assert a.estimate == b.estimate


def test_tail_oracles_full_grid():
    for model in (ModelPair.laplace_shift(0.2), ModelPair.gaussian_shift(0.5), BERN):
        rep = tail_oracle_suite(model, [1.0, 2.0, 4.0], [5, 20, 100], 10_000, 31, lambdas=[0.2, 0.5])
        assert rep.all_ok, [e for e in rep.entries if not e.ok]
        # frequencies at nested thresholds are nested in-sample
        by_cell = {(e.t, e.param): e.empirical for e in rep.entries if e.kind == "tail"}
        for t in (5, 20, 100):
            assert by_cell[(t, 4.0)] <= by_cell[(t, 2.0)] <= by_cell[(t, 1.0)]


def test_tail_oracle_zero_threshold_trivial():
    rep = tail_oracle_suite(LAP, [0.0], [5], 500, 1)
    assert rep.all_ok


def test_tail_oracle_validation():
    with pytest.raises(InputError):
        tail_oracle_suite(LAP, [1.0], [], 100, 1)
    with pytest.raises(InputError):
        tail_oracle_suite(LAP, [1.0], [5], 100, 1, lambdas=[1.5])


def test_tune_threshold_hits_target():
    model = ModelPair.laplace_shift(0.5)
    spec = {"variant": CUSUM}
    b = tune_threshold(spec, model, 300.0, 400, 5)
    cfg = DetectorConfig.for_model(CUSUM, model, b, epsilon=None)
    got = estimate_arl(cfg, model, 400, 12_000, 5).estimate
    assert abs(got - 300.0) <= 0.05 * 300.0


def test_tune_threshold_validation():
    with pytest.raises(InputError):
        tune_threshold({"variant": CUSUM}, LAP, 1.0, 100, 5)


def test_interp_recovers_linear_curve():
    # these points are linear in log(arl), so the geometric midpoint of
    # [10, 100] must land exactly halfway between the wadd values
    pts = [(10.0, 1.0), (100.0, 2.0), (1000.0, 3.0)]
    out = interp_wadd_at_arl(pts, [10.0, math.sqrt(10.0 * 100.0), 1000.0])
    assert out[0] == pytest.approx(1.0)
    assert out[1] == pytest.approx(1.5)
    assert out[2] == pytest.approx(3.0)
    with pytest.raises(InputError):
        interp_wadd_at_arl(pts, [5.0])
    with pytest.raises(InputError):
        interp_wadd_at_arl([(10.0, 1.0)], [10.0])


def test_sweep_rows_and_csv():
    detectors = [{"variant": CUSUM}, {"variant": DP_CUSUM}]
    rows = sweep_delay_vs_arl(detectors, LAP, [0.5, 1.0], [2.0, 3.0], 40, 11, horizon=2000)
    assert len(rows) == 2 + 4
    keys = [(r.detector, r.epsilon if r.epsilon is not None else -1.0, r.b) for r in rows]
    assert keys == sorted(keys)
    lines = sweep_rows_to_csv(rows)
    assert lines[0] == SWEEP_CSV_HEADER
    for line in lines[1:]:
        assert len(line.split(",")) == 12
    cusum_line = next(l for l in lines[1:] if l.startswith("cusum,"))
    fields = cusum_line.split(",")
    assert fields[3] == "" and fields[4] == ""  # epsilon, delta empty
    assert fields[1] == "laplace_shift"


def test_sweep_ladder_extension_is_stable():
    # adding thresholds must not change existing rows
    det = [{"variant": DP_CUSUM, "epsilon": 0.8}]
    short = sweep_delay_vs_arl(det, LAP, None, [2.0], 40, 11, horizon=2000)
    long = sweep_delay_vs_arl(det, LAP, None, [2.0, 4.0], 40, 11, horizon=2000)
    assert short[0] == long[0]


def test_sweep_per_detector_thresholds():
    det = [
        {"variant": CUSUM, "thresholds": [2.0]},
        {"variant": DP_CUSUM, "epsilon": 0.8, "thresholds": [3.0, 4.0]},
    ]
    rows = sweep_delay_vs_arl(det, LAP, None, None, 30, 11, horizon=1500)
    assert [(r.detector, r.b) for r in rows] == [
        ("cusum", 2.0),
        ("dp_cusum", 3.0),
        ("dp_cusum", 4.0),
    ]


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        sweep_delay_vs_arl([{"variant": DP_CUSUM, "epsilon": 0.8}], LAP, None, None, 10, 1)
    with pytest.raises(ConfigError):
        sweep_delay_vs_arl([{"epsilon": 0.8}], LAP, None, [1.0], 10, 1)
    with pytest.raises(ConfigError):
        sweep_delay_vs_arl([{"variant": DP_CUSUM, "bogus": 1}], LAP, None, [1.0], 10, 1)


def test_audit_control_is_exactly_one():
    stream = [1, 0, 1, 1, 0, 1]
    rep = privacy_audit(BERN, stream, None, 1.0, 2.0, 6, 20_000, 90)
    assert rep.passed
    reliable = [e for e in rep.entries if e.reliable]
    assert reliable, "control audit needs reliable buckets"
    assert all(e.ratio == 1.0 for e in rep.entries)
    assert all(e.p_x == e.p_xprime for e in rep.entries)


def test_audit_neighbor_passes_with_margin():
    stream = [1, 0, 1, 1, 0, 1, 1, 0]
    rep = privacy_audit(BERN, stream, 3, 10.0, 2.0, 8, 100_000, 91)
    assert rep.passed
    assert rep.max_upper_bound < math.exp(10.0)


def test_audit_report_shape():
    stream = [1, 1, 0, 1]
    rep = privacy_audit(BERN, stream, 0, 1.0, 1.5, 4, 5000, 92)
    ts = [e.t for e in rep.entries]
    assert ts == [1, 2, 3, 4, 0]
    d = rep.to_dict()
    assert set(d["entries"][0]) == {"t", "p_x", "p_xprime", "ratio_upper"}
    assert d["pass"] == rep.passed
    assert sorted(rep.flagged) == sorted(t for t, e in zip(ts, rep.entries) if not e.reliable)


def test_audit_validation():
    with pytest.raises(ConfigError):
        privacy_audit(ModelPair.gaussian_shift(0.5), [1] * 4, 0, 1.0, 1.0, 4, 100, 1)
    with pytest.raises(InputError):
        privacy_audit(BERN, [1, 0], 0, 1.0, 1.0, 4, 100, 1)
    with pytest.raises(InputError):
        privacy_audit(BERN, [1, 2, 0, 1], 0, 1.0, 1.0, 4, 100, 1)
    with pytest.raises(InputError):
        privacy_audit(BERN, [1] * 13, 0, 1.0, 1.0, 13, 100, 1)
    with pytest.raises(InputError):
        privacy_audit(BERN, [1] * 4, 7, 1.0, 1.0, 4, 100, 1)


def test_audit_determinism():
    stream = [1, 0, 0, 1, 1]
    a = privacy_audit(BERN, stream, 2, 1.0, 2.0, 5, 10_000, 17)
    b = privacy_audit(BERN, stream, 2, 1.0, 2.0, 5, 10_000, 17)
    assert a == b
