import math

import numpy as np
import pytest
from scipy.stats import norm

from dpcusum.errors import ConfigError, InputError
from dpcusum.models import (
    ModelPair,
    Regime,
    a_delta,
    kl_post,
    llr,
    normal_upper_quantile,
    sample,
    sensitivity,
)

LAP = ModelPair.laplace_shift(0.2)
GAUSS = ModelPair.gaussian_shift(0.5)
BERN = ModelPair.bernoulli_shift(0.3, 0.6)


def test_constructor_validation():
    with pytest.raises(ConfigError):
        ModelPair.laplace_shift(0.0)
    with pytest.raises(ConfigError):
        ModelPair.gaussian_shift(math.nan)
    with pytest.raises(ConfigError):
        ModelPair.bernoulli_shift(0.0, 0.5)
    with pytest.raises(ConfigError):
        ModelPair.bernoulli_shift(0.4, 0.4)
    with pytest.raises(ConfigError):
        ModelPair(kind="laplace_shift", mu=0.2, scale=2.0)


def test_dict_round_trip():
    for m in (LAP, GAUSS, BERN):
        assert ModelPair.from_dict(m.to_dict()) == m
    with pytest.raises(ConfigError):
        ModelPair.from_dict({"kind": "laplace_shift", "mu": 0.2, "extra": 1})
    with pytest.raises(ConfigError):
        ModelPair.from_dict({"kind": "unknown_shift"})


def test_llr_values():
    assert llr(LAP, 0.3) == pytest.approx(abs(0.3) - abs(0.1), abs=1e-15)
    assert llr(LAP, -1.0) == pytest.approx(1.0 - 1.2, abs=1e-15)
    assert llr(GAUSS, 2.0) == pytest.approx(0.5 * 2.0 - 0.125, abs=1e-15)
    l1 = math.log(0.6 / 0.3)
    l0 = math.log(0.4 / 0.7)
    assert llr(BERN, 1.0) == pytest.approx(l1, abs=0.0)
    assert llr(BERN, 0.0) == pytest.approx(l0, abs=0.0)


def test_llr_vectorized_and_validated():
    xs = np.array([-0.5, 0.0, 0.1, 2.0])
    out = llr(LAP, xs)
    assert out.shape == xs.shape
    assert out[2] == llr(LAP, 0.1)
    with pytest.raises(InputError):
        llr(LAP, np.array([0.0, math.nan]))
    with pytest.raises(InputError):
        llr(GAUSS, math.inf)


def test_sensitivity():
    info = sensitivity(LAP)
    assert info.bounded and info.value == pytest.approx(0.4, abs=0.0)
    info = sensitivity(GAUSS)
    assert not info.bounded and info.value is None
    info = sensitivity(BERN)
    # log(p1 (1-p0) / (p0 (1-p1))) = log 3.5
    assert info.bounded
    assert info.value == pytest.approx(1.2527629684953681, abs=1e-15)


def test_kl_post():
    assert kl_post(LAP) == pytest.approx(0.018730753077981888, abs=1e-15)
    assert kl_post(GAUSS) == pytest.approx(0.125, abs=0.0)
    want = 0.6 * math.log(2.0) + 0.4 * math.log(4.0 / 7.0)
    assert kl_post(BERN) == pytest.approx(want, abs=1e-15)


def test_sample_moments():
    rng = np.random.default_rng(5)
    n = 100_000
    x = sample(LAP, Regime.POST, rng, size=n)
    # Laplace(mu, 1): mean mu, var 2
    assert abs(float(np.mean(x)) - 0.2) < 4 * math.sqrt(2.0 / n)
    x = sample(GAUSS, Regime.PRE, rng, size=n)
    assert abs(float(np.mean(x))) < 4 / math.sqrt(n)
    x = sample(BERN, Regime.POST, rng, size=n)
    p = float(np.mean(x))
    assert set(np.unique(x)) <= {0.0, 1.0}
    assert abs(p - 0.6) < 4 * math.sqrt(0.24 / n)


def test_sample_scalar_matches_vector():
    a = np.random.default_rng(11)
    b = np.random.default_rng(11)
    xs = sample(LAP, Regime.PRE, a, size=5)
    ys = [sample(LAP, Regime.PRE, b) for _ in range(5)]
    assert np.array_equal(xs, np.array(ys))


def test_a_delta_gaussian_closed_form():
    a1 = a_delta(ModelPair.gaussian_shift(0.1), 0.1)
    assert a1 == pytest.approx(0.402, abs=1e-3)
    a5 = a_delta(ModelPair.gaussian_shift(0.5), 0.1)
    assert a5 == pytest.approx(2.21, abs=1e-2)
    # closed form 2|mu| z_{delta/4} + mu^2
    z = normal_upper_quantile(0.025)
    assert a1 == pytest.approx(0.2 * z + 0.01, abs=1e-14)


def test_a_delta_gaussian_minimal():
    # per-tail criterion: each one-sided probability is at most delta/4 at
    # A, and shrinking A by 1e-3 pushes the binding tail above delta/4
    mu, delta = 0.1, 0.1
    a = a_delta(ModelPair.gaussian_shift(mu), delta)

    def binding_tail(t):
        # under the pre-change law, -2 llr >= t  <=>  X <= -(t - mu^2)/(2 mu)
        return float(norm.sf((t - mu * mu) / (2.0 * mu)))

    assert binding_tail(a) <= delta / 4.0 + 1e-12
    assert binding_tail(a - 1e-3) > delta / 4.0


def test_a_delta_bisection_laplace():
    # |llr| tops out at mu with positive mass, so the infimum sits at 2 mu;
    # the returned value exceeds it by at most the bisection tolerance
    a = a_delta(LAP, 0.1)
    assert 0.0 < a - 0.4 <= 1e-8
    rng = np.random.default_rng(17)
    n = 100_000
    for regime in (Regime.PRE, Regime.POST):
        x = sample(LAP, regime, rng, size=n)
        freq = float(np.mean(2.0 * np.abs(llr(LAP, x)) >= a))
        assert freq <= 0.05


def test_a_delta_bisection_bernoulli():
    a = a_delta(BERN, 0.1)
    want = 2.0 * math.log(2.0)  # 2 |llr(1)|, the larger branch
    assert 0.0 < a - want <= 1e-8


def test_a_delta_monotone_in_delta():
    m = ModelPair.gaussian_shift(0.3)
    assert a_delta(m, 0.01) > a_delta(m, 0.1) > a_delta(m, 0.5)


def test_a_delta_validation():
    with pytest.raises(InputError):
        a_delta(GAUSS, 0.0)
    with pytest.raises(InputError):
        a_delta(GAUSS, 1.0)


def test_normal_upper_quantile():
    assert normal_upper_quantile(0.025) == pytest.approx(1.959964, abs=1e-6)
    assert normal_upper_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InputError):
        normal_upper_quantile(0.0)
