"""Pre/post-change distribution pairs and their log-likelihood ratios.

Three families are supported, each with unit scale:

* ``laplace_shift``:   Laplace(0, 1) -> Laplace(mu, 1), llr(x) = |x| - |x - mu|
* ``gaussian_shift``:  N(0, 1) -> N(mu, 1),             llr(x) = mu x - mu^2 / 2
* ``bernoulli_shift``: Bern(p0) -> Bern(p1)

The per-observation llr is the quantity the detectors accumulate, so its
range determines both the sensitivity of the statistic and, for unbounded
families, the tail-trimmed sensitivity ``a_delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, InputError
from .noise import laplace_from_uniform

LAPLACE_SHIFT = "laplace_shift"
GAUSSIAN_SHIFT = "gaussian_shift"
BERNOULLI_SHIFT = "bernoulli_shift"
_KINDS = (LAPLACE_SHIFT, GAUSSIAN_SHIFT, BERNOULLI_SHIFT)

_A_DELTA_TOL = 1e-9


class Regime(Enum):
    PRE = "pre"
    POST = "post"


@dataclass(frozen=True)
class SensitivityInfo:
    """Worst-case per-observation llr swing, or None when unbounded."""

    bounded: bool
    value: float | None


@dataclass(frozen=True)
class ModelPair:
    """One pre/post-change pair.  Construct through the classmethods."""

    kind: str
    mu: float | None = None
    p0: float | None = None
    p1: float | None = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown model kind: {self.kind!r}")
        if self.scale != 1.0:
            raise ConfigError(f"scale is fixed at 1.0, got {self.scale}")
        if self.kind in (LAPLACE_SHIFT, GAUSSIAN_SHIFT):
            if self.mu is None or not np.isfinite(self.mu) or self.mu == 0.0:
                raise ConfigError(f"{self.kind} needs a finite nonzero mu, got {self.mu}")
        else:
            for name, p in (("p0", self.p0), ("p1", self.p1)):
                if p is None or not 0.0 < p < 1.0:
                    raise ConfigError(f"bernoulli_shift needs {name} in (0, 1), got {p}")
            if self.p0 == self.p1:
                raise ConfigError("bernoulli_shift needs p0 != p1")

    @classmethod
    def laplace_shift(cls, mu: float) -> "ModelPair":
        return cls(kind=LAPLACE_SHIFT, mu=float(mu))

    @classmethod
    def gaussian_shift(cls, mu: float) -> "ModelPair":
        return cls(kind=GAUSSIAN_SHIFT, mu=float(mu))

    @classmethod
    def bernoulli_shift(cls, p0: float, p1: float) -> "ModelPair":
        return cls(kind=BERNOULLI_SHIFT, p0=float(p0), p1=float(p1))

    @classmethod
    def from_dict(cls, d: dict) -> "ModelPair":
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError(f"model config must be a dict with a 'kind' key, got {d!r}")
        kind = d["kind"]
        if kind == BERNOULLI_SHIFT:
            allowed = {"kind", "p0", "p1"}
        else:
            allowed = {"kind", "mu"}
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unexpected model keys for {kind!r}: {sorted(extra)}")
        if kind == BERNOULLI_SHIFT:
            return cls(kind=kind, p0=d.get("p0"), p1=d.get("p1"))
        if kind in (LAPLACE_SHIFT, GAUSSIAN_SHIFT):
            return cls(kind=kind, mu=d.get("mu"))
        raise ConfigError(f"unknown model kind: {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == BERNOULLI_SHIFT:
            return {"kind": self.kind, "p0": self.p0, "p1": self.p1}
        return {"kind": self.kind, "mu": self.mu}


def llr(model: ModelPair, x) -> np.ndarray | float:
    """Per-observation log-likelihood ratio log f1(x) / f0(x)."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputError("llr requires finite observations")
    if model.kind == LAPLACE_SHIFT:
        out = np.abs(arr) - np.abs(arr - model.mu)
    elif model.kind == GAUSSIAN_SHIFT:
        out = model.mu * arr - 0.5 * model.mu**2
    else:
        l1 = math.log(model.p1 / model.p0)
        l0 = math.log((1.0 - model.p1) / (1.0 - model.p0))
        out = arr * l1 + (1.0 - arr) * l0
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def sensitivity(model: ModelPair) -> SensitivityInfo:
    """Range of llr over the support: sup - inf, None for gaussian_shift."""
    if model.kind == LAPLACE_SHIFT:
        return SensitivityInfo(True, 2.0 * abs(model.mu))
    if model.kind == GAUSSIAN_SHIFT:
        return SensitivityInfo(False, None)
    l1 = math.log(model.p1 / model.p0)
    l0 = math.log((1.0 - model.p1) / (1.0 - model.p0))
    return SensitivityInfo(True, abs(l1 - l0))


def kl_post(model: ModelPair) -> float:
    """KL divergence of the post-change law from the pre-change law.

    This is the mean llr drift per observation after the change, the rate
    that turns thresholds into detection delays.
    """
    if model.kind == LAPLACE_SHIFT:
        m = abs(model.mu)
        return m + math.exp(-m) - 1.0
    if model.kind == GAUSSIAN_SHIFT:
        return 0.5 * model.mu**2
    p0, p1 = model.p0, model.p1
    return p1 * math.log(p1 / p0) + (1.0 - p1) * math.log((1.0 - p1) / (1.0 - p0))


def sample(
    model: ModelPair,
    regime: Regime,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
):
    """Draw observations from the pre- or post-change law.

    Laplace uses the inverse CDF, Gaussian a standard-normal shift, and
    Bernoulli a threshold on one uniform, so draw counts per observation are
    fixed and stream positions are reproducible.
    """
    if model.kind == LAPLACE_SHIFT:
        loc = 0.0 if regime is Regime.PRE else model.mu
        u = rng.random(size) - 0.5
        return loc + laplace_from_uniform(u, 1.0)
    if model.kind == GAUSSIAN_SHIFT:
        loc = 0.0 if regime is Regime.PRE else model.mu
        return loc + rng.standard_normal(size)
    p = model.p0 if regime is Regime.PRE else model.p1
    u = rng.random(size)
    if size is None:
        return 1.0 if u < p else 0.0
    return (u < p).astype(np.float64)


def normal_upper_quantile(q: float) -> float:
    """z_q with P(Z >= z_q) = q for standard normal Z."""
    if not 0.0 < q < 1.0:
        raise InputError(f"q must be in (0, 1), got {q}")
    return float(ndtri(1.0 - q))


def _laplace_cdf(x: float, loc: float) -> float:
    if x <= loc:
        return 0.5 * math.exp(x - loc)
    return 1.0 - 0.5 * math.exp(loc - x)


def _abs2llr_survival(model: ModelPair, t: float) -> float:
    """max over both laws of P(2|llr(X)| >= t), in closed form."""
    if t <= 0.0:
        return 1.0
    if model.kind == LAPLACE_SHIFT:
        # llr is -m on x <= 0, 2x - m on (0, m), m on x >= m (after mapping
        # mu < 0 to its mirror image), so 2|llr| maxes out at 2m with an atom.
        m = abs(model.mu)
        if t > 2.0 * m:
            return 0.0
        hi = (m + 0.5 * t) / 2.0
        lo = (m - 0.5 * t) / 2.0
        out = 0.0
        for loc in (0.0, m):
            out = max(out, 1.0 - _laplace_cdf(hi, loc) + _laplace_cdf(lo, loc))
        return out
    if model.kind == BERNOULLI_SHIFT:
        y1 = 2.0 * abs(math.log(model.p1 / model.p0))
        y0 = 2.0 * abs(math.log((1.0 - model.p1) / (1.0 - model.p0)))
        out = 0.0
        for p in (model.p0, model.p1):
            mass = (p if y1 >= t else 0.0) + ((1.0 - p) if y0 >= t else 0.0)
            out = max(out, mass)
        return out
    raise ConfigError(f"no analytic survival for kind {model.kind!r}")


def a_delta(model: ModelPair, delta: float) -> float:
    """Tail-trimmed sensitivity: smallest t with P(2|llr(X)| >= t) <= delta/2
    under both laws.

    gaussian_shift has the closed form 2|mu| z_{delta/4} + mu^2 with z_q the
    standard-normal upper-q quantile.  Bounded families bisect the exact
    survival function and return the feasible upper end of the bracket
    (within 1e-9 of the infimum); the survival function can have an atom at
    the top of its support, where only the upper end satisfies the
    constraint.
    """
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta must be in (0, 1), got {delta}")
    if model.kind == GAUSSIAN_SHIFT:
        z = normal_upper_quantile(delta / 4.0)
        return 2.0 * abs(model.mu) * z + model.mu**2
    half = delta / 2.0
    lo = 0.0
    hi = 1.0
    for _ in range(200):
        if _abs2llr_survival(model, hi) <= half:
            break
        hi *= 2.0
    else:
        raise RuntimeError("a_delta bracket expansion did not terminate")
    while hi - lo > _A_DELTA_TOL:
        mid = 0.5 * (lo + hi)
        if _abs2llr_survival(model, mid) <= half:
            hi = mid
        else:
            lo = mid
    return hi
