"""Sequential change detectors as per-step state machines.

All variants share the CUSUM recursion

    S_t = max(0, S_{t-1}) + llr(X_t),   S_0 = 0,

which equals the maximum over candidate change points of the trailing llr
sum.  The private variants compare a noised statistic against a noised
threshold:

* ``cusum``:          stop when S_t >= b
* ``dp_cusum``:       stop when S_t + Z_t >= b + W, Z_t, W ~ Lap(2 sens / eps)
                      with sens the worst-case llr swing of the model
* ``delta_dp_cusum``: same mechanics with sens replaced by the tail-trimmed
                      a_delta(model, delta), for unbounded llr families
* ``online_pcpd``:    windowed baseline; the statistic is the max suffix sum
                      over the last ``window`` llrs, evaluated only once the
                      buffer is full, with fresh Lap(4 sens / eps) per
                      evaluation and one Lap(8 sens / eps) threshold draw

A detector never compares anything at t = 0: the noised statistic starts out
as "no comparison yet" (None), not as a sentinel value.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, InputError
from .models import ModelPair, Regime, a_delta, llr, sample, sensitivity
from .noise import (
    ROLE_DATA,
    ROLE_STAT_NOISE,
    ROLE_THRESH_NOISE,
    NoiseScale,
    RngStream,
    detector_scale,
    lap_sample,
)

CUSUM = "cusum"
DP_CUSUM = "dp_cusum"
DELTA_DP_CUSUM = "delta_dp_cusum"
ONLINE_PCPD = "online_pcpd"
_VARIANTS = (CUSUM, DP_CUSUM, DELTA_DP_CUSUM, ONLINE_PCPD)
_PRIVATE = (DP_CUSUM, DELTA_DP_CUSUM, ONLINE_PCPD)

DEFAULT_WINDOW = 700


class Decision(Enum):
    CONTINUE = "continue"
    STOP = "stop"


@dataclass(frozen=True)
class DetectorConfig:
    """Static description of one detector.

    ``sensitivity_used`` is the llr swing the noise scales are built from;
    resolve it through :meth:`for_model` rather than filling it by hand.
    """

    variant: str
    b: float
    epsilon: float | None = None
    delta: float | None = None
    window: int | None = None
    sensitivity_used: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ConfigError(f"unknown detector variant: {self.variant!r}")
        if self.b is None or math.isnan(self.b):
            raise ConfigError(f"threshold b must be a real number, got {self.b}")
        if self.variant == CUSUM:
            for name in ("epsilon", "delta", "window", "sensitivity_used"):
                if getattr(self, name) is not None:
                    raise ConfigError(f"cusum takes no {name}")
            return
        if self.epsilon is None or not self.epsilon > 0:
            raise ConfigError(f"{self.variant} needs epsilon > 0, got {self.epsilon}")
        if self.sensitivity_used is None or not self.sensitivity_used > 0:
            raise ConfigError(
                f"{self.variant} needs sensitivity_used > 0, got {self.sensitivity_used}"
            )
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must be in (0, 1), got {self.delta}")
        if self.variant == DELTA_DP_CUSUM and self.delta is None:
            raise ConfigError("delta_dp_cusum needs delta")
        if self.variant == ONLINE_PCPD:
            if not isinstance(self.window, int) or self.window < 1:
                raise ConfigError(f"online_pcpd needs a positive integer window, got {self.window}")
        elif self.window is not None:
            raise ConfigError(f"{self.variant} takes no window")
        if self.variant == DP_CUSUM and self.delta is not None:
            raise ConfigError("dp_cusum takes no delta; use delta_dp_cusum")

    @classmethod
    def for_model(
        cls,
        variant: str,
        model: ModelPair,
        b: float,
        epsilon: float | None = None,
        delta: float | None = None,
        window: int | None = None,
    ) -> "DetectorConfig":
        """Build a config, resolving sensitivity_used against the model."""
        if variant == CUSUM:
            return cls(variant=variant, b=float(b))
        info = sensitivity(model)
        if variant == DP_CUSUM:
            if not info.bounded:
                raise ConfigError(
                    "dp_cusum needs a bounded llr; "
                    f"{model.kind} is unbounded, use delta_dp_cusum with a delta"
                )
            sens = info.value
        elif variant == DELTA_DP_CUSUM:
            if delta is None:
                raise ConfigError("delta_dp_cusum needs delta")
            sens = a_delta(model, delta)
        elif variant == ONLINE_PCPD:
            if info.bounded:
                sens = info.value
            else:
                if delta is None:
                    raise ConfigError(
                        f"online_pcpd on {model.kind} needs delta to trim the unbounded llr"
                    )
                sens = a_delta(model, delta)
            if window is None:
                window = DEFAULT_WINDOW
        else:
            raise ConfigError(f"unknown detector variant: {variant!r}")
        return cls(
            variant=variant,
            b=float(b),
            epsilon=float(epsilon) if epsilon is not None else None,
            delta=float(delta) if delta is not None else None,
            window=window,
            sensitivity_used=sens,
        )

    def stat_noise_scale(self) -> NoiseScale:
        if self.variant == CUSUM:
            return NoiseScale(0.0)
        mult = 4 if self.variant == ONLINE_PCPD else 2
        return detector_scale(self.epsilon, self.sensitivity_used, mult)

    def thresh_noise_scale(self) -> NoiseScale:
        if self.variant == CUSUM:
            return NoiseScale(0.0)
        mult = 8 if self.variant == ONLINE_PCPD else 2
        return detector_scale(self.epsilon, self.sensitivity_used, mult)


@dataclass
class DetectorState:
    """Mutable per-run state.  ``s_tilde`` is None until a comparison happens."""

    model: ModelPair
    t: int = 0
    s: float = 0.0
    s_tilde: float | None = None
    w: float = 0.0
    buffer: deque | None = None
    stopped: bool = False
    # Running llr sum and its recent history; the windowed statistic is the
    # running sum minus the minimum over the window's candidate starts.
    _csum: float = 0.0
    _chist: deque | None = field(default=None, repr=False)


def init(
    cfg: DetectorConfig, model: ModelPair, rng: np.random.Generator | None = None
) -> DetectorState:
    """Fresh state; private variants draw the threshold noise W from rng."""
    state = DetectorState(model=model)
    if cfg.variant in _PRIVATE:
        if rng is None:
            raise InputError(f"{cfg.variant} needs an rng to draw threshold noise")
        state.w = lap_sample(cfg.thresh_noise_scale(), rng)
    if cfg.variant == ONLINE_PCPD:
        state.buffer = deque(maxlen=cfg.window)
        state._chist = deque(maxlen=cfg.window)
    return state


def step(
    state: DetectorState,
    cfg: DetectorConfig,
    x: float,
    rng: np.random.Generator | None = None,
) -> tuple[DetectorState, Decision]:
    """Consume one observation; returns the updated state and the decision."""
    if state.stopped:
        raise InputError("detector already stopped; build a fresh state")
    value = llr(state.model, x)
    state.t += 1
    if cfg.variant == ONLINE_PCPD:
        return _step_windowed(state, cfg, value, rng)
    state.s = max(0.0, state.s) + value
    if cfg.variant == CUSUM:
        state.s_tilde = state.s
    else:
        if rng is None:
            raise InputError(f"{cfg.variant} needs an rng for statistic noise")
        state.s_tilde = state.s + lap_sample(cfg.stat_noise_scale(), rng)
    if state.s_tilde >= cfg.b + state.w:
        state.stopped = True
        return state, Decision.STOP
    return state, Decision.CONTINUE


def _step_windowed(
    state: DetectorState, cfg: DetectorConfig, value: float, rng: np.random.Generator | None
) -> tuple[DetectorState, Decision]:
    if rng is None:
        raise InputError("online_pcpd needs an rng for statistic noise")
    # Noise is drawn every step, used only once the buffer is full; this
    # keeps stream positions identical to the vectorized engine.
    z = lap_sample(cfg.stat_noise_scale(), rng)
    state.buffer.append(value)
    state._csum += value
    # _chist holds the running llr sum as of each of the last `window` steps;
    # the windowed max suffix sum is csum_now - min over sums before each
    # candidate start.
    state._chist.append(state._csum)
    if len(state.buffer) < cfg.window:
        return state, Decision.CONTINUE
    base = state._chist[0] - state.buffer[0]
    prior = min((state._chist[i] for i in range(cfg.window - 1)), default=math.inf)
    stat = state._csum - min(base, prior)
    state.s = stat
    state.s_tilde = stat + z
    if state.s_tilde >= cfg.b + state.w:
        state.stopped = True
        return state, Decision.STOP
    return state, Decision.CONTINUE


@dataclass(frozen=True)
class RunOutcome:
    """Stopping time of one run; censored runs report the horizon itself."""

    stopping_time: int
    censored: bool
    trajectory: list[tuple[int, float, float | None]] | None = None


def run_to_stop(
    cfg: DetectorConfig,
    model: ModelPair,
    tau: float,
    horizon: int,
    rng: RngStream,
    trace: bool = False,
) -> RunOutcome:
    """Run one stream until the detector stops or the horizon is hit.

    Observations at t <= tau come from the pre-change law, later ones from
    the post-change law; tau = 0 is change-at-start and tau = inf never
    changes.  Draw order per step is observation first, then statistic
    noise, each from its own child stream of ``rng``.
    """
    if not (tau >= 0):
        raise InputError(f"tau must be >= 0 or inf, got {tau}")
    if not isinstance(horizon, int) or horizon < 1:
        raise InputError(f"horizon must be a positive integer, got {horizon}")
    data_rng = rng.child(ROLE_DATA).generator()
    stat_rng = rng.child(ROLE_STAT_NOISE).generator()
    thresh_rng = rng.child(ROLE_THRESH_NOISE).generator()
    state = init(cfg, model, thresh_rng)
    path: list[tuple[int, float, float | None]] | None = [] if trace else None
    for t in range(1, horizon + 1):
        regime = Regime.PRE if t <= tau else Regime.POST
        x = sample(model, regime, data_rng)
        state, decision = step(state, cfg, x, stat_rng)
        if trace:
            path.append((t, state.s, state.s_tilde))
        if decision is Decision.STOP:
            return RunOutcome(stopping_time=t, censored=False, trajectory=path)
    return RunOutcome(stopping_time=horizon, censored=True, trajectory=path)
