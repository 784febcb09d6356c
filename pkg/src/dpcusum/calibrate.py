"""Threshold calibration from the false-alarm guarantee.

The private detector's mean time to false alarm obeys

    E[T(b)] >= exp(h b - 2) / (4 (b + 1)^2),    h = min(eps / (2 sens), 1),

an increasing function of b once b > 2/h - 1.  ``solve_threshold`` inverts
it there, so a target mean time between false alarms turns into a threshold.
The detection-delay side is exposed only as its two structural terms: the
bound's leading constant is not known, so no total is ever reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InputError
from .models import ModelPair, a_delta

_RESID_TOL = 1e-9


def h_factor(epsilon: float, sens: float) -> float:
    """Effective privacy factor min(eps / (2 sens), 1)."""
    if not epsilon > 0:
        raise InputError(f"epsilon must be > 0, got {epsilon}")
    if not sens > 0 or not np.isfinite(sens):
        raise InputError(f"sensitivity must be finite and > 0, got {sens}")
    return min(epsilon / (2.0 * sens), 1.0)


def _resolve_h(epsilon: float | None, sens: float | None, h: float | None) -> float:
    """Either h directly or (epsilon, sens) to derive it; not both."""
    if h is not None:
        if epsilon is not None or sens is not None:
            raise InputError("pass either h or (epsilon, sens), not both")
        _check_h(h)
        return float(h)
    if epsilon is None or sens is None:
        raise InputError("need both epsilon and sens when h is not given")
    return h_factor(epsilon, sens)


def arl_lower_bound(
    b: float, epsilon: float | None = None, sens: float | None = None, *, h: float | None = None
) -> float:
    """Guaranteed mean time to false alarm at threshold b."""
    hv = _resolve_h(epsilon, sens, h)
    if not np.isfinite(b) or b <= -1.0:
        raise InputError(f"b must be finite and > -1, got {b}")
    return math.exp(hv * b - 2.0) / (4.0 * (b + 1.0) ** 2)


def _log_bound(b: float, h: float) -> float:
    return h * b - 2.0 - math.log(4.0) - 2.0 * math.log(b + 1.0)


@dataclass(frozen=True)
class CalibrationResult:
    b: float
    gamma_target: float
    h_value: float
    bound_at_b: float


def solve_threshold(
    gamma: float,
    epsilon: float | None = None,
    sens: float | None = None,
    *,
    h: float | None = None,
) -> CalibrationResult:
    """Smallest b on the increasing branch with arl_lower_bound(b, h) >= gamma.

    Solved in the log domain; the returned bound matches gamma to a relative
    residual below 1e-9 and never undershoots it by more than that.
    """
    h = _resolve_h(epsilon, sens, h)
    if not np.isfinite(gamma) or gamma < 1.0:
        raise InputError(f"gamma must be finite and >= 1, got {gamma}")
    target = math.log(gamma)
    lo = 2.0 / h - 1.0 + 1e-12
    hi = max(lo + 1.0, (target + 2.0 + math.log(4.0) + 2.0) / h)
    for _ in range(200):
        if _log_bound(hi, h) >= target:
            break
        hi *= 2.0
    else:
        raise RuntimeError("threshold bracket expansion did not terminate")
    b = float(brentq(lambda t: _log_bound(t, h) - target, lo, hi, xtol=1e-13, rtol=8.9e-16))
    bound = math.exp(_log_bound(b, h))
    # brentq may land an ulp on the low side; walk up until the guarantee holds.
    while bound < gamma * (1.0 - _RESID_TOL):
        b = float(np.nextafter(b, np.inf))
        bound = math.exp(_log_bound(b, h))
    if abs(bound - gamma) / gamma >= _RESID_TOL:
        raise RuntimeError(f"calibration residual too large: bound {bound} for gamma {gamma}")
    return CalibrationResult(b=b, gamma_target=float(gamma), h_value=float(h), bound_at_b=bound)


@dataclass(frozen=True)
class WaddBoundTerms:
    """Structural pieces of the delay bound: b / I0 and the privacy penalty.

    The bound's overall constant is unknown, so these terms are reported
    separately and never summed into a total.
    """

    leading_term: float
    privacy_term: float


def wadd_bound_terms(b: float, epsilon: float, sens: float, i0: float) -> WaddBoundTerms:
    """Delay-bound terms at threshold b; valid only for b > 8 i0."""
    if not i0 > 0 or not np.isfinite(i0):
        raise InputError(f"i0 must be finite and > 0, got {i0}")
    if not b > 8.0 * i0:
        raise InputError(f"delay bound needs b > 8 i0, got b={b}, i0={i0}")
    if not epsilon > 0:
        raise InputError(f"epsilon must be > 0, got {epsilon}")
    if not sens > 0 or not np.isfinite(sens):
        raise InputError(f"sensitivity must be finite and > 0, got {sens}")
    leading = b / i0
    privacy = 4.0 * sens * math.sqrt(b) / (i0**1.5 * epsilon)
    return WaddBoundTerms(leading_term=leading, privacy_term=privacy)


@dataclass(frozen=True)
class HeatmapCell:
    epsilon: float
    delta: float
    a_delta: float
    h: float
    on_boundary: bool


def default_heatmap_axes(
    n_epsilon: int = 60, n_delta: int = 60, epsilon_max: float = 3.0
) -> tuple[list[float], list[float]]:
    """Cell-center grids over epsilon in (0, epsilon_max) and delta in (0, 1)."""
    eps = [(i + 0.5) * epsilon_max / n_epsilon for i in range(n_epsilon)]
    deltas = [(j + 0.5) / n_delta for j in range(n_delta)]
    return eps, deltas


def heatmap_grid(mu: float, epsilons: list[float], deltas: list[float]) -> list[HeatmapCell]:
    """Effective privacy factor over an (epsilon, delta) grid for a Gaussian
    mean shift of size mu.

    Cells whose epsilon is within half a grid spacing of the boundary curve
    epsilon = 2 a_delta are flagged; everything on or right of the curve has
    h exactly 1.
    """
    if not epsilons or not deltas:
        raise InputError("heatmap_grid needs nonempty epsilon and delta lists")
    for e in epsilons:
        if not e > 0:
            raise InputError(f"epsilon values must be > 0, got {e}")
    model = ModelPair.gaussian_shift(mu)
    eps_sorted = sorted(epsilons)
    gaps = [b - a for a, b in zip(eps_sorted, eps_sorted[1:]) if b > a]
    half_gap = min(gaps) / 2.0 if gaps else 0.0
    cells = []
    for delta in deltas:
        a = a_delta(model, delta)
        for eps in epsilons:
            cells.append(
                HeatmapCell(
                    epsilon=eps,
                    delta=delta,
                    a_delta=a,
                    h=min(eps / (2.0 * a), 1.0),
                    on_boundary=abs(eps - 2.0 * a) <= half_gap,
                )
            )
    return cells


def _check_h(h: float) -> None:
    if not 0.0 < h <= 1.0:
        raise InputError(f"h must be in (0, 1], got {h}")
