"""Laplace noise and reproducible random streams.

Every random quantity in this package is drawn from an ``RngStream``, a
(master_seed, stream_id) pair mapped to an independent PCG64 generator.
Identical pairs reproduce identical draw sequences no matter how trials are
scheduled or batched, which is what makes parallel Monte Carlo runs and
re-runs bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

# Sub-stream roles hung off a base stream.  Kept below 4 so ids pack into
# two bits; see RngStream.child.
ROLE_DATA = 0
ROLE_STAT_NOISE = 1
ROLE_THRESH_NOISE = 2

_VALID_MULTIPLIERS = (2, 4, 8)


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream: a master seed plus a stream id."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.master_seed) < 2**64:
            raise InputError(f"master_seed out of range: {self.master_seed}")
        if not 0 <= int(self.stream_id) < 2**64:
            raise InputError(f"stream_id out of range: {self.stream_id}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence((int(self.master_seed), int(self.stream_id)))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, role: int) -> "RngStream":
        """Derived stream for one role (data, statistic noise, threshold noise)."""
        if not 0 <= role < 4:
            raise InputError(f"role out of range: {role}")
        return RngStream(self.master_seed, (int(self.stream_id) << 2) | role)


@dataclass(frozen=True)
class NoiseScale:
    """Scale parameter of a centered Laplace distribution.

    beta = 0 is allowed as the degenerate noiseless limit (it arises from
    epsilon = inf); every draw is then exactly 0 but still consumes one
    uniform so stream positions stay aligned with the noisy case.
    """

    beta: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.beta) or self.beta < 0:
            raise InputError(f"noise scale must be finite and >= 0, got {self.beta}")


def detector_scale(epsilon: float, sensitivity: float, multiplier: int) -> NoiseScale:
    """Noise scale multiplier * sensitivity / epsilon used by the detectors.

    multiplier is 2 for the CUSUM statistic and threshold noise, 4 and 8 for
    the windowed baseline's statistic and threshold noise.
    """
    if multiplier not in _VALID_MULTIPLIERS:
        raise InputError(f"multiplier must be one of {_VALID_MULTIPLIERS}, got {multiplier}")
    if not sensitivity > 0 or not np.isfinite(sensitivity):
        raise InputError(f"sensitivity must be finite and > 0, got {sensitivity}")
    if not epsilon > 0:
        raise InputError(f"epsilon must be > 0, got {epsilon}")
    if np.isinf(epsilon):
        return NoiseScale(0.0)
    return NoiseScale(multiplier * sensitivity / epsilon)


def laplace_from_uniform(u: np.ndarray | float, beta: float) -> np.ndarray | float:
    """Inverse-CDF transform: u on (-1/2, 1/2) to a centered Laplace(beta).

    sign(u) * beta * log(1 - 2|u|).  log1p keeps precision near u = 0; the
    single grid point u = -1/2 (from a uniform draw of exactly 0) is remapped
    to the center rather than producing an infinity.
    """
    u = np.asarray(u, dtype=np.float64)
    u = np.where(u == -0.5, 0.0, u)
    return np.sign(u) * beta * np.log1p(-2.0 * np.abs(u))


def lap_sample(
    scale: NoiseScale | float,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
):
    """Draw from a centered Laplace via the inverse CDF.

    Accepts a NoiseScale or a raw beta.  With size=None a Python float is
    returned, otherwise an ndarray.
    """
    beta = scale.beta if isinstance(scale, NoiseScale) else NoiseScale(float(scale)).beta
    if size is None:
        u = rng.random() - 0.5
        return float(laplace_from_uniform(u, beta))
    u = rng.random(size) - 0.5
    return laplace_from_uniform(u, beta)
