"""Privacy budget container and the Laplace sampler shared by all mechanisms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

DEFAULT_THETA = 0.25


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget ``epsilon`` plus the THE threshold ``theta``.

    ``epsilon`` may be ``math.inf``; every mechanism then degenerates to its
    noise-free limit, which the tests use as an exactness oracle.
    """

    epsilon: float
    theta: float = DEFAULT_THETA

    def __post_init__(self):
        eps = float(self.epsilon)
        if math.isnan(eps) or eps <= 0:
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon!r}")
        theta = float(self.theta)
        if not 0.0 < theta < 1.0:
            raise InvalidInputError(f"theta must lie in (0, 1), got {self.theta!r}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "theta", theta)


def laplace_noise(scale, rng: np.random.Generator, size=None):
    """Zero-mean Laplace samples drawn by inverting the CDF of a uniform variate.

    A zero scale returns exact zeros without touching ``rng``.
    """
    if scale < 0:
        raise InvalidInputError(f"Laplace scale must be >= 0, got {scale}")
    if scale == 0:
        return np.zeros(size) if size is not None else 0.0
    # open interval (0, 1) keeps both log terms finite
    u = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=size)
    noise = np.where(u < 0.5, scale * np.log(2.0 * u), -scale * np.log(2.0 - 2.0 * u))
    return noise if size is not None else float(noise)
