"""Nakagami-m block fading: link parameters, power-gain sampling and density."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "FadingParams",
    "SCENARIOS",
    "Scenario",
    "power_gain_cdf",
    "power_gain_pdf",
    "sample_power_gain",
]


@dataclass(frozen=True)
class FadingParams:
    """Nakagami-m link: shape ``m`` and spread ``omega`` (mean power gain).

    The power gain |h|^2 is Gamma distributed with shape m and scale omega/m.
    """

    m: float
    omega: float

    def __post_init__(self):
        if not self.m >= 0.5:
            raise ValueError(f"Nakagami shape must be >= 0.5, got {self.m!r}")
        if not self.omega > 0:
            raise ValueError(f"spread must be positive, got {self.omega!r}")

    @property
    def scale(self) -> float:
        return self.omega / self.m


@dataclass(frozen=True)
class Scenario:
    name: str
    relay_link: FadingParams
    user1_link: FadingParams
    user2_link: FadingParams

    def user_link(self, user: int) -> FadingParams:
        if user == 1:
            return self.user1_link
        if user == 2:
            return self.user2_link
        raise ValueError(f"user must be 1 or 2, got {user!r}")

    @classmethod
    def from_table(cls, name, omegas, m):
        """Build from ([omega_r, omega_1, omega_2], common shape m)."""
        om_r, om_1, om_2 = omegas
        return cls(name, FadingParams(m, om_r), FadingParams(m, om_1), FadingParams(m, om_2))


# Channel parameter sets used throughout the experiments.
SCENARIOS = {
    "I": Scenario.from_table("I", (10.0, 2.0, 10.0), 1.5),
    "II": Scenario.from_table("II", (2.0, 2.0, 10.0), 1.5),
    "III": Scenario.from_table("III", (10.0, 2.0, 10.0), 1.0),
    "IV": Scenario.from_table("IV", (8.0, 4.0, 12.0), 1.5),
}


def sample_power_gain(params: FadingParams, rng: np.random.Generator, size=None):
    """Draw |h|^2 ~ Gamma(m, omega/m).

    numpy's Gamma sampler is a Marsaglia-Tsang rejection method, valid for the
    non-integer shapes used here. The channel phase is not sampled: coherent
    BPSK detection removes it.
    """
    return rng.gamma(params.m, params.scale, size=size)


def power_gain_pdf(params: FadingParams, g):
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ValueError("power gain must be non-negative")
    m, theta = params.m, params.scale
    # xlogy gives 0 * log(0) = 0, so m == 1 yields 1/theta at the origin; the
    # density vanishes there for m > 1 and diverges for m < 1
    with np.errstate(divide="ignore"):
        log_pdf = special.xlogy(m - 1, g) - g / theta - special.gammaln(m) - m * np.log(theta)
    return np.exp(log_pdf)[()]


def power_gain_cdf(params: FadingParams, g):
    return special.gammainc(params.m, np.asarray(g, dtype=float) / params.scale)[()]
