"""Shared domain types and elementary functions for decoy-state QKD analysis.

All probabilities and error fractions are dimensionless numbers in [0, 1];
QBER is always stored as a fraction, never a percentage.  dB/linear
conversions are centralized here so that no other module hand-rolls them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ChannelParams",
    "IntensitySet",
    "AttackModel",
    "BasisStats",
    "DEFAULT_PARAMS",
    "binary_entropy",
    "poisson_weight",
    "db_to_transmission",
    "transmission_to_db",
]


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy H2(x) = -x log2(x) - (1-x) log2(1-x).

    Uses the limit convention 0*log2(0) = 0, so H2(0) = H2(1) = 0.

    Raises:
        ValueError: if ``x`` lies outside [0, 1].
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy requires x in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def poisson_weight(mu: float, n: int) -> float:
    """Poisson probability p_n = e^{-mu} mu^n / n!.

    Evaluated in log space for n > 20 to avoid factorial overflow; the
    channel model needs truncation sums up to n ~ 25.

    Raises:
        ValueError: if ``mu`` is negative or ``n`` is not a non-negative
            integer.
    """
    if mu < 0.0:
        raise ValueError(f"poisson_weight requires mu >= 0, got {mu!r}")
    if n != int(n) or n < 0:
        raise ValueError(f"poisson_weight requires integer n >= 0, got {n!r}")
    n = int(n)
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    if n <= 20:
        return math.exp(-mu) * mu**n / math.factorial(n)
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def db_to_transmission(loss_db: float) -> float:
    """Convert an attenuation in dB to a linear transmission factor."""
    return 10.0 ** (-loss_db / 10.0)


def transmission_to_db(transmission: float) -> float:
    """Convert a linear transmission factor to an attenuation in dB."""
    if transmission <= 0.0:
        raise ValueError("transmission must be positive")
    return -10.0 * math.log10(transmission)


@dataclass(frozen=True)
class ChannelParams:
    """Fiber-channel and receiver parameters.

    Attributes:
        alpha: fiber loss coefficient in dB/km.
        y0: background (dark-count) click probability per pulse.
        e_d: misalignment error fraction.
        eta_d: detector efficiency.
        f_e: error-correction inefficiency (>= 1).
    """

    alpha: float
    y0: float
    e_d: float
    eta_d: float
    f_e: float

    def __post_init__(self) -> None:
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0 dB/km")
        if not 0.0 <= self.y0 <= 1.0:
            raise ValueError("y0 must lie in [0, 1]")
        if not 0.0 <= self.e_d <= 0.5:
            raise ValueError("e_d must lie in [0, 0.5]")
        if not 0.0 < self.eta_d <= 1.0:
            raise ValueError("eta_d must lie in (0, 1]")
        if self.f_e < 1.0:
            raise ValueError("f_e must be >= 1")


#: Typical fiber-system parameters used throughout the bundled simulations
#: (0.2 dB/km fiber, 2.6e-5 background rate, 1.5% misalignment, 30%
#: detector efficiency, error-correction inefficiency 1.12).
DEFAULT_PARAMS = ChannelParams(alpha=0.2, y0=2.6e-5, e_d=0.015, eta_d=0.30, f_e=1.12)


@dataclass(frozen=True)
class IntensitySet:
    """Signal and decoy mean photon numbers mu_s > nu_1 > nu_2 >= 0.

    The additional constraint mu_s > nu_1 + nu_2 keeps the single-photon
    yield estimator's denominator mu_s*(nu_1-nu_2) - nu_1^2 + nu_2^2
    strictly positive.
    """

    mu_s: float
    nu_1: float
    nu_2: float

    def __post_init__(self) -> None:
        if not self.mu_s > self.nu_1 > self.nu_2 >= 0.0:
            raise ValueError(
                f"intensities must satisfy mu_s > nu_1 > nu_2 >= 0, got "
                f"({self.mu_s}, {self.nu_1}, {self.nu_2})"
            )
        if not self.mu_s > self.nu_1 + self.nu_2:
            raise ValueError(
                f"intensities must satisfy mu_s > nu_1 + nu_2, got "
                f"({self.mu_s}, {self.nu_1}, {self.nu_2})"
            )

    def scaled(self, kappa: float) -> "IntensitySet":
        """Return the image of this set under intensity multiplication."""
        return IntensitySet(kappa * self.mu_s, kappa * self.nu_1, kappa * self.nu_2)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mu_s, self.nu_1, self.nu_2)


@dataclass(frozen=True)
class AttackModel:
    """Intensity-multiplication attack: every emitted intensity mu becomes
    kappa * mu."""

    kappa: float

    def __post_init__(self) -> None:
        if self.kappa < 1.0:
            raise ValueError(f"kappa must be >= 1, got {self.kappa!r}")


@dataclass(frozen=True)
class BasisStats:
    """Observed gain and QBER for one basis at one intensity setting.

    ``qber`` is only meaningful when ``gain > 0``; a zero-gain record
    carries ``qber = 0.0`` by convention.
    """

    gain: float
    qber: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.gain <= 1.0:
            raise ValueError(f"gain must lie in [0, 1], got {self.gain!r}")
        if not 0.0 <= self.qber <= 1.0:
            raise ValueError(f"qber must lie in [0, 1], got {self.qber!r}")

    @property
    def error_gain(self) -> float:
        """The error-weighted gain E*G."""
        return self.qber * self.gain
