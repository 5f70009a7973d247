"""Three-intensity decoy-state estimation and key-rate lower bounds.

The estimators take *observed* gains/QBERs and an *assumed* intensity set.
Feeding observations produced at intensities kappa*mu together with the
original assumed intensities mu reproduces exactly what unaware users would
compute under an intensity-multiplication attack; feeding the scaled
intensities gives the attack-aware (correct) bound.

Conventions: negative intermediate yield bounds are clamped to 0, yields
to [0, 1], phase-error bounds to [0, 0.5], and key rates to >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from seedqkd.channel import (
    DEFAULT_MDI_CAP,
    DEFAULT_TAIL_TOL,
    LinkConfig,
    bb84_observables,
    mdi_observables,
)
from seedqkd.core import BasisStats, ChannelParams, IntensitySet, binary_entropy, poisson_weight

__all__ = [
    "Bb84Observations",
    "MdiObservations",
    "Bb84Bounds",
    "MdiBounds",
    "KeyRateReport",
    "MDI_PAIRS",
    "observe_bb84",
    "observe_mdi",
    "estimate_bb84_bounds",
    "bb84_key_rate_lower",
    "estimate_mdi_bounds",
    "mdi_key_rate_lower",
    "evaluate_attack_scenario",
    "worst_case_key_rate",
]

_ROLES = ("mu_s", "nu_1", "nu_2")

#: Intensity pairs (Alice role, Bob role) required by the MDI estimator.
MDI_PAIRS = (
    ("mu_s", "mu_s"),
    ("nu_1", "nu_1"),
    ("nu_2", "nu_2"),
    ("nu_1", "nu_2"),
    ("nu_2", "nu_1"),
    ("mu_s", "nu_2"),
    ("nu_2", "mu_s"),
)


@dataclass(frozen=True)
class Bb84Observations:
    """Observed BasisStats per intensity role, each keyed by basis Z/X."""

    mu_s: Mapping[str, BasisStats]
    nu_1: Mapping[str, BasisStats]
    nu_2: Mapping[str, BasisStats]

    def stats(self, role: str, basis: str) -> BasisStats:
        return getattr(self, role)[basis]


@dataclass(frozen=True)
class MdiObservations:
    """Observed BasisStats per (Alice role, Bob role) pair and basis."""

    pairs: Mapping[tuple[str, str], Mapping[str, BasisStats]]

    def __post_init__(self) -> None:
        missing = [p for p in MDI_PAIRS if p not in self.pairs]
        if missing:
            raise ValueError(f"missing intensity pairs in observations: {missing}")

    def stats(self, role_a: str, role_b: str, basis: str) -> BasisStats:
        return self.pairs[(role_a, role_b)][basis]


@dataclass(frozen=True)
class Bb84Bounds:
    """Decoy-state yield/phase-error bounds for BB84 (clamped)."""

    y0_l: float
    y1_l_z: float
    y1_l_x: float
    e1_u_x: float


@dataclass(frozen=True)
class MdiBounds:
    """Decoy-state two-single-photon bounds for MDI-QKD (clamped)."""

    y11_l_z: float
    y11_l_x: float
    e11_u_x: float


@dataclass(frozen=True)
class KeyRateReport:
    """Key-rate bounds for one (distance, kappa) evaluation point."""

    distance_km: float
    kappa: float
    r_l_estimated: float
    r_l_correct: float
    r_u: float | None = None


def observe_bb84(
    link: LinkConfig, intensities: IntensitySet, kappa: float = 1.0
) -> Bb84Observations:
    """Channel observations when the emitted intensities are kappa-scaled."""
    per_role = {
        role: bb84_observables(link, kappa * getattr(intensities, role))
        for role in _ROLES
    }
    return Bb84Observations(**per_role)


def observe_mdi(
    link: LinkConfig,
    intensities: IntensitySet,
    kappa: float = 1.0,
    cap: int = DEFAULT_MDI_CAP,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> MdiObservations:
    """Relay observations for all estimator pairs at kappa-scaled intensities."""
    pairs = {}
    for role_a, role_b in MDI_PAIRS:
        zeta = kappa * getattr(intensities, role_a)
        omega = kappa * getattr(intensities, role_b)
        pairs[(role_a, role_b)] = mdi_observables(link, zeta, omega, cap, tail_tol)
    return MdiObservations(pairs=pairs)


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def _bb84_bounds_one_basis(
    obs: Bb84Observations, assumed: IntensitySet, basis: str
) -> tuple[float, float]:
    """(Y0 lower bound, Y1 lower bound) in the given basis."""
    mu_s, nu_1, nu_2 = assumed.as_tuple()
    g_s = obs.stats("mu_s", basis).gain
    g_1 = obs.stats("nu_1", basis).gain
    g_2 = obs.stats("nu_2", basis).gain

    y0 = (nu_1 * g_2 * math.exp(nu_2) - nu_2 * g_1 * math.exp(nu_1)) / (nu_1 - nu_2)
    y0 = _clamp(y0, 0.0, 1.0)

    denom = mu_s * (nu_1 - nu_2) - nu_1**2 + nu_2**2
    y1 = (mu_s / denom) * (
        g_1 * math.exp(nu_1)
        - g_2 * math.exp(nu_2)
        - (nu_1**2 - nu_2**2) / mu_s**2 * (g_s * math.exp(mu_s) - y0)
    )
    return y0, _clamp(y1, 0.0, 1.0)


def estimate_bb84_bounds(obs: Bb84Observations, assumed: IntensitySet) -> Bb84Bounds:
    """Standard three-intensity decoy bounds, computed with the *assumed*
    intensities regardless of what actually produced the observations."""
    if assumed.nu_1 <= assumed.nu_2:
        raise ValueError("decoy intensities are degenerate")
    y0_z, y1_z = _bb84_bounds_one_basis(obs, assumed, "Z")
    _, y1_x = _bb84_bounds_one_basis(obs, assumed, "X")

    nu_1, nu_2 = assumed.nu_1, assumed.nu_2
    ex1 = obs.stats("nu_1", "X")
    ex2 = obs.stats("nu_2", "X")
    if y1_x <= 0.0:
        e1 = 0.5
    else:
        num = ex1.error_gain * math.exp(nu_1) - ex2.error_gain * math.exp(nu_2)
        e1 = _clamp(num / ((nu_1 - nu_2) * y1_x), 0.0, 0.5)
    return Bb84Bounds(y0_l=y0_z, y1_l_z=y1_z, y1_l_x=y1_x, e1_u_x=e1)


def bb84_key_rate_lower(
    bounds: Bb84Bounds,
    observed_signal_z: BasisStats,
    assumed_mu_s: float,
    params: ChannelParams,
) -> float:
    """Asymptotic secret-key rate lower bound (efficient protocol, Z key)."""
    p1 = poisson_weight(assumed_mu_s, 1)
    rate = p1 * bounds.y1_l_z * (1.0 - binary_entropy(bounds.e1_u_x)) - (
        params.f_e * observed_signal_z.gain * binary_entropy(observed_signal_z.qber)
    )
    return max(rate, 0.0)


def _gain_combination(obs: MdiObservations, basis: str, a: float, b: float,
                      role_a: str, role_b: str) -> float:
    """G^{aa} e^{2a} + G^{bb} e^{2b} - G^{ab} e^{a+b} - G^{ba} e^{a+b}."""
    g_aa = obs.stats(role_a, role_a, basis).gain
    g_bb = obs.stats(role_b, role_b, basis).gain
    g_ab = obs.stats(role_a, role_b, basis).gain
    g_ba = obs.stats(role_b, role_a, basis).gain
    return (
        g_aa * math.exp(2.0 * a)
        + g_bb * math.exp(2.0 * b)
        - (g_ab + g_ba) * math.exp(a + b)
    )


def _mdi_y11_one_basis(obs: MdiObservations, assumed: IntensitySet, basis: str) -> float:
    """Lower bound on the (1,1)-photon yield from the seven observed pairs.

    Combines the difference combinations M(nu_1, nu_2) and M(mu_s, nu_2),
    weighted to cancel the (1,2)+(2,1) photon contributions; every
    remaining higher-order term enters with a non-positive coefficient, so
    the quotient is a valid lower bound.
    """
    mu_s, nu_1, nu_2 = assumed.as_tuple()
    m_nu = _gain_combination(obs, basis, nu_1, nu_2, "nu_1", "nu_2")
    m_mu = _gain_combination(obs, basis, mu_s, nu_2, "mu_s", "nu_2")
    num = (mu_s**2 - nu_2**2) * (mu_s - nu_2) * m_nu - (
        (nu_1**2 - nu_2**2) * (nu_1 - nu_2) * m_mu
    )
    denom = (mu_s - nu_2) ** 2 * (nu_1 - nu_2) ** 2 * (mu_s - nu_1)
    return _clamp(num / denom, 0.0, 1.0)


def estimate_mdi_bounds(obs: MdiObservations, assumed: IntensitySet) -> MdiBounds:
    """Three-intensity decoy bounds for MDI-QKD with the assumed intensities."""
    if assumed.nu_1 <= assumed.nu_2:
        raise ValueError("decoy intensities are degenerate")
    y11_z = _mdi_y11_one_basis(obs, assumed, "Z")
    y11_x = _mdi_y11_one_basis(obs, assumed, "X")

    nu_1, nu_2 = assumed.nu_1, assumed.nu_2
    if y11_x <= 0.0:
        e11 = 0.5
    else:
        num = (
            math.exp(2.0 * nu_1) * obs.stats("nu_1", "nu_1", "X").error_gain
            + math.exp(2.0 * nu_2) * obs.stats("nu_2", "nu_2", "X").error_gain
            - math.exp(nu_1 + nu_2) * obs.stats("nu_1", "nu_2", "X").error_gain
            - math.exp(nu_2 + nu_1) * obs.stats("nu_2", "nu_1", "X").error_gain
        )
        e11 = _clamp(num / ((nu_1 - nu_2) ** 2 * y11_x), 0.0, 0.5)
    return MdiBounds(y11_l_z=y11_z, y11_l_x=y11_x, e11_u_x=e11)


def mdi_key_rate_lower(
    bounds: MdiBounds,
    observed_signal_z: BasisStats,
    assumed_mu_s: float,
    params: ChannelParams,
) -> float:
    """Asymptotic MDI secret-key rate lower bound (sifting factor 1)."""
    p11 = poisson_weight(assumed_mu_s, 1) ** 2
    rate = p11 * bounds.y11_l_z * (1.0 - binary_entropy(bounds.e11_u_x)) - (
        params.f_e * observed_signal_z.gain * binary_entropy(observed_signal_z.qber)
    )
    return max(rate, 0.0)


def _rate_from_observations(
    protocol: str,
    observed: Bb84Observations | MdiObservations,
    assumed: IntensitySet,
    params: ChannelParams,
) -> float:
    if protocol == "bb84":
        bounds = estimate_bb84_bounds(observed, assumed)
        return bb84_key_rate_lower(
            bounds, observed.stats("mu_s", "Z"), assumed.mu_s, params
        )
    if protocol == "mdi":
        bounds = estimate_mdi_bounds(observed, assumed)
        return mdi_key_rate_lower(
            bounds, observed.stats("mu_s", "mu_s", "Z"), assumed.mu_s, params
        )
    raise ValueError(f"unknown protocol {protocol!r}")


def evaluate_attack_scenario(
    protocol: str,
    link: LinkConfig,
    intensities: IntensitySet,
    kappa: float,
    mdi_cap: int = DEFAULT_MDI_CAP,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> KeyRateReport:
    """Estimated (unaware) and correct (attack-aware) key-rate lower bounds.

    Observations are generated at the actually emitted intensities
    kappa*mu.  The estimated rate applies the decoy formulas with the
    original intensities; the correct rate applies them with the scaled
    ones.  The upper-bound field is left unset.
    """
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    actual = intensities.scaled(kappa)
    if protocol == "bb84":
        observed: Bb84Observations | MdiObservations = observe_bb84(
            link, intensities, kappa
        )
    elif protocol == "mdi":
        observed = observe_mdi(link, intensities, kappa, mdi_cap, tail_tol)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    estimated = _rate_from_observations(protocol, observed, intensities, params=link.params)
    correct = _rate_from_observations(protocol, observed, actual, params=link.params)
    return KeyRateReport(
        distance_km=link.distance_km,
        kappa=kappa,
        r_l_estimated=estimated,
        r_l_correct=correct,
    )


def worst_case_key_rate(
    observed: Bb84Observations | MdiObservations,
    intensities: IntensitySet,
    kappa_max: float,
    params: ChannelParams,
    grid_step: float = 0.01,
) -> float:
    """Worst-case rate when the true intensities may lie in [mu, kappa_max*mu].

    Minimizes the attack-aware lower bound over a kappa grid under the
    common-scaling model (one kappa shared by all intensities).
    """
    if kappa_max < 1.0:
        raise ValueError("kappa_max must be >= 1")
    protocol = "bb84" if isinstance(observed, Bb84Observations) else "mdi"
    steps = max(1, math.ceil((kappa_max - 1.0) / grid_step)) if kappa_max > 1.0 else 0
    grid = [1.0 + i * grid_step for i in range(steps)] + [kappa_max]
    return min(
        _rate_from_observations(protocol, observed, intensities.scaled(k), params)
        for k in grid
    )
