"""Analytic channel model: observed gains and QBERs for BB84 and MDI-QKD.

The BB84 receiver is modeled as a uniformly random basis choice followed by
two threshold detectors; double clicks are assigned to either outcome with
probability 1/2.  Misalignment acts as a fixed polarization rotation by
theta = arcsin(sqrt(e_d)) on every surviving photon, so for a phase-
randomized coherent pulse the photon counts at the "correct" and "wrong"
detectors are independent Poisson variables.  The closed forms below are
exact for that model (they agree with the Fock-level oracle to truncation
error, not merely to first order in e_d).

MDI observables are aggregated from the Fock-level oracle directly; there
is no second closed-form model to keep in sync.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from seedqkd.core import BasisStats, ChannelParams, db_to_transmission, poisson_weight

__all__ = [
    "LinkConfig",
    "TruncationError",
    "transmittance",
    "bb84_observables",
    "mdi_observables",
]

#: Default per-party photon-number cap for MDI aggregation.
DEFAULT_MDI_CAP = 20

#: Default acceptable Poisson tail mass left out of the MDI aggregation.
DEFAULT_TAIL_TOL = 1e-10


class TruncationError(RuntimeError):
    """The photon-number cap is too small for the requested tail bound."""


@dataclass(frozen=True)
class LinkConfig:
    """A fiber link of a given length with fixed channel parameters."""

    distance_km: float
    params: ChannelParams

    def __post_init__(self) -> None:
        if self.distance_km < 0.0:
            raise ValueError("distance_km must be >= 0")


def transmittance(link: LinkConfig) -> float:
    """Overall single-photon transmittance eta = eta_d * 10^(-alpha*L/10)."""
    return link.params.eta_d * db_to_transmission(link.params.alpha * link.distance_km)


def _dark_prob_two_detectors(y0: float) -> float:
    """Per-detector dark-click probability d with 1 - (1-d)^2 = y0."""
    return 1.0 - math.sqrt(1.0 - y0)


def bb84_observables(link: LinkConfig, mu: float) -> dict[str, BasisStats]:
    """Gain and QBER for a BB84 pulse of intensity ``mu``, per basis.

    Let lam_c = eta*mu*(1-e_d) and lam_w = eta*mu*e_d be the mean photon
    numbers reaching the correct and wrong detector of the measured basis,
    and d the per-detector dark probability.  With q_c = (1-d)e^{-lam_c}
    and q_w = (1-d)e^{-lam_w} the silence probabilities of the two
    detectors,

        G     = 1 - q_c * q_w = 1 - (1-y0) e^{-eta*mu},
        E * G = (1 - q_w) * (1 + q_c) / 2,

    where the 1/2 accounts for random assignment of double clicks.  The
    misalignment rotation affects both bases identically, so the Z and X
    entries coincide.
    """
    if mu < 0.0:
        raise ValueError("mu must be >= 0")
    p = link.params
    eta = transmittance(link)
    d = _dark_prob_two_detectors(p.y0)
    lam_c = eta * mu * (1.0 - p.e_d)
    lam_w = eta * mu * p.e_d
    q_c = (1.0 - d) * math.exp(-lam_c)
    q_w = (1.0 - d) * math.exp(-lam_w)
    gain = 1.0 - q_c * q_w
    error_gain = 0.5 * (1.0 - q_w) * (1.0 + q_c)
    qber = error_gain / gain if gain > 0.0 else 0.0
    stats = BasisStats(gain=gain, qber=qber)
    return {"Z": stats, "X": stats}


def mdi_observables(
    link: LinkConfig,
    zeta: float,
    omega: float,
    cap: int = DEFAULT_MDI_CAP,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> dict[str, BasisStats]:
    """Gain and QBER of the relay's Bell-state measurement, per basis.

    ``zeta`` and ``omega`` are the intensities emitted by the two
    transmitters, each connected to the relay by a fiber of length
    ``distance_km / 2``.  The result is a Poisson-weighted aggregation of
    the Fock-level oracle over photon numbers up to ``cap`` per party.

    Raises:
        TruncationError: if the Poisson tail mass left out of the
            aggregation exceeds ``tail_tol``.
    """
    if zeta < 0.0 or omega < 0.0:
        raise ValueError("intensities must be >= 0")
    # Late import: the oracle module type-checks against LinkConfig.
    from seedqkd.fock_mdi import mdi_yield_tables

    pz = [poisson_weight(zeta, n) for n in range(cap + 1)]
    pw = [poisson_weight(omega, m) for m in range(cap + 1)]
    tail = 1.0 - sum(pz) * sum(pw)
    if tail > tail_tol:
        raise TruncationError(
            f"Poisson tail mass {tail:.3e} exceeds {tail_tol:.1e} at cap {cap} "
            f"for intensities ({zeta}, {omega})"
        )

    tables = mdi_yield_tables(link, cap)
    out: dict[str, BasisStats] = {}
    pz_arr = np.asarray(pz)
    pw_arr = np.asarray(pw)
    for basis in ("Z", "X"):
        gain = float(pz_arr @ tables.yields[basis] @ pw_arr)
        error_gain = float(pz_arr @ tables.error_yields[basis] @ pw_arr)
        qber = error_gain / gain if gain > 0.0 else 0.0
        out[basis] = BasisStats(gain=gain, qber=qber)
    return out
