"""Fock-level ground truth for BB84 reception.

For an n-photon pulse prepared in one of the four polarization states, the
receiver model is: each photon independently survives the channel with
probability eta, surviving photons are rotated by theta = arcsin(sqrt(e_d)),
Bob picks a measurement basis uniformly at random and detects with two
threshold detectors (per-detector dark probability d, 1-(1-d)^2 = y0);
double clicks are assigned to either outcome with probability 1/2.

The virtual five-outcome measurement this induces has elements
(|0><0|/2, |1><1|/2, |+><+|/2, |-><-|/2, |vac><vac|) on a qubit-plus-vacuum
space, which is the description used by the separability programs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from seedqkd.channel import LinkConfig

__all__ = [
    "PhotonStatsBB84",
    "Bb84Yields",
    "bb84_photon_stats",
    "aggregate_yields",
    "STATE_LABELS",
    "OUTCOME_LABELS",
    "DEFAULT_BB84_CAP",
]

DEFAULT_BB84_CAP = 25

#: Alice's preparation labels, in the order used by probability tables.
STATE_LABELS = ("H", "V", "P", "M")

#: Bob's virtual outcome labels (P/M are the +/- outcomes).
OUTCOME_LABELS = ("0", "1", "P", "M", "vac")

_SQ = 1.0 / math.sqrt(2.0)
_STATE_VECTORS = {
    "H": np.array([1.0, 0.0]),
    "V": np.array([0.0, 1.0]),
    "P": np.array([_SQ, _SQ]),
    "M": np.array([_SQ, -_SQ]),
}
#: Detector pairs per basis: (outcome of detector 0, outcome of detector 1).
_BASES = {"Z": ("0", "1"), "X": ("P", "M")}
_BASIS_VECTORS = {"Z": ("H", "V"), "X": ("P", "M")}


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class PhotonStatsBB84:
    """Joint outcome probabilities for n-photon signals.

    ``table[k, j]`` is the probability that Alice prepared state k (uniform
    prior 1/4) and Bob's virtual measurement produced outcome j; rows follow
    STATE_LABELS, columns OUTCOME_LABELS.  Each row sums to 1/4.
    """

    n: int
    table: np.ndarray

    def prob(self, state: str, outcome: str) -> float:
        return float(
            self.table[STATE_LABELS.index(state), OUTCOME_LABELS.index(outcome)]
        )


@dataclass(frozen=True)
class Bb84Yields:
    """Per-photon-number yields and error rates, by basis."""

    yields: dict[str, np.ndarray]
    error_rates: dict[str, np.ndarray]


def _basis_outcome_probs(
    n: int, eta: float, q_first: float, dark: float
) -> tuple[float, float, float]:
    """(P(first outcome), P(second outcome), P(vac)) for one basis.

    ``q_first`` is the probability that a surviving photon lands on the
    basis's first detector.  Exact for independent photons and threshold
    detectors with random double-click assignment.
    """
    s_first = (1.0 - eta * q_first) ** n  # no photon at detector 0
    s_second = (1.0 - eta * (1.0 - q_first)) ** n  # no photon at detector 1
    s_both = (1.0 - eta) ** n  # all photons lost
    silent0 = 1.0 - dark
    p_vac = s_both * silent0 * silent0
    p_only_first = s_second * silent0 - p_vac
    p_only_second = s_first * silent0 - p_vac
    p_double = 1.0 - s_first * silent0 - s_second * silent0 + p_vac
    p_first = p_only_first + 0.5 * p_double
    p_second = p_only_second + 0.5 * p_double
    return p_first, p_second, p_vac


def bb84_photon_stats(
    link: "LinkConfig", n: int, cap: int = DEFAULT_BB84_CAP
) -> PhotonStatsBB84:
    """Exact outcome statistics for an n-photon BB84 signal.

    Raises:
        ValueError: if ``n`` is outside [0, cap].
    """
    if not 0 <= n <= cap:
        raise ValueError(f"photon number {n} outside [0, {cap}]")
    from seedqkd.channel import transmittance

    p = link.params
    eta = transmittance(link)
    dark = 1.0 - math.sqrt(1.0 - p.y0)
    rot = _rotation(math.asin(math.sqrt(p.e_d)))

    table = np.zeros((4, 5))
    for ki, k in enumerate(STATE_LABELS):
        u = rot @ _STATE_VECTORS[k]
        for basis, (out_first, out_second) in _BASES.items():
            first_vec = _STATE_VECTORS[_BASIS_VECTORS[basis][0]]
            q_first = float(first_vec @ u) ** 2
            p_first, p_second, p_vac = _basis_outcome_probs(n, eta, q_first, dark)
            # 1/4 preparation prior, 1/2 basis choice.
            table[ki, OUTCOME_LABELS.index(out_first)] += 0.125 * p_first
            table[ki, OUTCOME_LABELS.index(out_second)] += 0.125 * p_second
            table[ki, OUTCOME_LABELS.index("vac")] += 0.125 * p_vac
    return PhotonStatsBB84(n=n, table=table)


def aggregate_yields(stats: Sequence[PhotonStatsBB84]) -> Bb84Yields:
    """Per-n yields Y_n^a and error rates e_n^a from outcome statistics.

    Y_n^a conditions on an a-basis preparation measured in the a basis;
    e_n^a is the error fraction among those clicks (1/2 when Y_n^a = 0).
    """
    yields = {b: np.zeros(len(stats)) for b in ("Z", "X")}
    errors = {b: np.zeros(len(stats)) for b in ("Z", "X")}
    for i, st in enumerate(stats):
        for basis in ("Z", "X"):
            k_first, k_second = _BASIS_VECTORS[basis]
            out_first, out_second = _BASES[basis]
            clicks = (
                st.prob(k_first, out_first)
                + st.prob(k_first, out_second)
                + st.prob(k_second, out_first)
                + st.prob(k_second, out_second)
            )
            wrong = st.prob(k_first, out_second) + st.prob(k_second, out_first)
            # Undo the 1/4 prior (two states) and 1/2 basis factor.
            yields[basis][i] = 4.0 * clicks
            errors[basis][i] = wrong / clicks if clicks > 0.0 else 0.5
    return Bb84Yields(yields=yields, error_rates=errors)
