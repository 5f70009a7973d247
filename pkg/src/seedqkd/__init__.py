"""seedqkd: quantifies how an intensity-multiplying source attack breaks
decoy-state BB84 and MDI-QKD security estimates.

The package provides an analytic channel model, a Fock-level ground-truth
oracle, three-intensity decoy-state key-rate lower bounds (attacked and
attack-aware variants), best-separable-approximation SDP upper bounds, a
per-distance intensity optimizer, and tools for extracting the intensity
multiplication factor from measured pulse waveforms.
"""

from seedqkd.core import (
    AttackModel,
    BasisStats,
    ChannelParams,
    DEFAULT_PARAMS,
    IntensitySet,
    binary_entropy,
    poisson_weight,
)

__all__ = [
    "AttackModel",
    "BasisStats",
    "ChannelParams",
    "DEFAULT_PARAMS",
    "IntensitySet",
    "binary_entropy",
    "poisson_weight",
]

__version__ = "0.1.0"
