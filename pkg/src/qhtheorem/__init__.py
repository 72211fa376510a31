"""Entropy growth and time reversal in scattering and decoherence models."""

from .decoherence import (
    DecoherenceMatrix,
    PhaseKickSpec,
    is_gramian,
    lemma_trial,
    phase_kick_beta,
    reversal_beta,
    schur_apply,
)
from .entropy import EntropyValue, shannon, von_neumann
from .errors import QHError
from .qstate import BasisLabel, DensityMatrix, Direction, GrandState, partial_trace

__all__ = [
    "BasisLabel",
    "DecoherenceMatrix",
    "DensityMatrix",
    "Direction",
    "EntropyValue",
    "GrandState",
    "PhaseKickSpec",
    "QHError",
    "is_gramian",
    "lemma_trial",
    "partial_trace",
    "phase_kick_beta",
    "reversal_beta",
    "schur_apply",
    "shannon",
    "von_neumann",
]

__version__ = "0.1.0"
