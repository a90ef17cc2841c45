"""Bell-measurement characterization of few-qubit dynamics."""

from .dcqd import MeasurementRecord, PreparationConfig, outcome_probabilities, sample_outcomes
from .dynamics import (
    ChiMatrix,
    ExchangeHamiltonian,
    RelaxationParams,
    SingleQubitHamiltonian,
    hamiltonian_channel,
    process_oracle,
    relaxation_channel,
)
from .errors import BellProbeError

__all__ = [
    "BellProbeError",
    "ChiMatrix",
    "ExchangeHamiltonian",
    "MeasurementRecord",
    "PreparationConfig",
    "RelaxationParams",
    "SingleQubitHamiltonian",
    "hamiltonian_channel",
    "outcome_probabilities",
    "process_oracle",
    "relaxation_channel",
    "sample_outcomes",
]
