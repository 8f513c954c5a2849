"""Simulation and design tools for qubit-ensemble (Dicke) tunable couplers."""

from .model import (
    CircuitElement,
    CouplerModel,
    DispersiveValidityError,
    SingularDenominatorError,
    build_cascade_effective_hamiltonian,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    effective_coupling_rate,
    from_mhz,
    magnon_transform,
    to_mhz,
)

__version__ = "0.1.0"
