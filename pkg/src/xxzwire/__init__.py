"""Simulation toolkit for information transmission through finite XXZ chains."""

from .spinalg import (
    SENDER,
    MixedState,
    PureState,
    SparseOperator,
    SystemGeometry,
    partial_trace_two_sites,
    sector_decompose,
)
from .model import ModelParams, SpinWaveModel, build_channel_hamiltonian, build_joint_hamiltonian, spin_wave

__all__ = [
    "SENDER",
    "MixedState",
    "PureState",
    "SparseOperator",
    "SystemGeometry",
    "partial_trace_two_sites",
    "sector_decompose",
    "ModelParams",
    "SpinWaveModel",
    "build_channel_hamiltonian",
    "build_joint_hamiltonian",
    "spin_wave",
]
