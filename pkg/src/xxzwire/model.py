"""XXZ chain Hamiltonians and field-theory reference quantities.

The channel Hamiltonian couples neighbouring channel spins with equal x/y
exchange and an anisotropic z term.  The joint Hamiltonian extends the chain
by the sender spin 0 with the same bond (0,1) while the isolated spin 0'
never interacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .spinalg import SparseOperator, SystemGeometry


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the chain: exchange ``j``, anisotropy ``delta``, and the
    magnitude of the tiny symmetry-breaking z field used only to select a
    unique ground state out of a degenerate manifold."""

    j: float = 1.0
    delta: float = 1.0
    h_break: float | None = None

    def __post_init__(self):
        if self.j == 0:
            raise ConfigError("coupling j must be nonzero")
        if self.h_break is None:
            object.__setattr__(self, "h_break", 1e-6 * abs(self.j))
        elif self.h_break < 0:
            raise ConfigError("h_break must be nonnegative")


def build_channel_hamiltonian(
    params: ModelParams,
    geometry: SystemGeometry,
    include_symmetry_breaking_field: bool = False,
) -> SparseOperator:
    """Open-chain XXZ Hamiltonian on the channel sites 1..n_channel.

    Optionally adds ``-h_break * sum_i sigma_i^z`` which orders degenerate
    ground multiplets by total magnetization without visibly shifting the
    spectrum (h_break is ~1e-6 of the exchange).
    """
    if geometry.includes_sender_pair:
        raise ConfigError("channel Hamiltonian expects a geometry without the sender pair")
    register = geometry.sites()
    bonds = tuple((i, i + 1) for i in range(1, geometry.n_channel))
    fields = ()
    if include_symmetry_breaking_field:
        fields = tuple((s, params.h_break) for s in register)
    return SparseOperator(
        geometry=geometry,
        register=register,
        bonds=bonds,
        jxy=params.j,
        jzz=params.j * params.delta,
        fields=fields,
    )


def build_joint_hamiltonian(params: ModelParams, geometry: SystemGeometry) -> SparseOperator:
    """Chain-plus-sender Hamiltonian: the channel bonds plus the (0,1) bond.

    Acts on sites 0..n_channel and as the identity on the isolated spin 0'.
    No symmetry-breaking field: the dynamics always runs under the
    unperturbed Hamiltonian.
    """
    if not geometry.includes_sender_pair:
        raise ConfigError("joint Hamiltonian expects a geometry with the sender pair")
    register = tuple(range(0, geometry.n_channel + 1))
    bonds = tuple((i, i + 1) for i in range(0, geometry.n_channel))
    return SparseOperator(
        geometry=geometry,
        register=register,
        bonds=bonds,
        jxy=params.j,
        jzz=params.j * params.delta,
    )


@dataclass(frozen=True)
class SpinWaveModel:
    """Continuum-limit reference numbers for the planar phase.

    ``v_f`` is the relative spin-wave velocity (normalization fixed to 1 at
    the isotropic point, only shapes are compared) and ``eta_x``/``eta_z``
    are the transverse/longitudinal correlation exponents.
    """

    delta: float
    v_f: float
    eta_x: float
    eta_z: float


def spin_wave(delta: float) -> SpinWaveModel:
    """Spin-wave velocity and anisotropy exponents for -1 <= delta <= 1.

    ``v_f = sin(arccos delta)/arccos delta`` with the limit value 1 at
    delta=1; ``eta_x = 1 - arccos(delta)/pi`` and ``eta_z = 1/eta_x``
    (infinite at delta=-1 where eta_x vanishes).
    """
    if not (-1.0 <= delta <= 1.0):
        raise ConfigError(f"delta={delta} outside [-1, 1]")
    theta = math.acos(delta)
    v_f = 1.0 if theta == 0.0 else math.sin(theta) / theta
    eta_x = 1.0 - theta / math.pi
    eta_z = math.inf if eta_x == 0.0 else 1.0 / eta_x
    return SpinWaveModel(delta=delta, v_f=v_f, eta_x=eta_x, eta_z=eta_z)
