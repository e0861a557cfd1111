"""Qubit-channel abstraction: Kraus sets, teleportation with a noisy
resource, Bell-basis tomography of the chain's effective channel, and the
equivalence of the two transmission strategies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StructureError
from .measures import PAULIS, PSI_MINUS, avg_fidelity_state_transfer
from .spinalg import SystemGeometry

TRACE_PRESERVING_TOL = 1e-9
BELL_OFFDIAG_TOL = 1e-6

# Bell basis ordered to match the Pauli labels (I, x, y, z): applying the
# corresponding Pauli to half a singlet produces exactly these states.
_PSI_PLUS = np.array([0, 1, 1, 0], dtype=np.complex128) / np.sqrt(2)
_PHI_MINUS = np.array([1, 0, 0, -1], dtype=np.complex128) / np.sqrt(2)
_PHI_PLUS = np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2)
BELL_BASIS = np.stack([PSI_MINUS, _PHI_MINUS, _PHI_PLUS, _PSI_PLUS], axis=1)
BELL_LABELS = ("psi_minus", "phi_minus", "phi_plus", "psi_plus")

_SINGLET_PROJ = np.outer(PSI_MINUS, PSI_MINUS.conj())
# measurement operators of the standard teleportation protocol
BELL_PROJECTORS = tuple(
    np.kron(np.eye(2), p) @ _SINGLET_PROJ @ np.kron(np.eye(2), p).conj().T for p in PAULIS
)


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving qubit map given by 2x2 Kraus
    operators."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(np.asarray(k, dtype=np.complex128) for k in self.kraus)
        for k in mats:
            if k.shape != (2, 2):
                raise ConfigError("Kraus operators must be 2x2")
        total = sum(k.conj().T @ k for k in mats)
        if np.max(np.abs(total - np.eye(2))) > TRACE_PRESERVING_TOL:
            raise StructureError("Kraus set is not trace preserving")
        object.__setattr__(self, "kraus", mats)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=np.complex128)
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    # -- stock channels -----------------------------------------------------

    @classmethod
    def identity(cls) -> "KrausChannel":
        return cls((np.eye(2),))

    @classmethod
    def from_pauli_probabilities(cls, p_i, p_x, p_y, p_z) -> "KrausChannel":
        probs = np.array([p_i, p_x, p_y, p_z], dtype=float)
        if np.any(probs < -1e-12) or abs(probs.sum() - 1.0) > 1e-9:
            raise ConfigError("Pauli probabilities must be a distribution")
        probs = np.clip(probs, 0.0, None)
        return cls(tuple(np.sqrt(p) * s for p, s in zip(probs, PAULIS) if p > 0))

    @classmethod
    def depolarizing(cls, strength: float) -> "KrausChannel":
        """Uniform Pauli noise of total weight ``strength``."""
        q = strength / 4.0
        return cls.from_pauli_probabilities(1.0 - 3.0 * q, q, q, q)

    @classmethod
    def amplitude_damping(cls, p: float) -> "KrausChannel":
        if not (0.0 <= p <= 1.0):
            raise ConfigError("damping probability outside [0, 1]")
        k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - p)]])
        k1 = np.array([[0.0, np.sqrt(p)], [0.0, 0.0]])
        return cls((k0, k1))


def random_kraus_channel(rng: np.random.Generator, n_kraus: int) -> KrausChannel:
    """Haar-flavored random channel from the QR of a Gaussian isometry."""
    if not (1 <= n_kraus <= 4):
        raise ConfigError("supported Kraus ranks are 1..4")
    g = rng.normal(size=(2 * n_kraus, 2)) + 1j * rng.normal(size=(2 * n_kraus, 2))
    q, _ = np.linalg.qr(g)
    return KrausChannel(tuple(q[2 * m : 2 * m + 2, :] for m in range(n_kraus)))


# ---------------------------------------------------------------------------
# acting on half a singlet


def apply_channel_to_half_singlet(channel: KrausChannel) -> np.ndarray:
    """State shared after sending the second singlet qubit through the
    channel: ``(I (x) xi)(|psi-><psi-|)``."""
    out = np.zeros((4, 4), dtype=np.complex128)
    for k in channel.kraus:
        op = np.kron(np.eye(2), k)
        out += op @ _SINGLET_PROJ @ op.conj().T
    return out


def teleport_with_resource(resource: np.ndarray, rho_in: np.ndarray) -> np.ndarray:
    """Output of standard teleportation run on a (generally impure) resource
    pair: ``sum_m Tr(resource E_m) sigma_m rho sigma_m``."""
    resource = np.asarray(resource, dtype=np.complex128)
    rho_in = np.asarray(rho_in, dtype=np.complex128)
    out = np.zeros((2, 2), dtype=np.complex128)
    for proj, pauli in zip(BELL_PROJECTORS, PAULIS):
        weight = np.trace(resource @ proj).real
        out += weight * (pauli @ rho_in @ pauli.conj().T)
    return out


def teleportation_avg_fidelity(resource: np.ndarray) -> float:
    """Average teleportation fidelity ``(1 + 2 F_s)/3`` with the singlet
    fraction ``F_s`` of the resource."""
    f_s = float((PSI_MINUS.conj() @ np.asarray(resource) @ PSI_MINUS).real)
    return (1.0 + 2.0 * f_s) / 3.0


# ---------------------------------------------------------------------------
# Pauli-channel tomography


@dataclass(frozen=True)
class PauliChannelParams:
    """Bell-diagonal description of the chain's effective channel: the
    probabilities of I, sigma_x, sigma_y, sigma_z acting on the transmitted
    qubit."""

    p_i: float
    p_x: float
    p_y: float
    p_z: float
    time: float | None = None
    delta: float | None = None
    geometry: SystemGeometry | None = None

    def __post_init__(self):
        probs = self.as_array()
        if probs.min() < -1e-9:
            raise StructureError(f"negative channel probability {probs.min()}")
        if abs(probs.sum() - 1.0) > 1e-8:
            raise StructureError(f"channel probabilities sum to {probs.sum()}")
        if abs(self.p_x - self.p_y) > 1e-8:
            raise StructureError("x/y symmetry violated: p_x != p_y")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_i, self.p_x, self.p_y, self.p_z])

    def kraus_channel(self) -> KrausChannel:
        p = np.clip(self.as_array(), 0.0, None)
        return KrausChannel.from_pauli_probabilities(*(p / p.sum()))


def tomograph_pauli(
    rho_end: np.ndarray,
    time: float | None = None,
    delta: float | None = None,
    geometry: SystemGeometry | None = None,
) -> PauliChannelParams:
    """Read the Pauli-channel probabilities off the end-pair state.

    The state must be diagonal in the Bell basis (true for even chains with
    the unbiased ground state); any off-diagonal above 1e-6 signals an odd
    chain or explicit symmetry breaking and raises.
    """
    rho = np.asarray(rho_end, dtype=np.complex128)
    if rho.shape != (4, 4):
        raise ConfigError("expected a 4x4 density matrix")
    bell = BELL_BASIS.conj().T @ rho @ BELL_BASIS
    off = bell - np.diag(np.diag(bell))
    worst = np.max(np.abs(off))
    if worst > BELL_OFFDIAG_TOL:
        raise StructureError(
            f"state is not Bell diagonal (off-diagonal {worst:.3e}); "
            "odd chain or broken symmetry?"
        )
    p = np.diag(bell).real
    return PauliChannelParams(
        p_i=float(p[0]),
        p_x=float(p[1]),
        p_y=float(p[2]),
        p_z=float(p[3]),
        time=time,
        delta=delta,
        geometry=geometry,
    )


def bell_offdiagonal_magnitude(rho_end: np.ndarray) -> float:
    """Largest off-diagonal element in the Bell basis (diagnostic)."""
    bell = BELL_BASIS.conj().T @ np.asarray(rho_end, dtype=np.complex128) @ BELL_BASIS
    return float(np.max(np.abs(bell - np.diag(np.diag(bell)))))


# ---------------------------------------------------------------------------
# the effective channel induced by an end-pair state


def induced_qubit_channel(rho_out: np.ndarray):
    """Channel ``xi`` with ``(I (x) xi)(|psi-><psi-|) = rho_out``.

    Returned as a callable on 2x2 density matrices; this is how non-Pauli
    (for instance amplitude-damping-like) chain channels are evaluated.
    """
    rho_out = np.asarray(rho_out, dtype=np.complex128).reshape(2, 2, 2, 2)
    sy = PAULIS[2]

    def apply(rho: np.ndarray) -> np.ndarray:
        a = (sy @ np.asarray(rho, dtype=np.complex128) @ sy).T
        return 2.0 * np.einsum("ik,kjil->jl", a, rho_out)

    return apply


# ---------------------------------------------------------------------------
# strategy equivalence


@dataclass(frozen=True)
class EquivalenceReport:
    f_state_transfer: float
    f_teleportation: float
    singlet_fraction: float

    @property
    def difference(self) -> float:
        return abs(self.f_state_transfer - self.f_teleportation)


def fidelity_equivalence_check(channel: KrausChannel) -> EquivalenceReport:
    """Average fidelity via direct transfer and via teleportation over the
    shared noisy pair; the two closed forms agree for every channel."""
    f_st = avg_fidelity_state_transfer(channel)
    rho_out = apply_channel_to_half_singlet(channel)
    f_s = float((PSI_MINUS.conj() @ rho_out @ PSI_MINUS).real)
    f_tp = (1.0 + 2.0 * f_s) / 3.0
    return EquivalenceReport(f_state_transfer=f_st, f_teleportation=f_tp, singlet_fraction=f_s)
