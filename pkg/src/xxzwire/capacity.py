"""Single-use classical information capacity of the extracted channel,
maximized over orthogonal pure input ensembles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PauliChannelParams, induced_qubit_channel
from .errors import ConfigError, StructureError
from .measures import von_neumann_entropy

THETA_GRID_STEP = 1e-4
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class InputEnsemble:
    """Pair of orthogonal pure qubit states at polar angle theta, azimuth
    phi, used with prior probabilities p1/p2."""

    theta: float
    phi: float = 0.0
    p1: float = 0.5
    p2: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi):
            raise ConfigError("theta outside [0, pi]")
        if not (0.0 <= self.phi < 2.0 * np.pi):
            raise ConfigError("phi outside [0, 2 pi)")
        if abs(self.p1 + self.p2 - 1.0) > 1e-12 or min(self.p1, self.p2) < 0:
            raise ConfigError("priors must form a distribution")

    def states(self) -> tuple[np.ndarray, np.ndarray]:
        c, s = np.cos(self.theta / 2.0), np.sin(self.theta / 2.0)
        e = np.exp(1j * self.phi)
        psi1 = np.array([c, e * s], dtype=np.complex128)
        psi2 = np.array([s, -e * c], dtype=np.complex128)
        return psi1, psi2


@dataclass(frozen=True)
class CapacityResult:
    """Best single-use accessible information over orthogonal pure
    ensembles, with the optimizing polar angle and its regime class."""

    h1: float
    theta_opt: float
    regime: str  # pole | equator | degenerate

    def __post_init__(self):
        if not (-1e-12 <= self.h1 <= 1.0 + 1e-12):
            raise StructureError(f"h1={self.h1} outside [0, 1]")


def binary_entropy(p: float | np.ndarray):
    p = np.clip(p, 0.0, 1.0)
    q = 1.0 - p
    out = np.zeros_like(np.asarray(p, dtype=float))
    m = (p > 0) & (p < 1)
    pm, qm = np.asarray(p)[m], np.asarray(q)[m]
    out[m] = -pm * np.log2(pm) - qm * np.log2(qm)
    return out if out.ndim else float(out)


def pauli_transfer_eigenvalues(params: PauliChannelParams) -> tuple[float, float, float]:
    """Bloch-vector shrink factors (lambda_x, lambda_y, lambda_z)."""
    pi_, px, py, pz = params.as_array()
    return (
        pi_ + px - py - pz,
        pi_ - px + py - pz,
        pi_ - px - py + pz,
    )


def _apply_pauli_channel(params: PauliChannelParams, rho: np.ndarray) -> np.ndarray:
    from .measures import PAULIS

    probs = np.clip(params.as_array(), 0.0, None)
    return sum(p * (s @ rho @ s.conj().T) for p, s in zip(probs, PAULIS))


def holevo_h1(params: PauliChannelParams, ensemble: InputEnsemble) -> float:
    """Accessible-information bound of one channel use for the ensemble:
    entropy of the averaged output minus the average output entropy."""
    psi1, psi2 = ensemble.states()
    rho1 = np.outer(psi1, psi1.conj())
    rho2 = np.outer(psi2, psi2.conj())
    out1 = _apply_pauli_channel(params, rho1)
    out2 = _apply_pauli_channel(params, rho2)
    avg = _apply_pauli_channel(params, ensemble.p1 * rho1 + ensemble.p2 * rho2)
    return von_neumann_entropy(avg) - (
        ensemble.p1 * von_neumann_entropy(out1) + ensemble.p2 * von_neumann_entropy(out2)
    )


def holevo_h1_from_output(rho_out: np.ndarray, ensemble: InputEnsemble) -> float:
    """Same bound evaluated through the channel induced by an end-pair
    state; used where the chain is not a Pauli channel."""
    xi = induced_qubit_channel(rho_out)
    psi1, psi2 = ensemble.states()
    rho1 = np.outer(psi1, psi1.conj())
    rho2 = np.outer(psi2, psi2.conj())
    out1 = xi(rho1)
    out2 = xi(rho2)
    avg = xi(ensemble.p1 * rho1 + ensemble.p2 * rho2)
    return von_neumann_entropy(avg) - (
        ensemble.p1 * von_neumann_entropy(out1) + ensemble.p2 * von_neumann_entropy(out2)
    )


def _h1_theta_curve(params: PauliChannelParams, thetas: np.ndarray) -> np.ndarray:
    """Closed form of h1(theta) for equal priors: the averaged input is the
    maximally mixed state, so h1 = 1 - h2((1 + r(theta))/2) with r the
    output Bloch length."""
    lx, _, lz = pauli_transfer_eigenvalues(params)
    r = np.sqrt((lx * np.sin(thetas)) ** 2 + (lz * np.cos(thetas)) ** 2)
    return 1.0 - binary_entropy((1.0 + r) / 2.0)


def maximize_c1(params: PauliChannelParams) -> CapacityResult:
    """Best equal-prior orthogonal ensemble for one use of a Pauli channel.

    Priors are pinned at 1/2 (they maximize the averaged-output entropy
    for every theta); the polar angle then only has the pole/equator
    choice: whichever of |lambda_z|, |lambda_x| is larger.  For channels
    dominated by the identity this reduces to comparing p_z with p_x.
    The closed form is cross-checked against a fine grid scan and a direct
    matrix evaluation.
    """
    if abs(params.p_x - params.p_y) > 1e-8:
        raise ConfigError("maximize_c1 requires p_x = p_y")
    lx, _, lz = pauli_transfer_eigenvalues(params)
    if abs(abs(lz) - abs(lx)) <= DEGENERACY_TOL:
        regime = "degenerate"
        theta_opt = 0.0
        r = abs(lz)
    elif abs(lz) > abs(lx):
        regime = "pole"
        theta_opt = 0.0
        r = abs(lz)
    else:
        regime = "equator"
        theta_opt = np.pi / 2.0
        r = abs(lx)
    h1 = float(1.0 - binary_entropy((1.0 + r) / 2.0))

    thetas = np.arange(0.0, np.pi + THETA_GRID_STEP, THETA_GRID_STEP)
    grid = _h1_theta_curve(params, thetas)
    if grid.max() > h1 + 1e-9:
        raise NumericalErrorFromScan(grid.max(), h1)
    direct = holevo_h1(params, InputEnsemble(theta=theta_opt))
    if abs(direct - h1) > 1e-9:
        raise StructureError(f"matrix route h1={direct} disagrees with closed form {h1}")
    return CapacityResult(h1=h1, theta_opt=float(theta_opt), regime=regime)


class NumericalErrorFromScan(StructureError):
    def __init__(self, scanned, closed):
        super().__init__(f"theta scan found h1={scanned} above closed form {closed}")


def maximize_c1_from_output(rho_out: np.ndarray, theta_grid: int = 181) -> CapacityResult:
    """Grid maximization for a channel given only by its end-pair state.

    The scan runs over theta at equal priors (phi plays no role for the
    x/y-symmetric chains); the regime label reflects where the optimum
    landed.
    """
    thetas = np.linspace(0.0, np.pi, theta_grid)
    values = np.array([holevo_h1_from_output(rho_out, InputEnsemble(theta=t)) for t in thetas])
    best = int(np.argmax(values))
    theta_opt = float(thetas[best])
    spread = values.max() - values.min()
    if spread <= DEGENERACY_TOL:
        regime = "degenerate"
    elif min(abs(theta_opt - 0.0), abs(np.pi - theta_opt)) < abs(theta_opt - np.pi / 2.0):
        regime = "pole"
    else:
        regime = "equator"
    return CapacityResult(h1=float(values[best]), theta_opt=theta_opt, regime=regime)
