"""Two-qubit state measures: X form, concurrence, singlet fraction,
two-time correlators, entropies, and average transmission fidelities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StructureError
from .solve import JointBranches
from .spinalg import apply_site_pauli

SIGMA = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
}
PAULIS = (np.eye(2, dtype=np.complex128), SIGMA["x"], SIGMA["y"], SIGMA["z"])

PSI_MINUS = np.array([0.0, 1.0, -1.0, 0.0], dtype=np.complex128) / np.sqrt(2.0)

X_PATTERN_TOL = 1e-7
RADICAND_CLAMP = 1e-12


# ---------------------------------------------------------------------------
# the X-form two-qubit state


@dataclass(frozen=True)
class TwoQubitX:
    """Two-qubit density matrix with support on the diagonal and the inner
    anti-diagonal only: populations ``u_plus, w_plus, w_minus, u_minus`` down
    the diagonal and a real coherence ``z`` between |01> and |10>."""

    u_plus: float
    u_minus: float
    w_plus: float
    w_minus: float
    z: float
    sites: tuple[int, int] | None = None
    time: float | None = None

    def __post_init__(self):
        total = self.u_plus + self.u_minus + self.w_plus + self.w_minus
        if abs(total - 1.0) > 1e-9:
            raise StructureError(f"populations sum to {total}, not 1")
        if min(self.u_plus, self.u_minus, self.w_plus, self.w_minus) < -1e-9:
            raise StructureError("negative population")
        bound = np.sqrt(max(self.w_plus * self.w_minus, 0.0)) + 1e-9
        if abs(self.z) > bound:
            raise StructureError(f"coherence |z|={abs(self.z)} violates positivity bound {bound}")

    def density_matrix(self) -> np.ndarray:
        rho = np.zeros((4, 4), dtype=np.complex128)
        rho[0, 0] = self.u_plus
        rho[1, 1] = self.w_plus
        rho[2, 2] = self.w_minus
        rho[3, 3] = self.u_minus
        rho[1, 2] = rho[2, 1] = self.z
        return rho

    def swapped(self) -> "TwoQubitX":
        """The same state with the two qubits exchanged."""
        return TwoQubitX(
            u_plus=self.u_plus,
            u_minus=self.u_minus,
            w_plus=self.w_minus,
            w_minus=self.w_plus,
            z=self.z,
            sites=None if self.sites is None else (self.sites[1], self.sites[0]),
            time=self.time,
        )


def extract_x_state(
    rho: np.ndarray,
    sites: tuple[int, int] | None = None,
    time: float | None = None,
) -> TwoQubitX:
    """Read the X-form parameters off a 4x4 density matrix.

    Any element outside the X pattern (including the outer anti-diagonal
    <00|rho|11>, which magnetization conservation forces to zero here)
    larger than 1e-7 signals a symmetry bug upstream and raises.
    """
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ConfigError("expected a 4x4 density matrix")
    mask = np.ones((4, 4), dtype=bool)
    for i in range(4):
        mask[i, i] = False
    mask[1, 2] = mask[2, 1] = False
    worst = np.max(np.abs(rho[mask]))
    if worst > X_PATTERN_TOL:
        raise StructureError(f"off-pattern element of magnitude {worst:.3e}")
    imag = max(np.max(np.abs(np.diag(rho).imag)), abs(rho[1, 2].imag))
    if imag > X_PATTERN_TOL:
        raise StructureError(f"imaginary part {imag:.3e} in X-form elements")
    return TwoQubitX(
        u_plus=float(rho[0, 0].real),
        w_plus=float(rho[1, 1].real),
        w_minus=float(rho[2, 2].real),
        u_minus=float(rho[3, 3].real),
        z=float(rho[1, 2].real),
        sites=sites,
        time=time,
    )


# ---------------------------------------------------------------------------
# entanglement and overlap measures


def concurrence_general(rho: np.ndarray) -> float:
    """Wootters spin-flip concurrence of an arbitrary two-qubit state.

    The flip eigenvalues are computed as the singular values of
    ``sqrt(rho) (sy (x) sy) conj(sqrt(rho))``, which keeps the small ones
    accurate in absolute terms (the eigenvalue-product route loses half the
    digits near the positivity boundary).
    """
    rho = np.asarray(rho, dtype=np.complex128)
    yy = np.kron(SIGMA["y"], SIGMA["y"])
    w, v = np.linalg.eigh(rho)
    root = v @ (np.sqrt(np.clip(w, 0.0, None))[:, None] * v.conj().T)
    lam = np.linalg.svd(root @ yy @ root.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence(state: TwoQubitX | np.ndarray) -> float:
    """Concurrence in [0, 1]; X-form inputs use the closed expression
    ``2 max(0, |z| - sqrt(u+ u-))`` with tiny negative radicands clamped."""
    if isinstance(state, TwoQubitX):
        radicand = state.u_plus * state.u_minus
        if -RADICAND_CLAMP < radicand < 0.0:
            radicand = 0.0
        if radicand < 0.0:
            raise StructureError("negative population product beyond clamp")
        return float(max(0.0, 2.0 * (abs(state.z) - np.sqrt(radicand))))
    return concurrence_general(state)


def singlet_fraction(state: TwoQubitX | np.ndarray) -> float:
    """Overlap with the two-qubit singlet; for X states
    ``(w+ + w- - 2z)/2``."""
    if isinstance(state, TwoQubitX):
        return float(0.5 * (state.w_plus + state.w_minus - 2.0 * state.z))
    rho = np.asarray(state, dtype=np.complex128)
    return float((PSI_MINUS.conj() @ rho @ PSI_MINUS).real)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits, with 0 log 0 = 0."""
    evals = np.linalg.eigvalsh(np.asarray(rho, dtype=np.complex128))
    evals = np.clip(evals.real, 0.0, 1.0)
    nz = evals[evals > 1e-15]
    return float(-(nz * np.log2(nz)).sum())


# ---------------------------------------------------------------------------
# two-time correlators of the joint dynamics


@dataclass(frozen=True)
class CorrelatorRecord:
    """Value of <sigma^alpha_{0'}(0) sigma^alpha_j(t)> on the joint initial
    state (singlet x channel).  Because the isolated spin anticorrelates
    with the sender inside the singlet, this equals minus the channel-only
    correlator of site 0; this sign convention is the one under which the
    longitudinal correlator drops below -1/3 exactly where entanglement
    arrives."""

    alpha: str
    sites: tuple[int, int]
    time: float
    value: float

    def __post_init__(self):
        if abs(self.value) > 1.0 + 1e-9:
            raise StructureError(f"correlator {self.value} outside [-1, 1]")


def two_time_correlator(branches: JointBranches, alpha: str, j: int) -> CorrelatorRecord:
    """Correlator between the isolated spin at time zero and site j at the
    branch time.

    Valid for dynamics started from the unbiased (not symmetry-broken)
    channel state; the caller guards the regime.  ``j`` is a register site,
    0 through n_channel.
    """
    if alpha not in SIGMA:
        raise ConfigError(f"unknown Pauli label {alpha!r}")
    n = branches.n_register
    if not (0 <= j < n):
        raise ConfigError(f"site {j} outside the register")
    sig = SIGMA[alpha]
    op_b = apply_site_pauli(branches.b, n, j, alpha)
    op_a = apply_site_pauli(branches.a, n, j, alpha)
    aa = np.vdot(branches.a, op_a)
    ab = np.vdot(branches.a, op_b)
    ba = np.vdot(branches.b, op_a)
    bb = np.vdot(branches.b, op_b)
    value = 0.5 * (sig[0, 0] * aa - sig[0, 1] * ab - sig[1, 0] * ba + sig[1, 1] * bb)
    if abs(value.imag) > 1e-9:
        raise StructureError(f"correlator has imaginary part {value.imag:.3e}")
    return CorrelatorRecord(alpha=alpha, sites=(-1, j), time=branches.time, value=float(value.real))


def concurrence_from_correlators(x_value: float, z_value: float) -> float:
    """End-to-end concurrence from the transverse and longitudinal
    correlator records: ``max(0, |x| - z/2 - 1/2)``."""
    return float(max(0.0, abs(x_value) - 0.5 * z_value - 0.5))


# ---------------------------------------------------------------------------
# average transmission fidelities


def _kraus_list(channel) -> list[np.ndarray]:
    kraus = getattr(channel, "kraus", channel)
    mats = [np.asarray(k, dtype=np.complex128) for k in kraus]
    total = sum(k.conj().T @ k for k in mats)
    if np.max(np.abs(total - np.eye(2))) > 1e-9:
        raise StructureError("Kraus set is not trace preserving")
    return mats


def avg_fidelity_state_transfer(channel) -> float:
    """Average fidelity of sending a uniformly random pure qubit through a
    channel: ``1/3 + (1/6) sum_m |Tr K_m|^2``."""
    mats = _kraus_list(channel)
    return float(1.0 / 3.0 + sum(abs(np.trace(k)) ** 2 for k in mats) / 6.0)


def monte_carlo_avg_fidelity(channel, n_samples: int = 100_000, seed: int = 7) -> tuple[float, float]:
    """Bloch-sphere Monte-Carlo estimate of the average fidelity.

    Returns (mean, standard error); used as a statistical cross-check of
    the closed forms.
    """
    mats = _kraus_list(channel)
    rng = np.random.default_rng(seed)
    cos_theta = rng.uniform(-1.0, 1.0, size=n_samples)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n_samples)
    half = np.arccos(cos_theta) / 2.0
    states = np.stack([np.cos(half), np.exp(1j * phi) * np.sin(half)], axis=1)
    fid = np.zeros(n_samples)
    for k in mats:
        amp = np.einsum("ni,ij,nj->n", states.conj(), k, states)
        fid += np.abs(amp) ** 2
    return float(fid.mean()), float(fid.std(ddof=1) / np.sqrt(n_samples))
