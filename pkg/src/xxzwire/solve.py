"""Ground states, closed-system propagation, thermal ensembles, Lindblad flow.

Closed-system evolution exploits two structural facts: the Hamiltonian
conserves total sigma^z, and the isolated spin 0' never interacts.  A joint
state that starts as (singlet on 0'0) x (channel eigenstate) therefore
reduces to two independent vectors on sites 0..n_channel, each confined to
a single magnetization sector.  These "branch" vectors are what the large-
chain drivers evolve and measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, NumericalError
from .spinalg import (
    MixedState,
    PureState,
    SparseOperator,
    reduced_site_pair_from_vectors,
    sector_basis,
    sector_split,
    sz_to_n_up,
)

DENSE_SECTOR_LIMIT = 600  # below this a sector is diagonalized densely
EIGEN_AUTO_LIMIT = 2500  # sectors up to this size propagate by eigendecomposition
NORM_DRIFT_LIMIT = 1e-9
DEGENERACY_TOL = 1e-10


# ---------------------------------------------------------------------------
# plans and parameter bundles


@dataclass(frozen=True)
class EvolutionPlan:
    """Sampling plan for time evolution; times are in units of 1/J (hbar=1)."""

    t_max: float
    dt_sample: float = 0.02
    method: str = "auto"  # auto | eigendecomposition | krylov
    krylov_dim: int = 40
    tolerance: float = 1e-10

    def __post_init__(self):
        if not (0 < self.dt_sample <= self.t_max):
            raise ConfigError("need 0 < dt_sample <= t_max")
        if self.krylov_dim < 10:
            raise ConfigError("krylov_dim must be at least 10")
        if self.method not in ("auto", "eigendecomposition", "krylov"):
            raise ConfigError(f"unknown propagation method {self.method!r}")

    def sample_times(self) -> np.ndarray:
        n = int(round(self.t_max / self.dt_sample))
        return np.arange(0, n + 1) * self.dt_sample


@dataclass(frozen=True)
class ThermalParams:
    """Initial-channel temperature in units of J/k_B and the relative weight
    below which Boltzmann branches are dropped."""

    temperature: float
    cutoff: float = 1e-6

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be nonnegative")
        if not (0 < self.cutoff <= 1e-3):
            raise ConfigError("cutoff must lie in (0, 1e-3]")


@dataclass(frozen=True)
class LindbladParams:
    """Isotropic local depolarization at rate gamma on the chosen sites
    (default: every site including the isolated spin 0')."""

    gamma: float
    noisy_sites: tuple[int, ...] | None = None
    initial_step: float = 0.01
    tolerance: float = 1e-7

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError("gamma must be nonnegative")
        if self.initial_step <= 0 or self.tolerance <= 0:
            raise ConfigError("step and tolerance must be positive")


# ---------------------------------------------------------------------------
# ground states


@dataclass(frozen=True)
class GroundState:
    energy: float
    state: PureState
    degenerate: bool


def _csr_apply(mat: sp.csr_matrix, vec: np.ndarray) -> np.ndarray:
    # matrices are real; split complex vectors to avoid per-call upcasting
    if np.iscomplexobj(vec):
        return mat @ vec.real + 1j * (mat @ vec.imag)
    return mat @ vec


def _sector_lowest(mat: sp.csr_matrix, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowest-k eigenpairs of a Hermitian sector block, deterministically."""
    dim = mat.shape[0]
    if dim <= max(DENSE_SECTOR_LIMIT, k + 1):
        w, v = np.linalg.eigh(mat.toarray())
        return w[:k], v[:, :k]
    v0 = np.full(dim, 1.0 / np.sqrt(dim))
    w, v = spla.eigsh(mat, k=k, which="SA", v0=v0)
    order = np.argsort(w)
    return w[order], v[:, order]


def ground_state(H: SparseOperator) -> GroundState:
    """Lowest eigenstate of a channel Hamiltonian, sector by sector.

    Degenerate minima (odd antiferromagnetic doublets, ferromagnetic
    multiplets, the fully polarized phase) are resolved the way an
    arbitrarily small -h * sum sigma^z field would: the candidate with the
    largest total magnetization wins.  The degeneracy flag reports whether
    a second state sat within tolerance of the minimum.
    """
    if not H.hermitian:
        raise ConfigError("ground_state needs a Hermitian operator")
    n = H.n_register_sites
    scale = max(abs(H.jxy), abs(H.jzz), 1e-12)
    tol = DEGENERACY_TOL * scale

    candidates = []  # (energy, sz, vector-in-sector, within_sector_second)
    for sz in range(n % 2, n + 1, 2):  # sz >= 0; mirror sectors share spectra
        mat = H.sector_matrix(sz)
        k = min(2, mat.shape[0])
        w, v = _sector_lowest(mat, k)
        second = w[1] if k == 2 else np.inf
        candidates.append((w[0], sz, v[:, 0], second))

    e0 = min(c[0] for c in candidates)
    multiplicity = 0
    for energy, sz, _, second in candidates:
        if energy - e0 <= tol:
            multiplicity += 2 if sz > 0 else 1  # mirror sector at -sz ties
            if second - e0 <= tol:
                multiplicity += 2 if sz > 0 else 1
    degenerate = multiplicity > 1

    best = max(
        (c for c in candidates if c[0] - e0 <= tol),
        key=lambda c: c[1],
    )
    energy, sz, vec, _ = best
    basis = sector_basis(n, sz_to_n_up(n, sz))
    full = np.zeros(1 << n, dtype=np.complex128)
    full[basis] = vec
    full /= np.linalg.norm(full)
    state = PureState(H.geometry, full, sector=sz)
    return GroundState(energy=float(energy), state=state, degenerate=degenerate)


def initial_state(ground: PureState) -> PureState:
    """Product of the 0'0 singlet with a channel state, in the full geometry."""
    geom = ground.geometry
    if geom.includes_sender_pair:
        raise ConfigError("ground state must live on the channel geometry")
    full_geom = geom.with_sender_pair()
    chi = ground.amplitudes
    dim_ch = chi.size
    reg_dim = 2 * dim_ch
    amps = np.zeros(4 * dim_ch, dtype=np.complex128)
    amps[dim_ch:reg_dim] = chi / np.sqrt(2.0)  # 0' up, sender down
    amps[reg_dim : reg_dim + dim_ch] = -chi / np.sqrt(2.0)  # 0' down, sender up
    sector = ground.sector
    return PureState(full_geom, amps, sector=sector)


# ---------------------------------------------------------------------------
# sector evolvers


class _EigenSectorEvolver:
    """Exact evolution of one sector component via dense diagonalization."""

    def __init__(self, eig: tuple[np.ndarray, np.ndarray], v0: np.ndarray):
        w, q = eig
        self._w = w
        self._q = q
        self._c0 = q.T @ v0

    def at(self, t: float) -> np.ndarray:
        return self._q @ (np.exp(-1j * self._w * t) * self._c0)


class _LanczosBasis:
    def __init__(self, mat: sp.csr_matrix, v0: np.ndarray, m: int):
        dim = v0.size
        m = min(m, dim)
        V = np.empty((m, dim), dtype=np.complex128)
        alpha = np.empty(m)
        beta = np.empty(max(m - 1, 0))
        V[0] = v0
        w = _csr_apply(mat, v0)
        alpha[0] = np.vdot(V[0], w).real
        w = w - alpha[0] * V[0]
        k = 1
        beta_next = np.linalg.norm(w)
        for j in range(1, m):
            if beta_next < 1e-13:  # happy breakdown: exact invariant subspace
                beta_next = 0.0
                break
            beta[j - 1] = beta_next
            V[j] = w / beta_next
            w = _csr_apply(mat, V[j]) - beta_next * V[j - 1]
            alpha[j] = np.vdot(V[j], w).real
            w = w - alpha[j] * V[j]
            # full reorthogonalization keeps long recurrences clean
            proj = V[: j + 1].conj() @ w
            w = w - V[: j + 1].T @ proj
            k = j + 1
            beta_next = np.linalg.norm(w)
        self.V = V[:k]
        lam, q = sla.eigh_tridiagonal(alpha[:k], beta[: k - 1])
        self._lam = lam
        self._q = q
        self._q0 = q[0]
        self.beta_next = beta_next

    def sample(self, dt: float) -> tuple[np.ndarray, float]:
        """Small-space solution at offset dt and its error estimate."""
        y = self._q @ (np.exp(-1j * self._lam * dt) * self._q0)
        err = self.beta_next * abs(y[-1])
        return y, err

    def assemble(self, y: np.ndarray) -> np.ndarray:
        return self.V.T @ y


class _KrylovSectorEvolver:
    """Lanczos propagation with a moving anchor.

    A basis built at the anchor serves every requested time whose a
    posteriori error estimate stays below tolerance; otherwise the anchor
    advances by substeps.  Backward offsets are allowed (used when a peak
    is refined between two samples).
    """

    def __init__(self, mat: sp.csr_matrix, v0: np.ndarray, m: int, tol: float):
        self._mat = mat
        self._m = m
        self._tol = tol
        self._anchor_t = 0.0
        self._anchor_v = v0.astype(np.complex128)
        self._basis: _LanczosBasis | None = None

    def _ensure_basis(self) -> _LanczosBasis:
        if self._basis is None:
            self._basis = _LanczosBasis(self._mat, self._anchor_v, self._m)
        return self._basis

    def _advance_anchor(self, dt: float):
        basis = self._ensure_basis()
        step = dt
        while abs(step) > 1e-13:
            y, err = basis.sample(step)
            if err <= 0.5 * self._tol:
                vec = basis.assemble(y)
                norm = np.linalg.norm(vec)
                if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
                    raise NumericalError(f"norm drift {abs(norm - 1.0):.2e} during Krylov step")
                self._anchor_v = vec / norm
                self._anchor_t += step
                self._basis = None
                return
            step *= 0.5
            if abs(step) < 1e-13:
                raise NumericalError("Krylov step collapsed below 1e-13")

    def at(self, t: float) -> np.ndarray:
        guard = 0
        while True:
            basis = self._ensure_basis()
            dt = t - self._anchor_t
            y, err = basis.sample(dt)
            if err <= self._tol:
                vec = basis.assemble(y)
                norm = np.linalg.norm(vec)
                if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
                    raise NumericalError(f"norm drift {abs(norm - 1.0):.2e} at t={t}")
                return vec / norm
            self._advance_anchor(dt)
            guard += 1
            if guard > 10_000:
                raise NumericalError("Krylov propagation failed to converge on a sample")


class _VectorEvolver:
    """Evolves a full register vector by splitting it into sector components."""

    def __init__(self, H: SparseOperator, v0: np.ndarray, plan: EvolutionPlan):
        n = H.n_register_sites
        self._n = n
        self._dim = 1 << n
        self._parts = []
        for sz, coeffs in sector_split(v0, n).items():
            mat = H.sector_matrix(sz)
            weight = np.linalg.norm(coeffs)
            unit = coeffs / weight
            method = plan.method
            if method == "auto":
                method = "eigendecomposition" if mat.shape[0] <= EIGEN_AUTO_LIMIT else "krylov"
            if method == "eigendecomposition":
                if mat.shape[0] > 20_000:
                    raise ConfigError("sector too large for dense eigendecomposition")
                evolver = _EigenSectorEvolver(H.sector_eigh(sz), unit)
            else:
                evolver = _KrylovSectorEvolver(mat, unit, plan.krylov_dim, plan.tolerance)
            basis = sector_basis(n, sz_to_n_up(n, sz))
            self._parts.append((basis, weight, evolver))
        self._cache: tuple[float, np.ndarray] | None = None

    def at(self, t: float) -> np.ndarray:
        if self._cache is not None and self._cache[0] == t:
            return self._cache[1]
        out = np.zeros(self._dim, dtype=np.complex128)
        for basis, weight, evolver in self._parts:
            out[basis] = weight * evolver.at(t)
        self._cache = (t, out)
        return out


# ---------------------------------------------------------------------------
# public closed-system propagation


def propagate(state: PureState, H: SparseOperator, plan: EvolutionPlan):
    """Yield ``(t, state)`` samples of ``exp(-iHt)|state>`` on the plan grid.

    The spin 0' (when present and outside the operator register) is treated
    as a spectator: the two 0' blocks of the vector evolve independently,
    each further split into magnetization sectors.
    """
    geom = state.geometry
    amps = state.amplitudes
    if H.spectator_sender:
        halves = amps.reshape(2, -1)
        evolvers = [_VectorEvolver(H, halves[0], plan), _VectorEvolver(H, halves[1], plan)]

        def assemble(t: float) -> np.ndarray:
            return np.concatenate([ev.at(t) for ev in evolvers])

    else:
        evolver = _VectorEvolver(H, amps, plan)

        def assemble(t: float) -> np.ndarray:
            return evolver.at(t)

    for t in plan.sample_times():
        full = assemble(float(t))
        norm = np.linalg.norm(full)
        if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
            raise NumericalError(f"norm drift {abs(norm - 1.0):.2e} at t={t}")
        yield float(t), PureState(geom, full / norm, sector=state.sector)


# ---------------------------------------------------------------------------
# sender-branch machinery


@dataclass(frozen=True)
class JointBranches:
    """Branch vectors of the joint state at one instant.

    The full state is ``(|0>_{0'} (x) a  -  |1>_{0'} (x) b) / sqrt(2)`` with
    ``a``/``b`` living on the register 0..n_channel; ``a`` starts as
    (sender down) (x) (channel state) and ``b`` as (sender up) (x) (same).
    """

    n_register: int
    a: np.ndarray
    b: np.ndarray
    time: float


class BranchPairEvolver:
    """Propagates the two sender branches of one channel basis state."""

    def __init__(self, H_joint: SparseOperator, channel_vector: np.ndarray, plan: EvolutionPlan):
        if not H_joint.spectator_sender:
            raise ConfigError("joint Hamiltonian with spectator 0' expected")
        n_reg = H_joint.n_register_sites
        dim_ch = 1 << (n_reg - 1)
        if channel_vector.size != dim_ch:
            raise ConfigError("channel vector does not match the register")
        a0 = np.zeros(2 * dim_ch, dtype=np.complex128)
        b0 = np.zeros(2 * dim_ch, dtype=np.complex128)
        a0[dim_ch:] = channel_vector  # sender spin down
        b0[:dim_ch] = channel_vector  # sender spin up
        self.n_register = n_reg
        self._a = _VectorEvolver(H_joint, a0, plan)
        self._b = _VectorEvolver(H_joint, b0, plan)

    def branches_at(self, t: float) -> JointBranches:
        return JointBranches(self.n_register, self._a.at(t), self._b.at(t), t)


def pair_density_from_branches(branches: JointBranches, j_axis: int) -> np.ndarray:
    """Reduced density matrix of (0', register site at ``j_axis``).

    Row/column order is |b_0' b_j>.  Works directly on the branch vectors,
    never materializing the joint state.
    """
    n = branches.n_register
    raa = reduced_site_pair_from_vectors(branches.a, branches.a, n, j_axis)
    rab = reduced_site_pair_from_vectors(branches.a, branches.b, n, j_axis)
    rbb = reduced_site_pair_from_vectors(branches.b, branches.b, n, j_axis)
    rho = np.empty((4, 4), dtype=np.complex128)
    rho[:2, :2] = raa
    rho[:2, 2:] = -rab
    rho[2:, :2] = -rab.conj().T
    rho[2:, 2:] = rbb
    return 0.5 * rho


# ---------------------------------------------------------------------------
# thermal ensembles


def thermal_state(H_ch: SparseOperator, thermal: ThermalParams) -> MixedState:
    """Boltzmann ensemble of channel eigenstates at the given temperature.

    Every sector is diagonalized densely; weights below the cutoff are
    dropped and the rest renormalized.  At zero temperature the ensemble
    reduces to the ground state, or to the uniform mixture over a
    degenerate ground manifold.
    """
    n = H_ch.n_register_sites
    if H_ch.geometry.includes_sender_pair:
        raise ConfigError("thermal_state expects the channel Hamiltonian")
    if n > 14:
        raise ConfigError("thermal ensembles limited to n_channel <= 14")
    energies = []
    vectors = []  # (sz, column)
    for sz in range(-n, n + 1, 2):
        mat = H_ch.sector_matrix(sz).toarray()
        w, v = np.linalg.eigh(mat)
        for i in range(w.size):
            energies.append(w[i])
            vectors.append((sz, v[:, i]))
    energies = np.array(energies)
    e0 = energies.min()
    if thermal.temperature == 0.0:
        weights = (energies - e0 <= 1e-12).astype(float)
    else:
        weights = np.exp(-(energies - e0) / thermal.temperature)
    weights = weights / weights.sum()
    keep = np.flatnonzero(weights >= thermal.cutoff * weights.max())
    weights = weights[keep] / weights[keep].sum()

    geom = H_ch.geometry
    branches = []
    for w, idx in zip(weights, keep):
        sz, vec = vectors[idx]
        basis = sector_basis(n, sz_to_n_up(n, sz))
        full = np.zeros(1 << n, dtype=np.complex128)
        full[basis] = vec
        branches.append((float(w), PureState(geom, full, sector=sz)))
    return MixedState(geom, ensemble=tuple(branches))


# ---------------------------------------------------------------------------
# Lindblad open-system integration


def _identity_times_site_trace(rho: np.ndarray, n: int, axis: int) -> np.ndarray:
    """I_axis (x) Tr_axis(rho): the isotropic single-site depolarizer core."""
    left = 1 << axis
    right = 1 << (n - 1 - axis)
    t = rho.reshape(left, 2, right, left, 2, right)
    tr = np.einsum("asbcsd->abcd", t)
    out = np.zeros_like(t)
    out[:, 0, :, :, 0, :] = tr
    out[:, 1, :, :, 1, :] = tr
    return out.reshape(rho.shape)


def _sparse_real_mul(mat: sp.csr_matrix, dense: np.ndarray) -> np.ndarray:
    return mat @ dense.real + 1j * (mat @ dense.imag)


def lindblad_rhs(rho: np.ndarray, H_full: sp.csr_matrix, gamma: float, n: int, noisy_axes):
    """d rho / dt for unitary flow plus isotropic local depolarization.

    The dissipator -(gamma/3) sum_i sum_alpha (rho - s_i^a rho s_i^a)
    collapses, via the Pauli completeness relation, to
    (gamma/3) sum_i (2 I_i (x) Tr_i rho - 4 rho).
    """
    left = _sparse_real_mul(H_full, rho)
    right = _sparse_real_mul(H_full, rho.T).T  # valid: H is real symmetric
    out = -1j * (left - right)
    if gamma:
        acc = np.zeros_like(rho)
        for axis in noisy_axes:
            acc += _identity_times_site_trace(rho, n, axis)
        out += (2.0 * gamma / 3.0) * acc - (4.0 * gamma / 3.0) * len(noisy_axes) * rho
    return out


def _rk4_step(rho, h, rhs):
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * h * k1)
    k3 = rhs(rho + 0.5 * h * k2)
    k4 = rhs(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def propagate_lindblad(
    rho0: MixedState,
    H: SparseOperator,
    lind: LindbladParams,
    plan: EvolutionPlan,
):
    """Yield ``(t, rho)`` samples of the dissipative evolution.

    Classical fixed-order RK4 with step-halving acceptance: each step is
    taken whole and as two halves, the difference (scaled by 1/15) must stay
    below tolerance * step, and the halved result is kept.
    """
    geom = rho0.geometry
    n = geom.total_sites
    if n > 10:
        raise ConfigError("dense Lindblad integration limited to 10 sites")
    if rho0.dense is None:
        raise ConfigError("propagate_lindblad needs the dense representation")

    reg = H.register_matrix()
    if H.spectator_sender:
        H_full = sp.kron(sp.identity(2, format="csr"), reg, format="csr")
    else:
        H_full = reg

    sites = geom.sites() if lind.noisy_sites is None else lind.noisy_sites
    noisy_axes = tuple(geom.axis_of(s) for s in sites)

    def rhs(r):
        return lindblad_rhs(r, H_full, lind.gamma, n, noisy_axes)

    rho = rho0.dense.copy()
    t = 0.0
    h = lind.initial_step
    psd_floor = -1e-6

    yield 0.0, MixedState(geom, dense=rho.copy())

    for t_target in plan.sample_times()[1:]:
        t_target = float(t_target)
        while t < t_target - 1e-12:
            step = min(h, t_target - t)
            full = _rk4_step(rho, step, rhs)
            half = _rk4_step(_rk4_step(rho, 0.5 * step, rhs), 0.5 * step, rhs)
            err = np.max(np.abs(full - half)) / 15.0
            if err <= lind.tolerance * step:
                rho = 0.5 * (half + half.conj().T)  # keep exact Hermiticity
                t += step
                grow = 0.9 * (lind.tolerance * step / max(err, 1e-300)) ** 0.2
                h = step * min(2.5, max(0.5, grow))
            else:
                h = step * max(0.1, 0.9 * (lind.tolerance * step / err) ** 0.2)
                if h < 1e-10:
                    raise NumericalError("Lindblad step size collapsed")
        drift = abs(np.trace(rho).real - 1.0)
        if drift > 1e-7:
            raise NumericalError(f"Lindblad trace drift {drift:.2e}")
        sample = rho.copy()
        evals_min = np.linalg.eigvalsh(sample).min()
        if evals_min < psd_floor:
            raise NumericalError(f"Lindblad state developed eigenvalue {evals_min:.2e}")
        yield t_target, MixedState(geom, dense=sample)
