import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SX, SY, SZ, dense_xxz, site_op
from xxzwire.errors import StructureError
from xxzwire.measures import (
    PSI_MINUS,
    CorrelatorRecord,
    TwoQubitX,
    avg_fidelity_state_transfer,
    concurrence,
    concurrence_from_correlators,
    concurrence_general,
    extract_x_state,
    monte_carlo_avg_fidelity,
    singlet_fraction,
    two_time_correlator,
    von_neumann_entropy,
)
from xxzwire.model import ModelParams, build_channel_hamiltonian, build_joint_hamiltonian
from xxzwire.solve import BranchPairEvolver, EvolutionPlan, ground_state, initial_state
from xxzwire.spinalg import SENDER, SystemGeometry, partial_trace_two_sites

SINGLET_PROJ = np.outer(PSI_MINUS, PSI_MINUS.conj())


def werner(p):
    return p * SINGLET_PROJ + (1 - p) * np.eye(4) / 4.0


# ---------------------------------------------------------------------------
# X-state extraction


def test_extract_singlet():
    x = extract_x_state(SINGLET_PROJ)
    assert x.u_plus == pytest.approx(0.0, abs=1e-12)
    assert x.u_minus == pytest.approx(0.0, abs=1e-12)
    assert x.w_plus == pytest.approx(0.5)
    assert x.w_minus == pytest.approx(0.5)
    assert x.z == pytest.approx(-0.5)


def test_extract_maximally_mixed():
    x = extract_x_state(np.eye(4) / 4.0)
    assert x.u_plus == x.w_plus == pytest.approx(0.25)
    assert x.z == pytest.approx(0.0)


def test_extract_rejects_non_x_structure():
    rho = np.eye(4, dtype=complex) / 4.0
    rho[0, 3] = rho[3, 0] = 0.1  # outer anti-diagonal must vanish
    with pytest.raises(StructureError):
        extract_x_state(rho)


def test_x_state_positivity_guard():
    with pytest.raises(StructureError):
        TwoQubitX(u_plus=0.25, u_minus=0.25, w_plus=0.25, w_minus=0.25, z=0.4)


# ---------------------------------------------------------------------------
# concurrence and singlet fraction


def test_concurrence_reference_values():
    assert concurrence(extract_x_state(SINGLET_PROJ)) == pytest.approx(1.0)
    product = np.diag([1.0, 0, 0, 0]).astype(complex)
    assert concurrence(extract_x_state(product)) == pytest.approx(0.0)
    assert concurrence_general(product) == pytest.approx(0.0, abs=1e-8)


def test_werner_concurrence_matches_spin_flip_oracle():
    p = 0.9092
    rho = werner(p)
    expected = (3 * p - 1) / 2
    assert expected == pytest.approx(0.8638, abs=1e-4)
    assert concurrence_general(rho) == pytest.approx(expected, abs=1e-10)
    assert concurrence(extract_x_state(rho)) == pytest.approx(expected, abs=1e-10)


@st.composite
def x_states(draw):
    raw = [draw(st.floats(0.01, 1.0)) for _ in range(4)]
    total = sum(raw)
    u_plus, u_minus, w_plus, w_minus = [r / total for r in raw]
    zmax = np.sqrt(w_plus * w_minus)
    frac = draw(st.floats(-1.0, 1.0))
    return TwoQubitX(u_plus=u_plus, u_minus=u_minus, w_plus=w_plus, w_minus=w_minus, z=frac * zmax)


@settings(max_examples=60, deadline=None)
@given(x_states())
def test_x_fast_path_matches_general_concurrence(x):
    fast = concurrence(x)
    general = concurrence_general(x.density_matrix())
    assert fast == pytest.approx(general, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(x_states())
def test_measures_invariant_under_qubit_swap(x):
    assert concurrence(x) == pytest.approx(concurrence(x.swapped()), abs=1e-12)
    assert singlet_fraction(x) == pytest.approx(singlet_fraction(x.swapped()), abs=1e-12)


def test_singlet_fraction_reference_values():
    assert singlet_fraction(SINGLET_PROJ) == pytest.approx(1.0)
    assert singlet_fraction(np.eye(4) / 4.0) == pytest.approx(0.25)
    psi_plus = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
    assert singlet_fraction(np.outer(psi_plus, psi_plus)) == pytest.approx(0.0, abs=1e-12)


def test_singlet_fraction_formula_equals_direct_overlap(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    direct = (PSI_MINUS.conj() @ rho @ PSI_MINUS).real
    assert singlet_fraction(rho) == pytest.approx(direct, abs=1e-12)


# ---------------------------------------------------------------------------
# entropy


def test_entropy_reference_values():
    pure = np.diag([1.0, 0, 0, 0]).astype(complex)
    assert von_neumann_entropy(pure) == pytest.approx(0.0, abs=1e-12)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0)
    rho = np.diag([0.7, 0.1, 0.1, 0.1]).astype(complex)
    expected = -(0.7 * np.log2(0.7) + 0.3 * np.log2(0.1))
    assert expected == pytest.approx(1.3568, abs=1e-4)
    assert von_neumann_entropy(rho) == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# average fidelities


def test_avg_fidelity_closed_forms():
    assert avg_fidelity_state_transfer([np.eye(2)]) == pytest.approx(1.0)
    assert avg_fidelity_state_transfer([SX]) == pytest.approx(1.0 / 3.0)
    uniform = [0.5 * np.eye(2), 0.5 * SX, 0.5 * SY, 0.5 * SZ]
    assert avg_fidelity_state_transfer(uniform) == pytest.approx(0.5)


def test_avg_fidelity_monte_carlo_within_three_sigma(rng):
    for _ in range(3):
        p = rng.dirichlet(np.ones(4))
        kraus = [np.sqrt(p[0]) * np.eye(2), np.sqrt(p[1]) * SX, np.sqrt(p[2]) * SY, np.sqrt(p[3]) * SZ]
        exact = avg_fidelity_state_transfer(kraus)
        mc, se = monte_carlo_avg_fidelity(kraus, n_samples=50_000, seed=int(rng.integers(1 << 30)))
        assert abs(mc - exact) < 3 * se


def test_avg_fidelity_rejects_non_trace_preserving():
    with pytest.raises(StructureError):
        avg_fidelity_state_transfer([0.5 * np.eye(2)])


# ---------------------------------------------------------------------------
# two-time correlators


def _branches_at(n_channel, delta, t):
    geometry = SystemGeometry(n_channel)
    H_ch = build_channel_hamiltonian(ModelParams(j=1.0, delta=delta), geometry)
    gs = ground_state(H_ch)
    H = build_joint_hamiltonian(ModelParams(j=1.0, delta=delta), geometry.with_sender_pair())
    plan = EvolutionPlan(t_max=max(t, 0.1), dt_sample=max(t, 0.1))
    return gs, BranchPairEvolver(H, gs.state.amplitudes, plan).branches_at(t)


def test_equal_time_sender_pair_correlator_is_anticorrelated():
    # both operators on the singlet at t=0: <sigma^z_{0'} sigma^z_0> = -1
    _, branches = _branches_at(4, 1.0, 0.0)
    rec = two_time_correlator(branches, "z", 0)
    assert rec.value == pytest.approx(-1.0, abs=1e-12)
    # transverse component is likewise -1 on the singlet
    assert two_time_correlator(branches, "x", 0).value == pytest.approx(-1.0, abs=1e-12)


def test_equal_time_transverse_correlator_vanishes_off_sender():
    _, branches = _branches_at(4, 1.0, 0.0)
    for j in range(1, 5):
        assert two_time_correlator(branches, "x", j).value == pytest.approx(0.0, abs=1e-12)


def test_correlator_matches_dense_heisenberg_oracle():
    n_channel, delta, t = 3, 0.5, 0.8
    gs, branches = _branches_at(n_channel, delta, t)
    psi0 = initial_state(gs.state)
    n_total = n_channel + 2
    H_reg = dense_xxz(n_channel + 1, 1.0, delta)
    H_full = np.kron(np.eye(2 ** 1), H_reg)  # identity on the 0' axis
    U = sla.expm(-1j * H_full * t)
    for alpha, mat in (("x", SX), ("y", SY), ("z", SZ)):
        for j in range(0, n_channel + 1):
            op0 = site_op(mat, 0, n_total)  # 0' is the leading axis
            opj_t = U.conj().T @ site_op(mat, j + 1, n_total) @ U
            expected = (psi0.amplitudes.conj() @ (op0 @ opj_t @ psi0.amplitudes)).real
            got = two_time_correlator(branches, alpha, j).value
            assert got == pytest.approx(expected, abs=1e-10)


def test_correlator_concurrence_cross_validation():
    # transverse/longitudinal records reproduce the end-pair concurrence
    n_channel, delta = 4, 1.0
    geometry = SystemGeometry(n_channel)
    H_ch = build_channel_hamiltonian(ModelParams(j=1.0, delta=delta), geometry)
    gs = ground_state(H_ch)
    H = build_joint_hamiltonian(ModelParams(j=1.0, delta=delta), geometry.with_sender_pair())
    plan = EvolutionPlan(t_max=3.0, dt_sample=0.5)
    evolver = BranchPairEvolver(H, gs.state.amplitudes, plan)
    psi0 = initial_state(gs.state)
    from xxzwire.solve import pair_density_from_branches, propagate

    for t, psi in propagate(psi0, H, plan):
        branches = evolver.branches_at(t)
        for j in range(1, n_channel + 1):
            x_rec = two_time_correlator(branches, "x", j).value
            z_rec = two_time_correlator(branches, "z", j).value
            via_corr = concurrence_from_correlators(x_rec, z_rec)
            rho = partial_trace_two_sites(psi, SENDER, j)
            assert via_corr == pytest.approx(concurrence_general(rho), abs=1e-8)


def test_correlator_record_bounds():
    with pytest.raises(StructureError):
        CorrelatorRecord(alpha="z", sites=(-1, 2), time=0.0, value=1.5)
