import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_partial_trace_pair, dense_xxz, random_state_vector
from xxzwire.errors import ConfigError, StructureError
from xxzwire.spinalg import (
    SENDER,
    MixedState,
    PureState,
    SparseOperator,
    SystemGeometry,
    partial_trace_two_sites,
    sector_assemble,
    sector_basis,
    sector_decompose,
    sector_split,
    total_sz,
)

SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)


def embed(geometry, amps):
    return PureState(geometry, amps)


# ---------------------------------------------------------------------------
# geometry


def test_total_sites_with_and_without_sender_pair():
    assert SystemGeometry(4).total_sites == 4
    assert SystemGeometry(4, includes_sender_pair=True).total_sites == 6


def test_geometry_rejects_out_of_range_sizes():
    with pytest.raises(ConfigError):
        SystemGeometry(1)
    with pytest.raises(ConfigError):
        SystemGeometry(21)


def test_site_ordering_and_axes():
    g = SystemGeometry(3, includes_sender_pair=True)
    assert g.sites() == (SENDER, 0, 1, 2, 3)
    assert g.axis_of(SENDER) == 0
    assert g.axis_of(0) == 1
    assert g.axis_of(3) == 4
    with pytest.raises(ConfigError):
        SystemGeometry(3).axis_of(0)


# ---------------------------------------------------------------------------
# sector tables


def test_sector_basis_sizes_and_sz():
    basis = sector_basis(4, 2)
    assert basis.size == 6
    assert np.all(total_sz(4, basis) == 0)
    assert sector_basis(4, 4).tolist() == [0]  # all up = all bits zero
    assert sector_basis(4, 0).tolist() == [15]


def test_total_sz_matches_bit_convention():
    # |01> on two sites: site 0 up (+1), site 1 down (-1)
    assert total_sz(2, 0b01) == 0
    assert total_sz(2, 0b00) == 2
    assert total_sz(2, 0b11) == -2


# ---------------------------------------------------------------------------
# states


def test_pure_state_requires_normalization():
    g = SystemGeometry(2)
    with pytest.raises(StructureError):
        PureState(g, np.array([1.0, 1.0, 0.0, 0.0]))


def test_pure_state_sector_label_checked():
    g = SystemGeometry(2)
    PureState(g, np.array([0, 1.0, 0, 0]), sector=0)
    with pytest.raises(StructureError):
        PureState(g, np.array([1.0, 0, 0, 0]), sector=0)


def test_mixed_state_validation():
    g = SystemGeometry(2)
    rho = np.eye(4) / 4.0
    MixedState(g, dense=rho)
    with pytest.raises(StructureError):
        MixedState(g, dense=rho * 2.0)
    bad = rho.astype(complex).copy()
    bad[0, 1] = 0.5
    with pytest.raises(StructureError):
        MixedState(g, dense=bad)


# ---------------------------------------------------------------------------
# partial traces


def test_partial_trace_of_singlet_is_identity_case():
    g = SystemGeometry(2, includes_sender_pair=True)
    # sender pair in the singlet, channel in |00>
    amps = np.kron(SINGLET, np.array([1.0, 0, 0, 0], dtype=complex))
    psi = embed(g, amps)
    rho = partial_trace_two_sites(psi, SENDER, 0)
    assert np.allclose(rho, np.outer(SINGLET, SINGLET.conj()), atol=1e-12)


def test_partial_trace_spectator_factorization():
    g = SystemGeometry(2, includes_sender_pair=True)
    amps = np.kron(SINGLET, np.array([1.0, 0, 0, 0], dtype=complex))
    psi = embed(g, amps)
    rho = partial_trace_two_sites(psi, SENDER, 1)
    ident_half = np.diag([0.5, 0.5]).astype(complex)
    up = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    assert np.allclose(rho, np.kron(ident_half, up), atol=1e-12)


def test_partial_trace_matches_dense_oracle_on_random_state(rng):
    n = 4
    g = SystemGeometry(n)
    v = random_state_vector(rng, n)
    psi = PureState(g, v)
    rho_full = np.outer(v, v.conj())
    # sites 1 and 4 are axes 0 and 3
    expected = dense_partial_trace_pair(rho_full, n, 0, 3)
    got = partial_trace_two_sites(psi, 1, 4)
    assert np.allclose(got, expected, atol=1e-12)


def test_partial_trace_properties_random_states(rng):
    for n, pair in [(3, (1, 3)), (5, (2, 4))]:
        g = SystemGeometry(n)
        psi = PureState(g, random_state_vector(rng, n))
        rho = partial_trace_two_sites(psi, *pair)
        assert abs(np.trace(rho) - 1.0) < 1e-12
        assert np.allclose(rho, rho.conj().T, atol=1e-12)
        evals = np.linalg.eigvalsh(rho)
        assert evals.min() > -1e-8 and evals.max() < 1 + 1e-8


def test_partial_trace_of_ensemble_is_weighted_sum(rng):
    g = SystemGeometry(3)
    psi1 = PureState(g, random_state_vector(rng, 3))
    psi2 = PureState(g, random_state_vector(rng, 3))
    mix = MixedState(g, ensemble=((0.25, psi1), (0.75, psi2)))
    expected = 0.25 * partial_trace_two_sites(psi1, 1, 3) + 0.75 * partial_trace_two_sites(psi2, 1, 3)
    assert np.allclose(partial_trace_two_sites(mix, 1, 3), expected, atol=1e-12)


def test_partial_trace_dense_matches_pure(rng):
    n = 4
    g = SystemGeometry(n)
    v = random_state_vector(rng, n)
    psi = PureState(g, v)
    mix = MixedState(g, dense=np.outer(v, v.conj()))
    a = partial_trace_two_sites(psi, 2, 3)
    b = partial_trace_two_sites(mix, 2, 3)
    assert np.allclose(a, b, atol=1e-12)


# ---------------------------------------------------------------------------
# sector decomposition


def test_sector_decompose_product_state():
    g = SystemGeometry(2)
    psi = PureState(g, np.array([0, 1.0, 0, 0]))  # |01>
    parts = sector_decompose(psi)
    assert len(parts) == 1
    sz, w, comp = parts[0]
    assert sz == 0 and abs(w - 1.0) < 1e-14
    assert np.allclose(comp.amplitudes, psi.amplitudes)


def test_sector_decompose_ghz_like():
    g = SystemGeometry(2)
    psi = PureState(g, np.array([1.0, 0, 0, 1.0]) / np.sqrt(2))
    parts = sector_decompose(psi)
    assert [(sz, round(w, 12)) for sz, w, _ in parts] == [(-2, 0.5), (2, 0.5)]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=2**31 - 1))
def test_sector_roundtrip_is_identity(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    v /= np.linalg.norm(v)
    parts = sector_split(v, n)
    back = sector_assemble(parts, n)
    assert np.max(np.abs(back - v)) < 1e-14


# ---------------------------------------------------------------------------
# sparse operators


def heisenberg_op(n, j=1.0, delta=1.0, h=0.0):
    g = SystemGeometry(n)
    fields = tuple((s, h) for s in g.sites()) if h else ()
    return SparseOperator(
        geometry=g,
        register=g.sites(),
        bonds=tuple((i, i + 1) for i in range(1, n)),
        jxy=j,
        jzz=j * delta,
        fields=fields,
    )


def test_operator_matches_kron_oracle(rng):
    for n, j, delta in [(2, 1.0, 1.0), (3, -1.0, 0.5), (4, 1.0, -0.7)]:
        op = heisenberg_op(n, j, delta)
        expected = dense_xxz(n, j, delta)
        assert np.allclose(op.dense(), expected.real, atol=1e-12)
        assert np.max(np.abs(expected.imag)) < 1e-12  # real-symmetric model


def test_operator_field_term_matches_oracle():
    op = heisenberg_op(3, 1.0, 1.0, h=0.25)
    expected = dense_xxz(3, 1.0, 1.0, h=0.25)
    assert np.allclose(op.dense(), expected.real, atol=1e-12)


def test_operator_hermitian_and_sector_blocks():
    op = heisenberg_op(4, 1.0, 0.3)
    full = op.register_matrix().toarray()
    assert np.max(np.abs(full - full.T)) < 1e-12
    # block spectra together reproduce the full spectrum
    evals = []
    for sz in op.register_sectors():
        evals.extend(np.linalg.eigvalsh(op.sector_matrix(sz).toarray()))
    assert np.allclose(np.sort(evals), np.linalg.eigvalsh(full), atol=1e-10)


def test_matvec_preserves_sector(rng):
    op = heisenberg_op(5, 1.0, 0.8)
    basis = sector_basis(5, 2)
    v = np.zeros(32, dtype=complex)
    coeffs = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    v[basis] = coeffs / np.linalg.norm(coeffs)
    out = op.apply_register_vector(v)
    outside = np.setdiff1d(np.arange(32), basis)
    assert np.max(np.abs(out[outside])) == 0.0


def test_expectation_real_for_hermitian(rng):
    g = SystemGeometry(4)
    op = heisenberg_op(4, 1.0, 0.5)
    psi = PureState(g, random_state_vector(rng, 4))
    val = op.expectation(psi)
    assert isinstance(val, float)


def test_spectator_application_blocks(rng):
    g = SystemGeometry(2, includes_sender_pair=True)
    register = (0, 1, 2)
    op = SparseOperator(
        geometry=g,
        register=register,
        bonds=((0, 1), (1, 2)),
        jxy=1.0,
        jzz=1.0,
    )
    v = random_state_vector(rng, 4)
    psi = PureState(g, v)
    out = op.apply(psi)
    blocks = v.reshape(2, -1)
    mat = op.register_matrix()
    expected = np.stack([mat @ blocks[0], mat @ blocks[1]]).reshape(-1)
    assert np.allclose(out, expected, atol=1e-12)
