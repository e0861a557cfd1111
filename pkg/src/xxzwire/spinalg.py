"""Basis indexing, state containers, and magnetization-sector machinery.

Conventions used throughout the package:

* A chain of ``n`` spin-1/2 sites is stored as a complex vector over the
  computational basis of ``2**n`` integers.
* Bit value 0 means spin up (``sigma^z = +1``), bit value 1 means spin down.
* Sites are laid out most-significant-bit first.  When the sender pair is
  present the order is ``0', 0, 1, ..., n_channel`` so the channel occupies
  the contiguous low bits and the isolated spin ``0'`` is the top bit.
* The site label ``-1`` (constant `SENDER`) denotes the isolated spin 0'.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, StructureError

SENDER = -1  # label of the isolated spin 0'

MIN_CHANNEL_SITES = 2
MAX_CHANNEL_SITES = 20
DENSE_SITE_LIMIT = 12  # dense 2^n x 2^n matrices allowed up to here

NORM_TOL = 1e-10
TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class SystemGeometry:
    """Site layout of a simulation: the channel plus optional sender pair.

    ``n_channel`` counts the channel spins (labels 1..n_channel).  With
    ``includes_sender_pair`` the sender spin 0 and the isolated spin 0'
    are prepended, giving ``n_channel + 2`` sites in total.
    """

    n_channel: int
    includes_sender_pair: bool = False

    def __post_init__(self):
        if not (MIN_CHANNEL_SITES <= self.n_channel <= MAX_CHANNEL_SITES):
            raise ConfigError(
                f"n_channel={self.n_channel} outside supported range "
                f"[{MIN_CHANNEL_SITES}, {MAX_CHANNEL_SITES}]"
            )

    @property
    def total_sites(self) -> int:
        return self.n_channel + 2 if self.includes_sender_pair else self.n_channel

    @property
    def dimension(self) -> int:
        return 1 << self.total_sites

    def sites(self) -> tuple[int, ...]:
        """All site labels in bit order (most significant first)."""
        channel = tuple(range(1, self.n_channel + 1))
        if self.includes_sender_pair:
            return (SENDER, 0) + channel
        return channel

    def axis_of(self, site: int) -> int:
        """Position of a site in the bit order (0 = most significant)."""
        try:
            return self.sites().index(site)
        except ValueError:
            raise ConfigError(f"site {site} not present in {self}") from None

    def channel_geometry(self) -> "SystemGeometry":
        return SystemGeometry(self.n_channel, includes_sender_pair=False)

    def with_sender_pair(self) -> "SystemGeometry":
        return SystemGeometry(self.n_channel, includes_sender_pair=True)


# ---------------------------------------------------------------------------
# sector tables


@lru_cache(maxsize=None)
def sector_basis(n_sites: int, n_up: int) -> np.ndarray:
    """Sorted basis integers of the fixed-magnetization sector.

    The sector holds every ``n_sites``-bit integer with ``n_sites - n_up``
    one-bits (bit 1 is spin down).  Built once per (n_sites, n_up) and
    cached; lookups against it use binary search.
    """
    if not (0 <= n_up <= n_sites):
        raise ValueError(f"n_up={n_up} outside [0, {n_sites}]")
    states = np.arange(1 << n_sites, dtype=np.uint32)
    down = np.bitwise_count(states)
    basis = states[down == (n_sites - n_up)]
    basis.flags.writeable = False
    return basis


def sector_index(basis: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Positions of basis integers inside a sorted sector basis."""
    idx = np.searchsorted(basis, states)
    if np.any(idx >= basis.size) or np.any(basis[idx] != states):
        raise ValueError("state outside sector")
    return idx


def total_sz(n_sites: int, states: np.ndarray | int):
    """Total sigma^z eigenvalue of computational basis integers."""
    down = np.bitwise_count(np.asarray(states, dtype=np.uint32))
    return n_sites - 2 * down.astype(np.int64)


def sz_to_n_up(n_sites: int, sz: int) -> int:
    if (n_sites + sz) % 2 != 0 or abs(sz) > n_sites:
        raise ValueError(f"sz={sz} impossible for {n_sites} sites")
    return (n_sites + sz) // 2


# ---------------------------------------------------------------------------
# states


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PureState:
    """Normalized pure state over a geometry's full computational basis.

    ``sector`` optionally records that every nonzero amplitude lives in one
    total-sigma^z sector; this is checked at construction time.
    """

    geometry: SystemGeometry
    amplitudes: np.ndarray
    sector: int | None = None

    def __post_init__(self):
        amps = _frozen_array(self.amplitudes, np.complex128)
        if amps.shape != (self.geometry.dimension,):
            raise ConfigError(
                f"amplitude vector has shape {amps.shape}, expected "
                f"({self.geometry.dimension},)"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise StructureError(f"state norm {norm} deviates from 1")
        if self.sector is not None:
            support = np.flatnonzero(np.abs(amps) > 1e-14)
            if support.size and np.any(
                total_sz(self.geometry.total_sites, support) != self.sector
            ):
                raise StructureError(
                    f"amplitudes leak outside the sz={self.sector} sector"
                )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_sites(self) -> int:
        return self.geometry.total_sites


@dataclass(frozen=True)
class MixedState:
    """Density operator, stored dense or as a weighted pure-state ensemble."""

    geometry: SystemGeometry
    dense: np.ndarray | None = None
    ensemble: tuple[tuple[float, PureState], ...] | None = None

    def __post_init__(self):
        if (self.dense is None) == (self.ensemble is None):
            raise ConfigError("exactly one of dense/ensemble must be given")
        if self.dense is not None:
            if self.geometry.total_sites > DENSE_SITE_LIMIT:
                raise ConfigError(
                    f"dense density matrix refused beyond {DENSE_SITE_LIMIT} sites"
                )
            rho = _frozen_array(self.dense, np.complex128)
            dim = self.geometry.dimension
            if rho.shape != (dim, dim):
                raise ConfigError(f"density matrix shape {rho.shape} != ({dim},{dim})")
            if abs(np.trace(rho).real - 1.0) > TRACE_TOL or abs(np.trace(rho).imag) > TRACE_TOL:
                raise StructureError(f"trace {np.trace(rho)} deviates from 1")
            if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
                raise StructureError("density matrix is not Hermitian")
            if np.linalg.eigvalsh(rho).min() < EIGENVALUE_FLOOR:
                raise StructureError("density matrix has a significantly negative eigenvalue")
            object.__setattr__(self, "dense", rho)
        else:
            branches = tuple((float(w), psi) for w, psi in self.ensemble)
            total = sum(w for w, _ in branches)
            if any(w < 0 for w, _ in branches):
                raise StructureError("ensemble weights must be nonnegative")
            if abs(total - 1.0) > 1e-8:
                raise StructureError(f"ensemble weights sum to {total}")
            for _, psi in branches:
                if psi.geometry != self.geometry:
                    raise ConfigError("ensemble branch geometry mismatch")
            object.__setattr__(self, "ensemble", branches)


# ---------------------------------------------------------------------------
# partial traces


def _pure_pair_density(amps: np.ndarray, n: int, axis_i: int, axis_j: int) -> np.ndarray:
    psi = amps.reshape((2,) * n)
    psi = np.moveaxis(psi, (axis_i, axis_j), (0, 1))
    mat = psi.reshape(4, -1)
    return mat @ mat.conj().T


def _dense_pair_density(rho: np.ndarray, n: int, axis_i: int, axis_j: int) -> np.ndarray:
    t = rho.reshape((2,) * (2 * n))
    t = np.moveaxis(t, (axis_i, axis_j, n + axis_i, n + axis_j), (0, 1, 2 * n - 2, 2 * n - 1))
    t = t.reshape(4, -1, 4)
    # trace over the untouched sites (middle index pairs row with column)
    d = int(np.sqrt(t.shape[1]))
    t = t.reshape(4, d, d, 4)
    return np.einsum("akkb->ab", t)


def partial_trace_two_sites(state: PureState | MixedState, site_i: int, site_j: int) -> np.ndarray:
    """Reduced density matrix of two sites, rows/columns ordered |b_i b_j>.

    Traces out every other site.  For an ensemble the result is the
    weight-averaged reduction of the branches.
    """
    if site_i == site_j:
        raise ConfigError("partial trace needs two distinct sites")
    geom = state.geometry
    ai, aj = geom.axis_of(site_i), geom.axis_of(site_j)
    n = geom.total_sites
    if isinstance(state, PureState):
        return _pure_pair_density(state.amplitudes, n, ai, aj)
    if state.dense is not None:
        return _dense_pair_density(state.dense, n, ai, aj)
    out = np.zeros((4, 4), dtype=np.complex128)
    for w, psi in state.ensemble:
        if w:
            out += w * _pure_pair_density(psi.amplitudes, n, ai, aj)
    return out


def reduced_site_pair_from_vectors(
    vec_a: np.ndarray, vec_b: np.ndarray, n_sites: int, axis: int
) -> np.ndarray:
    """Cross reduction ``R_st = sum_rest a[s, rest] conj(b[t, rest])``.

    ``axis`` selects which site's bit is kept open; the result is the 2x2
    block used to stitch together pair density matrices from sender-branch
    vectors without materializing the joint state.
    """
    left = 1 << axis
    right = 1 << (n_sites - 1 - axis)
    a = vec_a.reshape(left, 2, right)
    b = vec_b.reshape(left, 2, right)
    return np.einsum("asr,atr->st", a, b.conj())


def apply_site_pauli(vec: np.ndarray, n_sites: int, axis: int, alpha: str) -> np.ndarray:
    """Apply a single-site Pauli operator to a full register vector."""
    shift = n_sites - 1 - axis
    idx = np.arange(vec.size)
    bits = (idx >> shift) & 1
    if alpha == "z":
        return vec * (1.0 - 2.0 * bits)
    flipped = idx ^ (1 << shift)
    if alpha == "x":
        return vec[flipped]
    if alpha == "y":
        # sigma_y |0> = i|1>,  sigma_y |1> = -i|0>
        return vec[flipped] * np.where(bits == 0, -1j, 1j)
    raise ConfigError(f"unknown Pauli label {alpha!r}")


# ---------------------------------------------------------------------------
# sector decomposition


def sector_split(amplitudes: np.ndarray, n_sites: int) -> dict[int, np.ndarray]:
    """Group a full vector's amplitudes by total sigma^z.

    Returns ``{sz: coefficients}`` where coefficients are indexed by the
    sorted sector basis of `sector_basis`.  Zero sectors are omitted.
    """
    out: dict[int, np.ndarray] = {}
    for sz in range(-n_sites, n_sites + 1, 2):
        basis = sector_basis(n_sites, sz_to_n_up(n_sites, sz))
        coeffs = amplitudes[basis]
        if np.any(np.abs(coeffs) > 1e-14):
            out[sz] = coeffs
    return out


def sector_assemble(parts: dict[int, np.ndarray], n_sites: int) -> np.ndarray:
    full = np.zeros(1 << n_sites, dtype=np.complex128)
    for sz, coeffs in parts.items():
        basis = sector_basis(n_sites, sz_to_n_up(n_sites, sz))
        full[basis] = coeffs
    return full


def sector_decompose(state: PureState) -> list[tuple[int, float, PureState]]:
    """Split a state into its total-sigma^z components.

    Returns ``(sz, weight, component)`` triples with normalized components;
    the original state is ``sum_k sqrt(weight_k) |component_k>``.
    """
    n = state.geometry.total_sites
    parts = sector_split(state.amplitudes, n)
    out = []
    for sz in sorted(parts):
        coeffs = parts[sz]
        weight = float(np.vdot(coeffs, coeffs).real)
        full = sector_assemble({sz: coeffs / np.sqrt(weight)}, n)
        out.append((sz, weight, PureState(state.geometry, full, sector=sz)))
    return out


# ---------------------------------------------------------------------------
# sparse XXZ-type operators


@dataclass(frozen=True)
class SparseOperator:
    """Magnetization-conserving two-body operator on a register of sites.

    Encodes ``jxy * sum_bonds (sx sx + sy sy) + jzz * sum_bonds (sz sz)
    - sum_fields h * sz`` over ``register`` (a tuple of site labels in bit
    order).  When the geometry carries the sender pair but ``register``
    excludes 0', the operator acts as the identity on 0'.

    Matrices are materialized lazily: per-sector blocks for large systems,
    full (sparse or dense) forms for small ones.
    """

    geometry: SystemGeometry
    register: tuple[int, ...]
    bonds: tuple[tuple[int, int], ...]
    jxy: float
    jzz: float
    fields: tuple[tuple[int, float], ...] = ()
    hermitian: bool = True
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        sites = self.geometry.sites()
        for s in self.register:
            if s not in sites:
                raise ConfigError(f"register site {s} not in geometry")
        for a, b in self.bonds:
            if a not in self.register or b not in self.register:
                raise ConfigError(f"bond ({a},{b}) leaves the register")

    # -- register helpers ---------------------------------------------------

    @property
    def n_register_sites(self) -> int:
        return len(self.register)

    @property
    def spectator_sender(self) -> bool:
        return self.geometry.includes_sender_pair and SENDER not in self.register

    def _shift(self, site: int) -> int:
        # bit shift of a site inside the register (LSB = shift 0)
        return self.n_register_sites - 1 - self.register.index(site)

    # -- matrix construction -------------------------------------------------

    def _matrix_for_basis(self, basis: np.ndarray) -> sp.csr_matrix:
        n = self.n_register_sites
        dim = basis.size
        full = dim == (1 << n)
        diag = np.zeros(dim, dtype=np.float64)
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        for a, b in self.bonds:
            sa, sb = self._shift(a), self._shift(b)
            za = 1.0 - 2.0 * ((basis >> sa) & 1)
            zb = 1.0 - 2.0 * ((basis >> sb) & 1)
            diag += self.jzz * za * zb
            differ = np.flatnonzero(za != zb)
            if differ.size and self.jxy != 0.0:
                mask = np.uint32((1 << sa) | (1 << sb))
                partner = basis[differ] ^ mask
                rows.append(differ)
                if full:
                    cols.append(partner.astype(np.int64))
                else:
                    cols.append(sector_index(basis, partner))
                # sx sx + sy sy exchanges an anti-aligned pair with weight 2
                vals.append(np.full(differ.size, 2.0 * self.jxy))
        for s, h in self.fields:
            shift = self._shift(s)
            zs = 1.0 - 2.0 * ((basis >> shift) & 1)
            diag += -h * zs
        if rows:
            row = np.concatenate(rows)
            col = np.concatenate(cols)
            val = np.concatenate(vals)
        else:
            row = col = np.zeros(0, dtype=np.int64)
            val = np.zeros(0, dtype=np.float64)
        mat = sp.coo_matrix((val, (row, col)), shape=(dim, dim)).tocsr()
        mat += sp.diags(diag, format="csr")
        return mat

    def sector_matrix(self, sz: int) -> sp.csr_matrix:
        """Block of the operator on the total-sigma^z = sz register sector."""
        key = ("sector", sz)
        if key not in self._cache:
            basis = sector_basis(self.n_register_sites, sz_to_n_up(self.n_register_sites, sz))
            self._cache[key] = self._matrix_for_basis(basis)
        return self._cache[key]

    def register_matrix(self) -> sp.csr_matrix:
        """Full sparse matrix over the register (refused for large registers)."""
        if self.n_register_sites > 16:
            raise ConfigError("full sparse matrix refused beyond 16 register sites")
        if "full" not in self._cache:
            basis = np.arange(1 << self.n_register_sites, dtype=np.uint32)
            self._cache["full"] = self._matrix_for_basis(basis)
        return self._cache["full"]

    def dense(self) -> np.ndarray:
        if self.n_register_sites > DENSE_SITE_LIMIT:
            raise ConfigError(f"dense matrix refused beyond {DENSE_SITE_LIMIT} sites")
        return self.register_matrix().toarray()

    def sector_eigh(self, sz: int) -> tuple[np.ndarray, np.ndarray]:
        """Cached dense eigendecomposition of one sector block."""
        key = ("eigh", sz)
        if key not in self._cache:
            self._cache[key] = np.linalg.eigh(self.sector_matrix(sz).toarray())
        return self._cache[key]

    def register_sectors(self) -> list[int]:
        n = self.n_register_sites
        return list(range(-n, n + 1, 2))

    # -- application ---------------------------------------------------------

    def apply_register_vector(self, vec: np.ndarray) -> np.ndarray:
        mat = self.register_matrix()
        if np.iscomplexobj(vec):
            return mat @ vec.real + 1j * (mat @ vec.imag)
        return mat @ vec

    def apply(self, state: PureState) -> np.ndarray:
        """Matrix-vector product in the full geometry (identity on 0')."""
        amps = state.amplitudes
        if self.spectator_sender:
            half = amps.reshape(2, -1)
            out = np.stack([self.apply_register_vector(half[0]), self.apply_register_vector(half[1])])
            return out.reshape(-1)
        return self.apply_register_vector(amps)

    def expectation(self, state: PureState) -> float:
        val = np.vdot(state.amplitudes, self.apply(state))
        if abs(val.imag) > 1e-9:
            raise StructureError(f"Hermitian expectation has imaginary part {val.imag}")
        return float(val.real)
