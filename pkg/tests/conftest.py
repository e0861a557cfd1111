import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


# ---------------------------------------------------------------------------
# shared dense oracles, deliberately independent of the package internals

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


def kron_chain(ops):
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def site_op(op, axis, n):
    ops = [ID2] * n
    ops[axis] = op
    return kron_chain(ops)


def dense_xxz(n, j, delta, bonds=None, h=0.0):
    """kron-product XXZ Hamiltonian: independent of the bit-trick builder."""
    if bonds is None:
        bonds = [(i, i + 1) for i in range(n - 1)]
    H = np.zeros((2**n, 2**n), dtype=complex)
    for a, b in bonds:
        H += j * (site_op(SX, a, n) @ site_op(SX, b, n))
        H += j * (site_op(SY, a, n) @ site_op(SY, b, n))
        H += j * delta * (site_op(SZ, a, n) @ site_op(SZ, b, n))
    if h:
        for a in range(n):
            H -= h * site_op(SZ, a, n)
    return H


def dense_partial_trace_pair(rho, n, axis_i, axis_j):
    """Tensor-reshape partial trace of a 2^n x 2^n density matrix."""
    t = rho.reshape((2,) * (2 * n))
    keep = [axis_i, axis_j]
    letters_row = []
    letters_col = []
    out_row = []
    out_col = []
    names = "abcdefghijklmnopqrstuvwxyz"
    for ax in range(n):
        if ax in keep:
            r = names[len(out_row)]
            c = names[2 + len(out_col)]
            out_row.append(r)
            out_col.append(c)
            letters_row.append(r)
            letters_col.append(c)
        else:
            s = names[4 + ax]
            letters_row.append(s)
            letters_col.append(s)
    spec = "".join(letters_row) + "".join(letters_col) + "->" + "".join(out_row) + "".join(out_col)
    return np.einsum(spec, t).reshape(4, 4)


def random_state_vector(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)
