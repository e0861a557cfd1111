"""Quick invariant battery behind the ``check`` subcommand.

A fast structural smoke test of the installed package: prints one PASS/FAIL
line per invariant and reports overall success.  The full verification
lives in the test suite; this is the field diagnostic.
"""

from __future__ import annotations

import numpy as np

from .channel import fidelity_equivalence_check, random_kraus_channel, tomograph_pauli
from .distill import BellDiagonal, recurrence_step
from .measures import concurrence_general, extract_x_state
from .model import ModelParams, build_channel_hamiltonian, build_joint_hamiltonian, spin_wave
from .solve import BranchPairEvolver, EvolutionPlan, ground_state, initial_state, pair_density_from_branches, propagate
from .spinalg import PureState, SystemGeometry, sector_assemble, sector_split


def _check(name: str, fn) -> bool:
    try:
        fn()
    except AssertionError as exc:
        print(f"FAIL {name}: {exc}")
        return False
    except Exception as exc:  # structural errors count as failures here
        print(f"FAIL {name}: {type(exc).__name__}: {exc}")
        return False
    print(f"PASS {name}")
    return True


def run_self_checks(seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    checks = []

    def sector_roundtrip():
        v = rng.normal(size=64) + 1j * rng.normal(size=64)
        v /= np.linalg.norm(v)
        parts = sector_split(v, 6)
        assert np.max(np.abs(sector_assemble(parts, 6) - v)) < 1e-14, "roundtrip drift"

    checks.append(("sector split/assemble roundtrip", sector_roundtrip))

    def hamiltonian_structure():
        H = build_channel_hamiltonian(ModelParams(j=1.0, delta=0.7), SystemGeometry(6))
        mat = H.sector_matrix(0)
        asym = abs(mat - mat.T).max()
        assert asym < 1e-12, f"asymmetry {asym}"

    checks.append(("Hamiltonian real-symmetric blocks", hamiltonian_structure))

    def conservation():
        geometry = SystemGeometry(4)
        params = ModelParams(j=1.0, delta=1.0)
        gs = ground_state(build_channel_hamiltonian(params, geometry))
        H = build_joint_hamiltonian(params, geometry.with_sender_pair())
        psi0 = initial_state(gs.state)
        plan = EvolutionPlan(t_max=2.0, dt_sample=0.5)
        energies = []
        for _, psi in propagate(psi0, H, plan):
            energies.append(np.vdot(psi.amplitudes, H.apply(psi)).real)
        drift = max(abs(e - energies[0]) for e in energies)
        assert drift < 1e-8, f"energy drift {drift}"

    checks.append(("energy conservation along trajectory", conservation))

    def even_chain_structure():
        geometry = SystemGeometry(4)
        params = ModelParams(j=1.0, delta=1.0)
        gs = ground_state(build_channel_hamiltonian(params, geometry))
        H = build_joint_hamiltonian(params, geometry.with_sender_pair())
        ev = BranchPairEvolver(H, gs.state.amplitudes, EvolutionPlan(t_max=2.0, dt_sample=2.0))
        rho = pair_density_from_branches(ev.branches_at(1.5), j_axis=4)
        extract_x_state(rho)  # raises on structure violations
        tomograph_pauli(rho)

    checks.append(("even-chain X form and Bell diagonality", even_chain_structure))

    def equivalence():
        for _ in range(10):
            rep = fidelity_equivalence_check(random_kraus_channel(rng, int(rng.integers(1, 5))))
            assert rep.difference < 1e-10, f"difference {rep.difference}"

    checks.append(("transfer/teleportation fidelity equivalence", equivalence))

    def distill_fixed_point():
        out, success = recurrence_step(BellDiagonal(1, 0, 0, 0))
        assert abs(success - 1) < 1e-12 and abs(out.p_psi_minus - 1) < 1e-12, "singlet moved"

    checks.append(("distillation singlet fixed point", distill_fixed_point))

    def velocity_monotone():
        grid = np.linspace(-0.95, 1.0, 40)
        vals = [spin_wave(d).v_f for d in grid]
        assert all(b > a for a, b in zip(vals, vals[1:])), "v_f not monotone"

    checks.append(("spin-wave velocity monotone", velocity_monotone))

    results = [_check(name, fn) for name, fn in checks]
    ok = all(results)
    print(f"{sum(results)}/{len(results)} checks passed")
    return ok
