"""Experiment drivers: peak finding, parameter sweeps, hopping maps,
velocity comparison, capacity and distillation runs, with deterministic
CSV/JSON emission and resume support."""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .capacity import CapacityResult, maximize_c1, maximize_c1_from_output
from .channel import PauliChannelParams, bell_offdiagonal_magnitude, tomograph_pauli
from .distill import BellDiagonal, DistillTrace, distill_iterations, distill_to_target
from .errors import ConfigError, NoPeakError, SimulationError, StructureError
from .measures import concurrence_general, singlet_fraction
from .model import ModelParams, build_channel_hamiltonian, build_joint_hamiltonian, spin_wave
from .solve import (
    BranchPairEvolver,
    EvolutionPlan,
    LindbladParams,
    ThermalParams,
    ground_state,
    initial_state,
    pair_density_from_branches,
    propagate_lindblad,
    thermal_state,
)
from .spinalg import SENDER, MixedState, SystemGeometry, partial_trace_two_sites

PEAK_THRESHOLD = 1e-3
INV_VF_CAP = 1e9  # sentinel for the diverging inverse velocity at delta=-1

CSV_SCHEMAS = {
    "peak": ("delta", "j", "n_channel", "t_opt", "e_peak", "f_at_peak", "p_i", "p_x", "p_y", "p_z"),
    "series": ("t", "concurrence", "singlet_fraction"),
    "hopping": ("t", "site", "concurrence"),
    "capacity": ("delta", "t_opt", "h1", "theta_opt", "regime"),
    "velocity": ("delta", "t_opt", "inv_vf"),
    "distill": (
        "iteration",
        "p_psi_minus",
        "p_phi_minus",
        "p_phi_plus",
        "p_psi_plus",
        "success_prob",
        "concurrence",
        "expected_pairs",
    ),
    "temp": ("temperature", "delta", "j", "n_channel", "t_opt", "e_at_t_opt"),
    "gamma": ("gamma", "delta", "j", "n_channel", "t_opt", "e_at_t_opt"),
}


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError("sweep step must be positive")
        if self.stop < self.start:
            raise ConfigError("sweep bounds must be ordered")

    def values(self) -> list[float]:
        n = int(round((self.stop - self.start) / self.step))
        vals = [self.start + k * self.step for k in range(n + 1)]
        return [v for v in vals if v <= self.stop + 1e-9]


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment's full parameterization (model, geometry, plan, noise,
    sweep axis, output)."""

    j: float = 1.0
    delta: float = 1.0
    h_break: float | None = None
    n_channel: int | None = None
    length: int | None = None
    length_convention: str = "total"  # total | channel
    t_max: float | None = None
    dt: float = 0.02
    method: str = "auto"
    krylov_dim: int = 40
    tolerance: float = 1e-10
    temperature: float | None = None
    cutoff: float = 1e-6
    gamma: float | None = None
    sweep: SweepSpec | None = None
    out: str | None = None
    format: str = "csv"
    seed: int = 0
    workers: int = 1
    reoptimize_time: bool = False
    at_time: float | None = None
    target_concurrence: float = 0.99
    iterations: int | None = None

    def __post_init__(self):
        if self.length_convention not in ("total", "channel"):
            raise ConfigError(f"unknown length convention {self.length_convention!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def resolved_n_channel(self) -> int:
        if self.n_channel is not None:
            return self.n_channel
        if self.length is None:
            raise ConfigError("either n_channel or length must be given")
        if self.length_convention == "channel":
            return self.length
        return self.length - 2

    def model_params(self) -> ModelParams:
        return ModelParams(j=self.j, delta=self.delta, h_break=self.h_break)

    def plan(self, t_max: float | None = None) -> EvolutionPlan:
        n_total = self.resolved_n_channel() + 2
        tm = t_max if t_max is not None else (self.t_max or 2.0 * n_total / abs(self.j))
        return EvolutionPlan(
            t_max=tm,
            dt_sample=self.dt,
            method=self.method,
            krylov_dim=self.krylov_dim,
            tolerance=self.tolerance,
        )


# ---------------------------------------------------------------------------
# result records


@dataclass(frozen=True)
class PeakResult:
    """First entanglement peak of one configuration."""

    t_opt: float
    e_peak: float
    f_at_peak: float
    pauli: PauliChannelParams | None
    rho_end: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (0.0 <= self.e_peak <= 1.0 + 1e-9):
            raise StructureError(f"e_peak={self.e_peak} outside [0, 1]")
        if self.t_opt <= 0:
            raise StructureError("t_opt must be positive")


@dataclass(frozen=True)
class SweepRecord:
    axis: str
    value: float
    fields: dict


# ---------------------------------------------------------------------------
# trajectory engines


class UnitaryPairEngine:
    """Ground-state start: the two sender branches evolve coherently."""

    def __init__(self, H_joint, channel_vector, plan):
        self._evolver = BranchPairEvolver(H_joint, channel_vector, plan)
        self.n_channel = H_joint.geometry.n_channel

    def density_at(self, t: float, j: int) -> np.ndarray:
        return pair_density_from_branches(self._evolver.branches_at(t), j_axis=j)

    def all_densities_at(self, t: float) -> list[np.ndarray]:
        branches = self._evolver.branches_at(t)
        return [pair_density_from_branches(branches, j_axis=j) for j in range(self.n_channel + 1)]

    def branches_at(self, t: float):
        return self._evolver.branches_at(t)


class ThermalPairEngine:
    """Boltzmann ensemble start: weighted sum over branch evolutions."""

    def __init__(self, H_joint, ensemble: MixedState, plan):
        self._parts = [
            (w, BranchPairEvolver(H_joint, psi.amplitudes, plan)) for w, psi in ensemble.ensemble
        ]
        self.n_channel = H_joint.geometry.n_channel

    def density_at(self, t: float, j: int) -> np.ndarray:
        out = np.zeros((4, 4), dtype=np.complex128)
        for w, ev in self._parts:
            out += w * pair_density_from_branches(ev.branches_at(t), j_axis=j)
        return out


class LindbladPairEngine:
    """Dissipative evolution; keeps checkpoints so that refined off-grid
    times can be reached by a short re-integration."""

    def __init__(self, H_joint, rho0: MixedState, lind: LindbladParams, plan: EvolutionPlan):
        self._H = H_joint
        self._lind = lind
        self._plan = plan
        self._rho0 = rho0
        self.n_channel = H_joint.geometry.n_channel
        self._checkpoints: list[tuple[float, MixedState]] = [(0.0, rho0)]

    def samples(self):
        for t, mix in propagate_lindblad(self._rho0, self._H, self._lind, self._plan):
            self._checkpoints.append((t, mix))
            self._checkpoints = self._checkpoints[-4:]
            yield t, mix

    def _state_at(self, t: float) -> MixedState:
        anchors = [c for c in self._checkpoints if c[0] <= t + 1e-12]
        if not anchors:
            raise ConfigError(f"no checkpoint at or before t={t}")
        t0, mix = anchors[-1]
        if abs(t - t0) < 1e-12:
            return mix
        plan = EvolutionPlan(
            t_max=t - t0,
            dt_sample=t - t0,
            method=self._plan.method,
            krylov_dim=self._plan.krylov_dim,
            tolerance=self._plan.tolerance,
        )
        out = None
        for _, m in propagate_lindblad(mix, self._H, self._lind, plan):
            out = m
        return out

    def density_at(self, t: float, j: int) -> np.ndarray:
        return partial_trace_two_sites(self._state_at(t), SENDER, j)


# ---------------------------------------------------------------------------
# chain preparation


@dataclass(frozen=True)
class PreparedChain:
    geometry: SystemGeometry
    params: ModelParams
    H_ch: object
    H_joint: object
    ground: object


def prepare_chain(cfg: ScenarioConfig) -> PreparedChain:
    n = cfg.resolved_n_channel()
    geometry = SystemGeometry(n)
    params = cfg.model_params()
    H_ch = build_channel_hamiltonian(params, geometry)
    H_joint = build_joint_hamiltonian(params, geometry.with_sender_pair())
    gs = ground_state(H_ch)
    return PreparedChain(geometry=geometry, params=params, H_ch=H_ch, H_joint=H_joint, ground=gs)


def build_engine(cfg: ScenarioConfig, prepared: PreparedChain | None = None, plan=None):
    prepared = prepared or prepare_chain(cfg)
    plan = plan or cfg.plan()
    if cfg.gamma is not None:
        psi0 = initial_state(prepared.ground.state)
        rho0 = MixedState(psi0.geometry, dense=np.outer(psi0.amplitudes, psi0.amplitudes.conj()))
        return LindbladPairEngine(prepared.H_joint, rho0, LindbladParams(gamma=cfg.gamma), plan)
    if cfg.temperature is not None:
        ensemble = thermal_state(prepared.H_ch, ThermalParams(cfg.temperature, cfg.cutoff))
        return ThermalPairEngine(prepared.H_joint, ensemble, plan)
    return UnitaryPairEngine(prepared.H_joint, prepared.ground.state.amplitudes, plan)


# ---------------------------------------------------------------------------
# peak finding


def _refine_parabolic(ts, es) -> float:
    t0, t1, t2 = ts
    e0, e1, e2 = es
    denom = e0 - 2.0 * e1 + e2
    if abs(denom) < 1e-30:
        return t1
    offset = 0.5 * (e0 - e2) / denom * (t1 - t0)
    return float(np.clip(t1 + offset, t0, t2))


def _end_pair_series(engine, times, j_end):
    if isinstance(engine, LindbladPairEngine):
        for t, mix in engine.samples():
            yield t, partial_trace_two_sites(mix, SENDER, j_end)
    else:
        for t in times:
            yield float(t), engine.density_at(float(t), j_end)


def find_first_peak(cfg: ScenarioConfig, prepared: PreparedChain | None = None) -> PeakResult:
    """First local maximum of the end-to-end concurrence.

    The maximum is located on the sampling grid, refined by a three-point
    parabola, and the reported values are re-evaluated exactly at the
    refined time.  Deterministic for a fixed configuration.
    """
    prepared = prepared or prepare_chain(cfg)
    plan = cfg.plan()
    engine = build_engine(cfg, prepared, plan)
    n = prepared.geometry.n_channel
    history: list[tuple[float, float]] = []
    max_seen = 0.0
    for t, rho in _end_pair_series(engine, plan.sample_times(), n):
        e = concurrence_general(rho)
        history.append((t, e))
        max_seen = max(max_seen, e)
        if len(history) >= 3:
            (t0, e0), (t1, e1), (t2, e2) = history[-3:]
            if e1 > PEAK_THRESHOLD and e0 < e1 >= e2:
                t_opt = _refine_parabolic((t0, t1, t2), (e0, e1, e2))
                rho_opt = engine.density_at(t_opt, n)
                return _peak_from_density(cfg, t_opt, rho_opt, prepared)
    raise NoPeakError(
        f"no entanglement peak above {PEAK_THRESHOLD} in t <= {plan.t_max}", max_seen=max_seen
    )


def _peak_from_density(cfg, t_opt, rho_opt, prepared) -> PeakResult:
    e = concurrence_general(rho_opt)
    f = singlet_fraction(rho_opt)
    pauli = None
    if prepared.geometry.n_channel % 2 == 0 and bell_offdiagonal_magnitude(rho_opt) < 1e-6:
        pauli = tomograph_pauli(
            rho_opt, time=t_opt, delta=cfg.delta, geometry=prepared.geometry.with_sender_pair()
        )
    return PeakResult(t_opt=t_opt, e_peak=e, f_at_peak=f, pauli=pauli, rho_end=rho_opt)


def entanglement_series(cfg: ScenarioConfig, prepared: PreparedChain | None = None):
    """Full (t, concurrence, singlet fraction) table of the end pair."""
    prepared = prepared or prepare_chain(cfg)
    plan = cfg.plan()
    engine = build_engine(cfg, prepared, plan)
    n = prepared.geometry.n_channel
    rows = []
    for t, rho in _end_pair_series(engine, plan.sample_times(), n):
        rows.append({"t": t, "concurrence": concurrence_general(rho), "singlet_fraction": singlet_fraction(rho)})
    return rows


def evaluate_at_time(cfg: ScenarioConfig, t: float, prepared: PreparedChain | None = None) -> PeakResult:
    """End-pair measures at a fixed time (used when t_opt is reused)."""
    prepared = prepared or prepare_chain(cfg)
    plan = cfg.plan(t_max=max(t, cfg.dt))
    engine = build_engine(cfg, prepared, plan)
    if isinstance(engine, LindbladPairEngine):
        for _ in engine.samples():
            pass
    rho = engine.density_at(t, prepared.geometry.n_channel)
    return _peak_from_density(cfg, t, rho, prepared)


# ---------------------------------------------------------------------------
# sweep drivers


def _peak_row(cfg: ScenarioConfig, result: PeakResult) -> dict:
    row = {
        "delta": cfg.delta,
        "j": cfg.j,
        "n_channel": cfg.resolved_n_channel(),
        "t_opt": result.t_opt,
        "e_peak": result.e_peak,
        "f_at_peak": result.f_at_peak,
        "p_i": None,
        "p_x": None,
        "p_y": None,
        "p_z": None,
    }
    if result.pauli is not None:
        row.update(
            p_i=result.pauli.p_i, p_x=result.pauli.p_x, p_y=result.pauli.p_y, p_z=result.pauli.p_z
        )
    return row


def _sweep_point_peak(args) -> tuple[float, dict]:
    cfg, axis, value = args
    if axis == "delta":
        point = replace(cfg, delta=value)
    elif axis == "length":
        point = replace(cfg, length=int(round(value)), n_channel=None)
    else:
        raise ConfigError(f"unsupported peak sweep axis {axis}")
    result = find_first_peak(point)
    return value, _peak_row(point, result)


def _run_points(points, worker, n_workers):
    results = []
    failures = []
    if n_workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for args, outcome in zip(points, pool.map(_guarded(worker), points)):
                if isinstance(outcome, Exception):
                    failures.append((args, outcome))
                else:
                    results.append(outcome)
    else:
        for args in points:
            try:
                results.append(worker(args))
            except SimulationError as exc:
                failures.append((args, exc))
    for args, exc in failures:
        print(f"point {args[1]}={args[2]} failed: {exc}", file=sys.stderr)
    if points and not results:
        raise NoPeakError("every sweep point failed")
    return results


class _guarded:
    """Picklable wrapper returning exceptions instead of raising (pool path)."""

    def __init__(self, fn):
        self._fn = fn

    def __call__(self, args):
        try:
            return self._fn(args)
        except SimulationError as exc:
            return exc


def sweep_delta(cfg: ScenarioConfig, skip: frozenset = frozenset()) -> list[SweepRecord]:
    spec = cfg.sweep or SweepSpec("delta", -2.0, 3.0, 0.05)
    points = [(cfg, "delta", v) for v in spec.values() if format_cell(v) not in skip]
    results = _run_points(points, _sweep_point_peak, cfg.workers)
    results.sort(key=lambda r: r[0])
    return [SweepRecord(axis="delta", value=v, fields=row) for v, row in results]


def sweep_length(cfg: ScenarioConfig, skip: frozenset = frozenset()) -> list[SweepRecord]:
    spec = cfg.sweep or SweepSpec("length", 4, 10, 1)
    points = [(cfg, "length", v) for v in spec.values() if format_cell(v) not in skip]
    results = _run_points(points, _sweep_point_peak, cfg.workers)
    results.sort(key=lambda r: r[0])
    return [SweepRecord(axis="length", value=v, fields=row) for v, row in results]


def sweep_temperature(cfg: ScenarioConfig, skip: frozenset = frozenset()) -> list[SweepRecord]:
    """Entanglement at the (zero-temperature) optimal time for each T.

    The peak time is reused from the noiseless pipeline unless
    ``reoptimize_time`` is set: it is nearly temperature independent.
    """
    spec = cfg.sweep or SweepSpec("temperature", 0.1, 2.0, 0.1)
    values = [v for v in spec.values() if format_cell(v) not in skip]
    if not values:
        return []
    prepared = prepare_chain(cfg)
    base = find_first_peak(replace(cfg, temperature=None), prepared)
    records = []
    for T in values:
        point = replace(cfg, temperature=float(T))
        if cfg.reoptimize_time:
            res = find_first_peak(point, prepared)
            t_opt, e = res.t_opt, res.e_peak
        else:
            t_opt = base.t_opt
            e = concurrence_general(
                build_engine(point, prepared, point.plan(t_max=t_opt)).density_at(
                    t_opt, prepared.geometry.n_channel
                )
            )
        records.append(
            SweepRecord(
                axis="temperature",
                value=float(T),
                fields={
                    "temperature": float(T),
                    "delta": cfg.delta,
                    "j": cfg.j,
                    "n_channel": cfg.resolved_n_channel(),
                    "t_opt": t_opt,
                    "e_at_t_opt": e,
                },
            )
        )
    return records


def sweep_gamma(cfg: ScenarioConfig, skip: frozenset = frozenset()) -> list[SweepRecord]:
    """Entanglement at the (noiseless) optimal time for each decoherence
    rate; the Lindblad integrator runs even at gamma = 0."""
    spec = cfg.sweep or SweepSpec("gamma", 0.0, 0.5, 0.05)
    values = [v for v in spec.values() if format_cell(v) not in skip]
    if not values:
        return []
    prepared = prepare_chain(cfg)
    base = find_first_peak(replace(cfg, gamma=None), prepared)
    records = []
    for g in values:
        point = replace(cfg, gamma=float(g))
        if cfg.reoptimize_time:
            try:
                res = find_first_peak(point, prepared)
                t_opt, e = res.t_opt, res.e_peak
            except NoPeakError as exc:
                t_opt, e = base.t_opt, exc.max_seen
        else:
            t_opt = base.t_opt
            res = evaluate_at_time(point, t_opt, prepared)
            e = res.e_peak
        records.append(
            SweepRecord(
                axis="gamma",
                value=float(g),
                fields={
                    "gamma": float(g),
                    "delta": cfg.delta,
                    "j": cfg.j,
                    "n_channel": cfg.resolved_n_channel(),
                    "t_opt": t_opt,
                    "e_at_t_opt": e,
                },
            )
        )
    return records


def hopping_map(cfg: ScenarioConfig) -> list[dict]:
    """Concurrence between the isolated spin and every register site over
    the full sampling grid."""
    prepared = prepare_chain(cfg)
    if prepared.geometry.n_channel % 2 != 0:
        raise ConfigError("hopping map expects an even channel")
    if cfg.delta < 0:
        raise ConfigError("hopping map expects delta >= 0")
    plan = cfg.plan()
    engine = build_engine(cfg, prepared, plan)
    rows = []
    for t in plan.sample_times():
        for j, rho in enumerate(engine.all_densities_at(float(t))):
            rows.append({"t": float(t), "site": j, "concurrence": concurrence_general(rho)})
    return rows


def velocity_table(cfg: ScenarioConfig) -> tuple[list[dict], float]:
    """Optimal arrival times next to the inverse spin-wave velocity, plus
    their Spearman rank correlation over the grid."""
    spec = cfg.sweep or SweepSpec("delta", -0.9, 1.0, 0.05)
    points = [(cfg, "delta", v) for v in spec.values() if -1.0 <= v <= 1.0]
    results = _run_points(points, _sweep_point_peak, cfg.workers)
    results.sort(key=lambda r: r[0])
    rows = []
    for value, peak_row in results:
        v_f = spin_wave(value).v_f
        inv = INV_VF_CAP if v_f == 0 else min(1.0 / v_f, INV_VF_CAP)
        rows.append({"delta": value, "t_opt": peak_row["t_opt"], "inv_vf": inv})
    corr = float(spearmanr([r["t_opt"] for r in rows], [r["inv_vf"] for r in rows]).statistic)
    return rows, corr


def capacity_point(cfg: ScenarioConfig, prepared: PreparedChain | None = None) -> dict:
    """Single-use capacity of the channel extracted at the entanglement
    peak (or at ``at_time`` when given)."""
    prepared = prepared or prepare_chain(cfg)
    if cfg.at_time is not None:
        peak = evaluate_at_time(cfg, cfg.at_time, prepared)
    else:
        peak = find_first_peak(cfg, prepared)
    if peak.pauli is not None:
        res = maximize_c1(peak.pauli)
    else:
        res = maximize_c1_from_output(peak.rho_end)
    return {
        "delta": cfg.delta,
        "t_opt": peak.t_opt,
        "h1": res.h1,
        "theta_opt": res.theta_opt,
        "regime": res.regime,
    }


def _sweep_point_capacity(args) -> tuple[float, dict]:
    cfg, _, value = args
    point = replace(cfg, delta=value)
    return value, capacity_point(point)


def capacity_sweep(cfg: ScenarioConfig, skip: frozenset = frozenset()) -> list[SweepRecord]:
    spec = cfg.sweep or SweepSpec("delta", -0.9, 1.4, 0.05)
    points = [(cfg, "delta", v) for v in spec.values() if format_cell(v) not in skip]
    results = _run_points(points, _sweep_point_capacity, cfg.workers)
    results.sort(key=lambda r: r[0])
    return [SweepRecord(axis="delta", value=v, fields=row) for v, row in results]


def distill_run(cfg: ScenarioConfig) -> tuple[DistillTrace, list[dict]]:
    """Distill the pair produced at the entanglement peak.

    Returns the trace together with CSV rows (iteration 0 is the input
    pair)."""
    peak = find_first_peak(cfg)
    if peak.pauli is None:
        raise StructureError("distillation needs the Bell-diagonal (even chain) output")
    state = BellDiagonal.from_pauli(peak.pauli)
    if cfg.iterations is not None:
        trace = distill_iterations(state, cfg.iterations)
    else:
        trace = distill_to_target(state, cfg.target_concurrence)
    rows = [
        {
            "iteration": 0,
            "p_psi_minus": state.p_psi_minus,
            "p_phi_minus": state.p_phi_minus,
            "p_phi_plus": state.p_phi_plus,
            "p_psi_plus": state.p_psi_plus,
            "success_prob": 1.0,
            "concurrence": state.concurrence(),
            "expected_pairs": 1.0,
        }
    ]
    for rec in trace.iterations:
        out = rec.output_state
        rows.append(
            {
                "iteration": rec.index,
                "p_psi_minus": out.p_psi_minus,
                "p_phi_minus": out.p_phi_minus,
                "p_phi_plus": out.p_phi_plus,
                "p_psi_plus": out.p_psi_plus,
                "success_prob": rec.success_probability,
                "concurrence": rec.concurrence,
                "expected_pairs": rec.expected_pairs,
            }
        )
    return trace, rows


# ---------------------------------------------------------------------------
# output


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def rows_to_csv(schema: tuple[str, ...], rows: list[dict]) -> str:
    lines = [",".join(schema)]
    for row in rows:
        lines.append(",".join(format_cell(row.get(col)) for col in schema))
    return "\n".join(lines) + "\n"


def rows_to_json(schema: tuple[str, ...], rows: list[dict]) -> str:
    cooked = []
    for row in rows:
        entry = {}
        for col in schema:
            v = row.get(col)
            if v is None or isinstance(v, str):
                entry[col] = v
            elif isinstance(v, (int, np.integer)):
                entry[col] = int(v)
            else:
                entry[col] = float(f"{float(v):.12g}")
        cooked.append(entry)
    return json.dumps(cooked, indent=1, sort_keys=True) + "\n"


def write_output(path: str | Path, schema_name: str, rows: list[dict], fmt: str = "csv"):
    schema = CSV_SCHEMAS[schema_name]
    text = rows_to_csv(schema, rows) if fmt == "csv" else rows_to_json(schema, rows)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def read_existing_axis_values(path: str | Path, schema_name: str, axis_column: str) -> dict[str, list[str]]:
    """Rows already present in a sweep CSV, keyed by their axis cell.

    Used to make interrupted sweeps resumable: completed grid points are
    skipped and their rows merged back verbatim.
    """
    path = Path(path)
    if not path.exists():
        return {}
    lines = path.read_text().splitlines()
    schema = CSV_SCHEMAS[schema_name]
    if not lines or lines[0] != ",".join(schema):
        raise ConfigError(f"existing output {path} does not match the {schema_name} schema")
    idx = schema.index(axis_column)
    out: dict[str, list[str]] = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split(",")
        out[cells[idx]] = cells
    return out


SWEEP_TABLE = {
    "sweep-delta": ("peak", "delta", sweep_delta),
    "sweep-length": ("peak", "n_channel", sweep_length),
    "sweep-temp": ("temp", "temperature", sweep_temperature),
    "sweep-gamma": ("gamma", "gamma", sweep_gamma),
    "capacity": ("capacity", "delta", capacity_sweep),
}


def run_sweep_command(cfg: ScenarioConfig, kind: str) -> list[dict]:
    """Run a sweep with resume: axis values already present in the output
    file are skipped and their rows merged back, the final file rewritten
    sorted by axis value (byte-identical to an uninterrupted run)."""
    schema_name, axis_column, sweep_fn = SWEEP_TABLE[kind]
    schema = CSV_SCHEMAS[schema_name]
    existing: dict[str, list[str]] = {}
    if cfg.out and cfg.format == "csv":
        existing = read_existing_axis_values(cfg.out, schema_name, axis_column)

    def variable_to_cell(value: float) -> str:
        # the length sweep's file column is n_channel, not the length label
        if kind == "sweep-length":
            probe = replace(cfg, length=int(round(value)), n_channel=None)
            return format_cell(probe.resolved_n_channel())
        return format_cell(value)

    spec = cfg.sweep
    skip = frozenset()
    if existing and spec is not None:
        skip = frozenset(format_cell(v) for v in spec.values() if variable_to_cell(v) in existing)
    elif existing:
        skip = frozenset(existing)

    records = sweep_fn(cfg, skip=skip)

    merged: dict[str, dict] = {}
    for rec in records:
        merged[format_cell(rec.fields[axis_column])] = rec.fields
    for cell, cells in existing.items():
        merged.setdefault(cell, dict(zip(schema, cells)))
    try:
        final = [merged[c] for c in sorted(merged, key=float)]
    except ValueError:
        raise ConfigError(f"cannot sort axis values in {cfg.out}")
    if cfg.out:
        write_output(cfg.out, schema_name, final, cfg.format)
    return final
