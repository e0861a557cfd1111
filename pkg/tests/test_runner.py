import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import dense_xxz
from xxzwire.errors import ConfigError
from xxzwire.measures import concurrence_general
from xxzwire.model import ModelParams, build_channel_hamiltonian
from xxzwire.runner import (
    CSV_SCHEMAS,
    ScenarioConfig,
    SweepSpec,
    entanglement_series,
    find_first_peak,
    format_cell,
    hopping_map,
    prepare_chain,
    rows_to_csv,
    run_sweep_command,
    sweep_gamma,
    sweep_temperature,
    velocity_table,
)
from xxzwire.solve import ground_state, initial_state
from xxzwire.spinalg import SystemGeometry


def run_cli(args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "xxzwire.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


# ---------------------------------------------------------------------------
# configuration


def test_length_conventions():
    assert ScenarioConfig(length=10).resolved_n_channel() == 8
    assert ScenarioConfig(length=10, length_convention="channel").resolved_n_channel() == 10
    assert ScenarioConfig(n_channel=5, length=10).resolved_n_channel() == 5
    with pytest.raises(ConfigError):
        ScenarioConfig().resolved_n_channel()
    with pytest.raises(ConfigError):
        ScenarioConfig(length_convention="bogus")


def test_sweep_spec_grid():
    spec = SweepSpec("delta", -2.0, 3.0, 0.05)
    vals = spec.values()
    assert len(vals) == 101
    assert vals[0] == pytest.approx(-2.0)
    assert vals[-1] == pytest.approx(3.0)
    with pytest.raises(ConfigError):
        SweepSpec("delta", 1.0, 0.0, 0.05)
    with pytest.raises(ConfigError):
        SweepSpec("delta", 0.0, 1.0, -0.1)


# ---------------------------------------------------------------------------
# peak finding against a fine-grid dense oracle


def test_first_peak_matches_fine_grid_oracle():
    n = 4
    cfg = ScenarioConfig(delta=1.0, j=1.0, n_channel=n)
    result = find_first_peak(cfg)

    # oracle: brute scan of the dense evolution at dt = 0.001
    geometry = SystemGeometry(n)
    gs = ground_state(build_channel_hamiltonian(ModelParams(j=1.0, delta=1.0), geometry))
    psi0 = initial_state(gs.state)
    H_reg = dense_xxz(n + 1, 1.0, 1.0)
    w, v = np.linalg.eigh(H_reg)
    halves = psi0.amplitudes.reshape(2, -1)
    c0 = v.conj().T @ halves[0]
    c1 = v.conj().T @ halves[1]
    best = (0.0, -1.0)
    for t in np.arange(1.0, 1.4, 0.001):
        phase = np.exp(-1j * w * t)
        full = np.concatenate([v @ (phase * c0), v @ (phase * c1)])
        rho = full.reshape((2,) * 6)
        rho = np.moveaxis(rho, (0, 5), (0, 1)).reshape(4, -1)
        e = concurrence_general(rho @ rho.conj().T)
        if e > best[1]:
            best = (t, e)
    assert result.t_opt == pytest.approx(best[0], abs=2e-3)
    assert result.e_peak == pytest.approx(best[1], abs=1e-5)


def test_peak_result_contains_depolarizing_tomography_at_isotropic_point():
    result = find_first_peak(ScenarioConfig(delta=1.0, j=1.0, n_channel=4))
    assert result.pauli is not None
    assert result.pauli.p_x == pytest.approx(result.pauli.p_z, abs=1e-6)


def test_peak_on_odd_chain_has_no_pauli_params():
    result = find_first_peak(ScenarioConfig(delta=1.0, j=1.0, n_channel=3))
    assert result.pauli is None
    assert 0 < result.e_peak < 1


# ---------------------------------------------------------------------------
# trivial sweep limits


def test_thermal_sweep_zero_temperature_matches_ground_pipeline():
    cfg = ScenarioConfig(
        delta=1.0, j=1.0, n_channel=4, sweep=SweepSpec("temperature", 0.0, 0.0, 1.0)
    )
    records = sweep_temperature(cfg)
    base = find_first_peak(ScenarioConfig(delta=1.0, j=1.0, n_channel=4))
    assert len(records) == 1
    assert records[0].fields["e_at_t_opt"] == pytest.approx(base.e_peak, abs=1e-9)


def test_gamma_sweep_zero_matches_unitary():
    cfg = ScenarioConfig(delta=1.0, j=1.0, n_channel=2, sweep=SweepSpec("gamma", 0.0, 0.0, 1.0))
    records = sweep_gamma(cfg)
    base = find_first_peak(ScenarioConfig(delta=1.0, j=1.0, n_channel=2))
    assert records[0].fields["e_at_t_opt"] == pytest.approx(base.e_peak, abs=1e-6)


def test_hopping_constraints_and_initial_column():
    rows = hopping_map(ScenarioConfig(delta=1.0, j=1.0, n_channel=4, t_max=0.5))
    first_samples = {r["site"]: r["concurrence"] for r in rows if r["t"] == 0.0}
    assert first_samples[0] == pytest.approx(1.0, abs=1e-9)
    assert all(first_samples[j] == pytest.approx(0.0, abs=1e-12) for j in range(1, 5))
    with pytest.raises(ConfigError):
        hopping_map(ScenarioConfig(delta=1.0, n_channel=3))
    with pytest.raises(ConfigError):
        hopping_map(ScenarioConfig(delta=-0.5, n_channel=4))


def test_velocity_table_caps_inverse_velocity():
    cfg = ScenarioConfig(
        j=1.0, n_channel=4, sweep=SweepSpec("delta", -1.0, 0.0, 0.5), t_max=60.0
    )
    rows, _ = velocity_table(cfg)
    assert rows[0]["delta"] == pytest.approx(-1.0)
    assert rows[0]["inv_vf"] == pytest.approx(1e9)


def test_velocity_rank_correlation_in_clean_region():
    cfg = ScenarioConfig(j=1.0, n_channel=4, sweep=SweepSpec("delta", -0.5, 1.0, 0.25))
    rows, corr = velocity_table(cfg)
    assert len(rows) == 7
    assert corr > 0.9


def test_series_starts_at_zero():
    rows = entanglement_series(ScenarioConfig(delta=1.0, n_channel=2, t_max=0.2))
    assert rows[0]["t"] == 0.0
    assert rows[0]["concurrence"] == pytest.approx(0.0, abs=1e-12)
    assert rows[0]["singlet_fraction"] == pytest.approx(0.25, abs=1e-9)


# ---------------------------------------------------------------------------
# output formatting, determinism, resume


def test_format_cell_significant_digits():
    assert format_cell(None) == ""
    assert format_cell(1.0) == "1"
    assert format_cell(0.123456789012345) == "0.123456789012"
    assert format_cell(3) == "3"
    assert format_cell("pole") == "pole"


def test_csv_deterministic_and_schema(tmp_path):
    cfg = ScenarioConfig(
        delta=1.0,
        j=1.0,
        n_channel=4,
        sweep=SweepSpec("delta", 0.5, 1.0, 0.25),
        out=str(tmp_path / "a.csv"),
    )
    rows1 = run_sweep_command(cfg, "sweep-delta")
    text1 = (tmp_path / "a.csv").read_text()
    (tmp_path / "a.csv").unlink()
    run_sweep_command(cfg, "sweep-delta")
    text2 = (tmp_path / "a.csv").read_text()
    assert text1 == text2
    assert text1.splitlines()[0] == ",".join(CSV_SCHEMAS["peak"])
    assert len(rows1) == 3


def test_sweep_resume_skips_done_points(tmp_path):
    out = tmp_path / "sweep.csv"
    full_cfg = ScenarioConfig(
        delta=1.0, j=1.0, n_channel=4, sweep=SweepSpec("delta", 0.5, 1.0, 0.25), out=str(out)
    )
    run_sweep_command(full_cfg, "sweep-delta")
    full_text = out.read_text()

    # emulate an interrupted run holding only the middle point
    lines = full_text.splitlines()
    out.write_text("\n".join([lines[0], lines[2]]) + "\n")
    resumed = run_sweep_command(full_cfg, "sweep-delta")
    assert out.read_text() == full_text
    assert len(resumed) == 3


def test_worker_pool_matches_serial():
    spec = SweepSpec("delta", 0.5, 1.0, 0.25)
    serial = run_sweep_command(ScenarioConfig(n_channel=4, sweep=spec, workers=1), "sweep-delta")
    parallel = run_sweep_command(ScenarioConfig(n_channel=4, sweep=spec, workers=2), "sweep-delta")
    a = rows_to_csv(CSV_SCHEMAS["peak"], serial)
    b = rows_to_csv(CSV_SCHEMAS["peak"], parallel)
    assert a == b


# ---------------------------------------------------------------------------
# CLI surface


def test_cli_peak_writes_csv(tmp_path):
    out = tmp_path / "peak.csv"
    proc = run_cli(["peak", "--n-channel", "4", "--delta", "1", "--out", str(out)])
    assert proc.returncode == 0, proc.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_SCHEMAS["peak"])
    assert len(lines) == 2


def test_cli_config_file_and_flag_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("n_channel = 4\ndelta = 0.5\nj = 1.0\n# comment line\n")
    out = tmp_path / "peak.csv"
    proc = run_cli(["peak", "--config", str(conf), "--delta", "1.0", "--out", str(out)])
    assert proc.returncode == 0, proc.stderr
    row = out.read_text().splitlines()[1].split(",")
    assert row[0] == "1"  # the flag overrode the file's delta


def test_cli_exit_codes(tmp_path):
    proc = run_cli(["peak", "--n-channel", "40", "--delta", "1"])
    assert proc.returncode == 2
    proc = run_cli(["peak", "--n-channel", "4", "--delta", "1", "--t-max", "0.1"])
    assert proc.returncode == 3
    conf = tmp_path / "bad.conf"
    conf.write_text("nonsense_key = 1\n")
    proc = run_cli(["peak", "--config", str(conf), "--n-channel", "4"])
    assert proc.returncode == 2


def test_cli_check_passes():
    proc = run_cli(["check", "--seed", "3"])
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "7/7 checks passed" in proc.stdout


def test_cli_json_output(tmp_path):
    out = tmp_path / "peak.json"
    proc = run_cli(
        ["peak", "--n-channel", "4", "--delta", "1", "--format", "json", "--out", str(out)]
    )
    assert proc.returncode == 0, proc.stderr
    import json

    data = json.loads(out.read_text())
    assert data[0]["n_channel"] == 4
    assert 0 < data[0]["e_peak"] <= 1
