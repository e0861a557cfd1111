"""Command-line interface.

Subcommands: peak, sweep-delta, sweep-length, sweep-temp, sweep-gamma,
capacity, distill, hopping, velocity, check.  A flat key=value config file
can hold any flag's long name; explicit flags win.  Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import runner
from .errors import ConfigError, NumericalError, SimulationError
from .runner import ScenarioConfig, SweepSpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="flat key=value file; flags override it")
    p.add_argument("--n-channel", type=int, dest="n_channel")
    p.add_argument("--length", type=int, help="paper-style chain length label")
    p.add_argument(
        "--length-convention",
        choices=("total", "channel"),
        dest="length_convention",
        help="how --length maps to channel spins (default: total, i.e. n_channel = length - 2)",
    )
    p.add_argument("--delta", type=float)
    p.add_argument("--j", type=float)
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--dt", type=float)
    p.add_argument("--method", choices=("auto", "eigendecomposition", "krylov"))
    p.add_argument("--krylov-dim", type=int, dest="krylov_dim")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)


def _add_sweep_bounds(p: argparse.ArgumentParser, what: str):
    p.add_argument("--start", type=float, help=f"first {what} value")
    p.add_argument("--stop", type=float, help=f"last {what} value")
    p.add_argument("--step", type=float, help=f"{what} grid step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xxzwire", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("peak", help="first entanglement peak of one configuration")
    _add_common(p)
    p.add_argument("--series-out", type=Path, dest="series_out", help="also write the full (t, E, F) series")
    p.add_argument("--temperature", type=float)
    p.add_argument("--gamma", type=float)

    for name, what in (
        ("sweep-delta", "delta"),
        ("sweep-length", "length"),
        ("sweep-temp", "temperature"),
        ("sweep-gamma", "gamma"),
        ("capacity", "delta"),
        ("velocity", "delta"),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        _add_sweep_bounds(p, what)
        if name in ("sweep-temp", "sweep-gamma"):
            p.add_argument("--reoptimize-t", action="store_true", dest="reoptimize_time")
        if name == "capacity":
            p.add_argument("--at-time", type=float, dest="at_time")

    p = sub.add_parser("distill", help="distill the pair produced at the peak")
    _add_common(p)
    p.add_argument("--target-e", type=float, dest="target_concurrence")
    p.add_argument("--iterations", type=int, help="run a fixed number of rounds instead")

    p = sub.add_parser("hopping", help="site-by-site entanglement map over time")
    _add_common(p)

    p = sub.add_parser("check", help="run the quick invariant battery")
    _add_common(p)
    return parser


def read_config_file(path: Path) -> dict:
    values = {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


_CONFIG_TYPES = {
    "n_channel": int,
    "length": int,
    "length_convention": str,
    "delta": float,
    "j": float,
    "t_max": float,
    "dt": float,
    "method": str,
    "krylov_dim": int,
    "out": str,
    "format": str,
    "seed": int,
    "workers": int,
    "temperature": float,
    "gamma": float,
    "start": float,
    "stop": float,
    "step": float,
    "target_concurrence": float,
    "iterations": int,
    "at_time": float,
    "reoptimize_time": lambda s: s.lower() in ("1", "true", "yes"),
    "series_out": str,
}


def merged_options(args: argparse.Namespace) -> dict:
    """Config-file values overlaid by explicit command-line flags."""
    out: dict = {}
    if getattr(args, "config", None):
        raw = read_config_file(args.config)
        for key, value in raw.items():
            if key not in _CONFIG_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                out[key] = _CONFIG_TYPES[key](value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        if isinstance(value, Path):
            value = str(value)
        out[key] = value
    return out


def scenario_from_options(opts: dict, sweep_variable: str | None = None) -> ScenarioConfig:
    start = opts.pop("start", None)
    stop = opts.pop("stop", None)
    step = opts.pop("step", None)
    sweep = None
    if sweep_variable is not None:
        d_start, d_stop, d_step = {
            "delta": (-2.0, 3.0, 0.05),
            "length": (4, 10, 1),
            "temperature": (0.1, 2.0, 0.1),
            "gamma": (0.0, 0.5, 0.05),
            "velocity": (-0.9, 1.0, 0.05),
            "capacity": (-0.9, 1.4, 0.05),
        }[sweep_variable]
        sweep = SweepSpec(
            variable="delta" if sweep_variable in ("velocity", "capacity") else sweep_variable,
            start=start if start is not None else d_start,
            stop=stop if stop is not None else d_stop,
            step=step if step is not None else d_step,
        )
    kwargs = {k: v for k, v in opts.items() if k in ScenarioConfig.__dataclass_fields__}
    return ScenarioConfig(sweep=sweep, **kwargs)


def _print_or_write(cfg: ScenarioConfig, schema: str, rows: list[dict]):
    if cfg.out:
        runner.write_output(cfg.out, schema, rows, cfg.format)
    else:
        text = (
            runner.rows_to_csv(runner.CSV_SCHEMAS[schema], rows)
            if cfg.format == "csv"
            else runner.rows_to_json(runner.CSV_SCHEMAS[schema], rows)
        )
        sys.stdout.write(text)


def cmd_peak(opts: dict) -> int:
    series_out = opts.pop("series_out", None)
    cfg = scenario_from_options(opts)
    prepared = runner.prepare_chain(cfg)
    result = runner.find_first_peak(cfg, prepared)
    row = runner._peak_row(cfg, result)
    _print_or_write(cfg, "peak", [row])
    if series_out:
        series = runner.entanglement_series(cfg, prepared)
        runner.write_output(series_out, "series", series, cfg.format)
    return EXIT_OK


def cmd_sweep(opts: dict, kind: str, variable: str) -> int:
    cfg = scenario_from_options(opts, sweep_variable=variable)
    rows = runner.run_sweep_command(cfg, kind)
    if not cfg.out:
        _print_or_write(cfg, runner.SWEEP_TABLE[kind][0], rows)
    return EXIT_OK


def cmd_velocity(opts: dict) -> int:
    cfg = scenario_from_options(opts, sweep_variable="velocity")
    rows, corr = runner.velocity_table(cfg)
    _print_or_write(cfg, "velocity", rows)
    print(f"spearman(t_opt, 1/v_f) = {corr:.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_distill(opts: dict) -> int:
    cfg = scenario_from_options(opts)
    _, rows = runner.distill_run(cfg)
    _print_or_write(cfg, "distill", rows)
    return EXIT_OK


def cmd_hopping(opts: dict) -> int:
    cfg = scenario_from_options(opts)
    rows = runner.hopping_map(cfg)
    _print_or_write(cfg, "hopping", rows)
    return EXIT_OK


def cmd_check(opts: dict) -> int:
    from .selfcheck import run_self_checks

    seed = opts.get("seed", 0)
    ok = run_self_checks(seed=seed)
    return EXIT_OK if ok else EXIT_NUMERICAL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = merged_options(args)
        if args.command == "peak":
            return cmd_peak(opts)
        if args.command in ("sweep-delta", "sweep-length", "sweep-temp", "sweep-gamma", "capacity"):
            variable = {
                "sweep-delta": "delta",
                "sweep-length": "length",
                "sweep-temp": "temperature",
                "sweep-gamma": "gamma",
                "capacity": "capacity",
            }[args.command]
            return cmd_sweep(opts, args.command, variable)
        if args.command == "velocity":
            return cmd_velocity(opts)
        if args.command == "distill":
            return cmd_distill(opts)
        if args.command == "hopping":
            return cmd_hopping(opts)
        if args.command == "check":
            return cmd_check(opts)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SimulationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
