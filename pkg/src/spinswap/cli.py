"""Command-line front end: scenario runs, parameter sweeps, chain checks.

Scenarios are TOML files; a bare name is resolved against the shipped presets.
All tabular output is RFC 4180 CSV with floats printed at full precision, and
every run leaves a JSON manifest describing exactly what was executed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .coherent import TunedParams, detuned_params, read_chain, swap_period_tuned
from .diagnostics import DIAGNOSTICS_HEADER
from .lindblad import IntegrationError, Rates, Trajectory, assemble, evolve
from .oracle import (
    compare_trajectories,
    embed_symmetric,
    full_space_evolve,
    oracle_test_state,
    project_to_symmetric,
)
from .pst_conditions import eigenvalues, mirror_symmetric, odd_commensurability
from .sector_basis import SectorError, build_initial_state, build_swap_state, to_records

OUTDIR_ENV = "SPINSWAP_OUTDIR"

SWEEP_AXES = ("eps_m", "eps_j", "gamma_z", "gamma_minus", "kappa_z", "kappa_minus")


class ConfigError(Exception):
    """Raised for malformed or inconsistent scenario files and arguments."""


@dataclass
class SweepSpec:
    """One or more swept axes with shared handling of spacing and mode."""

    axes: tuple[str, ...]
    start: tuple[float, ...]
    stop: tuple[float, ...]
    points: tuple[int, ...]
    log: tuple[bool, ...]
    mode: str = "separate"

    def values(self, k: int) -> np.ndarray:
        if self.log[k]:
            if self.start[k] <= 0 or self.stop[k] <= 0:
                raise ConfigError(f"log axis {self.axes[k]} needs positive bounds")
            return np.geomspace(self.start[k], self.stop[k], self.points[k])
        return np.linspace(self.start[k], self.stop[k], self.points[k])


@dataclass
class ScenarioConfig:
    """Fully resolved scenario: every default filled in."""

    j_a: float
    n_up_max: int
    delta_max: int = 0
    a_level: int = 1
    n_a: int = 0
    gamma_int: float = 1.0
    tuned: bool = True
    eps_m: float = 0.0
    eps_j: float = 0.0
    gamma_z: float = 0.0
    gamma_minus: float = 0.0
    kappa_z: float = 0.0
    kappa_minus: float = 0.0
    periods: float = 2.0
    samples_per_period: int = 64
    prefix: str = "run"
    out_dir: str = "."
    write_states: bool = False
    contrast_decay_only: bool = False
    sweep: SweepSpec | None = None
    oracle_n: int = 3
    oracle_periods: float = 2.0
    oracle_tol: float = 1e-6

    def coupling_params(self) -> TunedParams:
        if self.tuned:
            return detuned_params(self.j_a, self.gamma_int, self.eps_m, self.eps_j)
        if self.eps_m or self.eps_j:
            raise ConfigError("detunings eps_m / eps_j require tuned = true")
        return TunedParams(gamma_int=self.gamma_int)

    def rates(self) -> Rates:
        params = self.coupling_params()
        return Rates(
            gamma_int=params.gamma_int,
            gamma_m=params.gamma_m,
            gamma_j=params.gamma_j,
            gamma_z=self.gamma_z,
            gamma_minus=self.gamma_minus,
            kappa_z=self.kappa_z,
            kappa_minus=self.kappa_minus,
            n_a=self.n_a,
        )

    def period(self) -> float:
        return swap_period_tuned(self.j_a, self.gamma_int)

    def resolved_out_dir(self) -> str:
        return os.environ.get(OUTDIR_ENV, "") or self.out_dir


def _take(section: dict, name: str, allowed: dict) -> dict:
    """Pop one section and reject keys outside its schema."""
    body = section.pop(name, {})
    if not isinstance(body, dict):
        raise ConfigError(f"[{name}] must be a table")
    unknown = set(body) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {', '.join(sorted(unknown))}")
    out = {}
    for key, kind in allowed.items():
        if key not in body:
            continue
        value = body[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool) != (kind is bool):
            raise ConfigError(f"{name}.{key} must be of type {kind.__name__}")
        out[key] = value
    return out


def _broadcast(raw, n: int, name: str) -> tuple:
    if not isinstance(raw, list):
        raw = [raw] * n
    if len(raw) != n:
        raise ConfigError(f"sweep.{name} must match the number of axes")
    return tuple(raw)


def _parse_sweep(body: dict) -> SweepSpec | None:
    if not body:
        return None
    if "axes" not in body:
        raise ConfigError("[sweep] requires an axes list")
    axes = body.pop("axes")
    if isinstance(axes, str):
        axes = [axes]
    for axis in axes:
        if axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    n = len(axes)
    try:
        start = _broadcast(body.pop("from"), n, "from")
        stop = _broadcast(body.pop("to"), n, "to")
    except KeyError as exc:
        raise ConfigError(f"[sweep] requires {exc.args[0]!r}") from None
    points = _broadcast(body.pop("points", 11), n, "points")
    log = _broadcast(body.pop("log", False), n, "log")
    mode = body.pop("mode", "separate")
    if mode not in ("separate", "product"):
        raise ConfigError(f"sweep.mode must be 'separate' or 'product', got {mode!r}")
    if body:
        raise ConfigError(f"unknown keys in [sweep]: {', '.join(sorted(body))}")
    spec = SweepSpec(
        axes=tuple(axes),
        start=tuple(float(v) for v in start),
        stop=tuple(float(v) for v in stop),
        points=tuple(int(v) for v in points),
        log=tuple(bool(v) for v in log),
        mode=mode,
    )
    for k, p in enumerate(spec.points):
        if p < 2:
            raise ConfigError(f"sweep axis {spec.axes[k]} needs at least two points")
    return spec


def load_config(source: str) -> ScenarioConfig:
    """Read a scenario from a path, or from the named shipped preset."""
    if os.path.exists(source):
        with open(source, "rb") as handle:
            data = tomllib.load(handle)
    else:
        preset = resources.files("spinswap").joinpath("presets", f"{source}.toml")
        if not preset.is_file():
            names = sorted(
                p.name.removesuffix(".toml")
                for p in resources.files("spinswap").joinpath("presets").iterdir()
                if p.name.endswith(".toml")
            )
            raise ConfigError(
                f"no file or preset named {source!r}; presets: {', '.join(names)}"
            )
        data = tomllib.loads(preset.read_text())

    system = _take(
        data, "system", {"j_a": float, "delta_max": int, "n_up_max": int, "a_level": int, "n_a": int}
    )
    couplings = _take(
        data, "couplings", {"gamma_int": float, "tuned": bool, "eps_m": float, "eps_j": float}
    )
    rates = _take(
        data,
        "rates",
        {"gamma_z": float, "gamma_minus": float, "kappa_z": float, "kappa_minus": float},
    )
    schedule = _take(data, "schedule", {"periods": float, "samples_per_period": int})
    outputs = _take(
        data,
        "outputs",
        {"prefix": str, "dir": str, "states": bool, "contrast_decay_only": bool},
    )
    sweep_body = data.pop("sweep", None)
    oracle = _take(data, "oracle", {"n_per_species": int, "periods": float, "tol": float})
    if data:
        raise ConfigError(f"unknown sections: {', '.join(sorted(data))}")
    for key in ("j_a", "n_up_max"):
        if key not in system:
            raise ConfigError(f"system.{key} is required")

    config = ScenarioConfig(
        j_a=system["j_a"],
        n_up_max=system["n_up_max"],
        delta_max=system.get("delta_max", 0),
        a_level=system.get("a_level", 1),
        n_a=system.get("n_a", 0) or int(round(2 * system["j_a"])),
        gamma_int=couplings.get("gamma_int", 1.0),
        tuned=couplings.get("tuned", True),
        eps_m=couplings.get("eps_m", 0.0),
        eps_j=couplings.get("eps_j", 0.0),
        gamma_z=rates.get("gamma_z", 0.0),
        gamma_minus=rates.get("gamma_minus", 0.0),
        kappa_z=rates.get("kappa_z", 0.0),
        kappa_minus=rates.get("kappa_minus", 0.0),
        periods=schedule.get("periods", 2.0),
        samples_per_period=schedule.get("samples_per_period", 64),
        prefix=outputs.get("prefix", "run"),
        out_dir=outputs.get("dir", "."),
        write_states=outputs.get("states", False),
        contrast_decay_only=outputs.get("contrast_decay_only", False),
        sweep=_parse_sweep(dict(sweep_body) if sweep_body else {}),
        oracle_n=oracle.get("n_per_species", 3),
        oracle_periods=oracle.get("periods", 2.0),
        oracle_tol=oracle.get("tol", 1e-6),
    )
    if config.periods <= 0:
        raise ConfigError("schedule.periods must be positive")
    if config.samples_per_period < 1:
        raise ConfigError("schedule.samples_per_period must be at least 1")
    if config.gamma_int <= 0:
        raise ConfigError("couplings.gamma_int must be positive")
    return config


def _fmt(value: float) -> str:
    return "%.17g" % float(value)


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_manifest(path: str, config: ScenarioConfig, body: dict) -> None:
    payload = {
        "config": dataclasses.asdict(config),
        "version": __version__,
        **body,
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _sample_times(config: ScenarioConfig) -> np.ndarray:
    count = int(round(config.periods * config.samples_per_period)) + 1
    if count < 2:
        count = 2
    return np.linspace(0.0, config.periods * config.period(), count)


def _evolve_scenario(
    config: ScenarioConfig, rates: Rates, sample_times
) -> tuple[Trajectory, int]:
    rho_init = build_initial_state(config.j_a, config.delta_max, config.n_up_max, config.a_level)
    rho_swap = build_swap_state(config.j_a, config.delta_max, config.n_up_max, config.a_level)
    superop = assemble(rho_init, rates)
    trajectory = evolve(
        rho_init,
        superop,
        float(sample_times[-1]),
        sample_times=sample_times,
        references=(rho_init, rho_swap),
    )
    return trajectory, len(superop.indices)


def run_scenario(config: ScenarioConfig) -> dict:
    """Integrate one scenario and write its trajectory, diagnostics, manifest."""
    out_dir = config.resolved_out_dir()
    os.makedirs(out_dir, exist_ok=True)
    prefix = os.path.join(out_dir, config.prefix)
    started = time.perf_counter()
    sample_times = _sample_times(config)
    trajectory, index_count = _evolve_scenario(config, config.rates(), sample_times)
    records = trajectory.diagnostics

    _write_csv(
        f"{prefix}_trajectory.csv",
        ("time", "dist_sq_swap", "dist_sq_initial", "trace"),
        [(r.time, r.dist_sq_swap, r.dist_sq_initial, r.trace) for r in records],
    )
    _write_csv(f"{prefix}_diagnostics.csv", DIAGNOSTICS_HEADER, [r.row() for r in records])
    if config.write_states:
        final = trajectory.states[-1]
        with open(f"{prefix}_states.json", "w") as handle:
            json.dump(
                {"time": float(trajectory.times[-1]), "state": to_records(final)},
                handle,
                indent=2,
                sort_keys=True,
            )
            handle.write("\n")
    if config.contrast_decay_only:
        decay_rates = Rates(
            gamma_int=0.0,
            gamma_z=config.gamma_z,
            gamma_minus=config.gamma_minus,
            kappa_z=config.kappa_z,
            kappa_minus=config.kappa_minus,
            n_a=config.n_a,
        )
        contrast, _ = _evolve_scenario(config, decay_rates, sample_times)
        _write_csv(
            f"{prefix}_contrast.csv",
            ("time", "dist_sq_initial_full", "dist_sq_initial_decay_only"),
            [
                (r.time, r.dist_sq_initial, c.dist_sq_initial)
                for r, c in zip(records, contrast.diagnostics)
            ],
        )

    body = {
        "command": "run",
        "wall_time_s": time.perf_counter() - started,
        "period": config.period(),
        "index_count": index_count,
        "integrator": {
            "rtol": 1e-9,
            "atol": 1e-12,
            "samples": len(records),
            "trace_drift": trajectory.trace_drift,
            "hermiticity_drift": trajectory.hermiticity_drift,
        },
    }
    _write_manifest(f"{prefix}_manifest.json", config, body)
    return body


def _sweep_point(config: ScenarioConfig, assignment: dict[str, float]) -> list[float]:
    """Evaluate one sweep point: distances at one and two swap periods."""
    overrides = dict(assignment)
    if ("eps_m" in overrides or "eps_j" in overrides) and not config.tuned:
        raise ConfigError("sweeping eps_m / eps_j requires tuned = true")
    point = dataclasses.replace(config, **overrides)
    period = point.period()
    trajectory, _ = _evolve_scenario(point, point.rates(), np.array([0.0, period, 2 * period]))
    records = trajectory.diagnostics
    return [
        *assignment.values(),
        records[1].dist_sq_swap,
        records[2].dist_sq_initial,
        trajectory.trace_drift,
    ]


def _sweep_tasks(config: ScenarioConfig, spec: SweepSpec):
    """Yield (table name, assignments) per output CSV of the sweep."""
    if spec.mode == "separate":
        for k, axis in enumerate(spec.axes):
            assignments = [{axis: float(v)} for v in spec.values(k)]
            yield f"sweep_{axis}", (axis,), assignments
    else:
        grids = [spec.values(k) for k in range(len(spec.axes))]
        mesh = np.meshgrid(*grids, indexing="ij")
        flat = [m.ravel() for m in mesh]
        assignments = [
            {axis: float(flat[k][i]) for k, axis in enumerate(spec.axes)}
            for i in range(flat[0].size)
        ]
        yield "sweep", spec.axes, assignments


def run_sweep(config: ScenarioConfig, spec: SweepSpec, workers: int = 1) -> dict:
    """Evaluate every sweep point and write one CSV per swept table."""
    out_dir = config.resolved_out_dir()
    os.makedirs(out_dir, exist_ok=True)
    prefix = os.path.join(out_dir, config.prefix)
    started = time.perf_counter()
    tables = list(_sweep_tasks(config, spec))
    total = 0
    worst_drift = 0.0
    for name, axes, assignments in tables:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_sweep_point, [config] * len(assignments), assignments))
        else:
            rows = [_sweep_point(config, a) for a in assignments]
        header = (*axes, "dist_sq_swap_at_period", "dist_sq_initial_at_double_period", "trace_drift")
        _write_csv(f"{prefix}_{name}.csv", header, rows)
        total += len(rows)
        worst_drift = max([worst_drift, *(row[-1] for row in rows)])

    body = {
        "command": "sweep",
        "wall_time_s": time.perf_counter() - started,
        "period": config.period(),
        "mode": spec.mode,
        "axes": list(spec.axes),
        "points": total,
        "worst_trace_drift": worst_drift,
    }
    _write_manifest(f"{prefix}_sweep_manifest.json", config, body)
    return body


def run_check_pst(chain_path: str) -> dict:
    """Report mirror symmetry and spectral commensurability of a stored chain."""
    try:
        chain = read_chain(chain_path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read chain file {chain_path!r}: {exc}") from exc
    report = odd_commensurability(eigenvalues(chain))
    residual = report.residual
    return {
        "mirror": mirror_symmetric(chain),
        "odd_commensurate": report.is_odd_commensurate,
        "period": report.period,
        "residual": residual if residual is not None and math.isfinite(residual) else None,
    }


def run_oracle_compare(config: ScenarioConfig) -> dict:
    """Propagate the same state along both routes and report the worst gap."""
    n = config.oracle_n
    j = n / 2
    if config.tuned:
        params = detuned_params(j, config.gamma_int, config.eps_m, config.eps_j)
    else:
        params = TunedParams(gamma_int=config.gamma_int)
    rates = Rates(
        gamma_int=params.gamma_int,
        gamma_m=params.gamma_m,
        gamma_j=params.gamma_j,
        gamma_z=config.gamma_z,
        gamma_minus=config.gamma_minus,
        kappa_z=config.kappa_z,
        kappa_minus=config.kappa_minus,
        n_a=n,
    )
    horizon = config.oracle_periods * swap_period_tuned(j, config.gamma_int)
    sample_times = np.linspace(0.0, horizon, 9)

    rho0 = oracle_test_state(n)
    superop = assemble(rho0, rates)
    reduced = evolve(rho0, superop, horizon, sample_times=sample_times)

    full0 = embed_symmetric(rho0, n, n)
    full_states = full_space_evolve(full0, rates, sample_times)
    projected = []
    worst_residual = 0.0
    for state in full_states:
        coeffs, residual = project_to_symmetric(state)
        projected.append(coeffs)
        worst_residual = max(worst_residual, residual)

    deviation = compare_trajectories(reduced.states, projected)
    return {
        "sites_per_species": n,
        "max_deviation": deviation,
        "projection_residual": worst_residual,
        "tolerance": config.oracle_tol,
        "agrees": bool(deviation <= config.oracle_tol),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinswap",
        description="Mixed-state transfer simulations in the collective sector basis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a scenario (or its configured sweep)")
    p_run.add_argument("config", help="TOML scenario file or preset name")
    p_run.add_argument("--workers", type=int, default=1, help="parallel sweep processes")

    p_sweep = sub.add_parser("sweep", help="sweep one axis of a scenario")
    p_sweep.add_argument("config", help="TOML scenario file or preset name")
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--points", type=int, required=True)
    p_sweep.add_argument("--log", action="store_true", help="logarithmic spacing")
    p_sweep.add_argument("--workers", type=int, default=1)

    p_check = sub.add_parser("check-pst", help="test a stored chain for perfect transfer")
    p_check.add_argument("chain", help="two-line chain file (site terms, couplings)")

    p_oracle = sub.add_parser(
        "oracle-compare", help="cross-check reduced dynamics against the site basis"
    )
    p_oracle.add_argument("config", help="TOML scenario file or preset name")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            if config.sweep is not None:
                body = run_sweep(config, config.sweep, workers=args.workers)
            else:
                body = run_scenario(config)
            print(json.dumps({k: v for k, v in body.items() if k != "config"}, sort_keys=True))
        elif args.command == "sweep":
            config = load_config(args.config)
            spec = SweepSpec(
                axes=(args.axis,),
                start=(args.start,),
                stop=(args.stop,),
                points=(args.points,),
                log=(args.log,),
                mode="separate",
            )
            if spec.points[0] < 2:
                raise ConfigError("--points must be at least 2")
            body = run_sweep(config, spec, workers=args.workers)
            print(json.dumps(body, sort_keys=True))
        elif args.command == "check-pst":
            print(json.dumps(run_check_pst(args.chain), sort_keys=True))
        elif args.command == "oracle-compare":
            config = load_config(args.config)
            print(json.dumps(run_oracle_compare(config), sort_keys=True))
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, SectorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
