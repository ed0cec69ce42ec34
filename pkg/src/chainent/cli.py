"""Command-line front end.

    chainent simulate   --protocol p.json --out runs/a
    chainent sudden     --config chain.json --out runs/b
    chainent optimize   --config chain.json --out runs/c
    chainent sweep-temp --protocol runs/c/protocol.json --out runs/d

Exit codes: 0 success, 1 input error, 2 optimizer did not converge.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .chain import ChainConfig, ChainError, ControlSchedule, validate
from .control import OptimizerConfig, optimize
from .entanglement import opposite_pair
from .modes import extract_squeeze
from .protocol_io import ProtocolFormatError, parse_protocol_file, write_csv, write_protocol
from .simulation import simulate
from .thermo import ground_energy, max_entanglement_temperature, total_dissipated_work

log = logging.getLogger("chainent")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2
DEFAULT_TEMPERATURES = (0.0, 0.25, 0.5, 1.0)


class InputError(Exception):
    pass


@dataclasses.dataclass
class RunManifest:
    command: str
    chain: ChainConfig
    schedule: ControlSchedule | None
    optimizer: OptimizerConfig | None
    out_dir: Path
    sample_dt: float
    pair: tuple[int, int]
    extra: dict = dataclasses.field(default_factory=dict)

    def header(self) -> dict:
        """Resolved configuration echoed into every output file."""
        out = {
            "command": self.command,
            "chain": dataclasses.asdict(self.chain),
            "sample_dt": self.sample_dt,
            "pair": list(self.pair),
        }
        if self.schedule is not None:
            out["schedule"] = {
                "c_max": self.schedule.c_max,
                "segments": [list(s) for s in self.schedule.segments],
            }
        if self.optimizer is not None:
            out["optimizer"] = dataclasses.asdict(self.optimizer)
        out.update(self.extra)
        return out


def _load_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    return data


def _parse_pair(text: str, config: ChainConfig) -> tuple[int, int]:
    if text is None:
        return opposite_pair(config)
    try:
        n, m = (int(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"--pair expects 'n,m', got {text!r}") from None
    if not (1 <= n <= config.n_oscillators and 1 <= m <= config.n_oscillators) or n == m:
        raise InputError(f"--pair {text!r} out of range for N={config.n_oscillators}")
    return n, m


def build_manifest(args) -> RunManifest:
    cfg_data = _load_json(args.config) if args.config else {}
    opt_data = dict(cfg_data.pop("optimizer", {}) or {})
    schedule = None
    try:
        if args.protocol:
            chain, schedule, _ = parse_protocol_file(args.protocol)
        else:
            chain = ChainConfig(
                n_oscillators=cfg_data.get("n_oscillators", 8),
                omega0=cfg_data.get("omega0", 1.0),
                temperature=cfg_data.get("temperature", 0.0),
            )
        if args.temperature is not None:
            chain = chain.with_temperature(args.temperature)
        c_max = cfg_data.get("c_max", schedule.c_max if schedule else 0.05)
        sample_dt = args.sample_dt if args.sample_dt is not None else 0.05 / chain.omega0
        if not sample_dt > 0:
            raise InputError("--sample-dt must be > 0")
        optimizer = None
        if args.command in ("optimize", "sweep-temp") and not (args.command == "sweep-temp" and schedule):
            opt_data.setdefault("c_max", c_max)
            opt_data.setdefault("sync_c", opt_data["c_max"])
            opt_data.setdefault("sample_dt", sample_dt)
            for key in ("horizon", "n_segments", "gradient_mode"):
                value = getattr(args, key, None)
                if value is not None:
                    opt_data[key] = value
            if args.seed is not None:
                opt_data["seed"] = args.seed
            optimizer = OptimizerConfig(**opt_data)
    except (ChainError, ProtocolFormatError, TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    extra = {}
    if args.command == "sudden":
        extra["c_value"] = args.c_value if args.c_value is not None else c_max
        extra["horizon"] = args.horizon if args.horizon is not None else 200.0
        schedule = ControlSchedule(((extra["horizon"], extra["c_value"]),), max(c_max, extra["c_value"]))
    if args.command == "sweep-temp":
        extra["temperatures"] = list(args.temperatures)
        if any(t < 0 for t in args.temperatures):
            raise InputError("temperatures must be >= 0")
    if args.command == "simulate" and schedule is None:
        raise InputError("simulate requires --protocol")
    return RunManifest(
        command=args.command,
        chain=chain,
        schedule=schedule,
        optimizer=optimizer,
        out_dir=Path(args.out),
        sample_dt=sample_dt,
        pair=_parse_pair(args.pair, chain),
        extra=extra,
    )


def _write_trace(path, manifest, trace):
    write_csv(path, manifest.header(), trace.columns(), trace.rows())


def cmd_simulate(manifest: RunManifest, name: str = "simulate.csv"):
    for w in validate(manifest.chain, manifest.schedule):
        log.warning(w)
    trace = simulate(manifest.chain, manifest.schedule, manifest.sample_dt, manifest.pair)
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    _write_trace(manifest.out_dir / name, manifest, trace)
    return trace


def _summary(result, trace, config: ChainConfig) -> dict:
    final = trace.moments[-1]
    decomp = extract_squeeze(final, config, trace.coupling[-1])
    work = total_dissipated_work(decomp, config)
    k = trace.peak_index
    summary = {
        "status": result.status,
        "iterations": result.iterations,
        "final_cost": result.cost_history[-1],
        "squeeze_stage_mean_squeezing": float(np.mean(result.squeezing)),
        "mean_squeezing": work.mean_squeezing,
        "dissipated_work": work.dissipated_work,
        "ground_energy": ground_energy(config),
        "final_energy": float(trace.energy[-1]),
        "peak_time": float(trace.time[k]),
        "peak_log_negativity": float(trace.log_negativity[k]),
        "bound_at_peak": float(trace.bound[k]),
        "sync_peak_log_negativity": result.peak_log_negativity,
        "sync_peak_bound": result.peak_bound,
        "validity_ratio_at_peak": result.validity_ratio,
        "sync_angle_error": result.sync_error,
    }
    if work.mean_squeezing > 0:
        summary["T_m_estimate"] = max_entanglement_temperature(work.mean_squeezing, config.omega0)
    return summary


def cmd_optimize(manifest: RunManifest):
    chain, opt = manifest.chain, manifest.optimizer
    result = optimize(None, chain, opt)
    trace = simulate(chain, result.protocol, manifest.sample_dt, manifest.pair)
    summary = _summary(result, trace, chain)
    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    metadata = {
        "status": result.status,
        "cost_history": result.cost_history,
        "peak_log_negativity": result.peak_log_negativity,
        "peak_time": result.peak_time,
        "validity_ratio": result.validity_ratio,
    }
    write_protocol(out / "protocol.json", chain, result.protocol, metadata)
    hist = np.column_stack([np.arange(len(result.cost_history)), result.cost_history])
    write_csv(out / "cost_history.csv", manifest.header(), ["iteration", "J"], hist)
    _write_trace(out / "trace.csv", manifest, trace)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return result, trace, summary


def cmd_sweep_temperature(manifest: RunManifest, temperatures=None):
    temperatures = list(temperatures if temperatures is not None else manifest.extra["temperatures"])
    schedule = manifest.schedule
    if schedule is None:
        schedule = optimize(None, manifest.chain.with_temperature(0.0), manifest.optimizer).protocol
        manifest.schedule = schedule
    rows = []
    for temp in temperatures:
        chain = manifest.chain.with_temperature(temp)
        trace = simulate(chain, schedule, manifest.sample_dt, manifest.pair)
        k = trace.peak_index
        # with no entanglement at all the peak index says nothing; use the end state
        mean_r = float(np.mean(trace.r[k if trace.log_negativity[k] > 0 else -1]))
        t_m = max_entanglement_temperature(mean_r, chain.omega0) if mean_r > 0 else 0.0
        rows.append([temp, trace.time[k], trace.log_negativity[k], trace.bound[k], mean_r, t_m])
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    columns = ["T", "peak_time", "peak_E_N", "E_N_max_bound", "R", "T_m_estimate"]
    write_csv(manifest.out_dir / "sweep_temperature.csv", manifest.header(), columns, rows)
    return np.array(rows)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainent", description=__doc__.splitlines()[0] or None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON chain/optimizer configuration")
        p.add_argument("--protocol", help="protocol file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--pair", help="sites 'n,m' (default: 1 and its opposite)")
        p.add_argument("--temperature", type=float)
        p.add_argument("--sample-dt", type=float)
        p.add_argument("--seed", type=int)
        return p

    common(sub.add_parser("simulate", help="simulate a protocol file"))
    p = common(sub.add_parser("sudden", help="sudden switch of the coupling at t=0"))
    p.add_argument("--c-value", type=float)
    p.add_argument("--horizon", type=float)
    for name in ("optimize", "sweep-temp"):
        p = common(sub.add_parser(name))
        p.add_argument("--horizon", type=float, help="squeezing-stage duration")
        p.add_argument("--n-segments", type=int)
        p.add_argument("--gradient-mode", choices=("finite-difference", "adjoint"))
        if name == "sweep-temp":
            p.add_argument(
                "--temperatures",
                type=lambda s: [float(v) for v in s.split(",")],
                default=list(DEFAULT_TEMPERATURES),
            )
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        manifest = build_manifest(args)
        if args.command in ("simulate", "sudden"):
            cmd_simulate(manifest, f"{args.command}.csv")
        elif args.command == "optimize":
            result, _, summary = cmd_optimize(manifest)
            print(json.dumps(summary, indent=2))
            if not result.converged:
                print(f"optimizer did not converge: {result.status}", file=sys.stderr)
                return EXIT_NOT_CONVERGED
        else:
            cmd_sweep_temperature(manifest)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
