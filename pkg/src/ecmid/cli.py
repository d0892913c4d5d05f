"""Command-line entry point: ``ecmid {simulate,fit,benchmark,ocv-fit}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as cfg
from .bench import BenchmarkSuite, emit_overlay, emit_report, run_suite
from .dataset import (
    NoDischargeError,
    extract_discharge_window,
    parse_timeseries,
    resample_uniform,
    segment_cycles,
)
from .errors import DataError, EcmError
from .model import CellSpec, EcmParams, fit_ocv, read_ocv_file, simulate_terminal_voltage, write_ocv_file
from .optimize import METHODS, FitProblem, run_method

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED = 0, 1, 2, 3

log = logging.getLogger("ecmid")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _existing(path: Optional[str], what: str) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{what} not found: {path}")
    return p


def _check_method(name: str) -> str:
    if name not in METHODS:
        raise UsageError(f"unknown method {name!r}; valid methods: {', '.join(METHODS)}")
    return name


def _records(path: Path, settings):
    with path.open(newline="") as fh:
        return parse_timeseries(fh, settings.column_map(), settings["invert_current"])


def _estimate_capacity(cycle) -> float:
    """Ah delivered over a cycle's discharging samples."""
    charge = 0.0
    for prev, cur in zip(cycle, cycle[1:]):
        if cur.current > 0:
            charge += cur.current * (cur.test_time - prev.test_time)
    return charge / 3600.0


@dataclass
class ProblemSource:
    path: Path
    cell_id: str
    capacity: Optional[float]
    soc_init: float
    cycles: str = "first"  # "first", "all", or comma-separated indices


def load_problems(src: ProblemSource, settings, ocv) -> list[FitProblem]:
    """Parse a cycler log and build one identification problem per selected cycle."""
    records = _records(src.path, settings)
    if not records:
        raise DataError(f"{src.path}: no data rows")
    runs = segment_cycles(records)
    if src.cycles not in ("first", "all"):
        wanted = {int(c) for c in src.cycles.split(",") if c.strip()}
        runs = [r for r in runs if r[0] in wanted]
        if not runs:
            raise DataError(f"{src.path}: none of the requested cycles {sorted(wanted)} are present")
    policy = settings.window_policy()
    problems = []
    last_error = None
    for _, rng in runs:
        cycle = records[rng.start : rng.stop]
        capacity = src.capacity or _estimate_capacity(cycle)
        if capacity <= 0:
            last_error = NoDischargeError(f"{src.path}: no discharge found in cycle {cycle[0].cycle_index}")
            continue
        cell = CellSpec(capacity, src.soc_init)
        try:
            seg = extract_discharge_window(cycle, policy, cell, src.cell_id)
        except DataError as exc:
            last_error = exc
            continue
        if settings["window.dt"] > 0:
            seg = resample_uniform(seg, settings["window.dt"])
        if src.capacity is None:
            log.info("cycle %s: capacity estimated from discharged charge as %.6g Ah", seg.cycle_index, capacity)
        seg = replace(seg, source=src.path.name)
        problems.append(FitProblem.build(seg, CellSpec(capacity, seg.soc_start), ocv,
                                         settings.search_space(), settings["ocv.degree"]))
        if src.cycles == "first":
            break
    if not problems:
        raise last_error or NoDischargeError(f"{src.path}: no discharge found")
    return problems


def cmd_fit(args) -> int:
    method = _check_method(args.method)
    settings = cfg.resolve(args.config, {
        "cell.capacity": args.capacity, "cell.soc_init": args.soc_init,
        "invert_current": True if args.invert_current else None,
    })
    _announce(settings)
    path = _existing(args.input, "input file")
    ocv = read_ocv_file(_existing(args.ocv, "OCV file")) if args.ocv else None
    src = ProblemSource(path, args.cell_id or path.stem, settings["cell.capacity"], settings["cell.soc_init"],
                        str(args.cycle) if args.cycle is not None else "first")
    problem = load_problems(src, settings, ocv)[0]
    report = run_method(method, problem, settings.method_config(method), seed=args.seed, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seg = problem.segment
    stem = f"fit_{seg.cell_id}_{seg.cycle_index}_{method}"
    payload = report.to_dict()
    payload.update({"cell_id": seg.cell_id, "cycle_index": seg.cycle_index, "samples": len(seg),
                    "capacity": problem.cell.capacity, "soc_start": seg.soc_start,
                    "ocv_mode": "joint" if problem.joint else "fixed"})
    (out / f"{stem}.json").write_text(json.dumps(payload, indent=2) + "\n")
    emit_overlay(problem, report, out)
    print(f"{method}: mse={report.mse!r} V^2 et={report.execution_time:.3f}s "
          f"iterations={report.iterations} evaluations={report.evaluations}")
    if not report.converged:
        print(f"not converged: {report.message}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def read_params_file(path: Path) -> tuple[EcmParams, dict]:
    pairs = cfg.parse_pairs(path.read_text(), str(path))
    try:
        values = {k: float(v) for k, v in pairs.items()}
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric value ({exc})") from None
    missing = [k for k in ("r0", "r1", "c1", "r2", "c2") if k not in values]
    if missing:
        raise DataError(f"{path}: missing parameter(s) {', '.join(missing)}")
    return EcmParams(*(values[k] for k in ("r0", "r1", "c1", "r2", "c2"))), values


def read_profile(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"time_s", "current_a"} <= set(reader.fieldnames):
            raise DataError(f"{path}: profile needs columns time_s,current_a")
        try:
            rows = [(float(r["time_s"]), float(r["current_a"])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad profile value ({exc})") from None
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def write_series(path: Path, header, *columns) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([repr(float(v)) for v in row])


def cmd_simulate(args) -> int:
    params, extra = read_params_file(_existing(args.params, "parameters file"))
    ocv = read_ocv_file(_existing(args.ocv, "OCV file"))
    capacity = args.capacity if args.capacity is not None else extra.get("capacity")
    if capacity is None:
        raise UsageError("cell capacity missing: pass --capacity or put capacity=<Ah> in the parameters file")
    soc_init = args.soc_init if args.soc_init is not None else extra.get("soc_init", 1.0)
    cell = CellSpec(capacity, soc_init)
    time, current = read_profile(_existing(args.profile, "profile file"))
    sim = simulate_terminal_voltage(params, ocv, cell, time, current)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_series(out / "simulated.csv", ("time_s", "voltage_v"), time, sim.voltage)
    return EXIT_OK


@dataclass
class Manifest:
    sources: list[ProblemSource]
    methods: list[str]
    seeds: list[int]
    config: Optional[Path] = None
    ocv: Optional[Path] = None
    invert_current: Optional[bool] = None


def read_manifest(path: Path) -> Manifest:
    """Parse ``key=value`` header lines and ``path,cell_id,capacity_Ah[,soc_init]`` rows."""
    base = path.parent
    sources, methods, seeds = [], [], []
    conf = ocv = invert = None
    cycles = "first"
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and "," not in line.split("=", 1)[0]:
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "methods":
                methods = [_check_method(m.strip()) for m in value.split(",") if m.strip()]
            elif key == "seeds":
                seeds = [int(s) for s in value.split(",") if s.strip()]
            elif key == "config":
                conf = base / value
            elif key == "ocv":
                ocv = base / value
            elif key == "cycles":
                cycles = value
            elif key == "invert_current":
                invert = cfg.coerce("invert_current", value)
            else:
                raise UsageError(f"{path}:{lineno}: unknown manifest key {key!r}")
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (3, 4):
            raise UsageError(f"{path}:{lineno}: expected path,cell_id,capacity_Ah[,soc_init]")
        soc_init = float(parts[3]) if len(parts) == 4 else 1.0
        sources.append(ProblemSource(base / parts[0], parts[1], float(parts[2]), soc_init, cycles))
    return Manifest(sources, methods, seeds, conf, ocv, invert)


def cmd_benchmark(args) -> int:
    manifest = read_manifest(_existing(args.manifest, "manifest"))
    if not manifest.sources or not manifest.methods:
        raise UsageError("manifest lists no problems or no methods")
    seeds = manifest.seeds or [args.seed]
    settings = cfg.resolve(args.config or (str(manifest.config) if manifest.config else None),
                           {"invert_current": manifest.invert_current})
    _announce(settings)
    ocv = read_ocv_file(_existing(str(manifest.ocv), "OCV file")) if manifest.ocv else None
    problems = []
    for src in manifest.sources:
        _existing(str(src.path), "input file")
        problems.extend(load_problems(src, settings, ocv))
    suite = BenchmarkSuite(problems, [(m, settings.method_config(m)) for m in manifest.methods], seeds,
                           workers=args.workers)
    report = run_suite(suite)
    out = Path(args.out)
    emit_report(report, out, formats=args.format)
    for problem, fit in report.fits.values():
        emit_overlay(problem, fit, out)
    failed = sum(r.failed for r in report.rows)
    print(f"{len(report.rows)} runs ({failed} failed); summary written to {out}")
    return EXIT_OK


def cmd_ocv_fit(args) -> int:
    path = _existing(args.input, "input file")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"soc", "voltage"} <= set(reader.fieldnames):
            raise DataError(f"{path}: OCV points need columns soc,voltage")
        try:
            points = [(float(r["soc"]), float(r["voltage"])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad OCV point ({exc})") from None
    curve = fit_ocv(points, args.degree)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ocv_file(curve, out / "ocv.txt")
    return EXIT_OK


def _announce(settings) -> None:
    for line in settings.describe():
        log.debug("config %s", line)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="seed for all stochastic behaviour (default 42)")
    common.add_argument("--workers", type=int, default=1, help="parallel candidate evaluations")
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="ecmid", description="2RC battery model identification toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", parents=[common], help="identify parameters from a cycler log")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="pso", help="one of: " + ", ".join(METHODS))
    p.add_argument("--ocv", help="fixed OCV curve file (omit for joint identification)")
    p.add_argument("--capacity", type=float, help="cell capacity in Ah (default: estimated from the cycle)")
    p.add_argument("--soc-init", type=float)
    p.add_argument("--cycle", type=int, help="cycle index to use (default: first with a discharge)")
    p.add_argument("--cell-id")
    p.add_argument("--invert-current", action="store_true", help="input logs discharge as negative current")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", parents=[common], help="simulate terminal voltage for a current profile")
    p.add_argument("--params", required=True)
    p.add_argument("--ocv", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--capacity", type=float)
    p.add_argument("--soc-init", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", parents=[common], help="run a method x problem x seed suite")
    p.add_argument("--manifest", required=True)
    p.add_argument("--format", nargs="+", default=["csv", "md", "json"], choices=["csv", "md", "json"])
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("ocv-fit", parents=[common], help="fit an OCV polynomial to soc,voltage points")
    p.add_argument("--input", required=True)
    p.add_argument("--degree", type=int, default=5)
    p.set_defaults(func=cmd_ocv_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, cfg.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EcmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
