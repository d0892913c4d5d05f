"""Method-by-problem-by-seed benchmark, summary tables, and overlay files."""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import simulate_terminal_voltage
from .optimize import METHOD_LABELS, FitProblem, FitReport, make_ocv_curve, run_method

log = logging.getLogger(__name__)

# Reference results for 2RC identification, shown beside measured ones: (method, MSE, ET seconds).
REFERENCE_TABLE = (
    ("Least Squares", 1.698e-6, 0.15),
    ("Particle Swarm", 3.577e-7, 0.56),
    ("Simulated Annealing", 5.9719e-7, 0.61),
    ("Genetic Algorithm", 4.66e-6, 1.47),
    ("Golf Field", 7.074e-6, 1.25),
    ("Australian Dingo", 3.907e-7, 2.98),
    ("Mexican Axolotl", 1.23e-6, 2.91),
    ("Spider Jumping", 7.234e-5, 4.2),
)


@dataclass(frozen=True)
class ReferenceRow:
    method: str
    mse: float
    et: float


def reference_table() -> list[ReferenceRow]:
    return [ReferenceRow(*row) for row in REFERENCE_TABLE]


def reference_lookup(method: str) -> ReferenceRow:
    for row in reference_table():
        if row.method == method:
            return row
    raise KeyError(method)


@dataclass
class BenchmarkSuite:
    problems: Sequence[FitProblem]
    methods: Sequence[tuple[str, object]]  # (method name, config or None)
    seeds: Sequence[int]
    workers: int = 1

    def __post_init__(self):
        if not self.problems or not self.methods or not self.seeds:
            raise ValueError("a benchmark suite needs at least one problem, method and seed")


@dataclass(frozen=True)
class BenchmarkRow:
    method: str
    cell_id: str
    cycle_index: int
    source: str
    seed: int
    mse: Optional[float]
    et: Optional[float]
    converged: bool
    failed: bool = False
    evaluations: int = 0
    error: str = ""


@dataclass(frozen=True)
class MethodSummary:
    median_mse: Optional[float]
    median_et: Optional[float]
    mean_mse: Optional[float]
    mean_et: Optional[float]
    runs: int
    failed: int


@dataclass
class BenchmarkReport:
    rows: list[BenchmarkRow]
    aggregates: dict[str, MethodSummary]
    fits: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "aggregates": {m: asdict(s) for m, s in self.aggregates.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkReport":
        rows = [BenchmarkRow(**r) for r in d["rows"]]
        aggregates = {m: MethodSummary(**s) for m, s in d["aggregates"].items()}
        return cls(rows, aggregates)


def aggregate(rows: Sequence[BenchmarkRow]) -> dict[str, MethodSummary]:
    """Per-method medians and means over the successful rows.

    Failed rows are counted but excluded from the statistics.
    """
    order = list(dict.fromkeys(r.method for r in rows))
    out = {}
    for method in order:
        mine = [r for r in rows if r.method == method]
        ok = [r for r in mine if not r.failed]
        if ok:
            mses = [r.mse for r in ok]
            ets = [r.et for r in ok]
            summary = MethodSummary(
                median_mse=float(statistics.median(mses)),
                median_et=float(statistics.median(ets)),
                mean_mse=math.fsum(mses) / len(mses),
                mean_et=math.fsum(ets) / len(ets),
                runs=len(mine),
                failed=len(mine) - len(ok),
            )
        else:
            summary = MethodSummary(None, None, None, None, len(mine), len(mine))
        out[method] = summary
    return out


def run_suite(suite: BenchmarkSuite) -> BenchmarkReport:
    """Run every (method, problem, seed) triple in a fixed order.

    A run that raises becomes a flagged row; the suite keeps going.
    """
    rows = []
    fits = {}
    for method, config in suite.methods:
        for problem in suite.problems:
            seg = problem.segment
            for seed in suite.seeds:
                try:
                    fit = run_method(method, problem, config, seed=seed, workers=suite.workers)
                except Exception as exc:  # noqa: BLE001 - recorded, never fatal
                    log.warning("%s on %s/%s seed %s failed: %s", method, seg.cell_id, seg.cycle_index, seed, exc)
                    rows.append(
                        BenchmarkRow(method, seg.cell_id, seg.cycle_index, seg.source, seed,
                                     None, None, False, True, 0, f"{type(exc).__name__}: {exc}")
                    )
                    continue
                rows.append(
                    BenchmarkRow(method, seg.cell_id, seg.cycle_index, seg.source, seed,
                                 fit.mse, fit.execution_time, fit.converged, False, fit.evaluations)
                )
                fits.setdefault((method, seg.cell_id, seg.cycle_index), (problem, fit))
    return BenchmarkReport(rows, aggregate(rows), fits)


def _num(value) -> str:
    return "" if value is None else repr(float(value))


ROW_COLUMNS = ("method", "cell_id", "cycle_index", "source", "seed", "mse", "et", "converged",
               "failed", "evaluations", "error")
SUMMARY_COLUMNS = ("Method", "MSE", "ET (s)", "Mean MSE", "Mean ET (s)", "Runs", "Failed")


def _label(method: str) -> str:
    return METHOD_LABELS.get(method, method)


def _write_rows_csv(report: BenchmarkReport, path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROW_COLUMNS)
        for r in report.rows:
            writer.writerow([r.method, r.cell_id, r.cycle_index, r.source, r.seed, _num(r.mse), _num(r.et),
                             int(r.converged), int(r.failed), r.evaluations, r.error])


def _summary_lines(report: BenchmarkReport):
    for method, s in report.aggregates.items():
        yield (_label(method), _num(s.median_mse), _num(s.median_et), _num(s.mean_mse), _num(s.mean_et),
               str(s.runs), str(s.failed))


def _write_summary_csv(report, path, reference):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("Block",) + SUMMARY_COLUMNS)
        for line in _summary_lines(report):
            writer.writerow(("measured",) + line)
        if reference:
            for ref in reference_table():
                writer.writerow(("reference", ref.method, _num(ref.mse), _num(ref.et), "", "", "", ""))


def _write_summary_md(report, path, reference):
    out = ["# Identification benchmark", ""]
    out.append("| " + " | ".join(SUMMARY_COLUMNS) + " |")
    out.append("|" + "---|" * len(SUMMARY_COLUMNS))
    for line in _summary_lines(report):
        out.append("| " + " | ".join(line) + " |")
    out += ["", "MSE and ET (s) are medians over successful runs; MSE in volt^2."]
    if reference:
        out += ["", "## Reference", "", "| Method | MSE | ET (s) |", "|---|---|---|"]
        out += [f"| {r.method} | {_num(r.mse)} | {_num(r.et)} |" for r in reference_table()]
    path.write_text("\n".join(out) + "\n")


def _write_summary_json(report, path, reference):
    payload = report.to_dict()
    if reference:
        payload["reference"] = [asdict(r) for r in reference_table()]
    path.write_text(json.dumps(payload, indent=2) + "\n")


_WRITERS = {"csv": _write_summary_csv, "md": _write_summary_md, "markdown": _write_summary_md,
            "json": _write_summary_json}


def emit_report(report: BenchmarkReport, out_dir, formats=("csv", "md", "json"), reference: bool = True) -> list[Path]:
    """Write ``report.csv`` plus ``summary.<fmt>`` for each requested format."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "report.csv"]
    _write_rows_csv(report, paths[0])
    for fmt in formats:
        if fmt not in _WRITERS:
            raise ValueError(f"unknown report format {fmt!r}")
        ext = "md" if fmt == "markdown" else fmt
        path = out / f"summary.{ext}"
        _WRITERS[fmt](report, path, reference)
        paths.append(path)
    return paths


def read_report_json(path) -> BenchmarkReport:
    return BenchmarkReport.from_dict(json.loads(Path(path).read_text()))


def overlay_name(problem: FitProblem, method: str) -> str:
    seg = problem.segment
    cell = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in (seg.cell_id or "cell"))
    return f"overlay_{cell}_{seg.cycle_index}_{method}.csv"


def emit_overlay(problem: FitProblem, report: FitReport, out_dir) -> Path:
    """Write ``time_s, v_measured, v_predicted`` for one fit.

    The prediction is regenerated from the report's parameters.
    """
    params = report.best_params
    ocv = make_ocv_curve(problem, report.theta)
    seg = problem.segment
    sim = simulate_terminal_voltage(params, ocv, problem.cell, seg.time, seg.current)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / overlay_name(problem, report.method)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("time_s", "v_measured", "v_predicted"))
        for t, vm, vp in zip(seg.time, seg.voltage, sim.voltage):
            writer.writerow((repr(float(t)), repr(float(vm)), repr(float(vp))))
    return path


def read_overlay(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
