"""Cycler-log ingestion: Battery Archive timeseries CSV to discharge windows."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, TextIO

import numpy as np

from .errors import DataError, NoDischargeError, ParseError, SegmentTooShortError
from .model import CellSpec, coulomb_count

MIN_SEGMENT_SAMPLES = 16

DEFAULT_COLUMNS = {
    "test_time": "Test_Time (s)",
    "cycle_index": "Cycle_Index",
    "current": "Current (A)",
    "voltage": "Voltage (V)",
    "temperature": "Cell_Temperature (C)",
}
REQUIRED_FIELDS = ("test_time", "cycle_index", "current", "voltage")


@dataclass(frozen=True, slots=True)
class RawRecord:
    test_time: float
    cycle_index: int
    current: float
    voltage: float
    cell_temperature: Optional[float] = None


@dataclass(frozen=True, eq=False)
class DischargeSegment:
    """A discharge window with time re-origined to zero."""

    cell_id: str
    cycle_index: int
    time: np.ndarray
    current: np.ndarray
    voltage: np.ndarray
    soc_start: float = 1.0
    capacity: float = 1.0
    source: str = field(default="", compare=False)

    def __post_init__(self):
        for name in ("time", "current", "voltage"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.time)
        if len(self.current) != n or len(self.voltage) != n:
            raise DataError("segment series must have equal lengths")
        if n < MIN_SEGMENT_SAMPLES:
            raise SegmentTooShortError(f"segment has {n} samples, need at least {MIN_SEGMENT_SAMPLES}")
        if not all(np.all(np.isfinite(a)) for a in (self.time, self.current, self.voltage)):
            raise DataError("segment contains non-finite samples")
        if self.time[0] != 0.0:
            raise DataError("segment time must start at 0")
        if np.any(np.diff(self.time) <= 0):
            raise DataError("segment time must be strictly increasing")
        if np.any(self.current < 0):
            raise DataError("segment current must be non-negative (discharge positive)")
        if not 0.0 <= self.soc_start <= 1.0:
            raise DataError(f"soc_start must be in [0, 1], got {self.soc_start}")
        if not self.capacity > 0:
            raise DataError(f"capacity must be positive, got {self.capacity}")

    def __len__(self):
        return len(self.time)

    def __eq__(self, other):
        if not isinstance(other, DischargeSegment):
            return NotImplemented
        return (
            self.cell_id == other.cell_id
            and self.cycle_index == other.cycle_index
            and self.soc_start == other.soc_start
            and self.capacity == other.capacity
            and np.array_equal(self.time, other.time)
            and np.array_equal(self.current, other.current)
            and np.array_equal(self.voltage, other.voltage)
        )

    @property
    def cell(self) -> CellSpec:
        return CellSpec(self.capacity, self.soc_start)


@dataclass(frozen=True)
class WindowPolicy:
    onset_threshold: float = 0.05  # ampere
    window_length: float = 300.0  # seconds


def _to_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _to_int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(text)
    return int(value)


def parse_timeseries(stream: TextIO, column_map: Optional[dict] = None, invert_current: bool = False) -> list[RawRecord]:
    """Read a comma-separated cycler log into records, in file order.

    ``column_map`` maps logical fields (``test_time``, ``cycle_index``,
    ``current``, ``voltage``, ``temperature``) to header names.  Row numbers
    in errors are 1-based file lines, the header being line 1.
    """
    columns = dict(DEFAULT_COLUMNS)
    columns.update(column_map or {})
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file") from None
    header = [h.strip() for h in header]
    if not any(header) or len(set(header)) != len(header):
        raise ParseError(f"malformed header: {header!r}")
    index = {name: pos for pos, name in enumerate(header)}
    missing = [columns[f] for f in REQUIRED_FIELDS if columns[f] not in index]
    if missing:
        raise ParseError(f"missing required column(s): {', '.join(missing)}")
    i_time, i_cycle, i_cur, i_volt = (index[columns[f]] for f in REQUIRED_FIELDS)
    i_temp = index.get(columns["temperature"])

    records = []
    bad_rows = []
    sign = -1.0 if invert_current else 1.0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            t = _to_float(row[i_time])
            cycle = _to_int(row[i_cycle])
            current = _to_float(row[i_cur]) * sign
            voltage = _to_float(row[i_volt])
            if t < 0 or voltage <= 0:
                raise ValueError
        except (ValueError, IndexError):
            bad_rows.append(lineno)
            continue
        temperature = None
        if i_temp is not None and i_temp < len(row) and row[i_temp].strip():
            try:
                temperature = _to_float(row[i_temp])
            except ValueError:
                temperature = None
        records.append(RawRecord(t, cycle, current, voltage, temperature))
    if bad_rows:
        raise ParseError("unparseable required field", bad_rows)
    return records


def segment_cycles(records: list[RawRecord]) -> list[tuple[int, range]]:
    """Split records into maximal runs of equal ``cycle_index``."""
    runs = []
    start = 0
    for k in range(1, len(records) + 1):
        if k == len(records) or records[k].cycle_index != records[start].cycle_index:
            runs.append((records[start].cycle_index, range(start, k)))
            start = k
    return runs


def extract_discharge_window(
    cycle: list[RawRecord],
    policy: WindowPolicy = WindowPolicy(),
    cell: CellSpec = CellSpec(capacity=1.0),
    cell_id: str = "",
) -> DischargeSegment:
    """Cut the early part of a cycle's discharge into a segment.

    The window opens at the first sample whose current reaches the onset
    threshold and closes ``window_length`` seconds later, at the cycle end,
    or just before current turns negative, whichever comes first.
    ``soc_start`` is coulomb-counted from the cycle start at
    ``cell.soc_init`` over the samples preceding the onset.
    """
    onset = next((k for k, r in enumerate(cycle) if r.current >= policy.onset_threshold), None)
    if onset is None:
        raise NoDischargeError(
            f"no discharge found: no sample reaches the onset threshold of {policy.onset_threshold} A"
        )
    soc = cell.soc_init
    for k in range(1, onset):
        soc = coulomb_count(soc, cycle[k].current, cycle[k].test_time - cycle[k - 1].test_time, cell.capacity)

    t0 = cycle[onset].test_time
    end = onset
    while (
        end + 1 < len(cycle)
        and cycle[end + 1].test_time - t0 <= policy.window_length
        and cycle[end + 1].current >= 0
    ):
        end += 1
    window = cycle[onset : end + 1]
    if len(window) < MIN_SEGMENT_SAMPLES:
        raise SegmentTooShortError(
            f"discharge window has {len(window)} samples, need at least {MIN_SEGMENT_SAMPLES}"
        )
    return DischargeSegment(
        cell_id=cell_id,
        cycle_index=cycle[onset].cycle_index,
        time=np.array([r.test_time - t0 for r in window]),
        current=np.array([r.current for r in window]),
        voltage=np.array([r.voltage for r in window]),
        soc_start=soc,
        capacity=cell.capacity,
    )


def resample_series(time, dt: float, *series):
    """Interpolate ``series`` onto the grid 0, dt, 2dt, ... up to ``time[-1]``.

    Returns ``(grid, [resampled, ...])``.  The last grid point is snapped
    onto the final timestamp when it lands within rounding of it.
    """
    t = np.asarray(time, dtype=float)
    if not (math.isfinite(dt) and dt > 0):
        raise DataError(f"dt must be positive, got {dt!r}")
    span = float(t[-1] - t[0])
    if dt > span:
        raise DataError(f"dt={dt} exceeds the segment span of {span} s")
    n = int(math.floor(span / dt * (1 + 1e-12))) + 1
    grid = t[0] + np.arange(n) * dt
    if abs(grid[-1] - t[-1]) <= 1e-9 * span:
        grid[-1] = t[-1]
    return grid, [np.interp(grid, t, np.asarray(y, dtype=float)) for y in series]


def resample_uniform(segment: DischargeSegment, dt: float) -> DischargeSegment:
    """Linearly interpolate a segment onto a uniform grid starting at 0."""
    grid, (current, voltage) = resample_series(segment.time, dt, segment.current, segment.voltage)
    return replace(segment, time=grid, current=current, voltage=voltage)


def iter_discharge_segments(
    records: list[RawRecord],
    policy: WindowPolicy = WindowPolicy(),
    cell: CellSpec = CellSpec(capacity=1.0),
    cell_id: str = "",
) -> Iterable[DischargeSegment]:
    """Yield one segment per cycle run that contains a usable discharge."""
    for _, rng in segment_cycles(records):
        try:
            yield extract_discharge_window(records[rng.start : rng.stop], policy, cell, cell_id)
        except (NoDischargeError, SegmentTooShortError):
            continue
