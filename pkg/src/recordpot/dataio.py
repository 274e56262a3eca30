"""Ingestion of raw race results and construction of exceedance data.

Input CSV schema: header row with columns ``discipline,athlete,year,seconds``
and an optional ``event`` column; UTF-8, decimal point. Within-year event
dates carry no information for the yearly model and are not ingested.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, SchemaError, SupportError, TieError
from .model import ExceedanceSet

REQUIRED_COLUMNS = ("discipline", "athlete", "year", "seconds")


@dataclass(frozen=True)
class PerformanceRecord:
    """One athlete's best time in a discipline-year (raw positive seconds)."""

    discipline: str
    athlete: str
    year: int
    seconds: float
    event: Optional[str] = None


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str
    raw: str


@dataclass
class LoadResult:
    records: list[PerformanceRecord]
    rejects: list[RejectedRow] = field(default_factory=list)


@dataclass(frozen=True)
class MrlCurve:
    """Mean residual life diagnostic over a grid of candidate thresholds.

    All quantities live on the performance scale; ``mean_excess`` is NaN
    where fewer than two observations exceed the grid point.
    """

    grid: np.ndarray
    mean_excess: np.ndarray
    ci_half_width: np.ndarray
    counts: np.ndarray


def load_results(source, schema: Optional[dict] = None) -> LoadResult:
    """Parse a results CSV into PerformanceRecords.

    `source` is a text stream (or bytes stream, decoded as UTF-8). `schema`
    optionally maps the logical column names to the file's actual headers.
    Malformed rows are collected into the rejects list, never silently
    dropped; structural problems with the header raise SchemaError.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(source.decode("utf-8"))
    elif hasattr(source, "read") and isinstance(source.read(0), bytes):
        source = io.TextIOWrapper(source, encoding="utf-8")

    schema = schema or {}
    colmap = {logical: schema.get(logical, logical) for logical in REQUIRED_COLUMNS}
    colmap["event"] = schema.get("event", "event")

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header row") from None
    header = [h.strip() for h in header]
    dupes = {h for h in header if header.count(h) > 1}
    if dupes:
        raise SchemaError(f"duplicate header column(s): {sorted(dupes)}")
    missing = [colmap[c] for c in REQUIRED_COLUMNS if colmap[c] not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {missing}")
    idx = {logical: header.index(actual) for logical, actual in colmap.items()
           if actual in header}

    records: list[PerformanceRecord] = []
    rejects: list[RejectedRow] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        raw = ",".join(row)
        if len(row) < max(idx[c] for c in REQUIRED_COLUMNS) + 1:
            rejects.append(RejectedRow(line_no, "too few fields", raw))
            continue
        try:
            year = int(row[idx["year"]].strip())
        except ValueError:
            rejects.append(RejectedRow(line_no, f"unparseable year {row[idx['year']]!r}", raw))
            continue
        try:
            seconds = float(row[idx["seconds"]].strip())
        except ValueError:
            rejects.append(
                RejectedRow(line_no, f"unparseable seconds {row[idx['seconds']]!r}", raw)
            )
            continue
        if seconds <= 0:
            rejects.append(RejectedRow(line_no, f"non-positive seconds {seconds}", raw))
            continue
        event = None
        if "event" in idx and len(row) > idx["event"]:
            event = row[idx["event"]].strip() or None
        records.append(
            PerformanceRecord(
                discipline=row[idx["discipline"]].strip(),
                athlete=row[idx["athlete"]].strip(),
                year=year,
                seconds=seconds,
                event=event,
            )
        )
    return LoadResult(records=records, rejects=rejects)


def dedup_best(records: Iterable[PerformanceRecord]) -> list[PerformanceRecord]:
    """Keep each athlete's best (minimum seconds) per discipline and year.

    Output is stably ordered by (discipline, year, seconds ascending).
    """
    best: dict[tuple[str, str, int], PerformanceRecord] = {}
    for r in records:
        key = (r.discipline, r.athlete, r.year)
        cur = best.get(key)
        if cur is None or r.seconds < cur.seconds:
            best[key] = r
    return sorted(best.values(), key=lambda r: (r.discipline, r.year, r.seconds, r.athlete))


def select_threshold_by_count(
    records: Iterable[PerformanceRecord],
    discipline: str,
    target: int,
    horizon: Optional[tuple[int, int]] = None,
) -> tuple[float, ExceedanceSet]:
    """Choose u so that exactly `target` performances strictly exceed it.

    The threshold is placed midway between the target-th and (target+1)-th
    fastest times (on the performance scale). An exact tie spanning that
    boundary makes the exact count unachievable and raises TieError.
    """
    recs = [r for r in records if r.discipline == discipline]
    if horizon is not None:
        recs = [r for r in recs if horizon[0] <= r.year <= horizon[1]]
    if not recs:
        raise InsufficientDataError(f"no records for discipline {discipline!r}")
    if horizon is None:
        horizon = (min(r.year for r in recs), max(r.year for r in recs))
    if len(recs) < target + 1:
        raise InsufficientDataError(
            f"need at least {target + 1} records for discipline {discipline!r}, "
            f"have {len(recs)}"
        )
    # performance scale: negate, sort descending (fastest first)
    xs = np.sort(-np.array([r.seconds for r in recs]))[::-1]
    if xs[target - 1] == xs[target]:
        raise TieError(-xs[target])
    u = 0.5 * (xs[target - 1] + xs[target])
    obs = tuple(
        sorted(
            ((r.year, -r.seconds) for r in recs if -r.seconds > u),
            key=lambda t: (t[0], -t[1]),
        )
    )
    assert len(obs) == target
    return float(u), ExceedanceSet(discipline=discipline, observations=obs, horizon=horizon)


def mean_residual_life(values: Sequence[float], grid: Sequence[float]) -> MrlCurve:
    """Mean excess over each grid threshold with a normal-approximation CI.

    `values` and `grid` are on the performance scale; the grid must be
    ascending. Where the GPD holds the curve is close to linear with slope
    xi / (1 - xi).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise SupportError("empty threshold grid")
    if np.any(np.diff(grid) < 0):
        raise SupportError("threshold grid must be ascending")
    values = np.asarray(values, dtype=float)
    mean_excess = np.full(grid.shape, np.nan)
    ci_half_width = np.full(grid.shape, np.nan)
    counts = np.zeros(grid.shape, dtype=int)
    for i, v in enumerate(grid):
        exc = values[values > v] - v
        counts[i] = exc.size
        if exc.size >= 2:
            mean_excess[i] = exc.mean()
            ci_half_width[i] = 1.96 * exc.std(ddof=1) / np.sqrt(exc.size)
    return MrlCurve(grid=grid, mean_excess=mean_excess, ci_half_width=ci_half_width,
                    counts=counts)


# ---------------------------------------------------------------------------
# JSON round-trip for exceedance sets

def exceedance_set_to_dict(es: ExceedanceSet, threshold: Optional[float] = None) -> dict:
    out = {
        "discipline": es.discipline,
        "horizon": list(es.horizon),
        "observations": [[int(y), float(x)] for y, x in es.observations],
    }
    if threshold is not None:
        out["threshold"] = float(threshold)
    return out


def exceedance_set_from_dict(d: dict) -> ExceedanceSet:
    return ExceedanceSet(
        discipline=d["discipline"],
        observations=tuple((int(y), float(x)) for y, x in d["observations"]),
        horizon=tuple(d["horizon"]),
    )


def write_exceedance_sets(path_or_stream, sets: Iterable[ExceedanceSet],
                          thresholds: Optional[dict] = None, extra: Optional[dict] = None):
    payload = {
        "exceedance_sets": [
            exceedance_set_to_dict(es, (thresholds or {}).get(es.discipline))
            for es in sets
        ],
    }
    if extra:
        payload.update(extra)
    if hasattr(path_or_stream, "write"):
        json.dump(payload, path_or_stream, indent=2)
    else:
        with open(path_or_stream, "w") as fh:
            json.dump(payload, fh, indent=2)


def read_exceedance_sets(path_or_stream) -> tuple[list[ExceedanceSet], dict[str, float]]:
    if hasattr(path_or_stream, "read"):
        payload = json.load(path_or_stream)
    else:
        with open(path_or_stream) as fh:
            payload = json.load(fh)
    sets = [exceedance_set_from_dict(d) for d in payload["exceedance_sets"]]
    thresholds = {
        d["discipline"]: float(d["threshold"])
        for d in payload["exceedance_sets"]
        if "threshold" in d
    }
    return sets, thresholds
