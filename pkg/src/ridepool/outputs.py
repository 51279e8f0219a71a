"""CSV and JSON writers for run artifacts.

Floats are written with ``repr`` so they round-trip exactly and two identical
runs produce identical bytes. Host and wall-clock details go to a separate
metadata file, never into data artifacts.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import subprocess
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .core import BACKEND
from .demand import RequestSet
from .engine import SimulationResult
from .metrics import MISMATCH_CATEGORIES, SWEEP_COLUMNS, MismatchReport, OccupancySeries, SweepPoint
from .network import StopNetwork

OUTCOME_COLUMNS = ("request_id", "origin_stop", "dest_stop", "request_time", "served", "vehicle_id",
                   "pickup_time", "dropoff_time", "wait_time", "ride_time", "direct_time",
                   "pickup_deadline", "dropoff_deadline", "added_distance")
SEGMENT_COLUMNS = ("vehicle_id", "from_stop", "to_stop", "depart", "arrive", "distance", "occupancy")
VEHICLE_COLUMNS = ("vehicle_id", "initial_stop", "final_stop", "ever_used", "odometer_empty",
                   "odometer_occupied", "odometer_total")
OCCUPANCY_COLUMNS = ("vehicle_id", "time", "onboard")
MISMATCH_COLUMNS = ("stop_id", "x", "y", "category")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def version() -> str:
    """``git describe`` of the source checkout when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True, text=True,
                             timeout=5, check=True)
        desc = out.stdout.strip()
        if desc:
            return f"{__version__}+g{desc}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def metadata(command: str, argv) -> dict:
    return {
        "command": command,
        "argv": list(argv),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "host": platform.node(),
        "platform": platform.platform(),
        "python": sys.version.split()[0],
        "backend": BACKEND,
    }


def outcome_rows(result: SimulationResult, requests: RequestSet):
    by_id = {r.request_id: r for r in requests}
    for o in result.outcomes:
        r = by_id[o.request_id]
        if o.served:
            yield (r.request_id, r.origin_stop, r.dest_stop, r.request_time, True, o.vehicle_id,
                   o.pickup_time, o.dropoff_time, o.pickup_time - r.request_time, o.dropoff_time - o.pickup_time,
                   r.direct_time, o.pickup_deadline, o.dropoff_deadline, o.added_distance)
        else:
            yield (r.request_id, r.origin_stop, r.dest_stop, r.request_time, False, None, None, None, None,
                   None, r.direct_time, None, None, None)


def write_run(out: Path, result: SimulationResult, requests: RequestSet, occupancy: list[OccupancySeries]) -> None:
    write_csv(out / "outcomes.csv", OUTCOME_COLUMNS, outcome_rows(result, requests))
    write_csv(out / "segments.csv", SEGMENT_COLUMNS,
              ((s.vehicle_id, s.from_stop, s.to_stop, s.depart, s.arrive, s.distance, s.occupancy)
               for segs in result.segments for s in segs))
    write_csv(out / "vehicles.csv", VEHICLE_COLUMNS,
              ((v, result.initial_stops[v], result.final_stops[v], result.ever_used[v],
                result.odometer_empty[v], result.odometer_occupied[v], result.odometer_total[v])
               for v in range(result.n_vehicles)))
    write_csv(out / "occupancy.csv", OCCUPANCY_COLUMNS,
              ((s.vehicle_id, t, n) for s in occupancy for t, n in s.steps))


def write_sweep(path, points: list[SweepPoint]) -> None:
    write_csv(path, SWEEP_COLUMNS, (p.row() for p in points))


def write_mismatch(out: Path, report: MismatchReport, net: StopNetwork) -> list[Path]:
    """The combined report plus one file per category (header-only when empty)."""
    rows = report.rows(net)
    paths = [out / "mismatch.csv"]
    write_csv(paths[0], MISMATCH_COLUMNS, rows)
    for cat in MISMATCH_CATEGORIES:
        p = out / f"mismatch_{cat}.csv"
        write_csv(p, MISMATCH_COLUMNS, (r for r in rows if r[3] == cat))
        paths.append(p)
    return paths
