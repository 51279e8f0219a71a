"""Run configuration: TOML files, the two Berlin presets and validation.

A config names one network source, one demand source and the service
parameters. Speeds are given in km/h, times in seconds and lengths in meters.
Relative paths resolve against the config file's directory.

Example::

    seed = 7
    placement = "uniform"            # or "demand"

    [network]
    grid = { rows = 20, cols = 20, spacing = 200.0 }
    # stops = "stops.csv"
    # edges = "edges.csv"

    [demand]
    synthetic = { rate_per_hour = 2400, window = [0, 3600], od_model = "uniform" }
    # trips = "trips.csv"
    # window = [25200, 28800]
    # baseline_mode = "recorded"

    [service]
    max_wait = 360
    max_delay = 420
    speed_kmh = 18.3
    seat_capacity = 6
    fleet_size = 150
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .demand import Hotspot
from .engine import ServiceParams
from .errors import ConfigError
from .metrics import WalkMode
from .network import kmh

PRESETS: dict[str, dict[str, Any]] = {
    # whole-city parameters
    "berlin": {
        "service": {"max_wait": 360.0, "max_delay": 460.0, "speed_kmh": 25.3, "seat_capacity": 6},
        "walk": {"mode": "fixed", "per_leg": 120.0},
    },
    # city-center parameters
    "berlin-center": {
        "service": {"max_wait": 360.0, "max_delay": 420.0, "speed_kmh": 18.3, "seat_capacity": 6},
        "walk": {"mode": "fixed", "per_leg": 60.0},
    },
}

_TOP_KEYS = {"seed", "placement", "network", "demand", "service", "walk", "search", "output", "cost"}
_TABLE_KEYS = {
    "network": {"grid", "stops", "edges"},
    "demand": {"trips", "synthetic", "requests", "window", "baseline_mode"},
    "walk": {"mode", "speed_kmh", "per_leg"},
    "search": {"lower", "upper", "resolution"},
    "output": {"occupancy_vehicles"},
}
_SERVICE_KEYS = {"max_wait", "max_delay", "speed_kmh", "seat_capacity", "dwell_time", "fleet_size",
                 "delay_anchor"}


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    spacing: float


@dataclass(frozen=True)
class SyntheticSpec:
    rate_per_hour: float
    window: tuple[float, float]
    od_model: Any = "uniform"


@dataclass(frozen=True)
class RunConfig:
    params: ServiceParams
    grid: GridSpec | None = None
    stops_file: Path | None = None
    edges_file: Path | None = None
    trips_file: Path | None = None
    requests_file: Path | None = None
    synthetic: SyntheticSpec | None = None
    window: tuple[float, float] | None = None
    baseline_mode: str = "recorded"
    placement: str = "uniform"
    walk_mode: WalkMode = WalkMode()
    seed: int = 0
    search_bounds: tuple[int, int] = (1, 10_000)
    search_resolution: int = 1
    occupancy_vehicles: Any = "busiest"
    cost: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)  # merged, path-resolved input; echoed into outputs

    def echo(self) -> dict:
        return copy.deepcopy(self.raw)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _table(raw: dict, key: str) -> dict:
    value = raw.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{key}] must be a table")
    unknown = set(value) - _TABLE_KEYS.get(key, set(value))
    if unknown:
        raise ConfigError(f"unknown {key} field(s): {', '.join(sorted(unknown))}")
    return value


def _number(section: dict, key: str, where: str, kind=float, required=True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"missing required field {where}.{key}")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    return kind(value)


def _window(value, where: str) -> tuple[float, float]:
    if not (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)):
        raise ConfigError(f"{where} must be a [start, end] pair of seconds")
    t0, t1 = float(value[0]), float(value[1])
    if not t0 < t1:
        raise ConfigError(f"{where} is empty: [{t0}, {t1})")
    return t0, t1


def _existing(section: dict, key: str, where: str, base: Path) -> Path:
    value = section[key]
    if not isinstance(value, str):
        raise ConfigError(f"{where}.{key} must be a path string")
    path = Path(value)
    if not path.is_absolute():
        path = (base / path).resolve()
    if not path.is_file():
        raise ConfigError(f"{where}.{key}: file not found: {path}")
    section[key] = str(path)
    return path


def load_config(path=None, *, preset: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Read, merge (preset < file < overrides) and validate a run configuration."""
    raw: dict = {}
    base = Path.cwd()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        raw = copy.deepcopy(PRESETS[preset])
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, "rb") as fh:
                raw = _merge(raw, tomllib.load(fh))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        base = path.resolve().parent
    if overrides:
        raw = _merge(raw, overrides)
    return config_from_dict(raw, base)


def config_from_dict(raw: dict, base: Path | str = ".") -> RunConfig:
    raw = copy.deepcopy(raw)
    base = Path(base)
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {', '.join(sorted(unknown))}")

    net = _table(raw, "network")
    grid = None
    has_files = "stops" in net or "edges" in net
    if ("grid" in net) == has_files:
        raise ConfigError("network: give exactly one of 'grid' or 'stops' + 'edges'")
    stops_file = edges_file = None
    if "grid" in net:
        g = net["grid"]
        if not isinstance(g, dict):
            raise ConfigError("network.grid must be a table {rows, cols, spacing}")
        grid = GridSpec(_number(g, "rows", "network.grid", int), _number(g, "cols", "network.grid", int),
                        _number(g, "spacing", "network.grid"))
        if grid.rows < 1 or grid.cols < 1 or not grid.spacing > 0:
            raise ConfigError("network.grid needs rows, cols >= 1 and positive spacing")
    else:
        for key in ("stops", "edges"):
            if key not in net:
                raise ConfigError(f"missing required field network.{key}")
        stops_file = _existing(net, "stops", "network", base)
        edges_file = _existing(net, "edges", "network", base)

    dem = _table(raw, "demand")
    sources = [k for k in ("trips", "synthetic", "requests") if k in dem]
    if len(sources) != 1:
        raise ConfigError("demand: give exactly one of 'trips', 'synthetic' or 'requests'")
    trips_file = requests_file = synthetic = window = None
    baseline_mode = dem.get("baseline_mode", "recorded" if "trips" in dem else "shortest_path")
    if baseline_mode not in ("recorded", "shortest_path"):
        raise ConfigError(f"demand.baseline_mode must be 'recorded' or 'shortest_path', got {baseline_mode!r}")
    if "trips" in dem:
        trips_file = _existing(dem, "trips", "demand", base)
        if "window" not in dem:
            raise ConfigError("missing required field demand.window")
        window = _window(dem["window"], "demand.window")
    elif "requests" in dem:
        requests_file = _existing(dem, "requests", "demand", base)
        if "window" in dem:
            window = _window(dem["window"], "demand.window")
    else:
        s = dem["synthetic"]
        if not isinstance(s, dict):
            raise ConfigError("demand.synthetic must be a table")
        rate = _number(s, "rate_per_hour", "demand.synthetic")
        if not rate > 0:
            raise ConfigError("demand.synthetic.rate_per_hour must be positive")
        od = s.get("od_model", "uniform")
        if isinstance(od, dict):
            if od.get("kind") != "hotspot":
                raise ConfigError("demand.synthetic.od_model table must have kind = 'hotspot'")
            centers = od.get("centers")
            if not isinstance(centers, list) or not centers:
                raise ConfigError("demand.synthetic.od_model.centers must be a nonempty list of stop ids")
            od = Hotspot(tuple(int(c) for c in centers),
                         _number(od, "concentration", "demand.synthetic.od_model"))
        elif od != "uniform":
            raise ConfigError(f"demand.synthetic.od_model must be 'uniform' or a hotspot table, got {od!r}")
        synthetic = SyntheticSpec(rate, _window(s.get("window"), "demand.synthetic.window"), od)
        window = synthetic.window

    svc = _table(raw, "service")
    unknown = set(svc) - _SERVICE_KEYS
    if unknown:
        raise ConfigError(f"unknown service field(s): {', '.join(sorted(unknown))}")
    try:
        params = ServiceParams(
            max_wait=_number(svc, "max_wait", "service"),
            max_delay=_number(svc, "max_delay", "service"),
            vehicle_speed=kmh(_number(svc, "speed_kmh", "service")),
            seat_capacity=_number(svc, "seat_capacity", "service", int, False, 6),
            dwell_time=_number(svc, "dwell_time", "service", float, False, 0.0),
            fleet_size=_number(svc, "fleet_size", "service", int, False, 1),
            delay_anchor=svc.get("delay_anchor", "pickup"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"service: {exc}") from exc

    w = _table(raw, "walk")
    try:
        walk = WalkMode(kind=w.get("mode", "speed"),
                        speed=kmh(_number(w, "speed_kmh", "walk", float, False, 5.0)),
                        per_leg=_number(w, "per_leg", "walk", float, False, 60.0))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"walk: {exc}") from exc

    placement = raw.get("placement", "uniform")
    if placement not in ("uniform", "demand"):
        raise ConfigError(f"placement must be 'uniform' or 'demand', got {placement!r}")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")

    search = _table(raw, "search")
    lo = _number(search, "lower", "search", int, False, 1)
    hi = _number(search, "upper", "search", int, False, 10_000)
    res = _number(search, "resolution", "search", int, False, 1)
    if not 1 <= lo <= hi or res < 1:
        raise ConfigError("search needs 1 <= lower <= upper and resolution >= 1")

    out = _table(raw, "output")
    occ = out.get("occupancy_vehicles", "busiest")
    if not (occ == "busiest" or (isinstance(occ, list) and all(isinstance(v, int) for v in occ))):
        raise ConfigError("output.occupancy_vehicles must be 'busiest' or a list of vehicle ids")

    cost = _table(raw, "cost")
    return RunConfig(params=params, grid=grid, stops_file=stops_file, edges_file=edges_file,
                     trips_file=trips_file, requests_file=requests_file, synthetic=synthetic,
                     window=window, baseline_mode=baseline_mode, placement=placement, walk_mode=walk,
                     seed=seed, search_bounds=(lo, hi), search_resolution=res, occupancy_vehicles=occ,
                     cost=dict(cost), raw=raw)
