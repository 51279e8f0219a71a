"""Trip ingestion, synthetic Poisson demand and hourly demand profiles."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .network import Coord, DistanceOracle, StopNetwork, nearest_stops

EARTH_RADIUS_M = 6_371_000.0
SECONDS_PER_DAY = 86_400

# Car trips per day inside Berlin and the 7-8 am share of them.
BERLIN_DAILY_CAR_TRIPS = 2_140_000
BERLIN_PEAK_HOUR = 7
BERLIN_PEAK_SHARE = 0.088

TRIP_COLUMNS = ("trip_id", "depart_time_s", "origin_x", "origin_y", "dest_x", "dest_y",
                "distance_m", "duration_s")
REQUEST_COLUMNS = ("request_id", "origin_stop", "dest_stop", "request_time", "direct_distance",
                   "direct_time", "baseline_distance", "baseline_time", "walk_in", "walk_out")


class TripRecord(NamedTuple):
    trip_id: int
    depart_time: float
    origin: Coord
    destination: Coord
    recorded_distance: float
    recorded_duration: float


@dataclass(frozen=True)
class Request:
    request_id: int
    origin_stop: int
    dest_stop: int
    request_time: float
    direct_distance: float
    direct_time: float
    baseline_distance: float
    baseline_time: float
    walk_in: float = 0.0
    walk_out: float = 0.0


@dataclass(frozen=True)
class RequestSet:
    requests: tuple[Request, ...]
    provenance: str  # "ingested" | "synthetic"
    baseline_mode: str  # "recorded" | "shortest_path"
    window: tuple[float, float]

    def __post_init__(self):
        times = [r.request_time for r in self.requests]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValidationError("requests must be sorted by request_time")
        ids = [r.request_id for r in self.requests]
        if len(set(ids)) != len(ids):
            raise ValidationError("request ids must be unique")

    def __len__(self):
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)

    def __getitem__(self, k):
        return self.requests[k]


@dataclass
class IngestStats:
    n_records: int = 0
    n_in_window: int = 0
    n_kept: int = 0
    n_same_stop: int = 0
    n_zero_baseline: int = 0
    mean_walk: float = 0.0
    mean_walk_in: float = 0.0
    mean_walk_out: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def project_lonlat(lon, lat, lon0: float, lat0: float):
    """Local equirectangular projection to planar meters around ``(lon0, lat0)``."""
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    x = EARTH_RADIUS_M * np.radians(lon - lon0) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_M * np.radians(lat - lat0)
    return x, y


def read_trips(path) -> list[TripRecord]:
    path = Path(path)
    out = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in TRIP_COLUMNS):
            raise ParseError(path, 1, f"expected header {','.join(TRIP_COLUMNS)}, got {reader.fieldnames}")
        for row in reader:
            line = reader.line_num
            try:
                rec = TripRecord(
                    int(row["trip_id"]),
                    float(row["depart_time_s"]),
                    Coord(float(row["origin_x"]), float(row["origin_y"])),
                    Coord(float(row["dest_x"]), float(row["dest_y"])),
                    float(row["distance_m"]),
                    float(row["duration_s"]),
                )
            except (TypeError, ValueError) as exc:
                raise ParseError(path, line, f"cannot parse trip row {row!r}") from exc
            if not all(math.isfinite(v) for v in (*rec.origin, *rec.destination)):
                raise ParseError(path, line, "non-finite coordinate")
            if not 0 <= rec.depart_time < SECONDS_PER_DAY:
                raise ParseError(path, line, f"depart_time_s {rec.depart_time} outside [0, 86400)")
            if not rec.recorded_distance >= 0:
                raise ParseError(path, line, f"negative distance_m {rec.recorded_distance}")
            if not rec.recorded_duration > 0:
                raise ParseError(path, line, f"duration_s must be positive, got {rec.recorded_duration}")
            if rec.trip_id in seen:
                raise ParseError(path, line, f"duplicate trip_id {rec.trip_id}")
            seen.add(rec.trip_id)
            out.append(rec)
    return out


def ingest_trips(path, net: StopNetwork, window, baseline_mode: str = "recorded", *,
                 speed: float, oracle: DistanceOracle | None = None) -> tuple[RequestSet, IngestStats]:
    """Map recorded car trips in the half-open ``window`` onto stop-to-stop requests.

    Both trip ends snap to their nearest stop. Trips whose ends snap to the
    same stop are dropped (counted in ``n_same_stop``), as are trips whose
    recorded distance is zero in ``recorded`` baseline mode.
    """
    if baseline_mode not in ("recorded", "shortest_path"):
        raise ValueError(f"unknown baseline_mode {baseline_mode!r}")
    t0, t1 = float(window[0]), float(window[1])
    if not t0 < t1:
        raise ValueError(f"empty window [{t0}, {t1})")
    if not speed > 0:
        raise ValueError("speed must be positive")
    oracle = oracle or DistanceOracle(net, precompute=False)
    trips = read_trips(path)
    stats = IngestStats(n_records=len(trips))
    trips = [t for t in trips if t0 <= t.depart_time < t1]
    stats.n_in_window = len(trips)
    if not trips:
        return RequestSet((), "ingested", baseline_mode, (t0, t1)), stats

    o_ids, o_walk = nearest_stops(net, np.array([t.origin for t in trips]))
    d_ids, d_walk = nearest_stops(net, np.array([t.destination for t in trips]))
    requests = []
    for k, trip in enumerate(trips):
        o, d = int(o_ids[k]), int(d_ids[k])
        if o == d:
            stats.n_same_stop += 1
            continue
        direct = oracle.distance(o, d)
        direct_time = direct / speed
        if baseline_mode == "recorded":
            if trip.recorded_distance <= 0:
                stats.n_zero_baseline += 1
                continue
            base_d, base_t = trip.recorded_distance, trip.recorded_duration
        else:
            base_d, base_t = direct, direct_time
        requests.append(Request(trip.trip_id, o, d, trip.depart_time, direct, direct_time,
                                base_d, base_t, float(o_walk[k]), float(d_walk[k])))
    requests.sort(key=lambda r: r.request_time)  # stable: file order on equal times
    stats.n_kept = len(requests)
    if requests:
        walk_in = [r.walk_in for r in requests]
        walk_out = [r.walk_out for r in requests]
        stats.mean_walk_in = math.fsum(walk_in) / len(requests)
        stats.mean_walk_out = math.fsum(walk_out) / len(requests)
        stats.mean_walk = math.fsum(walk_in + walk_out) / (2 * len(requests))
    return RequestSet(tuple(requests), "ingested", baseline_mode, (t0, t1)), stats


@dataclass(frozen=True)
class Hotspot:
    """Origins and destinations concentrated around ``centers`` (stop ids).

    Stop weights are ``sum(exp(-r / concentration))`` over the centers, ``r``
    being the Euclidean distance in meters.
    """

    centers: tuple[int, ...]
    concentration: float


@dataclass(frozen=True)
class WeightedOD:
    """Independent origin and destination draws from per-stop weights."""

    origin_weights: Sequence[float]
    dest_weights: Sequence[float] | None = None


def _od_weights(net: StopNetwork, od_model):
    n = net.n_stops
    if od_model == "uniform":
        w = np.ones(n)
        return w, w
    if isinstance(od_model, Hotspot):
        if not od_model.centers:
            raise ValidationError("hotspot model needs at least one center")
        bad = [c for c in od_model.centers if not 0 <= c < n]
        if bad:
            raise ValidationError(f"hotspot centers off-network: {bad}")
        if not od_model.concentration > 0:
            raise ValidationError("hotspot concentration must be positive")
        pos = net.positions
        w = np.zeros(n)
        for c in od_model.centers:
            w += np.exp(-np.hypot(*(pos - pos[c]).T) / od_model.concentration)
        return w, w
    if isinstance(od_model, WeightedOD):
        ow = np.asarray(od_model.origin_weights, dtype=np.float64)
        dw = ow if od_model.dest_weights is None else np.asarray(od_model.dest_weights, dtype=np.float64)
        for name, w in (("origin", ow), ("destination", dw)):
            if w.shape != (n,) or np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
                raise ValidationError(f"{name} weights must be {n} non-negative finite values with positive sum")
        return ow, dw
    raise ValidationError(f"unknown od_model {od_model!r}")


def synth_requests(net: StopNetwork, rate: float, window, od_model="uniform", seed: int = 0, *,
                   speed: float, oracle: DistanceOracle | None = None) -> RequestSet:
    """Poisson arrivals at ``rate`` per second over ``window`` with random OD stops.

    Each request draws its inter-arrival gap, origin and destination in turn
    from one generator, so a longer window extends (never reshuffles) the
    requests of a shorter one with the same seed.
    """
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    t0, t1 = float(window[0]), float(window[1])
    if not t0 < t1:
        raise ValueError(f"empty window [{t0}, {t1})")
    ow, dw = _od_weights(net, od_model)
    o_support, d_support = np.flatnonzero(ow > 0), np.flatnonzero(dw > 0)
    if len(o_support) == 1 and len(d_support) == 1 and o_support[0] == d_support[0]:
        raise ValidationError("od_model admits only trips with origin == destination")
    o_cdf = np.cumsum(ow) / ow.sum()
    d_cdf = np.cumsum(dw) / dw.sum()
    oracle = oracle or DistanceOracle(net, precompute=False)
    rng = np.random.default_rng(seed)
    scale = 1.0 / rate
    out = []
    t = t0
    while True:
        t += rng.exponential(scale)
        if t >= t1:
            break
        o = _draw(o_cdf, rng)
        d = _draw(d_cdf, rng)
        while d == o:
            d = _draw(d_cdf, rng)
        direct = oracle.distance(o, d)
        out.append(Request(len(out), o, d, t, direct, direct / speed, direct, direct / speed))
    return RequestSet(tuple(out), "synthetic", "shortest_path", (t0, t1))


def _draw(cdf, rng) -> int:
    k = int(np.searchsorted(cdf, rng.random(), side="right"))
    return min(k, len(cdf) - 1)


def window_share(profile: Sequence[float], hour: int) -> float:
    """Fraction of daily trips falling in ``hour`` according to a 24-bin profile."""
    profile = list(profile)
    if len(profile) != 24 or any(p < 0 for p in profile):
        raise ValueError("profile must have 24 non-negative entries")
    if abs(math.fsum(profile) - 1.0) > 1e-9:
        raise ValueError(f"profile sums to {math.fsum(profile)}, expected 1")
    if not 0 <= hour < 24:
        raise ValueError(f"hour must be in [0, 24), got {hour}")
    return profile[hour]


def berlin_profile() -> list[float]:
    """Hourly car-trip shares with the published 7-8 am peak.

    Only the peak hour is a measured value; the remaining mass is spread
    evenly over the other 23 hours.
    """
    rest = (1.0 - BERLIN_PEAK_SHARE) / 23
    return [BERLIN_PEAK_SHARE if h == BERLIN_PEAK_HOUR else rest for h in range(24)]


def write_requests(requests: RequestSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REQUEST_COLUMNS)
        for r in requests:
            w.writerow([r.request_id, r.origin_stop, r.dest_stop, repr(r.request_time),
                        repr(r.direct_distance), repr(r.direct_time), repr(r.baseline_distance),
                        repr(r.baseline_time), repr(r.walk_in), repr(r.walk_out)])


def read_requests(path, provenance="ingested", baseline_mode="recorded", window=None) -> RequestSet:
    path = Path(path)
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in REQUEST_COLUMNS):
            raise ParseError(path, 1, f"expected header {','.join(REQUEST_COLUMNS)}")
        for row in reader:
            try:
                out.append(Request(int(row["request_id"]), int(row["origin_stop"]), int(row["dest_stop"]),
                                   *(float(row[c]) for c in REQUEST_COLUMNS[3:])))
            except (TypeError, ValueError) as exc:
                raise ParseError(path, reader.line_num, f"cannot parse request row {row!r}") from exc
    if window is None:
        window = (out[0].request_time, out[-1].request_time + 1.0) if out else (0.0, 1.0)
    return RequestSet(tuple(out), provenance, baseline_mode, tuple(window))


def make_request(request_id, origin, dest, request_time, oracle: DistanceOracle, speed,
                 baseline_distance=None, baseline_time=None, walk_in=0.0, walk_out=0.0) -> Request:
    """Build one request from stop ids, filling direct (and default baseline) fields."""
    direct = oracle.distance(origin, dest)
    direct_time = direct / speed
    return Request(request_id, origin, dest, float(request_time), direct, direct_time,
                   direct if baseline_distance is None else baseline_distance,
                   direct_time if baseline_time is None else baseline_time,
                   walk_in, walk_out)


def request_set(requests, window=None, baseline_mode="shortest_path", provenance="synthetic") -> RequestSet:
    """Sort hand-built requests into a :class:`RequestSet`."""
    requests = sorted(requests, key=lambda r: r.request_time)
    if window is None:
        window = (requests[0].request_time, requests[-1].request_time + 1.0) if requests else (0.0, 1.0)
    return RequestSet(tuple(requests), provenance, baseline_mode, tuple(window))
