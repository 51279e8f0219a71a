"""Pooling characteristics, occupancy series, fleet-size sweeps and spatial analysis."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .demand import RequestSet
from .engine import ServiceParams, SimulationResult, simulate
from .network import DistanceOracle, StopNetwork

SWEEP_COLUMNS = ("fleet_size", "serviced_share", "rel_time", "rel_distance", "empty_share",
                 "occupancy_incl", "occupancy_excl", "empty_vehicles", "seed")
MISMATCH_CATEGORIES = ("unused_vehicle", "rejected_origin", "origin_free", "overlap")


@dataclass(frozen=True)
class WalkMode:
    """How walk legs turn into minutes: by walking speed, or a fixed time per leg."""

    kind: str = "speed"  # "speed" | "fixed"
    speed: float = 5.0 / 3.6
    per_leg: float = 60.0

    def __post_init__(self):
        if self.kind not in ("speed", "fixed"):
            raise ValueError(f"walk mode must be 'speed' or 'fixed', got {self.kind!r}")
        if not self.speed > 0 or self.per_leg < 0:
            raise ValueError("walk speed must be positive and per-leg time non-negative")

    def time(self, distance: float) -> float:
        return self.per_leg if self.kind == "fixed" else distance / self.speed


@dataclass(frozen=True)
class Characteristics:
    serviced_share: float
    relative_travel_time: float
    relative_driven_distance: float
    empty_mileage_share: float
    avg_occupancy_incl: float
    avg_occupancy_excl: float
    empty_vehicles: int
    # auxiliary outputs
    mean_relative_travel_time: float = math.nan
    n_requests: int = 0
    n_served: int = 0
    fleet_distance: float = 0.0
    empty_distance: float = 0.0

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(self).items()}


def _ratio(num, den):
    return num / den if den else math.nan


def characteristics(result: SimulationResult, requests: RequestSet, params: ServiceParams | None = None,
                    walk_mode: WalkMode = WalkMode()) -> Characteristics:
    """The six pooling characteristics of one run.

    Rejected requests keep their private-car baseline in both the travel-time
    and the driven-distance ratios. Ratios are ratios of sums.
    """
    if [o.request_id for o in result.outcomes] != [r.request_id for r in requests]:
        raise ValueError("simulation result does not belong to this request set")
    by_id = {r.request_id: r for r in requests}
    times, base_times, per_request = [], [], []
    rejected_dist = []
    for o in result.outcomes:
        r = by_id[o.request_id]
        base_times.append(r.baseline_time)
        if o.served:
            t = (walk_mode.time(r.walk_in) + (o.pickup_time - r.request_time)
                 + (o.dropoff_time - o.pickup_time) + walk_mode.time(r.walk_out))
        else:
            t = r.baseline_time
            rejected_dist.append(r.baseline_distance)
        times.append(t)
        per_request.append(t / r.baseline_time)

    empty = math.fsum(result.odometer_empty)
    occupied = math.fsum(result.odometer_occupied)
    total = empty + occupied
    pax_dist = math.fsum(s.occupancy * s.distance for segs in result.segments for s in segs)
    n = len(result.outcomes)
    n_served = sum(o.served for o in result.outcomes)
    return Characteristics(
        serviced_share=_ratio(n_served, n),
        relative_travel_time=_ratio(math.fsum(times), math.fsum(base_times)),
        relative_driven_distance=_ratio(total + math.fsum(rejected_dist),
                                        math.fsum(r.baseline_distance for r in requests)),
        empty_mileage_share=empty / total if total > 0 else 0.0,
        avg_occupancy_incl=pax_dist / total if total > 0 else 0.0,
        avg_occupancy_excl=pax_dist / occupied if occupied > 0 else 0.0,
        empty_vehicles=sum(not u for u in result.ever_used),
        mean_relative_travel_time=_ratio(math.fsum(per_request), n),
        n_requests=n,
        n_served=n_served,
        fleet_distance=total,
        empty_distance=empty,
    )


def reciprocal_product(ch: Characteristics) -> float:
    """Occupancy (excluding empty legs) times relative driven distance; 1 without detours."""
    return ch.avg_occupancy_excl * ch.relative_driven_distance


@dataclass(frozen=True)
class OccupancySeries:
    vehicle_id: int
    steps: tuple[tuple[float, int], ...]

    def value_at(self, t: float) -> int:
        occ = 0
        for time, value in self.steps:
            if time > t:
                break
            occ = value
        return occ

    def time_average(self, t0: float | None = None, t1: float | None = None) -> float:
        """Mean onboard count over ``[t0, t1]`` (default: the whole series)."""
        t0 = self.steps[0][0] if t0 is None else t0
        t1 = self.steps[-1][0] if t1 is None else t1
        if t1 <= t0:
            return 0.0
        area = 0.0
        for (ta, va), (tb, _) in zip(self.steps, self.steps[1:] + ((math.inf, 0),)):
            lo, hi = max(ta, t0), min(tb, t1)
            if hi > lo:
                area += va * (hi - lo)
        return area / (t1 - t0)


def occupancy_series(result: SimulationResult, vehicle_id: int, trim=None) -> OccupancySeries:
    """Step function of the onboard count, optionally restricted to ``trim = (t0, t1)``."""
    if not 0 <= vehicle_id < result.n_vehicles:
        raise ValueError(f"unknown vehicle {vehicle_id}")
    steps = [(result.start_time, 0)]
    for a in result.actions[vehicle_id]:
        if len(steps) > 1 and steps[-1][0] == a.time:
            steps[-1] = (a.time, a.onboard_after)
        else:
            steps.append((a.time, a.onboard_after))
    if trim is not None:
        t0, t1 = trim
        inside = [(t, v) for t, v in steps if t0 < t < t1]
        steps = [(t0, OccupancySeries(vehicle_id, tuple(steps)).value_at(t0)), *inside,
                 (t1, OccupancySeries(vehicle_id, tuple(steps)).value_at(t1))]
    return OccupancySeries(vehicle_id, tuple(steps))


def busiest_vehicle(result: SimulationResult) -> int:
    """Vehicle that served the most requests (lowest id on ties)."""
    counts = np.bincount([o.vehicle_id for o in result.served], minlength=result.n_vehicles)
    return int(np.argmax(counts))


class SweepPoint(NamedTuple):
    fleet_size: int
    characteristics: Characteristics
    seed: int

    def row(self) -> list:
        c = self.characteristics
        return [self.fleet_size, c.serviced_share, c.relative_travel_time, c.relative_driven_distance,
                c.empty_mileage_share, c.avg_occupancy_incl, c.avg_occupancy_excl, c.empty_vehicles, self.seed]


def run_point(net, requests, params, fleet_size, placement="uniform", seed=0, oracle=None,
              walk_mode=WalkMode()) -> SweepPoint:
    res = simulate(net, requests, params.with_fleet(fleet_size), placement, seed, oracle=oracle)
    return SweepPoint(fleet_size, characteristics(res, requests, params, walk_mode), seed)


_worker_ctx = {}


def _init_worker(net, requests, params, placement, walk_mode):
    _worker_ctx.update(net=net, requests=requests, params=params, placement=placement,
                       walk_mode=walk_mode, oracle=DistanceOracle(net))


def _worker_point(task):
    size, seed = task
    c = _worker_ctx
    return run_point(c["net"], c["requests"], c["params"], size, c["placement"], seed, c["oracle"], c["walk_mode"])


def sweep(net: StopNetwork, requests: RequestSet, params: ServiceParams, sizes: Sequence[int],
          seeds: Sequence[int] = (0,), placement="uniform", walk_mode=WalkMode(), jobs: int | None = 1,
          oracle: DistanceOracle | None = None) -> list[SweepPoint]:
    """Evaluate every ``(size, seed)`` pair; results ordered by size, then seed."""
    tasks = [(int(s), int(seed)) for s in sizes for seed in seeds]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(tasks) <= 1:
        oracle = oracle or DistanceOracle(net)
        return [run_point(net, requests, params, s, placement, seed, oracle, walk_mode) for s, seed in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks)), initializer=_init_worker,
                             initargs=(net, requests, params, placement, walk_mode)) as pool:
        return list(pool.map(_worker_point, tasks))


@dataclass
class MinFleetResult:
    min_fleet: int | None
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.min_fleet is not None


def min_fleet_search(net: StopNetwork, requests: RequestSet, params: ServiceParams, placement="uniform",
                     seed: int = 0, bounds=(1, 10_000), resolution: int = 1, *,
                     oracle: DistanceOracle | None = None, walk_mode=WalkMode()) -> MinFleetResult:
    """Smallest fleet (on the grid ``lo + k * resolution``) that serves every request.

    Doubles the step count until a size serves everything, then bisects.
    Fleets are nested (same seed), so each size extends the previous one.
    The returned size's predecessor on the grid was evaluated and failed,
    unless the answer is the lower bound itself.
    """
    lo, hi = int(bounds[0]), int(bounds[1])
    if not 1 <= lo <= hi:
        raise ValueError(f"invalid bounds {bounds}")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    oracle = oracle or DistanceOracle(net)
    cache: dict[int, SweepPoint] = {}
    k_max = -(-(hi - lo) // resolution)

    def size(k):
        return min(lo + k * resolution, hi)

    def serves_all(k):
        s = size(k)
        if s not in cache:
            cache[s] = run_point(net, requests, params, s, placement, seed, oracle, walk_mode)
        return cache[s].characteristics.serviced_share == 1.0 or not requests.requests

    def result(k):
        pts = sorted(cache.values(), key=lambda p: p.fleet_size)
        return MinFleetResult(None if k is None else size(k), pts)

    if serves_all(0):
        return result(0)
    k_false, step = 0, 1
    while True:
        k = min(k_false + step, k_max)
        if serves_all(k):
            k_true = k
            break
        if k == k_max:
            return result(None)
        k_false, step = k, step * 2
    while k_true - k_false > 1:
        mid = (k_true + k_false) // 2
        if serves_all(mid):
            k_true = mid
        else:
            k_false = mid
    return result(k_true)


@dataclass(frozen=True)
class MismatchReport:
    unused_vehicle_stops: tuple[int, ...]
    rejected_origin_stops: tuple[int, ...]
    origin_free_stops: tuple[int, ...]
    overlap_stops: tuple[int, ...]

    def rows(self, net: StopNetwork) -> list[tuple[int, float, float, str]]:
        out = []
        for cat, stops in zip(MISMATCH_CATEGORIES, (self.unused_vehicle_stops, self.rejected_origin_stops,
                                                   self.origin_free_stops, self.overlap_stops)):
            for s in stops:
                x, y = net.position(s)
                out.append((s, x, y, cat))
        return out


def mismatch_analysis(result: SimulationResult, requests: RequestSet, net: StopNetwork) -> MismatchReport:
    """Where unused vehicles sit versus where rejected requests and demand originate."""
    by_id = {r.request_id: r for r in requests}
    return mismatch_from_stops(
        [result.final_stops[v] for v in range(result.n_vehicles) if not result.ever_used[v]],
        [by_id[o.request_id].origin_stop for o in result.rejected],
        [r.origin_stop for r in requests],
        net.n_stops,
    )


def mismatch_from_stops(unused_vehicle_stops, rejected_origins, all_origins, n_stops: int) -> MismatchReport:
    """Same report from plain stop lists, e.g. read back from a run's CSV files."""
    unused = sorted(set(int(s) for s in unused_vehicle_stops))
    rejected = sorted(set(int(s) for s in rejected_origins))
    counts = np.bincount(np.asarray(list(all_origins), dtype=np.int64), minlength=n_stops)
    origin_free = np.flatnonzero(counts == 0).tolist()
    overlap = sorted(set(unused) & set(origin_free))
    return MismatchReport(tuple(unused), tuple(rejected), tuple(origin_free), tuple(overlap))
