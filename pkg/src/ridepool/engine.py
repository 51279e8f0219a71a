"""Vehicles, stoplists, insertion dispatch and the event-driven simulation loop.

The heavy lifting (stoplist enumeration over the whole fleet, executing due
actions) happens in :mod:`ridepool.core`; this module owns the domain types
and the request-by-request driver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np

from . import _pycore, core
from .demand import Request, RequestSet
from .network import DistanceOracle, StopNetwork

log = logging.getLogger(__name__)

PICKUP = "pickup"
DROPOFF = "dropoff"
_KIND = {_pycore.PICKUP: PICKUP, _pycore.DROPOFF: DROPOFF}


@dataclass(frozen=True)
class ServiceParams:
    """Service-quality and fleet parameters. Times in seconds, speed in m/s."""

    max_wait: float
    max_delay: float
    vehicle_speed: float
    seat_capacity: int = 6
    dwell_time: float = 0.0
    fleet_size: int = 1
    delay_anchor: str = "pickup"  # or "request"

    def __post_init__(self):
        for name in ("max_wait", "max_delay", "vehicle_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.seat_capacity < 1:
            raise ValueError("seat_capacity must be >= 1")
        if self.fleet_size < 1:
            raise ValueError("fleet_size must be >= 1")
        if self.dwell_time < 0:
            raise ValueError("dwell_time must be >= 0")
        if self.delay_anchor not in ("pickup", "request"):
            raise ValueError(f"delay_anchor must be 'pickup' or 'request', got {self.delay_anchor!r}")

    def with_fleet(self, fleet_size: int) -> "ServiceParams":
        return ServiceParams(self.max_wait, self.max_delay, self.vehicle_speed, self.seat_capacity,
                             self.dwell_time, fleet_size, self.delay_anchor)


class StopAction(NamedTuple):
    stop: int
    kind: str
    request_id: int
    planned_arrival: float
    deadline: float


@dataclass
class Vehicle:
    vehicle_id: int
    seat_capacity: int
    anchor_stop: int
    anchor_time: float
    stoplist: list[StopAction] = field(default_factory=list)
    onboard: int = 0
    odometer_total: float = 0.0
    odometer_empty: float = 0.0
    ever_used: bool = False


class Insertion(NamedTuple):
    vehicle_id: int
    pickup_index: int
    dropoff_index: int
    added_distance: float
    promised_pickup: float
    promised_dropoff: float


class Assignment(NamedTuple):
    request_id: int
    insertion: Insertion
    pickup_deadline: float
    dropoff_deadline: float


class Rejection(NamedTuple):
    request_id: int


@dataclass(frozen=True)
class Segment:
    vehicle_id: int
    from_stop: int
    to_stop: int
    depart: float
    arrive: float
    distance: float
    occupancy: int


@dataclass(frozen=True)
class ExecutedAction:
    vehicle_id: int
    time: float
    stop: int
    kind: str
    request_id: int
    onboard_after: int


@dataclass(frozen=True)
class Outcome:
    request_id: int
    served: bool
    vehicle_id: int | None = None
    pickup_time: float | None = None
    dropoff_time: float | None = None
    promised_pickup: float | None = None
    promised_dropoff: float | None = None
    pickup_deadline: float | None = None
    dropoff_deadline: float | None = None
    added_distance: float | None = None


@dataclass
class SimulationResult:
    n_vehicles: int
    seat_capacity: int
    start_time: float
    end_time: float
    outcomes: list[Outcome]
    segments: list[list[Segment]]
    actions: list[list[ExecutedAction]]
    initial_stops: list[int]
    final_stops: list[int]
    odometer_empty: list[float]
    odometer_occupied: list[float]
    ever_used: list[bool]

    @property
    def odometer_total(self) -> list[float]:
        return [e + o for e, o in zip(self.odometer_empty, self.odometer_occupied)]

    @property
    def served(self) -> list[Outcome]:
        return [o for o in self.outcomes if o.served]

    @property
    def rejected(self) -> list[Outcome]:
        return [o for o in self.outcomes if not o.served]


@dataclass(frozen=True)
class DemandWeighted:
    """Placement proportional to request-origin counts."""

    requests: RequestSet


def _placement_cdf(net: StopNetwork, placement):
    n = net.n_stops
    if placement == "uniform":
        return None
    if isinstance(placement, DemandWeighted):
        counts = np.bincount([r.origin_stop for r in placement.requests], minlength=n).astype(np.float64)
        if counts.sum() == 0:
            return None
        return np.cumsum(counts) / counts.sum()
    raise ValueError(f"unknown placement {placement!r}")


def initial_stops(net: StopNetwork, fleet_size: int, placement="uniform", seed: int = 0) -> list[int]:
    """Starting stops for a fleet; a prefix of a larger fleet's stops for the same seed.

    ``placement`` is ``"uniform"``, :class:`DemandWeighted`, or an explicit
    sequence of stop ids (its first ``fleet_size`` entries are used).
    """
    if fleet_size < 1:
        raise ValueError("fleet_size must be >= 1")
    if isinstance(placement, (list, tuple)):
        if len(placement) < fleet_size:
            raise ValueError(f"explicit placement lists {len(placement)} stops for {fleet_size} vehicles")
        stops = [int(s) for s in placement[:fleet_size]]
        for s in stops:
            net.check_stop(s)
        return stops
    rng = np.random.default_rng([seed, 0x5EED])
    u = rng.random(fleet_size)  # one draw per vehicle keeps fleets nested
    cdf = _placement_cdf(net, placement)
    n = net.n_stops
    if cdf is None:
        stops = np.minimum((u * n).astype(np.int64), n - 1)
    else:
        stops = np.minimum(np.searchsorted(cdf, u, side="right"), n - 1)
    return [int(s) for s in stops]


def init_fleet(net: StopNetwork, params: ServiceParams, placement="uniform", seed: int = 0,
               start_time: float = 0.0) -> list[Vehicle]:
    return [Vehicle(v, params.seat_capacity, s, float(start_time))
            for v, s in enumerate(initial_stops(net, params.fleet_size, placement, seed))]


def _resolve_backend(backend):
    if backend is None:
        return core
    impls = core.backends()
    if backend not in impls:
        raise ValueError(f"backend {backend!r} unavailable; have {sorted(impls)}")
    return impls[backend]


class Fleet:
    """A fleet bound to a distance oracle, backed by one kernel instance."""

    def __init__(self, oracle: DistanceOracle, params: ServiceParams, vehicles: Sequence[Vehicle] | Sequence[int],
                 start_time: float = 0.0, backend: str | None = None):
        self.oracle = oracle
        self.params = params
        stops = [v.anchor_stop if isinstance(v, Vehicle) else int(v) for v in vehicles]
        impl = _resolve_backend(backend)
        self.backend = "python" if impl is _pycore else "compiled"
        self.kernel = impl.FleetKernel(
            oracle.matrix(), stops, float(start_time), params.vehicle_speed, params.seat_capacity,
            params.dwell_time, params.max_wait, params.max_delay,
            anchor_request=params.delay_anchor == "request", dist_to=oracle.matrix_to())
        self.initial_stops = stops
        self.now = float(start_time)

    def __len__(self):
        return self.kernel.n_vehicles

    def vehicle(self, v: int) -> Vehicle:
        anchor, t, onboard, used, empty, occupied = self.kernel.state(v)
        plan = [StopAction(s, _KIND[k], rid, arr, dl) for s, k, rid, arr, dl in self.kernel.stoplist(v)]
        return Vehicle(v, self.params.seat_capacity, anchor, t, plan, onboard,
                       empty + occupied, empty, bool(used))

    def vehicles(self) -> list[Vehicle]:
        return [self.vehicle(v) for v in range(len(self))]

    def advance(self, now: float) -> None:
        if now < self.now:
            raise ValueError(f"time went backwards: {now} < {self.now}")
        self.kernel.advance(now)
        self.now = now

    def feasible_insertions(self, v: int, req: Request, now: float) -> list[Insertion]:
        return [Insertion(v, i, j, added, tp, td) for i, j, added, tp, td in
                self.kernel.feasible(v, req.origin_stop, req.dest_stop, req.request_time, req.direct_time, now)]

    def dispatch(self, req: Request, now: float) -> Union[Assignment, Rejection]:
        best = self.kernel.best(req.origin_stop, req.dest_stop, req.request_time, req.direct_time, now)
        if best is None:
            return Rejection(req.request_id)
        v, i, j, added, tp, td = best
        tp2, td2, pdl, ddl = self.kernel.insert(v, i, j, req.request_id, req.origin_stop, req.dest_stop,
                                                req.request_time, req.direct_time, now)
        assert (tp2, td2) == (tp, td)
        return Assignment(req.request_id, Insertion(v, i, j, added, tp, td), pdl, ddl)


def feasible_insertions(vehicle: Vehicle, req: Request, now: float, oracle: DistanceOracle,
                        params: ServiceParams) -> list[Insertion]:
    """All feasible insertions of ``req`` into ``vehicle``'s stoplist at time ``now``."""
    plan = [[a.stop, _pycore.PICKUP if a.kind == PICKUP else _pycore.DROPOFF, a.request_id,
             a.planned_arrival, a.deadline] for a in vehicle.stoplist]
    locked = bool(plan) and vehicle.anchor_time < now
    start = vehicle.anchor_time if plan or now <= vehicle.anchor_time else now
    cands = _pycore.enumerate_insertions(
        oracle.matrix(), vehicle.anchor_stop, start, locked, vehicle.onboard, plan,
        req.origin_stop, req.dest_stop, req.request_time, req.direct_time,
        params.vehicle_speed, vehicle.seat_capacity, params.dwell_time, params.max_wait,
        params.max_delay, params.delay_anchor == "request", False)
    return [Insertion(vehicle.vehicle_id, i, j, float(a), float(tp), float(td)) for i, j, a, tp, td in cands]


def dispatch(fleet: Fleet, req: Request, now: float) -> Union[Assignment, Rejection]:
    """Assign ``req`` to the vehicle with the cheapest feasible insertion.

    Ties on added distance go to vehicles already used in this run, then to
    the lower vehicle id. A rejection leaves the fleet untouched.
    """
    return fleet.dispatch(req, now)


class InvariantViolation(AssertionError):
    pass


def _check_plans(fleet: Fleet, assigned: dict) -> None:
    for veh in fleet.vehicles():
        for a in veh.stoplist:
            asg = assigned[a.request_id]
            frozen = asg.pickup_deadline if a.kind == PICKUP else asg.dropoff_deadline
            if a.deadline != frozen:
                raise InvariantViolation(f"deadline of request {a.request_id} changed on vehicle {veh.vehicle_id}")
            if a.planned_arrival > a.deadline:
                raise InvariantViolation(
                    f"vehicle {veh.vehicle_id}: {a.kind} of request {a.request_id} planned at "
                    f"{a.planned_arrival} after deadline {a.deadline}")


def simulate(net: StopNetwork, requests: RequestSet, params: ServiceParams, placement="uniform",
             seed: int = 0, *, oracle: DistanceOracle | None = None, backend: str | None = None,
             start_time: float | None = None, check: bool = False) -> SimulationResult:
    """Replay ``requests`` in time order against a freshly placed fleet.

    Each request is dispatched at its request time against the schedules as
    they stand then; after the last request the fleet runs until every
    stoplist is empty. With ``check`` the frozen-deadline invariant is
    verified after every dispatch (slow; meant for tests).
    """
    oracle = oracle or DistanceOracle(net)
    if start_time is None:
        start_time = requests.window[0] if requests.requests else 0.0
        if requests.requests:
            start_time = min(start_time, requests[0].request_time)
    stops = initial_stops(net, params.fleet_size, placement, seed)
    fleet = Fleet(oracle, params, stops, start_time, backend=backend)
    assigned: dict[int, Assignment] = {}
    order = []
    for req in requests:
        fleet.advance(req.request_time)
        res = fleet.dispatch(req, req.request_time)
        order.append(req.request_id)
        if isinstance(res, Assignment):
            assigned[req.request_id] = res
            if check:
                _check_plans(fleet, assigned)
    fleet.kernel.finish()
    return _collect(fleet, requests, order, assigned, start_time)


def _collect(fleet: Fleet, requests: RequestSet, order, assigned, start_time) -> SimulationResult:
    n = len(fleet)
    segments = [[] for _ in range(n)]
    actions = [[] for _ in range(n)]
    pickup_at, dropoff_at = {}, {}
    end_time = start_time
    for v, kind, rid, stop, arrival, frm, depart, leg, occ in fleet.kernel.take_log():
        if leg > 0:
            segments[v].append(Segment(v, frm, stop, depart, arrival, leg, occ))
        kind_s = _KIND[kind]
        actions[v].append(ExecutedAction(v, arrival, stop, kind_s, rid, occ + kind))
        (pickup_at if kind_s == PICKUP else dropoff_at)[rid] = arrival
        end_time = max(end_time, arrival)
    outcomes = []
    for rid in order:
        a = assigned.get(rid)
        if a is None:
            outcomes.append(Outcome(rid, False))
        else:
            ins = a.insertion
            outcomes.append(Outcome(rid, True, ins.vehicle_id, pickup_at[rid], dropoff_at[rid],
                                    ins.promised_pickup, ins.promised_dropoff,
                                    a.pickup_deadline, a.dropoff_deadline, ins.added_distance))
    states = [fleet.kernel.state(v) for v in range(n)]
    return SimulationResult(
        n_vehicles=n,
        seat_capacity=fleet.params.seat_capacity,
        start_time=float(start_time),
        end_time=float(end_time),
        outcomes=outcomes,
        segments=segments,
        actions=actions,
        initial_stops=list(fleet.initial_stops),
        final_stops=[s[0] for s in states],
        odometer_empty=[s[4] for s in states],
        odometer_occupied=[s[5] for s in states],
        ever_used=[bool(s[3]) for s in states],
    )


def check_compliance(result: SimulationResult, requests: RequestSet, params: ServiceParams,
                     tol: float = 1e-6) -> list[str]:
    """Service-quality, capacity and causality violations in a finished run (empty if clean)."""
    problems = []
    by_id = {r.request_id: r for r in requests}
    for o in result.served:
        r = by_id[o.request_id]
        if o.pickup_time - r.request_time > params.max_wait + tol:
            problems.append(f"request {r.request_id}: waited {o.pickup_time - r.request_time:.3f}s")
        if o.dropoff_time - o.pickup_time > r.direct_time + params.max_delay + tol:
            problems.append(f"request {r.request_id}: ride {o.dropoff_time - o.pickup_time:.3f}s exceeds bound")
        if o.pickup_time > o.pickup_deadline + tol or o.dropoff_time > o.dropoff_deadline + tol:
            problems.append(f"request {r.request_id}: executed after frozen deadline")
        if o.pickup_time < r.request_time - tol:
            problems.append(f"request {r.request_id}: picked up before request time")
        if o.dropoff_time < o.pickup_time:
            problems.append(f"request {r.request_id}: dropped off before pickup")
    for v in range(result.n_vehicles):
        seen_pickup = set()
        onboard = 0
        for a in result.actions[v]:
            if a.kind == PICKUP:
                seen_pickup.add(a.request_id)
                onboard += 1
            else:
                if a.request_id not in seen_pickup:
                    problems.append(f"vehicle {v}: dropoff of {a.request_id} before its pickup")
                onboard -= 1
            if not 0 <= onboard <= result.seat_capacity or onboard != a.onboard_after:
                problems.append(f"vehicle {v}: onboard count {onboard} out of range")
        last = -np.inf
        for s in result.segments[v]:
            if not 0 <= s.occupancy <= result.seat_capacity:
                problems.append(f"vehicle {v}: occupancy {s.occupancy} on segment")
            if not (s.depart < s.arrive and s.depart >= last - tol):
                problems.append(f"vehicle {v}: non-monotone segment times at {s.depart}")
            last = s.arrive
    return problems
