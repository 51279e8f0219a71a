"""Independent reference implementations used as test oracles.

Nothing here shares code with the package kernels: schedules are rebuilt
from scratch for every candidate instead of using slack bookkeeping, and
shortest paths come from scipy or plain Bellman-Ford.
"""

import math

import numpy as np


def bellman_ford(n, edges, source):
    dist = [math.inf] * n
    dist[source] = 0.0
    for _ in range(n - 1):
        changed = False
        for a, b, w in edges:
            if dist[a] + w < dist[b]:
                dist[b] = dist[a] + w
                changed = True
        if not changed:
            break
    return dist


def scipy_all_pairs(net):
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra

    n = net.n_stops
    rows = [a for a, _, _ in net.edges]
    cols = [b for _, b, _ in net.edges]
    w = [x for _, _, x in net.edges]
    # keep the shortest of parallel edges, as the network does
    best = {}
    for a, b, x in zip(rows, cols, w):
        best[(a, b)] = min(x, best.get((a, b), math.inf))
    keys = list(best)
    m = csr_matrix(([best[k] for k in keys], ([k[0] for k in keys], [k[1] for k in keys])), shape=(n, n))
    return dijkstra(m, directed=True)


def exhaustive_nearest(positions, p):
    best, best_d = None, math.inf
    for k, (x, y) in enumerate(positions):
        d = math.hypot(x - p[0], y - p[1])
        if d < best_d:
            best, best_d = k, d
    return best, best_d


def _times(dist, anchor, start, stops, speed, dwell):
    out = []
    prev, dep = anchor, start
    for s in stops:
        arr = dep + dist[prev][s] / speed
        out.append(arr)
        prev, dep = s, arr + dwell
    return out


def _length(dist, anchor, stops):
    total, prev = 0.0, anchor
    for s in stops:
        total += dist[prev][s]
        prev = s
    return total


def brute_force_insertions(dist, vehicle, req, now, params):
    """Every feasible (i, j, added, t_pickup, t_dropoff) for one vehicle, by full re-simulation."""
    plan = [(a.stop, 1 if a.kind == "pickup" else -1, a.deadline) for a in vehicle.stoplist]
    L = len(plan)
    locked = L > 0 and vehicle.anchor_time < now
    start = vehicle.anchor_time if L else max(vehicle.anchor_time, now)
    old_len = _length(dist, vehicle.anchor_stop, [p[0] for p in plan])
    out = []
    for i in range(1 if locked else 0, L + 1):
        for j in range(i, L + 1):
            seq = plan[:i] + [("P",)] + plan[i:j] + [("D",)] + plan[j:]
            stops = [req.origin_stop if a == ("P",) else req.dest_stop if a == ("D",) else a[0] for a in seq]
            times = _times(dist, vehicle.anchor_stop, start, stops, params.vehicle_speed, params.dwell_time)
            tp, td = times[i], times[j + 1]
            if params.delay_anchor == "request":
                drop_dl = req.request_time + req.direct_time + params.max_delay
            else:
                drop_dl = tp + req.direct_time + params.max_delay
            ok = True
            load = vehicle.onboard
            for a, t in zip(seq, times):
                if a == ("P",):
                    dl, load = req.request_time + params.max_wait, load + 1
                elif a == ("D",):
                    dl, load = drop_dl, load - 1
                else:
                    dl, load = a[2], load + a[1]
                if t > dl or load > vehicle.seat_capacity:
                    ok = False
                    break
            if ok:
                added = _length(dist, vehicle.anchor_stop, stops) - old_len
                out.append((i, j, added, tp, td))
    return out


def brute_force_dispatch(dist, vehicles, req, now, params):
    """(vehicle_id, added) of the cheapest insertion; ties to used vehicles, then lower id."""
    best = None
    for veh in vehicles:
        for i, j, added, tp, td in brute_force_insertions(dist, veh, req, now, params):
            key = (added, not veh.ever_used, veh.vehicle_id)
            if best is None or key < best:
                best = key
    return None if best is None else (best[2], best[0])


def conservation_problems(result):
    """Odometer bookkeeping mismatches against the recorded segments."""
    problems = []
    for v in range(result.n_vehicles):
        occ = emp = 0.0
        for s in result.segments[v]:
            if s.occupancy > 0:
                occ += s.distance
            else:
                emp += s.distance
        if occ != result.odometer_occupied[v] or emp != result.odometer_empty[v]:
            problems.append(f"vehicle {v}: segments give {emp}/{occ}, odometers "
                            f"{result.odometer_empty[v]}/{result.odometer_occupied[v]}")
        if result.odometer_total[v] != result.odometer_empty[v] + result.odometer_occupied[v]:
            problems.append(f"vehicle {v}: total is not empty + occupied")
    fleet_total = math.fsum(result.odometer_total)
    parts = math.fsum(result.odometer_empty) + math.fsum(result.odometer_occupied)
    if abs(fleet_total - parts) > 1e-9 * max(1.0, fleet_total):
        problems.append(f"fleet total {fleet_total} != {parts}")
    return problems
