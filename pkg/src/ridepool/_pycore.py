"""Pure-Python kernels: Dijkstra and the fleet insertion/event machinery.

This module is the reference implementation. ``_core.pyx`` mirrors it
operation for operation so both produce bit-identical floats; keep the two
in lockstep when editing.
"""

import heapq
import math

import numpy as np

PICKUP = 1
DROPOFF = -1
INF = math.inf


def dijkstra(indptr, indices, weights, source):
    n = len(indptr) - 1
    dist = [INF] * n
    dist[source] = 0.0
    done = [False] * n
    heap = [(0.0, source)]
    indptr = indptr.tolist()
    indices = indices.tolist()
    weights = weights.tolist()
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            nd = d + weights[k]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return np.array(dist, dtype=np.float64)


def all_pairs(indptr, indices, weights):
    n = len(indptr) - 1
    out = np.empty((n, n), dtype=np.float64)
    for s in range(n):
        out[s] = dijkstra(indptr, indices, weights, s)
    return out


def enumerate_insertions(dist, anchor, start, locked, onboard, plan, origin, dest,
                         request_time, direct_time, speed, capacity, dwell,
                         max_wait, max_delay, anchor_request, best_only):
    """Feasible (pickup_index, dropoff_index) insertions into one stoplist.

    ``plan`` is a list of ``[stop, kind, request_id, arrival, deadline]``.
    ``dist`` is indexable as ``dist[a][b]``. Returns a list of
    ``(i, j, added_distance, t_pickup, t_dropoff)``; with ``best_only`` just
    the first one with minimal added distance (or an empty list).
    """
    L = len(plan)
    pickup_deadline = request_time + max_wait
    out = []
    best = None

    # per-action slack and onboard load after executing it
    slack = [0.0] * L
    load_after = [0] * L
    load = onboard
    for k in range(L):
        a = plan[k]
        slack[k] = a[4] - a[3]
        load += a[1]
        load_after[k] = load
    suffix_slack = [INF] * (L + 1)
    for k in range(L - 1, -1, -1):
        suffix_slack[k] = min(slack[k], suffix_slack[k + 1])

    d_o = None
    lo = 1 if locked else 0
    for i in range(lo, L + 1):
        if i == 0:
            prev = anchor
            dep_prev = start
            load_before = onboard
        else:
            prev = plan[i - 1][0]
            dep_prev = plan[i - 1][3] + dwell
            load_before = load_after[i - 1]
        if dep_prev > pickup_deadline:
            break
        if load_before + 1 > capacity:
            continue
        d_prev_o = dist[prev][origin]
        arr_p = dep_prev + d_prev_o / speed
        if arr_p > pickup_deadline:
            continue
        dep_p = arr_p + dwell
        if anchor_request:
            drop_deadline = request_time + direct_time + max_delay
        else:
            drop_deadline = arr_p + direct_time + max_delay
        if d_o is None:
            d_o = dist[origin]
        if i < L:
            s_i = plan[i][0]
            shift_p = dep_p + d_o[s_i] / speed - plan[i][3]
            added_p = d_prev_o + d_o[s_i] - dist[prev][s_i]
        else:
            shift_p = 0.0
            added_p = d_prev_o

        # dropoff directly after the pickup
        arr_d = dep_p + d_o[dest] / speed
        if arr_d <= drop_deadline:
            ok = True
            if i < L:
                shift_t = arr_d + dwell + dist[dest][s_i] / speed - plan[i][3]
                ok = shift_t <= suffix_slack[i]
                added = d_prev_o + d_o[dest] + dist[dest][s_i] - dist[prev][s_i]
            else:
                added = d_prev_o + d_o[dest]
            if ok:
                cand = (i, i, added, arr_p, arr_d)
                if best_only:
                    if best is None or added < best[2]:
                        best = cand
                else:
                    out.append(cand)

        if i == L:
            continue
        # dropoff later in the plan: actions i..j-1 are delayed by shift_p
        min_slack = INF
        for j in range(i + 1, L + 1):
            k = j - 1
            if slack[k] < min_slack:
                min_slack = slack[k]
            if shift_p > min_slack:
                break
            if load_after[k] + 1 > capacity:
                break
            s_k = plan[k][0]
            arr_d = plan[k][3] + shift_p + dwell + dist[s_k][dest] / speed
            if arr_d > drop_deadline:
                continue
            if j < L:
                s_j = plan[j][0]
                shift_t = arr_d + dwell + dist[dest][s_j] / speed - plan[j][3]
                if shift_t > suffix_slack[j]:
                    continue
                added = added_p + (dist[s_k][dest] + dist[dest][s_j] - dist[s_k][s_j])
            else:
                added = added_p + dist[s_k][dest]
            cand = (i, j, added, arr_p, arr_d)
            if best_only:
                if best is None or added < best[2]:
                    best = cand
            else:
                out.append(cand)
    if best_only:
        return [] if best is None else [best]
    return out


class FleetKernel:
    """Mutable fleet state: stoplists, positions, odometers and an action log.

    Vehicle ``v`` is at ``anchor_stop[v]`` and free to leave at
    ``anchor_time[v]``; its pending actions follow in ``plans[v]``. A vehicle
    that left its anchor before the current time is committed to the first
    pending action (no mid-leg diversion).
    """

    def __init__(self, dist, anchor_stops, start_time, speed, capacity, dwell,
                 max_wait, max_delay, anchor_request=False, dist_to=None):
        # dist_to only speeds up the compiled kernel's reach filter
        self._dist_np = np.ascontiguousarray(dist, dtype=np.float64)
        # nested lists index faster than 2-D arrays from pure Python
        self.dist = self._dist_np.tolist()
        self.n_vehicles = len(anchor_stops)
        self.anchor_stop = [int(s) for s in anchor_stops]
        self.anchor_time = [float(start_time)] * self.n_vehicles
        self.onboard = [0] * self.n_vehicles
        self.used = [False] * self.n_vehicles
        self.odo_empty = [0.0] * self.n_vehicles
        self.odo_occupied = [0.0] * self.n_vehicles
        self.plans = [[] for _ in range(self.n_vehicles)]
        self.speed = float(speed)
        self.capacity = int(capacity)
        self.dwell = float(dwell)
        self.max_wait = float(max_wait)
        self.max_delay = float(max_delay)
        self.anchor_request = bool(anchor_request)
        self.log = []

    def _start(self, v, now):
        t = self.anchor_time[v]
        if not self.plans[v] and now > t:
            return now
        return t

    def _locked(self, v, now):
        return bool(self.plans[v]) and self.anchor_time[v] < now

    def _execute_front(self, v):
        stop, kind, rid, arrival, deadline = self.plans[v].pop(0)
        frm = self.anchor_stop[v]
        leg = self.dist[frm][stop]
        occ = self.onboard[v]
        if occ == 0:
            self.odo_empty[v] += leg
        else:
            self.odo_occupied[v] += leg
        self.log.append((v, kind, rid, stop, arrival, frm, self.anchor_time[v], leg, occ))
        self.onboard[v] = occ + kind
        self.anchor_stop[v] = stop
        self.anchor_time[v] = arrival + self.dwell

    def advance(self, now):
        for v in range(self.n_vehicles):
            plan = self.plans[v]
            while plan and plan[0][3] <= now:
                self._execute_front(v)

    def finish(self):
        for v in range(self.n_vehicles):
            while self.plans[v]:
                self._execute_front(v)

    def feasible(self, v, origin, dest, request_time, direct_time, now):
        return enumerate_insertions(
            self.dist, self.anchor_stop[v], self._start(v, now), self._locked(v, now),
            self.onboard[v], self.plans[v], origin, dest, request_time, direct_time,
            self.speed, self.capacity, self.dwell, self.max_wait, self.max_delay,
            self.anchor_request, False)

    def best(self, origin, dest, request_time, direct_time, now):
        """Cheapest insertion over the fleet as ``(v, i, j, added, t_pickup, t_dropoff)``."""
        best = None
        best_used = False
        reach = self.max_wait * self.speed * (1.0 + 1e-9)
        col = self._dist_np[:, origin].tolist()
        for v in range(self.n_vehicles):
            # cheap reject: no stop of this vehicle is within pickup reach
            plan = self.plans[v]
            if col[self.anchor_stop[v]] > reach and all(col[a[0]] > reach for a in plan):
                continue
            cands = enumerate_insertions(
                self.dist, self.anchor_stop[v], self._start(v, now), self._locked(v, now),
                self.onboard[v], plan, origin, dest, request_time, direct_time,
                self.speed, self.capacity, self.dwell, self.max_wait, self.max_delay,
                self.anchor_request, True)
            if not cands:
                continue
            i, j, added, tp, td = cands[0]
            used = self.used[v]
            if best is None or added < best[3] or (added == best[3] and used and not best_used):
                best = (v, i, j, added, tp, td)
                best_used = used
        return best

    def insert(self, v, i, j, request_id, origin, dest, request_time, direct_time, now):
        """Apply insertion ``(i, j)``; returns ``(t_pickup, t_dropoff, pickup_deadline, dropoff_deadline)``."""
        dist = self.dist
        plan = self.plans[v]
        L = len(plan)
        speed, dwell = self.speed, self.dwell
        start = self._start(v, now)
        if i == 0:
            prev, dep_prev = self.anchor_stop[v], start
        else:
            prev, dep_prev = plan[i - 1][0], plan[i - 1][3] + dwell
        arr_p = dep_prev + dist[prev][origin] / speed
        dep_p = arr_p + dwell
        if self.anchor_request:
            drop_deadline = request_time + direct_time + self.max_delay
        else:
            drop_deadline = arr_p + direct_time + self.max_delay
        shift_p = dep_p + dist[origin][plan[i][0]] / speed - plan[i][3] if i < L else 0.0
        if j == i:
            arr_d = dep_p + dist[origin][dest] / speed
        else:
            k = j - 1
            arr_d = plan[k][3] + shift_p + dwell + dist[plan[k][0]][dest] / speed
        shift_t = arr_d + dwell + dist[dest][plan[j][0]] / speed - plan[j][3] if j < L else 0.0
        for k in range(i, j):
            plan[k][3] = plan[k][3] + shift_p
        for k in range(j, L):
            plan[k][3] = plan[k][3] + shift_t
        pickup_deadline = request_time + self.max_wait
        plan.insert(j, [dest, DROPOFF, request_id, arr_d, drop_deadline])
        plan.insert(i, [origin, PICKUP, request_id, arr_p, pickup_deadline])
        if L == 0:
            self.anchor_time[v] = start
        self.used[v] = True
        return arr_p, arr_d, pickup_deadline, drop_deadline

    def stoplist(self, v):
        return [tuple(a) for a in self.plans[v]]

    def state(self, v):
        return (self.anchor_stop[v], self.anchor_time[v], self.onboard[v], self.used[v],
                self.odo_empty[v], self.odo_occupied[v])

    def take_log(self):
        out, self.log = self.log, []
        return out
