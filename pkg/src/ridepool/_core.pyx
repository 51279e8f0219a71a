# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled kernels: Dijkstra and the fleet insertion/event machinery.

Operation-for-operation mirror of ``_pycore.py``; both must return
bit-identical floats, so arithmetic order here matches the Python source.
"""

import numpy as np

from libc.math cimport INFINITY
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue
from libcpp.vector cimport vector

cdef int PICKUP = 1
cdef int DROPOFF = -1


cdef struct Action:
    int stop
    int kind
    long long rid
    double arrival
    double deadline


cdef struct Cand:
    int i
    int j
    double added
    double t_pickup
    double t_dropoff


cdef struct LogRec:
    int vehicle
    int kind
    long long rid
    int stop
    double arrival
    int frm
    double depart
    double leg
    int occupancy


cdef void _dijkstra_into(const long long[::1] indptr, const long long[::1] indices,
                         const double[::1] weights, int source, double[::1] dist,
                         signed char[::1] done) noexcept nogil:
    cdef int n = indptr.shape[0] - 1
    cdef int u, v
    cdef long long k
    cdef double d, nd
    # max-heap on negated distance; ties resolved arbitrarily, values are order-independent
    cdef priority_queue[pair[double, int]] heap
    for u in range(n):
        dist[u] = INFINITY
        done[u] = 0
    dist[source] = 0.0
    heap.push(pair[double, int](-0.0, source))
    while not heap.empty():
        d = -heap.top().first
        u = heap.top().second
        heap.pop()
        if done[u]:
            continue
        done[u] = 1
        for k in range(indptr[u], indptr[u + 1]):
            v = <int>indices[k]
            nd = d + weights[k]
            if nd < dist[v]:
                dist[v] = nd
                heap.push(pair[double, int](-nd, v))


def dijkstra(indptr, indices, weights, int source):
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    n = ip.shape[0] - 1
    out = np.empty(n, dtype=np.float64)
    done = np.empty(n, dtype=np.int8)
    _dijkstra_into(ip, ix, w, source, out, done)
    return out


def all_pairs(indptr, indices, weights):
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int n = ip.shape[0] - 1
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] m = out
    done = np.empty(n, dtype=np.int8)
    cdef signed char[::1] dn = done
    cdef int s
    with nogil:
        for s in range(n):
            _dijkstra_into(ip, ix, w, s, m[s], dn)
    return out


cdef class FleetKernel:
    """Compiled counterpart of ``_pycore.FleetKernel`` (same public methods)."""

    cdef const double[:, ::1] dist
    cdef const double[:, ::1] dist_to
    cdef object _keep
    cdef public int n_vehicles
    cdef vector[vector[Action]] plans
    cdef vector[int] anchor_stop
    cdef vector[double] anchor_time
    cdef vector[int] onboard
    cdef vector[char] used
    cdef vector[double] odo_empty
    cdef vector[double] odo_occupied
    cdef vector[LogRec] log
    cdef double speed, dwell, max_wait, max_delay
    cdef int capacity
    cdef bint anchor_request
    # scratch buffers reused across enumerations
    cdef vector[double] slack
    cdef vector[double] suffix_slack
    cdef vector[int] load_after
    cdef vector[Cand] cands

    def __init__(self, dist, anchor_stops, double start_time, double speed, int capacity,
                 double dwell, double max_wait, double max_delay, anchor_request=False,
                 dist_to=None):
        d = np.ascontiguousarray(dist, dtype=np.float64)
        dt = np.ascontiguousarray(d.T) if dist_to is None else np.ascontiguousarray(dist_to, dtype=np.float64)
        self._keep = (d, dt)
        self.dist = d
        self.dist_to = dt
        self.n_vehicles = len(anchor_stops)
        self.plans.resize(self.n_vehicles)
        for s in anchor_stops:
            self.anchor_stop.push_back(int(s))
            self.anchor_time.push_back(start_time)
            self.onboard.push_back(0)
            self.used.push_back(0)
            self.odo_empty.push_back(0.0)
            self.odo_occupied.push_back(0.0)
        self.speed = speed
        self.capacity = capacity
        self.dwell = dwell
        self.max_wait = max_wait
        self.max_delay = max_delay
        self.anchor_request = bool(anchor_request)

    cdef inline double _start(self, int v, double now) noexcept nogil:
        cdef double t = self.anchor_time[v]
        if self.plans[v].size() == 0 and now > t:
            return now
        return t

    cdef inline bint _locked(self, int v, double now) noexcept nogil:
        return self.plans[v].size() > 0 and self.anchor_time[v] < now

    cdef void _execute_front(self, int v) noexcept nogil:
        cdef Action a = self.plans[v][0]
        self.plans[v].erase(self.plans[v].begin())
        cdef int frm = self.anchor_stop[v]
        cdef double leg = self.dist[frm, a.stop]
        cdef int occ = self.onboard[v]
        if occ == 0:
            self.odo_empty[v] += leg
        else:
            self.odo_occupied[v] += leg
        cdef LogRec rec
        rec.vehicle = v
        rec.kind = a.kind
        rec.rid = a.rid
        rec.stop = a.stop
        rec.arrival = a.arrival
        rec.frm = frm
        rec.depart = self.anchor_time[v]
        rec.leg = leg
        rec.occupancy = occ
        self.log.push_back(rec)
        self.onboard[v] = occ + a.kind
        self.anchor_stop[v] = a.stop
        self.anchor_time[v] = a.arrival + self.dwell

    def advance(self, double now):
        cdef int v
        with nogil:
            for v in range(self.n_vehicles):
                while self.plans[v].size() > 0 and self.plans[v][0].arrival <= now:
                    self._execute_front(v)

    def finish(self):
        cdef int v
        with nogil:
            for v in range(self.n_vehicles):
                while self.plans[v].size() > 0:
                    self._execute_front(v)

    cdef void _enumerate(self, int v, int origin, int dest, double request_time,
                         double direct_time, double now, bint best_only) noexcept nogil:
        cdef vector[Action]* plan = &self.plans[v]
        cdef int L = <int>plan.size()
        cdef double speed = self.speed, dwell = self.dwell
        cdef double pickup_deadline = request_time + self.max_wait
        cdef int k, i, j, prev, s_i, s_k, s_j, load, load_before
        cdef double dep_prev, d_prev_o, arr_p, dep_p, drop_deadline, shift_p, added_p
        cdef double arr_d, shift_t, added, min_slack
        cdef bint ok, have_best = False
        cdef Cand c, best
        cdef const double[:, ::1] dist = self.dist

        self.cands.clear()
        self.slack.resize(L)
        self.load_after.resize(L)
        self.suffix_slack.resize(L + 1)
        load = self.onboard[v]
        for k in range(L):
            self.slack[k] = plan[0][k].deadline - plan[0][k].arrival
            load += plan[0][k].kind
            self.load_after[k] = load
        self.suffix_slack[L] = INFINITY
        for k in range(L - 1, -1, -1):
            if self.slack[k] < self.suffix_slack[k + 1]:
                self.suffix_slack[k] = self.slack[k]
            else:
                self.suffix_slack[k] = self.suffix_slack[k + 1]

        cdef int lo = 1 if self._locked(v, now) else 0
        for i in range(lo, L + 1):
            if i == 0:
                prev = self.anchor_stop[v]
                dep_prev = self._start(v, now)
                load_before = self.onboard[v]
            else:
                prev = plan[0][i - 1].stop
                dep_prev = plan[0][i - 1].arrival + dwell
                load_before = self.load_after[i - 1]
            if dep_prev > pickup_deadline:
                break
            if load_before + 1 > self.capacity:
                continue
            d_prev_o = dist[prev, origin]
            arr_p = dep_prev + d_prev_o / speed
            if arr_p > pickup_deadline:
                continue
            dep_p = arr_p + dwell
            if self.anchor_request:
                drop_deadline = request_time + direct_time + self.max_delay
            else:
                drop_deadline = arr_p + direct_time + self.max_delay
            if i < L:
                s_i = plan[0][i].stop
                shift_p = dep_p + dist[origin, s_i] / speed - plan[0][i].arrival
                added_p = d_prev_o + dist[origin, s_i] - dist[prev, s_i]
            else:
                s_i = -1
                shift_p = 0.0
                added_p = d_prev_o

            arr_d = dep_p + dist[origin, dest] / speed
            if arr_d <= drop_deadline:
                ok = True
                if i < L:
                    shift_t = arr_d + dwell + dist[dest, s_i] / speed - plan[0][i].arrival
                    ok = shift_t <= self.suffix_slack[i]
                    added = d_prev_o + dist[origin, dest] + dist[dest, s_i] - dist[prev, s_i]
                else:
                    added = d_prev_o + dist[origin, dest]
                if ok:
                    c.i = i
                    c.j = i
                    c.added = added
                    c.t_pickup = arr_p
                    c.t_dropoff = arr_d
                    if best_only:
                        if not have_best or added < best.added:
                            best = c
                            have_best = True
                    else:
                        self.cands.push_back(c)

            if i == L:
                continue
            min_slack = INFINITY
            for j in range(i + 1, L + 1):
                k = j - 1
                if self.slack[k] < min_slack:
                    min_slack = self.slack[k]
                if shift_p > min_slack:
                    break
                if self.load_after[k] + 1 > self.capacity:
                    break
                s_k = plan[0][k].stop
                arr_d = plan[0][k].arrival + shift_p + dwell + dist[s_k, dest] / speed
                if arr_d > drop_deadline:
                    continue
                if j < L:
                    s_j = plan[0][j].stop
                    shift_t = arr_d + dwell + dist[dest, s_j] / speed - plan[0][j].arrival
                    if shift_t > self.suffix_slack[j]:
                        continue
                    added = added_p + (dist[s_k, dest] + dist[dest, s_j] - dist[s_k, s_j])
                else:
                    added = added_p + dist[s_k, dest]
                c.i = i
                c.j = j
                c.added = added
                c.t_pickup = arr_p
                c.t_dropoff = arr_d
                if best_only:
                    if not have_best or added < best.added:
                        best = c
                        have_best = True
                else:
                    self.cands.push_back(c)
        if best_only and have_best:
            self.cands.push_back(best)

    def feasible(self, int v, int origin, int dest, double request_time, double direct_time, double now):
        self._enumerate(v, origin, dest, request_time, direct_time, now, False)
        return [(c.i, c.j, c.added, c.t_pickup, c.t_dropoff) for c in self.cands]

    def best(self, int origin, int dest, double request_time, double direct_time, double now):
        cdef int v, k
        cdef bint found = False, best_used = False, skip
        cdef Cand c, bc
        cdef int bv = -1
        cdef double reach = self.max_wait * self.speed * (1.0 + 1e-9)
        cdef const double[:, ::1] dt = self.dist_to
        with nogil:
            for v in range(self.n_vehicles):
                skip = dt[origin, self.anchor_stop[v]] > reach
                if skip:
                    for k in range(<int>self.plans[v].size()):
                        if dt[origin, self.plans[v][k].stop] <= reach:
                            skip = False
                            break
                if skip:
                    continue
                self._enumerate(v, origin, dest, request_time, direct_time, now, True)
                if self.cands.size() == 0:
                    continue
                c = self.cands[0]
                if (not found or c.added < bc.added
                        or (c.added == bc.added and self.used[v] and not best_used)):
                    bc = c
                    bv = v
                    best_used = self.used[v]
                    found = True
        if not found:
            return None
        return (bv, bc.i, bc.j, bc.added, bc.t_pickup, bc.t_dropoff)

    def insert(self, int v, int i, int j, long long request_id, int origin, int dest,
               double request_time, double direct_time, double now):
        cdef vector[Action]* plan = &self.plans[v]
        cdef int L = <int>plan.size()
        cdef double speed = self.speed, dwell = self.dwell
        cdef double start = self._start(v, now)
        cdef int prev, k
        cdef double dep_prev, arr_p, dep_p, drop_deadline, shift_p, arr_d, shift_t
        cdef const double[:, ::1] dist = self.dist
        if i == 0:
            prev = self.anchor_stop[v]
            dep_prev = start
        else:
            prev = plan[0][i - 1].stop
            dep_prev = plan[0][i - 1].arrival + dwell
        arr_p = dep_prev + dist[prev, origin] / speed
        dep_p = arr_p + dwell
        if self.anchor_request:
            drop_deadline = request_time + direct_time + self.max_delay
        else:
            drop_deadline = arr_p + direct_time + self.max_delay
        shift_p = dep_p + dist[origin, plan[0][i].stop] / speed - plan[0][i].arrival if i < L else 0.0
        if j == i:
            arr_d = dep_p + dist[origin, dest] / speed
        else:
            k = j - 1
            arr_d = plan[0][k].arrival + shift_p + dwell + dist[plan[0][k].stop, dest] / speed
        shift_t = arr_d + dwell + dist[dest, plan[0][j].stop] / speed - plan[0][j].arrival if j < L else 0.0
        for k in range(i, j):
            plan[0][k].arrival = plan[0][k].arrival + shift_p
        for k in range(j, L):
            plan[0][k].arrival = plan[0][k].arrival + shift_t
        cdef double pickup_deadline = request_time + self.max_wait
        cdef Action a
        a.stop = dest
        a.kind = DROPOFF
        a.rid = request_id
        a.arrival = arr_d
        a.deadline = drop_deadline
        plan.insert(plan.begin() + j, a)
        a.stop = origin
        a.kind = PICKUP
        a.arrival = arr_p
        a.deadline = pickup_deadline
        plan.insert(plan.begin() + i, a)
        if L == 0:
            self.anchor_time[v] = start
        self.used[v] = 1
        return arr_p, arr_d, pickup_deadline, drop_deadline

    def stoplist(self, int v):
        return [(a.stop, a.kind, a.rid, a.arrival, a.deadline) for a in self.plans[v]]

    def state(self, int v):
        return (self.anchor_stop[v], self.anchor_time[v], self.onboard[v], bool(self.used[v]),
                self.odo_empty[v], self.odo_occupied[v])

    def take_log(self):
        out = [(r.vehicle, r.kind, r.rid, r.stop, r.arrival, r.frm, r.depart, r.leg, r.occupancy)
               for r in self.log]
        self.log.clear()
        return out
