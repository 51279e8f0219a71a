"""Stop networks, shortest paths and nearest-stop lookup.

Distances are edge-length based (meters). Travel times are derived from a
single fleet-wide average speed, see :func:`travel_time`.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import core
from .errors import ParseError, ValidationError

# relative tolerance used only when reconstructing paths from distance tables
_PATH_RTOL = 1e-12


class Coord(NamedTuple):
    x: float
    y: float


class PathResult(NamedTuple):
    distance: float
    path: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class StopNetwork:
    """Directed, strongly connected stop graph.

    ``positions`` is an ``(n, 2)`` array of planar coordinates in meters, row
    ``i`` belonging to stop ``i``. ``edges`` holds ``(from, to, length_m)``.
    Parallel edges are allowed; routing uses the shortest one.
    """

    positions: np.ndarray
    edges: tuple[tuple[int, int, float], ...]
    _csr: tuple = field(init=False, repr=False)
    _rcsr: tuple = field(init=False, repr=False)

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValidationError("positions must have shape (n, 2)")
        if not np.all(np.isfinite(pos)):
            raise ValidationError("stop coordinates must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        edges = tuple((int(a), int(b), float(w)) for a, b, w in self.edges)
        object.__setattr__(self, "edges", edges)
        n = len(pos)
        for k, (a, b, w) in enumerate(edges):
            if not (0 <= a < n and 0 <= b < n):
                raise ValidationError(f"edge {k} ({a}->{b}) references an unknown stop")
            if not (w > 0 and math.isfinite(w)):
                raise ValidationError(f"edge {k} ({a}->{b}) has non-positive length {w}")
        object.__setattr__(self, "_csr", _to_csr(n, edges, reverse=False))
        object.__setattr__(self, "_rcsr", _to_csr(n, edges, reverse=True))
        missing = unreachable_stops(self)
        if missing:
            shown = ", ".join(str(s) for s in missing[:10])
            more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
            raise ValidationError(f"network is not strongly connected; unreachable stops: {shown}{more}")

    @property
    def n_stops(self) -> int:
        return len(self.positions)

    @property
    def stops(self) -> list[tuple[int, Coord]]:
        return [(i, Coord(float(x), float(y))) for i, (x, y) in enumerate(self.positions)]

    def position(self, stop: int) -> Coord:
        x, y = self.positions[stop]
        return Coord(float(x), float(y))

    def out_edges(self, stop: int):
        indptr, indices, weights = self._csr
        lo, hi = indptr[stop], indptr[stop + 1]
        return zip(indices[lo:hi].tolist(), weights[lo:hi].tolist())

    def check_stop(self, stop: int) -> None:
        if not (0 <= stop < self.n_stops):
            raise ValueError(f"unknown stop id {stop}")


def _to_csr(n, edges, reverse):
    # keeps only the shortest of parallel edges
    best: dict[tuple[int, int], float] = {}
    for a, b, w in edges:
        key = (b, a) if reverse else (a, b)
        if key not in best or w < best[key]:
            best[key] = w
    keys = sorted(best)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for a, _ in keys:
        indptr[a + 1] += 1
    np.cumsum(indptr, out=indptr)
    indices = np.array([b for _, b in keys], dtype=np.int64)
    weights = np.array([best[k] for k in keys], dtype=np.float64)
    return indptr, indices, weights


def unreachable_stops(net: StopNetwork) -> list[int]:
    """Stops not mutually reachable with stop 0 (empty list if strongly connected)."""
    n = net.n_stops
    if n == 0:
        return []
    bad = set()
    for indptr, indices, _ in (net._csr, net._rcsr):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in indices[indptr[u]:indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(int(v))
        bad.update(np.flatnonzero(~seen).tolist())
    return sorted(bad)


def load_network(stops_file, edges_file) -> StopNetwork:
    """Read a network from the ``stop_id,x,y`` and ``from,to,length_m`` CSV files."""
    stops_file, edges_file = Path(stops_file), Path(edges_file)
    coords: dict[int, tuple[float, float]] = {}
    for row_no, row in _csv_rows(stops_file, ("stop_id", "x", "y")):
        try:
            sid, x, y = int(row["stop_id"]), float(row["x"]), float(row["y"])
        except (TypeError, ValueError) as exc:
            raise ParseError(stops_file, row_no, f"cannot parse stop row {row!r}") from exc
        if sid in coords:
            raise ValidationError(f"{stops_file}:{row_no}: duplicate stop_id {sid}")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValidationError(f"{stops_file}:{row_no}: non-finite coordinate for stop {sid}")
        coords[sid] = (x, y)
    n = len(coords)
    if sorted(coords) != list(range(n)):
        gap = next(i for i in range(n + 1) if i not in coords)
        raise ValidationError(f"{stops_file}: stop ids must be dense 0..{n - 1}; missing {gap}")

    edges = []
    for row_no, row in _csv_rows(edges_file, ("from", "to", "length_m")):
        try:
            a, b, w = int(row["from"]), int(row["to"]), float(row["length_m"])
        except (TypeError, ValueError) as exc:
            raise ParseError(edges_file, row_no, f"cannot parse edge row {row!r}") from exc
        if a not in coords or b not in coords:
            raise ValidationError(f"{edges_file}:{row_no}: edge {a}->{b} references an unknown stop")
        if not (w > 0 and math.isfinite(w)):
            raise ValidationError(f"{edges_file}:{row_no}: edge {a}->{b} has non-positive length {w}")
        edges.append((a, b, w))

    positions = np.array([coords[i] for i in range(n)], dtype=np.float64).reshape(n, 2)
    return StopNetwork(positions, tuple(edges))


def _csv_rows(path: Path, columns):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in columns):
            raise ParseError(path, 1, f"expected header {','.join(columns)}, got {reader.fieldnames}")
        for row in reader:
            yield reader.line_num, row


def save_network(net: StopNetwork, stops_file, edges_file) -> None:
    with open(stops_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stop_id", "x", "y"])
        for i, (x, y) in enumerate(net.positions.tolist()):
            w.writerow([i, repr(x), repr(y)])
    with open(edges_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from", "to", "length_m"])
        for a, b, length in net.edges:
            w.writerow([a, b, repr(length)])


def grid_network(rows: int, cols: int, spacing: float) -> StopNetwork:
    """Lattice of ``rows x cols`` stops with bidirectional 4-neighbour edges.

    Stop ``r * cols + c`` sits at ``(c * spacing, r * spacing)``.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {rows}x{cols}")
    if not spacing > 0:
        raise ValueError(f"grid spacing must be positive, got {spacing}")
    spacing = float(spacing)
    positions = [(c * spacing, r * spacing) for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            s = r * cols + c
            if c + 1 < cols:
                edges += [(s, s + 1, spacing), (s + 1, s, spacing)]
            if r + 1 < rows:
                edges += [(s, s + cols, spacing), (s + cols, s, spacing)]
    return StopNetwork(np.array(positions, dtype=np.float64).reshape(-1, 2), tuple(edges))


def travel_time(distance: float, speed: float) -> float:
    """Seconds needed for ``distance`` meters at ``speed`` m/s."""
    if not speed > 0:
        raise ValueError(f"speed must be positive, got {speed}")
    if distance < 0:
        raise ValueError(f"distance must be non-negative, got {distance}")
    return distance / speed


def kmh(speed_kmh: float) -> float:
    """km/h to m/s."""
    return speed_kmh / 3.6


def single_source(net: StopNetwork, source: int, reverse: bool = False) -> np.ndarray:
    """Dijkstra distances from ``source`` (or to it, with ``reverse``)."""
    net.check_stop(source)
    indptr, indices, weights = net._rcsr if reverse else net._csr
    return core.dijkstra(indptr, indices, weights, source)


def _trace_path(net, source, target, dist_from, dist_to) -> tuple[int, ...]:
    # Greedy walk along edges that stay on some shortest path; taking the
    # smallest admissible successor yields the lexicographically smallest path.
    total = dist_from[target]
    tol = _PATH_RTOL * max(1.0, total)
    path = [source]
    u = source
    while u != target:
        du = dist_from[u]
        nxt = None
        for v, w in net.out_edges(u):
            if abs(du + w + dist_to[v] - total) <= tol and dist_to[v] < dist_to[u]:
                nxt = v
                break
        if nxt is None:  # pragma: no cover - guarded by strong connectivity
            raise RuntimeError(f"path reconstruction failed at stop {u}")
        path.append(nxt)
        u = nxt
    return tuple(path)


def shortest_path(net: StopNetwork, source: int, target: int) -> PathResult:
    """Minimal-distance path; ties go to the lexicographically smallest stop sequence."""
    net.check_stop(source)
    net.check_stop(target)
    if source == target:
        return PathResult(0.0, (source,))
    dist_from = single_source(net, source)
    dist_to = single_source(net, target, reverse=True)
    return PathResult(float(dist_from[target]), _trace_path(net, source, target, dist_from, dist_to))


def nearest_stop(net: StopNetwork, p) -> tuple[int, float]:
    """Closest stop to point ``p`` by Euclidean distance (smallest id on ties)."""
    ids, dists = nearest_stops(net, np.asarray([p], dtype=np.float64))
    return int(ids[0]), float(dists[0])


def nearest_stops(net: StopNetwork, points: np.ndarray, chunk: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`nearest_stop` for an ``(m, 2)`` array of points."""
    if net.n_stops == 0:
        raise ValueError("network has no stops")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    pos = net.positions
    ids = np.empty(len(points), dtype=np.int64)
    dists = np.empty(len(points), dtype=np.float64)
    for lo in range(0, len(points), chunk):
        block = points[lo:lo + chunk]
        dx = block[:, None, 0] - pos[None, :, 0]
        dy = block[:, None, 1] - pos[None, :, 1]
        sq = dx * dx + dy * dy
        best = np.argmin(sq, axis=1)  # first minimum -> smallest id
        ids[lo:lo + chunk] = best
        dists[lo:lo + chunk] = np.sqrt(sq[np.arange(len(block)), best])
    return ids, dists


class DistanceOracle:
    """Many-to-many distance and path provider over a fixed network.

    With ``precompute=True`` (the default) the full distance matrix is built
    up front by the compiled core; otherwise rows are computed on first use
    and cached. Either way answers match :func:`shortest_path` exactly.
    """

    def __init__(self, net: StopNetwork, precompute: bool = True):
        self.net = net
        self._rows: dict[int, np.ndarray] = {}
        self._cols: dict[int, np.ndarray] = {}
        self._matrix = None
        if precompute:
            self.matrix()

    def matrix(self) -> np.ndarray:
        """Dense ``(n, n)`` distance matrix, row = source."""
        if self._matrix is None:
            indptr, indices, weights = self.net._csr
            m = core.all_pairs(indptr, indices, weights)
            m.setflags(write=False)
            self._matrix = m
        return self._matrix

    def matrix_to(self) -> np.ndarray:
        """Transposed matrix (row = target), shared with :meth:`matrix` when symmetric."""
        m = self.matrix()
        if not hasattr(self, "_matrix_t"):
            if np.array_equal(m, m.T):
                self._matrix_t = m
            else:
                mt = np.ascontiguousarray(m.T)
                mt.setflags(write=False)
                self._matrix_t = mt
        return self._matrix_t

    def row(self, source: int) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix[source]
        if source not in self._rows:
            self._rows[source] = single_source(self.net, source)
        return self._rows[source]

    def col(self, target: int) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix[:, target]
        if target not in self._cols:
            self._cols[target] = single_source(self.net, target, reverse=True)
        return self._cols[target]

    def distance(self, source: int, target: int) -> float:
        return float(self.row(source)[target])

    def query(self, source: int, target: int) -> PathResult:
        self.net.check_stop(source)
        self.net.check_stop(target)
        if source == target:
            return PathResult(0.0, (source,))
        dist_from = self.row(source)
        dist_to = self.col(target)
        return PathResult(float(dist_from[target]), _trace_path(self.net, source, target, dist_from, dist_to))


def distance_oracle(net: StopNetwork, precompute: bool = True) -> DistanceOracle:
    return DistanceOracle(net, precompute=precompute)
