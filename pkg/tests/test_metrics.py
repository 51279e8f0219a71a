import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from conftest import build_requests, line_network
from ridepool.demand import make_request, request_set, synth_requests
from ridepool.engine import ServiceParams, simulate
from ridepool.metrics import (MISMATCH_CATEGORIES, SWEEP_COLUMNS, OccupancySeries, WalkMode, busiest_vehicle,
                              characteristics, min_fleet_search, mismatch_analysis, occupancy_series,
                              reciprocal_product, sweep)
from ridepool.network import DistanceOracle, grid_network

SPEED = 10.0


def params(**kw):
    base = dict(max_wait=300.0, max_delay=300.0, vehicle_speed=SPEED, seat_capacity=6)
    base.update(kw)
    return ServiceParams(**base)


def test_all_rejected_is_private_car_fallback():
    net = line_network(30, 100)
    oracle = DistanceOracle(net)
    reqs = build_requests(oracle, SPEED, [(29, 25, 0), (28, 20, 5)])
    p = params(max_wait=60.0)
    res = simulate(net, reqs, p, placement=[0], oracle=oracle)
    ch = characteristics(res, reqs, p)
    assert ch.serviced_share == 0 and ch.relative_travel_time == 1 and ch.relative_driven_distance == 1
    assert ch.empty_mileage_share == 0 and ch.empty_vehicles == 1


def test_single_solo_trip():
    net = line_network(6, 100)
    oracle = DistanceOracle(net)
    reqs = build_requests(oracle, SPEED, [(1, 5, 10)])
    p = params()
    ch = characteristics(simulate(net, reqs, p, placement=[1], oracle=oracle), reqs, p)
    assert (ch.relative_travel_time, ch.relative_driven_distance, ch.avg_occupancy_excl) == (1.0, 1.0, 1.0)
    assert ch.avg_occupancy_incl == 1.0 and ch.empty_mileage_share == 0.0
    assert reciprocal_product(ch) == 1.0


def test_walk_time_counts_toward_travel_time():
    net = line_network(6, 100)
    oracle = DistanceOracle(net)
    reqs = request_set([make_request(0, 1, 5, 0.0, oracle, SPEED, walk_in=50.0, walk_out=25.0)])
    p = params()
    res = simulate(net, reqs, p, placement=[1], oracle=oracle)
    fixed = characteristics(res, reqs, p, WalkMode("fixed", per_leg=20.0))
    by_speed = characteristics(res, reqs, p, WalkMode("speed", speed=1.25))
    assert fixed.relative_travel_time == pytest.approx((40 + 40) / 40)
    assert by_speed.relative_travel_time == pytest.approx((40 + 60) / 40)


def test_walk_mode_validation():
    with pytest.raises(ValueError):
        WalkMode("teleport")


def test_characteristics_reject_foreign_result(grid5):
    net, oracle = grid5
    a = build_requests(oracle, SPEED, [(0, 3, 0)])
    b = build_requests(oracle, SPEED, [(0, 3, 0), (1, 4, 1)])
    with pytest.raises(ValueError):
        characteristics(simulate(net, a, params(), oracle=oracle), b)


def test_no_detour_chain_identity():
    # nested same-direction rides picked up and dropped on the way: no detour at all
    net = line_network(9, 100)
    oracle = DistanceOracle(net)
    reqs = build_requests(oracle, SPEED, [(0, 8, 0), (1, 7, 0), (2, 6, 0)])
    p = params()
    res = simulate(net, reqs, p, placement=[0], oracle=oracle)
    ch = characteristics(res, reqs, p)
    assert ch.serviced_share == 1 and ch.empty_mileage_share == 0
    assert abs(reciprocal_product(ch) - 1) < 1e-9
    assert ch.avg_occupancy_excl == pytest.approx((8 + 6 + 4) / 8)


def test_occupancy_unused_vehicle(grid5):
    net, oracle = grid5
    reqs = build_requests(oracle, SPEED, [(0, 1, 0)])
    res = simulate(net, reqs, params(fleet_size=2), placement=[0, 24], oracle=oracle)
    s = occupancy_series(res, 1)
    assert [v for _, v in s.steps] == [0] and s.time_average() == 0.0
    with pytest.raises(ValueError):
        occupancy_series(res, 2)


def test_occupancy_pickup_and_dropoff_steps():
    net = line_network(11, 100)
    oracle = DistanceOracle(net)
    reqs = build_requests(oracle, SPEED, [(1, 10, 0)], window=(0, 200))
    res = simulate(net, reqs, params(), placement=[0], oracle=oracle)
    s = occupancy_series(res, 0)
    assert s.steps == ((0.0, 0), (10.0, 1), (100.0, 0))
    assert s.value_at(50) == 1 and s.value_at(100) == 0
    assert s.time_average() == pytest.approx(0.9)
    trimmed = occupancy_series(res, 0, trim=(50, 150))
    assert trimmed.steps == ((50, 1), (100.0, 0), (150, 0))
    assert trimmed.time_average() == pytest.approx(0.5)


def test_time_average_by_hand():
    s = OccupancySeries(0, ((0.0, 0), (10.0, 2), (30.0, 1), (40.0, 0)))
    assert s.time_average() == pytest.approx((2 * 20 + 10) / 40)
    assert s.time_average(20, 35) == pytest.approx((2 * 10 + 5) / 15)


def test_busiest_vehicle(grid5):
    net, oracle = grid5
    reqs = build_requests(oracle, SPEED, [(0, 1, 0), (24, 23, 1), (23, 22, 20)])
    res = simulate(net, reqs, params(fleet_size=2), placement=[0, 24], oracle=oracle)
    assert busiest_vehicle(res) == 1


def test_min_fleet_one_request(grid5):
    net, oracle = grid5
    reqs = build_requests(oracle, SPEED, [(3, 17, 0)])
    found = min_fleet_search(net, reqs, params(max_wait=900.0), bounds=(1, 50), oracle=oracle)
    assert found.found and found.min_fleet == 1


def two_cluster():
    net = line_network(21, 500)
    oracle = DistanceOracle(net)
    reqs = build_requests(oracle, SPEED, [(0, 1, 0), (20, 19, 0)])
    return net, oracle, reqs, params(max_wait=360.0, max_delay=300.0)


def test_min_fleet_two_clusters():
    net, oracle, reqs, p = two_cluster()
    found = min_fleet_search(net, reqs, p, placement=[0, 20, 10, 5, 15], bounds=(1, 5), oracle=oracle)
    assert found.min_fleet == 2
    by_size = {pt.fleet_size: pt.characteristics.serviced_share for pt in found.points}
    assert by_size[1] == 0.5 and by_size[2] == 1.0


def test_min_fleet_not_found():
    net, oracle, reqs, p = two_cluster()
    found = min_fleet_search(net, reqs, p, placement=[0, 1, 2, 20], bounds=(1, 3), oracle=oracle)
    assert not found.found and found.min_fleet is None
    assert max(pt.fleet_size for pt in found.points) == 3


@pytest.mark.parametrize("resolution", [1, 3, 7])
def test_min_fleet_predecessor_fails(resolution):
    net = grid_network(8, 8, 150)
    oracle = DistanceOracle(net)
    reqs = synth_requests(net, 0.5, (0, 900), seed=4, speed=SPEED, oracle=oracle)
    p = params(max_wait=120.0, max_delay=120.0)
    found = min_fleet_search(net, reqs, p, seed=1, bounds=(2, 400), resolution=resolution, oracle=oracle)
    assert found.found
    by_size = {pt.fleet_size: pt.characteristics.serviced_share for pt in found.points}
    assert by_size[found.min_fleet] == 1.0
    assert by_size[found.min_fleet - resolution] < 1.0


def test_min_fleet_bad_bounds(grid5):
    net, oracle = grid5
    reqs = build_requests(oracle, SPEED, [(0, 1, 0)])
    with pytest.raises(ValueError):
        min_fleet_search(net, reqs, params(), bounds=(5, 2))
    with pytest.raises(ValueError):
        min_fleet_search(net, reqs, params(), resolution=0)


def test_sweep_cardinality_and_parallel_equality():
    net = grid_network(5, 5, 150)
    oracle = DistanceOracle(net)
    reqs = synth_requests(net, 0.2, (0, 600), seed=2, speed=SPEED, oracle=oracle)
    serial = sweep(net, reqs, params(), [1, 2, 4], seeds=[0, 1], oracle=oracle)
    assert [(pt.fleet_size, pt.seed) for pt in serial] == [(1, 0), (1, 1), (2, 0), (2, 1), (4, 0), (4, 1)]
    assert sweep(net, reqs, params(), [1, 2, 4], seeds=[0, 1], jobs=2) == serial
    assert all(len(pt.row()) == len(SWEEP_COLUMNS) for pt in serial)


def test_sweep_serviced_share_trend():
    net = grid_network(12, 12, 200)
    speed = 18.3 / 3.6
    oracle = DistanceOracle(net)
    reqs = synth_requests(net, 1500 / 3600, (0, 1800), seed=6, speed=speed, oracle=oracle)
    sizes = list(range(5, 85, 8))
    pts = sweep(net, reqs, ServiceParams(360.0, 420.0, speed), sizes, seeds=[6], oracle=oracle)
    shares = [pt.characteristics.serviced_share for pt in pts]
    assert len(pts) >= 8 and spearmanr(sizes, shares).statistic > 0
    assert shares[-1] == 1.0


def test_mismatch_everything_served(grid5):
    net, oracle = grid5
    reqs = build_requests(oracle, SPEED, [(0, 4, 0), (24, 20, 0)])
    res = simulate(net, reqs, params(fleet_size=2), placement=[0, 24], oracle=oracle)
    rep = mismatch_analysis(res, reqs, net)
    assert rep.unused_vehicle_stops == () and rep.rejected_origin_stops == ()
    assert set(rep.origin_free_stops) == set(range(25)) - {0, 24}


def test_mismatch_north_demand_south_vehicles():
    net = grid_network(20, 10, 200)  # row r has y = 200 r
    oracle = DistanceOracle(net)
    rng = np.random.default_rng(0)
    north = [s for s in range(net.n_stops) if s // 10 >= 15]
    south = [s for s in range(net.n_stops) if s // 10 <= 4]
    triples = []
    for t in range(0, 1200, 10):
        o, d = rng.choice(north, size=2, replace=False)
        triples.append((int(o), int(d), t))
    speed = 18.3 / 3.6
    reqs = build_requests(oracle, speed, triples)
    p = ServiceParams(360.0, 420.0, speed, fleet_size=15)
    placement = [north[3], north[27]] + [int(s) for s in rng.choice(south, size=13, replace=False)]
    res = simulate(net, reqs, p, placement=placement, oracle=oracle)
    rep = mismatch_analysis(res, reqs, net)
    assert rep.rejected_origin_stops and rep.unused_vehicle_stops
    assert set(rep.unused_vehicle_stops) <= set(south)
    assert set(rep.rejected_origin_stops) <= set(north)
    assert set(rep.overlap_stops) == set(rep.unused_vehicle_stops)  # no demand in the south at all
    rows = rep.rows(net)
    assert {r[3] for r in rows} <= set(MISMATCH_CATEGORIES)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), fleet=st.integers(1, 10), walk=st.sampled_from(["speed", "fixed"]))
def test_characteristic_properties(seed, fleet, walk):
    net = grid_network(6, 6, 120)
    oracle = DistanceOracle(net)
    reqs = synth_requests(net, 0.3, (0, 900), seed=seed, speed=SPEED, oracle=oracle)
    p = params(max_wait=150.0, max_delay=100.0, fleet_size=fleet)
    wm = WalkMode(walk)
    res = simulate(net, reqs, p, seed=seed, oracle=oracle)
    ch = characteristics(res, reqs, p, wm)
    assert ch == characteristics(res, reqs, p, wm)
    if ch.fleet_distance > 0:
        occupied = ch.fleet_distance - ch.empty_distance
        assert ch.empty_mileage_share + occupied / ch.fleet_distance == pytest.approx(1.0, abs=1e-15)
    assert 0 <= ch.serviced_share <= 1 and 0 <= ch.empty_mileage_share <= 1
    assert ch.avg_occupancy_incl <= ch.avg_occupancy_excl <= p.seat_capacity
    by_id = {r.request_id: r for r in reqs}
    for o in res.served:
        r = by_id[o.request_id]
        t = wm.time(r.walk_in) + o.dropoff_time - r.request_time + wm.time(r.walk_out)
        bound = r.baseline_time + p.max_wait + p.max_delay + wm.time(r.walk_in) + wm.time(r.walk_out)
        assert t <= bound + 1e-6
    if not reqs.requests:
        assert math.isnan(ch.serviced_share)
