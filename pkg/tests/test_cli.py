import csv
import json
import subprocess
import sys

import pytest

from conftest import build_requests, line_network
from ridepool.cli import main
from ridepool.demand import write_requests
from ridepool.engine import DemandWeighted, initial_stops
from ridepool.network import DistanceOracle, kmh, save_network

SYNTH = """seed = 3
[network]
grid = { rows = 6, cols = 6, spacing = 200 }
[demand]
synthetic = { rate_per_hour = 900, window = [0, 1800] }
[service]
fleet_size = 8
"""

CHARACTERISTICS = ("serviced_share", "relative_travel_time", "relative_driven_distance", "empty_mileage_share",
                   "avg_occupancy_incl", "avg_occupancy_excl", "empty_vehicles")


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def synth_cfg(tmp_path):
    p = tmp_path / "synth.toml"
    p.write_text(SYNTH, encoding="utf-8")
    return p


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def requests_scenario(tmp_path, triples, n=21, spacing=500.0, extra="", top=""):
    """Line network plus a requests file written next to a config."""
    net = line_network(n, spacing)
    save_network(net, tmp_path / "stops.csv", tmp_path / "edges.csv")
    reqs = build_requests(DistanceOracle(net), kmh(18.3), triples)
    write_requests(reqs, tmp_path / "requests.csv")
    cfg = tmp_path / "lin.toml"
    cfg.write_text(top + '[network]\nstops = "stops.csv"\nedges = "edges.csv"\n'
                   '[demand]\nrequests = "requests.csv"\n' + extra, encoding="utf-8")
    return net, reqs, cfg


def test_simulate_writes_summary(tmp_path, synth_cfg, capsys):
    out = tmp_path / "run"
    assert run("simulate", "--config", synth_cfg, "--preset", "berlin-center", "--out", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert all(k in summary for k in CHARACTERISTICS)
    assert summary["fleet_size"] == 8 and summary["seed"] == 3
    for name in ("outcomes.csv", "segments.csv", "vehicles.csv", "occupancy.csv", "config.json", "metadata.json"):
        assert (out / name).is_file()
    assert "served" in capsys.readouterr().out


def test_simulate_flag_overrides(tmp_path, synth_cfg):
    out = tmp_path / "run"
    assert run("simulate", "--config", synth_cfg, "--preset", "berlin", "--seed", 9, "--fleet", 2,
               "--out", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["fleet_size"] == 2 and summary["seed"] == 9
    assert len(rows(out / "vehicles.csv")) == 3


def test_simulate_missing_trips_names_path(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('[network]\ngrid = { rows = 2, cols = 2, spacing = 100 }\n'
                   '[demand]\ntrips = "missing/trips.csv"\nwindow = [0, 3600]\n', encoding="utf-8")
    assert run("simulate", "--config", cfg, "--preset", "berlin", "--out", tmp_path / "o") != 0
    assert "missing/trips.csv" in capsys.readouterr().err


def test_no_config_is_an_error(tmp_path, capsys):
    assert run("simulate", "--out", tmp_path / "o") == 1
    assert "--config" in capsys.readouterr().err


def test_simulate_twice_identical(tmp_path, synth_cfg):
    for d in ("a", "b"):
        assert run("simulate", "--config", synth_cfg, "--preset", "berlin-center", "--out", tmp_path / d) == 0
    for name in ("summary.json", "outcomes.csv", "segments.csv", "vehicles.csv", "occupancy.csv", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_sweep_cardinality(tmp_path, synth_cfg):
    out = tmp_path / "sw"
    assert run("sweep", "--config", synth_cfg, "--preset", "berlin-center", "--sizes", "10,20,30",
               "--replicates", 2, "--jobs", 1, "--out", out) == 0
    table = rows(out / "sweep.csv")
    assert table[0][0] == "fleet_size" and len(table) == 7
    assert [(r[0], r[-1]) for r in table[1:]] == [("10", "3"), ("10", "4"), ("20", "3"), ("20", "4"),
                                                  ("30", "3"), ("30", "4")]


def test_sweep_needs_sizes(tmp_path, synth_cfg):
    with pytest.raises(SystemExit):
        run("sweep", "--config", synth_cfg, "--preset", "berlin", "--out", tmp_path)


def test_min_fleet_one_request(tmp_path, capsys):
    _, _, cfg = requests_scenario(tmp_path, [(2, 3, 0)], n=4, spacing=200.0)
    assert run("min-fleet", "--config", cfg, "--preset", "berlin-center", "--bounds", "1,20",
               "--out", tmp_path / "mf") == 0
    assert "min_fleet = 1" in capsys.readouterr().out
    assert json.loads((tmp_path / "mf" / "min_fleet.json").read_text())["min_fleet"] == 1


def _two_cluster(tmp_path):
    net, reqs, cfg = requests_scenario(tmp_path, [(0, 1, 0), (20, 19, 0)], top='placement = "demand"\n')
    # a seed whose first two demand-weighted vehicles land at different ends
    seed = next(s for s in range(100) if sorted(initial_stops(net, 2, DemandWeighted(reqs), s)) == [0, 20])
    return cfg, seed


def test_min_fleet_two_clusters(tmp_path, capsys):
    cfg, seed = _two_cluster(tmp_path)
    assert run("min-fleet", "--config", cfg, "--preset", "berlin-center", "--seed", seed, "--bounds", "1,10",
               "--out", tmp_path / "mf") == 0
    assert "min_fleet = 2" in capsys.readouterr().out
    sweep_rows = rows(tmp_path / "mf" / "min_fleet_sweep.csv")
    assert {r[0]: r[1] for r in sweep_rows[1:]}["1"] == "0.5"


def test_min_fleet_not_found(tmp_path, capsys):
    cfg, seed = _two_cluster(tmp_path)
    assert run("min-fleet", "--config", cfg, "--preset", "berlin-center", "--seed", seed, "--bounds", "1,1",
               "--out", tmp_path / "mf") == 0
    assert "not found" in capsys.readouterr().out
    res = json.loads((tmp_path / "mf" / "min_fleet.json").read_text())
    assert res["found"] is False and res["min_fleet"] is None


def test_min_fleet_bad_bounds(tmp_path, synth_cfg):
    assert run("min-fleet", "--config", synth_cfg, "--preset", "berlin", "--bounds", "5,2",
               "--out", tmp_path) == 1


def test_cost_published_inputs(capsys):
    assert run("cost", "--fleet", 4688, "--fleet-km", 54000, "--private-km", 138500) == 0
    text = capsys.readouterr().out
    for value in ("84,384.00", "5,281.20", "18,866.47", "200,130,720.00", "17,611,503.36", "752,000,000.00"):
        assert value in text


def test_cost_from_summary_and_config(tmp_path, synth_cfg, capsys):
    run("simulate", "--config", synth_cfg, "--preset", "berlin-center", "--out", tmp_path / "r")
    prices = tmp_path / "prices.toml"
    prices.write_text("[cost]\nhourly_wage = 20.0\n", encoding="utf-8")
    assert run("cost", "--summary", tmp_path / "r" / "summary.json", "--config", prices,
               "--out", tmp_path / "c") == 0
    report = json.loads((tmp_path / "c" / "cost.json").read_text())
    assert report["report"]["wages"] == 160.0
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert report["params"]["n_travelers"] == summary["n_requests"]


def test_cost_missing_inputs(capsys):
    assert run("cost", "--fleet", 10) == 1
    assert "--fleet-km" in capsys.readouterr().err


def test_ingest_and_synth(tmp_path):
    net = line_network(5, 100)
    save_network(net, tmp_path / "stops.csv", tmp_path / "edges.csv")
    (tmp_path / "trips.csv").write_text(
        "trip_id,depart_time_s,origin_x,origin_y,dest_x,dest_y,distance_m,duration_s\n"
        "1,10,0,5,400,0,420,60\n2,20,100,0,110,3,15,9\n", encoding="utf-8")
    cfg = tmp_path / "i.toml"
    cfg.write_text('[network]\nstops = "stops.csv"\nedges = "edges.csv"\n'
                   '[demand]\ntrips = "trips.csv"\nwindow = [0, 3600]\n', encoding="utf-8")
    assert run("ingest", "--config", cfg, "--preset", "berlin", "--out", tmp_path / "i") == 0
    assert len(rows(tmp_path / "i" / "requests.csv")) == 2
    stats = json.loads((tmp_path / "i" / "ingest_stats.json").read_text())
    assert stats["n_same_stop"] == 1 and stats["n_kept"] == 1
    assert run("synth", "--config", cfg, "--preset", "berlin", "--out", tmp_path / "s") == 1


def test_analyze_without_rejections(tmp_path, capsys):
    _, _, cfg = requests_scenario(tmp_path, [(2, 3, 0)], n=4, spacing=200.0,
                                  extra="[service]\nfleet_size = 2\n")
    run("simulate", "--config", cfg, "--preset", "berlin-center", "--out", tmp_path / "r")
    assert run("analyze", tmp_path / "r") == 0
    assert rows(tmp_path / "r" / "mismatch_rejected_origin.csv") == [["stop_id", "x", "y", "category"]]
    assert len(rows(tmp_path / "r" / "mismatch_origin_free.csv")) == 4


def test_analyze_missing_dir(tmp_path):
    assert run("analyze", tmp_path / "nothing") == 1


def test_module_entry_point(tmp_path, synth_cfg):
    proc = subprocess.run([sys.executable, "-m", "ridepool", "synth", "--config", str(synth_cfg),
                           "--preset", "berlin", "--out", str(tmp_path / "s")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "s" / "requests.csv").is_file()
