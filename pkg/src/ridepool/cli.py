"""Command-line entry point: ``ridepool <command> [options]``.

Every command reads a TOML config (optionally layered on a named preset),
writes plain CSV/JSON files into ``--out`` and echoes the resolved config
next to them. Exit status is 0 only when all artifacts were written.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

from .config import PRESETS, RunConfig, config_from_dict, load_config
from .cost import CostParams, cost_report
from .demand import ingest_trips, read_requests, synth_requests, write_requests
from .engine import DemandWeighted, simulate
from .errors import ConfigError, RidepoolError
from .metrics import (busiest_vehicle, characteristics, min_fleet_search, mismatch_from_stops,
                      occupancy_series, sweep)
from .network import DistanceOracle, grid_network, load_network
from .outputs import metadata, version, write_json, write_mismatch, write_run, write_sweep

EXIT_OK = 0
EXIT_ERROR = 1


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {v}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


# ---------------------------------------------------------------- setup

def _config(args) -> RunConfig:
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "fleet", None) is not None:
        overrides.setdefault("service", {})["fleet_size"] = args.fleet
    if args.config is None and args.preset is None:
        raise ConfigError("no configuration given; use --config and/or --preset")
    return load_config(args.config, preset=args.preset, overrides=overrides)


def _network(cfg: RunConfig):
    if cfg.grid is not None:
        return grid_network(cfg.grid.rows, cfg.grid.cols, cfg.grid.spacing)
    return load_network(cfg.stops_file, cfg.edges_file)


def _demand(cfg: RunConfig, net, oracle):
    """Requests for the run, plus ingestion statistics when read from trips."""
    speed = cfg.params.vehicle_speed
    if cfg.trips_file is not None:
        return ingest_trips(cfg.trips_file, net, cfg.window, cfg.baseline_mode, speed=speed, oracle=oracle)
    if cfg.requests_file is not None:
        reqs = read_requests(cfg.requests_file, provenance="file", baseline_mode=cfg.baseline_mode,
                             window=cfg.window)
        bad = [r.request_id for r in reqs if not (0 <= r.origin_stop < net.n_stops and 0 <= r.dest_stop < net.n_stops)]
        if bad:
            raise ConfigError(f"{cfg.requests_file}: requests {bad[:5]} reference stops outside the network")
        return reqs, None
    s = cfg.synthetic
    return synth_requests(net, s.rate_per_hour / 3600.0, s.window, s.od_model, cfg.seed,
                          speed=speed, oracle=oracle), None


def _placement(cfg: RunConfig, requests):
    return DemandWeighted(requests) if cfg.placement == "demand" else "uniform"


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _common(out: Path, cfg: RunConfig, command: str, argv) -> None:
    write_json(out / "config.json", cfg.echo())
    write_json(out / "metadata.json", metadata(command, argv))


# ---------------------------------------------------------------- commands

def cmd_simulate(args, argv) -> int:
    cfg = _config(args)
    net = _network(cfg)
    oracle = DistanceOracle(net)
    requests, stats = _demand(cfg, net, oracle)
    out = _outdir(args)
    result = simulate(net, requests, cfg.params, _placement(cfg, requests), cfg.seed, oracle=oracle)
    ch = characteristics(result, requests, cfg.params, cfg.walk_mode)

    if cfg.occupancy_vehicles == "busiest":
        vids = [busiest_vehicle(result)] if result.served else []
    else:
        vids = list(cfg.occupancy_vehicles)
        bad = [v for v in vids if not 0 <= v < result.n_vehicles]
        if bad:
            raise ConfigError(f"output.occupancy_vehicles: unknown vehicle ids {bad}")
    write_run(out, result, requests, [occupancy_series(result, v) for v in vids])

    summary = ch.to_dict()
    summary.update(
        fleet_size=cfg.params.fleet_size,
        seed=cfg.seed,
        version=version(),
        private_distance=sum(r.baseline_distance for r in requests),
        params=asdict(cfg.params),
        config=cfg.echo(),
    )
    write_json(out / "summary.json", summary)
    if stats is not None:
        write_json(out / "ingest_stats.json", stats.to_dict())
    _common(out, cfg, "simulate", argv)
    print(f"served {ch.n_served}/{ch.n_requests} requests with {cfg.params.fleet_size} vehicles; "
          f"results in {out}")
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    cfg = _config(args)
    if not args.sizes:
        raise ConfigError("--sizes is required")
    net = _network(cfg)
    oracle = DistanceOracle(net)
    requests, _ = _demand(cfg, net, oracle)
    out = _outdir(args)
    seeds = [cfg.seed + r for r in range(args.replicates)]
    points = sweep(net, requests, cfg.params, args.sizes, seeds, _placement(cfg, requests),
                   cfg.walk_mode, jobs=args.jobs, oracle=oracle)
    write_sweep(out / "sweep.csv", points)
    _common(out, cfg, "sweep", argv)
    print(f"{len(points)} sweep points written to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_min_fleet(args, argv) -> int:
    cfg = _config(args)
    bounds = tuple(args.bounds) if args.bounds else cfg.search_bounds
    if len(bounds) != 2 or not 1 <= bounds[0] <= bounds[1]:
        raise ConfigError(f"--bounds must be LOWER,UPPER with 1 <= LOWER <= UPPER, got {bounds}")
    resolution = args.resolution or cfg.search_resolution
    net = _network(cfg)
    oracle = DistanceOracle(net)
    requests, _ = _demand(cfg, net, oracle)
    out = _outdir(args)
    res = min_fleet_search(net, requests, cfg.params, _placement(cfg, requests), cfg.seed, bounds,
                           resolution, oracle=oracle, walk_mode=cfg.walk_mode)
    write_sweep(out / "min_fleet_sweep.csv", res.points)
    write_json(out / "min_fleet.json", {"found": res.found, "min_fleet": res.min_fleet,
                                        "bounds": list(bounds), "resolution": resolution,
                                        "seed": cfg.seed, "version": version(), "config": cfg.echo()})
    _common(out, cfg, "min-fleet", argv)
    if res.found:
        print(f"min_fleet = {res.min_fleet}")
    else:
        print(f"not found: no fleet <= {bounds[1]} serves every request")
    return EXIT_OK


def cmd_ingest(args, argv) -> int:
    cfg = _config(args)
    if cfg.trips_file is None:
        raise ConfigError("ingest needs demand.trips in the config")
    net = _network(cfg)
    requests, stats = _demand(cfg, net, DistanceOracle(net, precompute=False))
    out = _outdir(args)
    write_requests(requests, out / "requests.csv")
    write_json(out / "ingest_stats.json", stats.to_dict())
    _common(out, cfg, "ingest", argv)
    print(f"kept {stats.n_kept} of {stats.n_in_window} trips in the window; "
          f"mean walk {stats.mean_walk:.1f} m")
    return EXIT_OK


def cmd_synth(args, argv) -> int:
    cfg = _config(args)
    if cfg.synthetic is None:
        raise ConfigError("synth needs demand.synthetic in the config")
    net = _network(cfg)
    requests, _ = _demand(cfg, net, DistanceOracle(net, precompute=False))
    out = _outdir(args)
    write_requests(requests, out / "requests.csv")
    _common(out, cfg, "synth", argv)
    print(f"{len(requests)} requests written to {out / 'requests.csv'}")
    return EXIT_OK


def cmd_cost(args, argv) -> int:
    overrides = load_config_cost(args.config) if args.config is not None else {}
    if args.summary is not None:
        path = Path(args.summary)
        if not path.is_file():
            raise ConfigError(f"summary file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            s = json.load(fh)
        try:
            fleet = int(s["fleet_size"])
            fleet_km = float(s["fleet_distance"]) / 1000.0
            private_km = float(s["private_distance"]) / 1000.0
            # the run's own travelers, unless the config says otherwise
            overrides.setdefault("n_travelers", int(s["n_requests"]) or 1)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: summary lacks {exc}") from exc
        if args.fleet is not None:
            fleet = args.fleet
    else:
        missing = [f for f in ("fleet", "fleet_km", "private_km") if getattr(args, f) is None]
        if missing:
            raise ConfigError("cost needs --summary or all of --fleet, --fleet-km, --private-km "
                              f"(missing {', '.join('--' + m.replace('_', '-') for m in missing)})")
        fleet, fleet_km, private_km = args.fleet, args.fleet_km, args.private_km
    try:
        p = CostParams(**overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[cost]: {exc}") from exc
    try:
        report = cost_report(fleet, fleet_km, private_km, p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    print(f"{'':38s}{'pooling':>18s}{'private':>18s}")
    for label, a, b in report.table():
        fa = f"{a:18,.2f}" if a is not None else f"{'-':>18s}"
        fb = f"{b:18,.2f}" if b is not None else f"{'-':>18s}"
        print(f"{label:38s}{fa}{fb}")
    if args.out is not None:
        out = _outdir(args)
        write_json(out / "cost.json", {"inputs": {"fleet_size": fleet, "fleet_km": fleet_km,
                                                  "private_km": private_km},
                                       "params": asdict(p), "report": report.to_dict()})
        write_json(out / "metadata.json", metadata("cost", argv))
    return EXIT_OK


def load_config_cost(path) -> dict:
    """The ``[cost]`` table of a config file, checked against :class:`CostParams`."""
    from .config import tomllib
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            table = tomllib.load(fh).get("cost", {})
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    known = {f.name for f in fields(CostParams)}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown cost field(s): {', '.join(sorted(unknown))}")
    return table


def _read_rows(path: Path, columns):
    if not path.is_file():
        raise ConfigError(f"missing result artifact: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in columns):
            raise ConfigError(f"{path}: expected columns {', '.join(columns)}")
        return list(reader)


def cmd_analyze(args, argv) -> int:
    run = Path(args.result_dir)
    if not run.is_dir():
        raise ConfigError(f"result directory not found: {run}")
    if args.config is not None or args.preset is not None:
        cfg = _config(args)
    else:
        echo = run / "config.json"
        if not echo.is_file():
            raise ConfigError(f"missing result artifact: {echo} (or pass --config)")
        with open(echo, encoding="utf-8") as fh:
            cfg = config_from_dict(json.load(fh), run)
    net = _network(cfg)
    outcomes = _read_rows(run / "outcomes.csv", ("origin_stop", "served"))
    vehicles = _read_rows(run / "vehicles.csv", ("final_stop", "ever_used"))
    try:
        report = mismatch_from_stops(
            [int(v["final_stop"]) for v in vehicles if v["ever_used"] == "0"],
            [int(o["origin_stop"]) for o in outcomes if o["served"] == "0"],
            [int(o["origin_stop"]) for o in outcomes],
            net.n_stops,
        )
        rows_ok = all(0 <= s < net.n_stops for group in asdict(report).values() for s in group)
    except ValueError as exc:
        raise ConfigError(f"{run}: result artifacts do not match the network ({exc})") from exc
    if not rows_ok:
        raise ConfigError(f"{run}: result artifacts reference stops outside the network")
    out = Path(args.out) if args.out else run
    out.mkdir(parents=True, exist_ok=True)
    paths = write_mismatch(out, report, net)
    write_json(out / "analyze_metadata.json", metadata("analyze", argv))
    print(f"unused-vehicle stops {len(report.unused_vehicle_stops)}, rejected origins "
          f"{len(report.rejected_origin_stops)}, overlap {len(report.overlap_stops)}; wrote {paths[0]}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ridepool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, out_required=True, fleet=True):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", type=Path, help="TOML run configuration")
        p.add_argument("--preset", choices=sorted(PRESETS), help="parameter preset layered under --config")
        p.add_argument("--seed", type=_u64, help="override the config seed")
        if out_required:
            p.add_argument("--out", required=True, help="output directory")
        if fleet:
            p.add_argument("--fleet", type=_positive, help="override service.fleet_size")
        p.set_defaults(func=func)
        return p

    add("simulate", cmd_simulate, "run one simulation and write per-run artifacts")
    p = add("sweep", cmd_sweep, "evaluate a list of fleet sizes", fleet=False)
    p.add_argument("--sizes", type=_int_list, required=True, help="comma-separated fleet sizes")
    p.add_argument("--replicates", type=_positive, default=1, help="placement seeds per size (seed, seed+1, ...)")
    p.add_argument("--jobs", type=_positive, default=None, help="worker processes (default: all cores)")
    p = add("min-fleet", cmd_min_fleet, "search the smallest fleet that serves every request", fleet=False)
    p.add_argument("--bounds", type=_int_list, help="LOWER,UPPER fleet sizes (default from [search])")
    p.add_argument("--resolution", type=_positive, help="search step (default from [search])")
    add("ingest", cmd_ingest, "map a trips file onto stop-to-stop requests", fleet=False)
    add("synth", cmd_synth, "draw synthetic Poisson requests", fleet=False)

    p = sub.add_parser("cost", help="peak-hour cost comparison, pooling fleet vs private cars")
    p.add_argument("--summary", help="summary.json of a simulate run")
    p.add_argument("--fleet", type=_positive, help="pooling fleet size")
    p.add_argument("--fleet-km", type=float, help="fleet kilometers driven in the peak hour")
    p.add_argument("--private-km", type=float, help="private-car kilometers for the same trips")
    p.add_argument("--config", type=Path, help="config file whose [cost] table overrides prices")
    p.add_argument("--out", help="directory for cost.json")
    p.set_defaults(func=cmd_cost)

    p = add("analyze", cmd_analyze, "unused-vehicle vs rejected-origin analysis of a run",
            out_required=False, fleet=False)
    p.add_argument("result_dir", help="output directory of a simulate run")
    p.add_argument("--out", help="where to write the CSVs (default: the result directory)")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except (RidepoolError, OSError) as exc:
        print(f"ridepool {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
