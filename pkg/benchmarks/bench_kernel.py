"""Compiled vs pure-Python kernels on a synthetic grid scenario.

    python3 benchmarks/bench_kernel.py --rows 20 --cols 20 --rate 2400 --fleet 150

Times all-pairs shortest paths and one full simulation per backend, and
checks that both backends produce the same result.
"""

import argparse
import time

from ridepool.core import backends
from ridepool.engine import ServiceParams, simulate
from ridepool.demand import synth_requests
from ridepool.network import DistanceOracle, grid_network, kmh


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20)
    ap.add_argument("--cols", type=int, default=20)
    ap.add_argument("--spacing", type=float, default=200.0)
    ap.add_argument("--rate", type=float, default=2400.0, help="requests per hour")
    ap.add_argument("--fleet", type=int, default=150)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    net = grid_network(args.rows, args.cols, args.spacing)
    oracle = DistanceOracle(net)
    params = ServiceParams(360, 420, kmh(18.3), fleet_size=args.fleet)
    reqs = synth_requests(net, args.rate / 3600, (0, 3600), seed=args.seed, speed=params.vehicle_speed,
                          oracle=oracle)
    indptr, indices, weights = net._csr
    print(f"{net.n_stops} stops, {len(reqs)} requests, {args.fleet} vehicles")

    results, timings = {}, {}
    for name, mod in backends().items():
        t_apsp, _ = best_of(lambda: mod.all_pairs(indptr, indices, weights), args.repeat)
        t_sim, res = best_of(lambda: simulate(net, reqs, params, seed=args.seed, oracle=oracle, backend=name),
                             args.repeat)
        results[name], timings[name] = res, (t_apsp, t_sim)
        print(f"{name:>9s}: all-pairs {t_apsp:8.3f} s   simulate {t_sim:8.3f} s   "
              f"served {len(res.served)}/{len(reqs)}")
    if "compiled" in timings:
        (ap_c, sim_c), (ap_p, sim_p) = timings["compiled"], timings["python"]
        print(f"speedup: all-pairs x{ap_p / ap_c:.1f}, simulate x{sim_p / sim_c:.1f}")
        print("identical results:", results["compiled"] == results["python"])
    else:
        print("compiled extension not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()
