import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ridepool.core import backends  # noqa: E402
from ridepool.demand import make_request, request_set  # noqa: E402
from ridepool.network import DistanceOracle, StopNetwork, grid_network  # noqa: E402

BACKENDS = sorted(backends())


def line_network(n, spacing=100.0):
    """Stops 0..n-1 on the x axis, neighbours joined in both directions."""
    edges = [e for k in range(n - 1) for e in ((k, k + 1, spacing), (k + 1, k, spacing))]
    return StopNetwork([(k * spacing, 0.0) for k in range(n)], edges)


def build_requests(oracle, speed, triples, **kw):
    """Requests from ``(origin, dest, time)`` triples, ids in list order."""
    return request_set([make_request(k, o, d, t, oracle, speed) for k, (o, d, t) in enumerate(triples)], **kw)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def grid5():
    net = grid_network(5, 5, 100.0)
    return net, DistanceOracle(net)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
