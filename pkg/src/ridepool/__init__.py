"""Ride-pooling fleet simulation: stop networks, demand, insertion dispatch and pooling metrics."""

__version__ = "0.1.0"

from .core import BACKEND  # noqa: E402
from .cost import CostParams, CostReport, cost_report, fares  # noqa: E402
from .demand import Request, RequestSet, ingest_trips, synth_requests  # noqa: E402
from .engine import ServiceParams, SimulationResult, check_compliance, simulate  # noqa: E402
from .errors import ConfigError, ParseError, RidepoolError, ValidationError  # noqa: E402
from .metrics import (Characteristics, WalkMode, characteristics, min_fleet_search,  # noqa: E402
                      mismatch_analysis, sweep)
from .network import DistanceOracle, StopNetwork, grid_network, load_network, shortest_path  # noqa: E402

__all__ = [
    "BACKEND", "CostParams", "CostReport", "cost_report", "fares", "Request", "RequestSet",
    "ingest_trips", "synth_requests", "ServiceParams", "SimulationResult", "check_compliance",
    "simulate", "ConfigError", "ParseError", "RidepoolError", "ValidationError", "Characteristics",
    "WalkMode", "characteristics", "min_fleet_search", "mismatch_analysis", "sweep",
    "DistanceOracle", "StopNetwork", "grid_network", "load_network", "shortest_path",
]
