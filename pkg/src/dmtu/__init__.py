"""Dynamic MTU (DMTU) versus Path MTU Discovery: simulator and closed-form model."""

from .analytic import (
    AnalyticResult,
    DropSet,
    Formula,
    PositionMode,
    Protocol,
    critical_a,
    dmtu_total,
    drop_count,
    latency,
    pdr,
    pdr_ratio,
    pmtud_total,
    success_probability,
    sum_positions,
    throughput,
    wastage_bounds,
    wastage_general,
    wastage_max,
    wastage_single,
)
from .engine import ProtocolLoopError, Simulator, run_transmission
from .harness import Scenario, ScenarioError, SweepSpec, load_scenario, run_compare
from .model import (
    Drop,
    DropReason,
    IpVersion,
    LinkSpec,
    Packet,
    DEFAULT_PARAMS,
    PathTopology,
    PdrCounts,
    Priority,
    TimingParams,
    TransmissionReport,
    ValidationError,
)
from .protocols import DmtuParallel, DmtuStandalone, Pmtud, ProtocolError, behavior_for

__all__ = [
    "AnalyticResult",
    "behavior_for",
    "critical_a",
    "dmtu_total",
    "DmtuParallel",
    "DmtuStandalone",
    "Drop",
    "drop_count",
    "DropReason",
    "DropSet",
    "Formula",
    "IpVersion",
    "latency",
    "LinkSpec",
    "load_scenario",
    "Packet",
    "DEFAULT_PARAMS",
    "PathTopology",
    "pdr",
    "pdr_ratio",
    "PdrCounts",
    "Pmtud",
    "pmtud_total",
    "PositionMode",
    "Priority",
    "Protocol",
    "ProtocolError",
    "ProtocolLoopError",
    "run_compare",
    "run_transmission",
    "Scenario",
    "ScenarioError",
    "Simulator",
    "success_probability",
    "sum_positions",
    "SweepSpec",
    "throughput",
    "TimingParams",
    "TransmissionReport",
    "ValidationError",
    "wastage_bounds",
    "wastage_general",
    "wastage_max",
    "wastage_single",
]
