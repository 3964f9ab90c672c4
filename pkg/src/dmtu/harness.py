"""Scenario files, simulation-vs-closed-form comparison and CSV emitters."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, TextIO, Union

from . import analytic
from .analytic import AnalyticResult, DropSet, Formula, PositionMode
from .engine import run_transmission
from .model import (
    DEFAULT_MAX_MTU,
    DropReason,
    IpVersion,
    LinkSpec,
    Packet,
    PathTopology,
    Priority,
    TimingParams,
    TransmissionReport,
    ValidationError,
)
from .protocols import behavior_for

COMPARE_TOLERANCE = 1e-12
DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5)
TABLE1_NODES = (1, 5, 10, 20, 30, 40, 50, 100, 200, 300)
REFERENCE_PROBABILITIES = {
    1: 0.4384, 5: 0.6000, 10: 0.6783, 20: 0.7500, 30: 0.7870,
    40: 0.8108, 50: 0.8278, 100: 0.8728, 200: 0.9072, 300: 0.9232,
}


class ScenarioError(ValidationError):
    """A scenario file could not be parsed or violates an invariant."""


class Figure(Enum):
    DELAY = "delay"
    THROUGHPUT = "throughput"
    LATENCY = "latency"
    PROBABILITY = "probability"


PROTOCOLS = ("pmtud", "dmtu_standalone", "dmtu_parallel")


@dataclass(frozen=True)
class Scenario:
    topology: PathTopology
    protocol: str
    packet: Packet
    params: TimingParams = field(default_factory=TimingParams)
    pmtud_enabled: bool = True
    label: str = ""

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ScenarioError(f"protocol: expected one of {PROTOCOLS}, got {self.protocol!r}")

    def behavior(self):
        return behavior_for(self.protocol, self.pmtud_enabled)


@dataclass(frozen=True)
class SweepSpec:
    n_range: tuple[int, int] = (1, 300)
    drop_fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    position_mode: PositionMode = PositionMode.MIN
    packet_size: int = 1300
    params: TimingParams = field(default_factory=TimingParams)

    def __post_init__(self):
        lo, hi = self.n_range
        if lo < 1 or hi < lo:
            raise ValidationError(f"n_range must be a nonempty range of n >= 1, got {self.n_range}")
        fr = tuple(self.drop_fractions)
        if not fr or any(not 0 < f <= 1 for f in fr):
            raise ValidationError(f"drop fractions must lie in (0, 1], got {fr}")
        if list(fr) != sorted(fr):
            raise ValidationError(f"drop fractions must be ascending, got {fr}")
        if self.packet_size < 1:
            raise ValidationError(f"packet size must be >= 1, got {self.packet_size}")

    @property
    def ns(self) -> range:
        return range(self.n_range[0], self.n_range[1] + 1)


# -- scenario files ----------------------------------------------------------

_TOP_KEYS = {"topology", "protocol", "packet", "params", "pmtud_enabled", "label"}
_PACKET_KEYS = {"size", "version", "priority"}
_PARAM_KEYS = {"t_d", "t_d_icmp", "t_f", "t_o", "dt_d", "epsilon", "retransmit_timeout"}
_LINK_KEYS = {"current_mtu", "max_mtu"}


def _expect_obj(value, where: str, allowed: set, required: Iterable[str] = ()) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(f"{where}: expected an object, got {type(value).__name__}")
    extra = sorted(set(value) - allowed)
    if extra:
        raise ScenarioError(f"{where}: unknown key(s) {', '.join(extra)}")
    for key in required:
        if key not in value:
            raise ScenarioError(f"{where}: missing required key '{key}'")
    return value


def _int(value, where: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {value!r}")
    if value < minimum:
        raise ScenarioError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _version(value, where: str) -> IpVersion:
    table = {4: IpVersion.V4, 6: IpVersion.V6, "4": IpVersion.V4, "6": IpVersion.V6,
             "v4": IpVersion.V4, "v6": IpVersion.V6, "ipv4": IpVersion.V4, "ipv6": IpVersion.V6}
    key = value.lower() if isinstance(value, str) else value
    if isinstance(key, bool) or key not in table:
        raise ScenarioError(f"{where}: expected 4, 6, 'v4' or 'v6', got {value!r}")
    return table[key]


def parse_scenario(doc: Any) -> Scenario:
    doc = _expect_obj(doc, "scenario", _TOP_KEYS, ("topology", "protocol", "packet"))

    topo = _expect_obj(doc["topology"], "topology", {"links"}, ("links",))
    raw_links = topo["links"]
    if not isinstance(raw_links, list) or not raw_links:
        raise ScenarioError("topology.links: expected a nonempty array")
    links = []
    for i, raw in enumerate(raw_links):
        where = f"topology.links[{i}]"
        raw = _expect_obj(raw, where, _LINK_KEYS, ("current_mtu",))
        cur = _int(raw["current_mtu"], f"{where}.current_mtu")
        if "max_mtu" in raw:
            top = _int(raw["max_mtu"], f"{where}.max_mtu")
        else:
            top = max(DEFAULT_MAX_MTU, cur)
        if cur > top:
            raise ScenarioError(f"{where}: current_mtu {cur} exceeds max_mtu {top}")
        links.append(LinkSpec(cur, top))

    protocol = doc["protocol"]
    if protocol not in PROTOCOLS:
        raise ScenarioError(f"protocol: expected one of {', '.join(PROTOCOLS)}, got {protocol!r}")

    pk = _expect_obj(doc["packet"], "packet", _PACKET_KEYS, ("size",))
    priority = pk.get("priority", "high")
    if priority not in ("high", "low"):
        raise ScenarioError(f"packet.priority: expected 'high' or 'low', got {priority!r}")
    packet = Packet(
        _int(pk["size"], "packet.size"),
        _version(pk.get("version", 6), "packet.version"),
        priority=Priority(priority),
    )

    raw_params = _expect_obj(doc.get("params", {}), "params", _PARAM_KEYS)
    values = {}
    for key, value in raw_params.items():
        if key == "retransmit_timeout" and value is None:
            continue
        values[key] = _num(value, f"params.{key}")
    try:
        params = TimingParams(**values)
    except ValidationError as exc:
        raise ScenarioError(f"params: {exc}") from None

    enabled = doc.get("pmtud_enabled", True)
    if not isinstance(enabled, bool):
        raise ScenarioError(f"pmtud_enabled: expected a boolean, got {enabled!r}")
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ScenarioError(f"label: expected a string, got {label!r}")

    return Scenario(PathTopology(links), protocol, packet, params, enabled, label)


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        return parse_scenario(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def scenario_to_dict(s: Scenario) -> dict:
    params = {k: getattr(s.params, k) for k in sorted(_PARAM_KEYS)}
    return {
        "label": s.label,
        "protocol": s.protocol,
        "pmtud_enabled": s.pmtud_enabled,
        "topology": {"links": [{"current_mtu": l.current_mtu, "max_mtu": l.max_mtu}
                               for l in s.topology.links]},
        "packet": {"size": s.packet.size_octets, "version": s.packet.ip_version.value,
                   "priority": s.packet.priority.value},
        "params": params,
    }


def topology_for_drops(n: int, positions: Sequence[int], packet_size: int = 1800,
                       step: int = 100, max_mtu: int = DEFAULT_MAX_MTU) -> PathTopology:
    """A path on which a ``packet_size`` datagram is dropped under PMTUD
    exactly at ``positions`` and overridden under DMTU exactly there too.

    Non-dropping nodes forward onto a link as large as the datagram; the k-th
    dropping node forwards onto a link ``k * step`` octets smaller.
    """
    DropSet(n, positions)
    if packet_size - step * len(positions) < 1 or packet_size > max_mtu:
        raise ValidationError("packet_size/step leave no room for the requested drops")
    drops = set(positions)
    mtus = [packet_size]
    k = 0
    for node in range(1, n + 1):
        if node in drops:
            k += 1
            mtus.append(packet_size - k * step)
        else:
            mtus.append(packet_size)
    return PathTopology.from_mtus(mtus, max_mtu)


def case_study(protocol: str = "pmtud", params: Optional[TimingParams] = None) -> Scenario:
    """Five nodes, 1800-octet datagram, drops at nodes 2, 3 and 5."""
    topo = PathTopology.from_mtus([1800, 1800, 1500, 1400, 1800, 1300])
    return Scenario(topo, protocol, Packet(1800), params or TimingParams(),
                    label=f"case-study-{protocol}")


# -- comparison -------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    scenario: Scenario
    report: TransmissionReport
    analytic: Optional[AnalyticResult]

    @property
    def diff(self) -> Optional[float]:
        if self.analytic is None:
            return None
        return abs(self.report.total_time - self.analytic.value)

    @property
    def representable(self) -> bool:
        return self.analytic is not None

    def within(self, tol: float = COMPARE_TOLERANCE) -> bool:
        return self.diff is None or self.diff <= tol


def analytic_total(s: Scenario, report: TransmissionReport) -> Optional[AnalyticResult]:
    """The closed form matching what the simulator observed, if one exists.

    Runs mixing silent drops (timeouts) or DMTU overrides with ICMP-driven
    retries have no closed form and yield ``None``.
    """
    n = s.topology.n
    if any(d.reason is not DropReason.TOO_BIG_ICMP_SENT for d in report.drops):
        return None
    if not report.delivered:
        return None
    eligible = s.behavior().dmtu_eligible(s.packet)
    if not eligible:
        if n == 0:
            return AnalyticResult(s.params.t_d, Formula.PMTUD_TOTAL)
        drops = DropSet(n, report.drop_positions)
        return AnalyticResult(analytic.pmtud_total(n, drops, s.params), Formula.PMTUD_TOTAL)
    if report.drops:
        return None
    # no per-hop penalty when the datagram was never larger than PMTUD's
    params = s.params
    if not report.final_packet_size > s.topology.bottleneck_mtu:
        params = TimingParams(params.t_d, params.t_d_icmp, params.t_f, params.t_o, 0.0,
                              params.epsilon, params.retransmit_timeout)
    return AnalyticResult(analytic.dmtu_total(n, report.dmtu_invocations, params),
                          Formula.DMTU_TOTAL)


def run_scenario(s: Scenario) -> TransmissionReport:
    return run_transmission(s.topology, s.behavior(), s.packet, s.params)


def run_compare(s: Scenario) -> Comparison:
    report = run_scenario(s)
    return Comparison(s, report, analytic_total(s, report))


# -- CSV ---------------------------------------------------------------------

def fmt(x: float) -> str:
    """Six significant digits for derived reals."""
    return f"{x:.6g}"


def fmt_full(x: float) -> str:
    return repr(float(x))


def emit_figure_data(spec: SweepSpec, figure: Union[Figure, str]) -> list[dict]:
    figure = Figure(figure)
    rows: list[dict] = []
    if figure is Figure.PROBABILITY:
        for n in spec.ns:
            rows.append({"n": n, "probability": fmt(analytic.success_probability(n))})
        return rows

    p, size = spec.params, spec.packet_size
    for n in spec.ns:
        for f in spec.drop_fractions:
            a = analytic.drop_count(n, f)
            drops = DropSet(n, analytic.positions_for(n, a, spec.position_mode))
            pt = analytic.pmtud_total(n, drops, p)
            dt = analytic.dmtu_total(n, a, p)
            row = {"n": n, "fraction": fmt(f)}
            if figure is Figure.DELAY:
                row.update(pmtud_total=fmt(pt), dmtu_total=fmt(dt), diff=fmt_full(dt - pt))
            elif figure is Figure.THROUGHPUT:
                row.update(tr_pmtud=fmt(analytic.throughput(size, pt)),
                           tr_dmtu=fmt(analytic.throughput(size, dt)))
            else:
                row.update(l_pmtud=fmt(analytic.latency(1, pt, size)),
                           l_dmtu=fmt(analytic.latency(1, dt, size)))
            rows.append(row)
    return rows


TABLE1_NOTE = "n=0 omitted: the success-probability formula is 0/0 there"


def emit_table1() -> list[dict]:
    rows = []
    for n in TABLE1_NODES:
        prob = analytic.success_probability(n)
        rows.append({
            "n": n,
            "success_probability": fmt(prob),
            "exp_probability": f"{math.exp(prob):.4f}",
            "reference": f"{REFERENCE_PROBABILITIES[n]:.4f}",
            "abs_diff": fmt(abs(prob - REFERENCE_PROBABILITIES[n])),
        })
    return rows


def write_csv(rows: list[dict], out: Union[str, Path, TextIO], note: Optional[str] = None):
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            write_csv(rows, fh, note)
        return
    if note:
        out.write(f"# {note}\n")
    if not rows:
        return
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def csv_text(rows: list[dict], note: Optional[str] = None) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, note)
    return buf.getvalue()


def report_row(s: Scenario, r: TransmissionReport) -> dict:
    return {
        "label": s.label,
        "protocol": s.protocol,
        "delivered": r.delivered,
        "total_time": fmt_full(r.total_time),
        "wastage": fmt_full(r.wastage),
        "transmissions": r.transmissions,
        "dmtu_invocations": r.dmtu_invocations,
        "final_packet_size": r.final_packet_size,
        "drops": ";".join(f"{d.node_position}:{d.reason.value}" for d in r.drops),
    }
