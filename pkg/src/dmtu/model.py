"""Value types shared by the simulator, the protocol behaviours and the analytic model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

# Largest standard IPv6 payload; DMTU refuses to override for anything bigger.
DEFAULT_THRESHOLD = 65535
# Common jumbo-frame ceiling used when a link does not state its hardware limit.
DEFAULT_MAX_MTU = 9216


class ValidationError(ValueError):
    """Raised when a domain value violates one of its invariants."""


class IpVersion(Enum):
    V4 = 4
    V6 = 6


class Priority(Enum):
    HIGH = "high"
    LOW = "low"


class DropReason(Enum):
    TOO_BIG_ICMP_SENT = "too_big_icmp_sent"
    TOO_BIG_SILENT = "too_big_silent"
    EXCEEDS_THRESHOLD = "exceeds_threshold"
    EXCEEDS_MAX_MTU = "exceeds_max_mtu"


@dataclass(frozen=True)
class Packet:
    size_octets: int
    ip_version: IpVersion = IpVersion.V6
    flow_id: int = 0
    frag_id: int = 0
    mf: bool = False
    priority: Priority = Priority.HIGH

    def __post_init__(self):
        if isinstance(self.size_octets, bool) or not isinstance(self.size_octets, int):
            raise ValidationError(f"packet size must be an integer, got {self.size_octets!r}")
        if self.size_octets < 1:
            raise ValidationError(f"packet size must be >= 1 octet, got {self.size_octets}")
        if self.flow_id < 0 or self.frag_id < 0:
            raise ValidationError("flow_id and frag_id must be non-negative")


def check_fragment_set(fragments: Sequence[Packet]) -> None:
    """Every fragment but the last carries MF; all share one flow and identification."""
    if not fragments:
        raise ValidationError("empty fragment set")
    ids = {(f.flow_id, f.frag_id) for f in fragments}
    if len(ids) != 1:
        raise ValidationError(f"fragments disagree on (flow_id, frag_id): {sorted(ids)}")
    if fragments[-1].mf:
        raise ValidationError("last fragment must have mf=False")
    if any(not f.mf for f in fragments[:-1]):
        raise ValidationError("only the last fragment may have mf=False")


def split_sizes(total: int, limit: int) -> list[int]:
    """Greedy split of ``total`` octets into pieces of at most ``limit``."""
    if limit < 1:
        raise ValidationError(f"fragment limit must be >= 1, got {limit}")
    full, rest = divmod(total, limit)
    return [limit] * full + ([rest] if rest else [])


def fragment(pkt: Packet, limit: int, frag_id: Optional[int] = None) -> list[Packet]:
    """Split ``pkt`` into greedy pieces of at most ``limit`` octets.

    The final piece inherits the original MF flag so that re-fragmenting a
    fragment keeps the set well formed.
    """
    fid = pkt.frag_id if frag_id is None else frag_id
    sizes = split_sizes(pkt.size_octets, limit)
    last = len(sizes) - 1
    return [
        Packet(s, pkt.ip_version, pkt.flow_id, fid, pkt.mf if i == last else True, pkt.priority)
        for i, s in enumerate(sizes)
    ]


@dataclass(frozen=True)
class LinkSpec:
    current_mtu: int
    max_mtu: int = DEFAULT_MAX_MTU

    def __post_init__(self):
        if self.current_mtu < 1:
            raise ValidationError(f"current_mtu must be >= 1, got {self.current_mtu}")
        if self.current_mtu > self.max_mtu:
            raise ValidationError(
                f"current_mtu {self.current_mtu} exceeds max_mtu {self.max_mtu}"
            )


@dataclass(frozen=True)
class PathTopology:
    """Links ``e1 .. e_{n+1}``; node ``i`` (1-indexed) forwards onto link ``i+1``."""

    links: tuple[LinkSpec, ...]

    def __init__(self, links: Iterable[LinkSpec]):
        object.__setattr__(self, "links", tuple(links))
        validate_topology(self)

    @property
    def n(self) -> int:
        return len(self.links) - 1

    def link(self, index: int) -> LinkSpec:
        """1-indexed link lookup."""
        if not 1 <= index <= len(self.links):
            raise IndexError(f"link index {index} outside 1..{len(self.links)}")
        return self.links[index - 1]

    def next_link(self, position: int) -> LinkSpec:
        if not 1 <= position <= self.n:
            raise IndexError(f"node position {position} outside 1..{self.n}")
        return self.link(position + 1)

    @property
    def first_hop_mtu(self) -> int:
        return self.links[0].current_mtu

    @property
    def bottleneck_mtu(self) -> float:
        """Smallest MTU any node forwards onto; ``inf`` when there are no nodes."""
        return min((l.current_mtu for l in self.links[1:]), default=math.inf)

    @classmethod
    def from_mtus(cls, mtus: Iterable[int], max_mtu: int = DEFAULT_MAX_MTU) -> "PathTopology":
        return cls(LinkSpec(m, max_mtu) for m in mtus)


def validate_topology(topo: PathTopology) -> PathTopology:
    if not topo.links:
        raise ValidationError("topology needs at least one link")
    for i, link in enumerate(topo.links, start=1):
        if not isinstance(link, LinkSpec):
            raise ValidationError(f"link {i} is not a LinkSpec: {link!r}")
        if not 1 <= link.current_mtu <= link.max_mtu:
            raise ValidationError(
                f"link {i}: current_mtu {link.current_mtu} not in [1, {link.max_mtu}]"
            )
    return topo


@dataclass(frozen=True)
class TimingParams:
    """Delay constants, in seconds.

    ``retransmit_timeout`` of ``None`` means "twice the drop-free path
    delay", resolved per topology by :meth:`timeout_for`.
    """

    t_d: float = 0.1
    t_d_icmp: float = 0.085
    t_f: float = 1e-4
    t_o: float = 1e-3
    dt_d: float = 0.01
    epsilon: float = 0.02
    retransmit_timeout: Optional[float] = None

    def __post_init__(self):
        for name in ("t_d", "t_d_icmp", "t_f", "t_o", "dt_d"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be a finite non-negative number, got {v}")
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.retransmit_timeout is not None and not self.retransmit_timeout > 0:
            raise ValidationError(
                f"retransmit_timeout must be positive, got {self.retransmit_timeout}"
            )
        if self.t_d_icmp > self.t_d:
            raise ValidationError(
                f"t_d_icmp ({self.t_d_icmp}) may not exceed t_d ({self.t_d})"
            )
        if not self.dt_d < self.epsilon:
            raise ValidationError(f"dt_d ({self.dt_d}) must stay below epsilon ({self.epsilon})")
        if not self.t_d_icmp + self.t_f > self.t_o:
            raise ValidationError(
                f"t_d_icmp + t_f ({self.t_d_icmp + self.t_f}) must exceed t_o ({self.t_o})"
            )

    def timeout_for(self, n: int) -> float:
        if self.retransmit_timeout is not None:
            return self.retransmit_timeout
        return 2 * (n + 1) * self.t_d


DEFAULT_PARAMS = TimingParams()


@dataclass(frozen=True)
class Drop:
    node_position: int
    reason: DropReason


@dataclass(frozen=True)
class TransmissionReport:
    total_time: float
    wastage: float
    delivered: bool
    transmissions: int
    drops: tuple[Drop, ...]
    dmtu_invocations: int
    final_packet_size: int

    @property
    def drop_positions(self) -> list[int]:
        return [d.node_position for d in self.drops]


@dataclass(frozen=True)
class PdrCounts:
    sent: int
    dropped_other: int = 0
    dropped_mtu: int = 0

    def __post_init__(self):
        if self.sent < 1:
            raise ValidationError(f"sent must be positive, got {self.sent}")
        if self.dropped_other < 0 or self.dropped_mtu < 0:
            raise ValidationError("drop counts must be non-negative")
        if self.dropped_other + self.dropped_mtu > self.sent:
            raise ValidationError(
                f"{self.dropped_other} + {self.dropped_mtu} drops exceed {self.sent} sent"
            )
