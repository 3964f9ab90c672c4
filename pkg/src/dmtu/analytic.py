"""Closed-form delay, wastage, throughput, latency and delivery-rate results.

These are the oracle the simulator is checked against and the source of the
sweep data emitted by the harness.  Every function is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .model import PdrCounts, TimingParams, ValidationError


class Formula(Enum):
    WASTAGE_SINGLE = "wastage_single"
    WASTAGE_GENERAL = "wastage_general"
    WASTAGE_MAX = "wastage_max"
    PMTUD_TOTAL = "pmtud_total"
    DMTU_TOTAL = "dmtu_total"
    SUCCESS_PROBABILITY = "success_probability"
    THROUGHPUT = "throughput"
    LATENCY = "latency"
    PDR = "pdr"


class PositionMode(Enum):
    MIN = "min"
    MAX = "max"


class Protocol(Enum):
    PMTUD = "pmtud"
    DMTU = "dmtu"


@dataclass(frozen=True)
class AnalyticResult:
    value: float
    formula: Formula

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValidationError(f"{self.formula.value} produced non-finite {self.value}")


@dataclass(frozen=True)
class DropSet:
    """Positions (1-indexed, strictly increasing) of the nodes that drop."""

    n: int
    positions: tuple[int, ...] = ()

    def __init__(self, n: int, positions: Sequence[int] = ()):
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "positions", tuple(positions))
        if n < 1:
            raise ValidationError(f"drop set needs n >= 1, got {n}")
        prev = 0
        for p in self.positions:
            if p <= prev or p > n:
                raise ValidationError(
                    f"positions must be strictly increasing within 1..{n}: {self.positions}"
                )
            prev = p

    @property
    def a(self) -> int:
        return len(self.positions)


def _round_trip(p: TimingParams) -> float:
    return p.t_d + p.t_d_icmp


def wastage_single(n1: int, p: TimingParams) -> float:
    if n1 < 1:
        raise ValidationError(f"dropping node position must be >= 1, got {n1}")
    return n1 * _round_trip(p) + p.t_f


def wastage_general(d: DropSet, p: TimingParams) -> float:
    if not d.positions:
        return 0.0
    return _round_trip(p) * sum(d.positions) + d.a * p.t_f


def wastage_max(n: int, p: TimingParams) -> float:
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return (n * (n + 1) // 2) * _round_trip(p) + n * p.t_f


def wastage_bounds(n: int, n1: int, p: TimingParams) -> tuple[float, float]:
    """Lower bound from the first dropping node, upper bound from every node dropping."""
    if not 1 <= n1 <= n:
        raise ValidationError(f"need 1 <= n1 <= n, got n1={n1}, n={n}")
    return wastage_single(n1, p), wastage_max(n, p)


def pmtud_total(n: int, d: DropSet, p: TimingParams) -> float:
    if d.n != n:
        raise ValidationError(f"drop set is for n={d.n}, asked for n={n}")
    return p.t_d * (n + 1) + wastage_general(d, p)


def dmtu_total(n: int, a: int, p: TimingParams) -> float:
    if not 0 <= a <= n:
        raise ValidationError(f"need 0 <= a <= n, got a={a}, n={n}")
    return (p.t_d + p.dt_d) * (n + 1) + a * p.t_o


def sum_positions(n: int, a: int, mode: PositionMode) -> int:
    """Sum of drop positions when ``a`` consecutive nodes drop.

    ``MIN`` packs them against the source (1..a), ``MAX`` against the
    destination (n-a+1..n).
    """
    if not 0 <= a <= n:
        raise ValidationError(f"need 0 <= a <= n, got a={a}, n={n}")
    if PositionMode(mode) is PositionMode.MIN:
        return a * (a + 1) // 2
    return a * n - a * (a - 1) // 2


def positions_for(n: int, a: int, mode: PositionMode) -> tuple[int, ...]:
    if PositionMode(mode) is PositionMode.MIN:
        return tuple(range(1, a + 1))
    return tuple(range(n - a + 1, n + 1))


def critical_a(n: int) -> float:
    """Positive root of a^2 + a - 2n - 2 = 0."""
    if n < 0:
        raise ValidationError(f"n must be >= 0, got {n}")
    return (-1 + math.sqrt(9 + 8 * n)) / 2


def success_probability(n: int) -> float:
    if n < 1:
        # the formula divides by n; at n = 0 it is 0/0
        raise ValidationError(f"success probability is undefined for n={n}")
    return 1 - (critical_a(n) - 1) / n


def throughput(packet_size: int, total_time: float) -> float:
    """Octets per second."""
    if not total_time > 0:
        raise ValidationError(f"total time must be positive, got {total_time}")
    return packet_size / total_time


def latency(k: float, total_time: float, packet_size: int) -> float:
    if packet_size < 1:
        raise ValidationError(f"packet size must be >= 1, got {packet_size}")
    return k * total_time / packet_size


def pdr(c: PdrCounts, protocol: Protocol) -> float:
    """Delivered / sent; DMTU rescues every MTU-caused drop."""
    if Protocol(protocol) is Protocol.PMTUD:
        return (c.sent - c.dropped_other - c.dropped_mtu) / c.sent
    return (c.sent - c.dropped_other) / c.sent


def pdr_ratio(c: PdrCounts) -> float:
    """PMTUD delivery rate over DMTU delivery rate."""
    dmtu = pdr(c, Protocol.DMTU)
    if dmtu == 0:
        raise ValidationError("DMTU delivery rate is zero; ratio undefined")
    return pdr(c, Protocol.PMTUD) / dmtu


def drop_count(n: int, fraction: float) -> int:
    """Number of dropping nodes for a fraction of the path, rounded up.

    The fraction is read as the decimal it was written as, so 10% of 30 is 3
    and not 4.
    """
    exact = Fraction(repr(fraction)) if isinstance(fraction, float) else Fraction(fraction)
    return min(max(math.ceil(exact * n), 0), n)
