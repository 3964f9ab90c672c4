"""Deterministic discrete-event engine for one datagram crossing a path.

The clock is exact: every float constant in :class:`TimingParams` is a
dyadic rational, so all of them are rescaled to integer ticks over a common
power-of-two denominator.  An event time is then the exact sum of the
constants that led to it, rounded once when a report is produced.  Two runs
with the same inputs are bit-identical, and a drop-free run lands exactly on
``(n + 1) * t_d``.

A transmission (one "epoch") is the set of fragments the source emits in a
single attempt.  The first drop of any fragment fails the whole epoch: the
source always resends the complete datagram, so the fate of the remaining
fragments of a failed epoch cannot change the outcome and they are discarded.

Fragments that leave a hop at the same instant travel as one train: a node
handles them in fragment order, exactly as it would handle separate
same-time arrivals, and the train splits when their departure times differ.
"""

from __future__ import annotations

import functools
import heapq
import itertools
import math
from dataclasses import replace
from fractions import Fraction
from types import SimpleNamespace
from typing import Iterable, NamedTuple, Optional, Union

from .actions import DropSendIcmp, DropSilent, Forward, ForwardMany, OverrideMtu
from .model import (
    DEFAULT_THRESHOLD,
    Drop,
    DropReason,
    Packet,
    PathTopology,
    TimingParams,
    TransmissionReport,
    fragment,
    validate_topology,
)
from .protocols import (
    Behavior,
    NodeState,
    ProtocolError,
    SourceState,
    apply_action,
    source_on_ptb,
    source_on_timeout,
)


class ProtocolLoopError(ProtocolError):
    """The source kept retransmitting past the bound any protocol needs."""


def charge_hop(time, link_index: int, params, is_icmp: bool = False,
               is_dmtu_path: bool = False):
    """Time at which something sent at ``time`` reaches the far end of one link.

    Per-hop delay is uniform along the path; ``link_index`` is accepted for
    symmetry with the topology but does not change the charge.  ``params``
    may be any object with ``t_d``, ``t_d_icmp`` and ``dt_d``; the engine
    passes integer tick values.
    """
    if link_index < 1:
        raise ValueError(f"link index must be >= 1, got {link_index}")
    if is_icmp:
        return time + params.t_d_icmp
    if is_dmtu_path:
        return time + (params.t_d + params.dt_d)
    return time + params.t_d


@functools.lru_cache(maxsize=256)
def _tick_clock(params: TimingParams, timeout: float, idle_restore: float):
    values = {name: Fraction(getattr(params, name))
              for name in ("t_d", "t_d_icmp", "t_f", "t_o", "dt_d")}
    values["timeout"] = Fraction(timeout)
    values["idle_restore"] = Fraction(idle_restore)
    scale = math.lcm(*(v.denominator for v in values.values()))
    return scale, SimpleNamespace(**{k: int(v * scale) for k, v in values.items()})


class Transmit(NamedTuple):
    epoch: int
    fragments: tuple


class PacketArrival(NamedTuple):
    """A train of fragments reaching node ``position`` together, in order."""

    position: int
    packets: tuple
    epoch: int
    enlarged: bool


class IcmpArrival(NamedTuple):
    reported_mtu: int
    epoch: int
    origin: int


class Timeout(NamedTuple):
    epoch: int


class OverrideExpire(NamedTuple):
    position: int
    generation: int


class DeliveryComplete(NamedTuple):
    epoch: int


EventKind = Union[Transmit, PacketArrival, IcmpArrival, Timeout, OverrideExpire, DeliveryComplete]


class Event(NamedTuple):
    time: int
    seq: int
    kind: EventKind


class EventQueue:
    """Min-heap on (time, insertion order); equal times pop first-in first-out."""

    def __init__(self):
        self._heap: list[tuple] = []
        self._seq = itertools.count()
        self.now = 0

    def __bool__(self):
        return bool(self._heap)

    def __len__(self):
        return len(self._heap)

    def schedule(self, time: int, kind: EventKind) -> None:
        if time < self.now:
            raise ProtocolError(f"event at {time} scheduled in the past (now={self.now})")
        heapq.heappush(self._heap, (time, next(self._seq), kind))

    def pop(self) -> Event:
        ev = Event(*heapq.heappop(self._heap))
        self.now = ev.time
        return ev


class Simulator:
    """Runs a single flow through ``topo`` under ``behavior``.

    ``icmp_blackholes`` lists node positions whose ICMP errors never reach
    the source; a PTB drop there becomes a silent drop.  With ``trace=True``
    every node decision and MTU change is logged to :attr:`trace` as
    ``(seconds, what, position, ...)`` tuples.
    """

    def __init__(self, topo: PathTopology, behavior: Behavior, params: TimingParams, *,
                 threshold: int = DEFAULT_THRESHOLD, icmp_blackholes: Iterable[int] = (),
                 idle_restore: Optional[float] = None, trace: bool = False):
        # a PathTopology validates itself on construction and is immutable
        self.topo = topo if isinstance(topo, PathTopology) else validate_topology(topo)
        self.behavior = behavior
        self.params = params
        self.n = topo.n
        enabled = behavior.pmtud_enabled
        # node i forwards onto link i+1, which is links[i] zero-based
        self.nodes = {
            i: NodeState(i, link.current_mtu, link.max_mtu, pmtud_enabled=enabled,
                         threshold=threshold)
            for i, link in enumerate(topo.links[1:], start=1)
        }
        self.blackholes = frozenset(icmp_blackholes)
        idle = 10 * params.t_d if idle_restore is None else idle_restore
        self.scale, self.tk = _tick_clock(params, params.timeout_for(self.n), idle)
        self.bottleneck = topo.bottleneck_mtu
        # per-hop charge, indexed by whether the datagram rides the DMTU path
        self._hop = (charge_hop(0, 1, self.tk), charge_hop(0, 1, self.tk, False, True))
        self.queue = EventQueue()
        self.trace: Optional[list[tuple]] = [] if trace else None
        self.source: Optional[SourceState] = None
        self._handlers = {
            Transmit: self._on_transmit,
            PacketArrival: self._on_arrival,
            IcmpArrival: self._on_icmp,
            Timeout: self._on_timeout,
            OverrideExpire: self._on_expire,
            DeliveryComplete: self._on_complete,
        }

    def _log(self, now: int, *what):
        if self.trace is not None:
            self.trace.append((now / self.scale,) + what)

    def _ticks(self, seconds: float) -> int:
        if not seconds:
            return 0
        if seconds == self.params.t_f:
            return self.tk.t_f
        exact = Fraction(seconds) * self.scale
        if exact.denominator != 1:
            raise ProtocolError(f"delay {seconds} is not representable on the engine clock")
        return int(exact)

    def _send(self, time: int, position: int, packets: tuple, epoch: int, enlarged: bool):
        # reaching ``position`` means crossing link ``position``; ``time`` is
        # never behind the clock here, so the heap is fed directly
        q = self.queue
        heapq.heappush(q._heap, (time + self._hop[enlarged], next(q._seq),
                                 PacketArrival(position, packets, epoch, enlarged)))

    def _fail_epoch(self, position: int, reason: DropReason):
        self.epoch_failed = True
        self.drops.append(Drop(position, reason))

    def _next_id(self) -> int:
        return self.base_id + self.epoch + 1

    # -- event handlers ----------------------------------------------------

    def _on_transmit(self, now: int, ev: Transmit):
        self.transmissions += 1
        if self.transmissions > self.n + 2:
            raise ProtocolLoopError(f"{self.transmissions} transmissions on a {self.n}-node path")
        self.epoch = ev.epoch
        self.epoch_failed = False
        self.epoch_sizes = tuple(p.size_octets for p in ev.fragments)
        self.arrived = 0
        self.largest = 0
        eligible = self.behavior.dmtu_eligible
        # a datagram bigger than the path bottleneck is slower per hop; runs of
        # fragments with the same per-hop charge travel as one train
        for enlarged, train in itertools.groupby(
                ev.fragments, lambda p: p.size_octets > self.bottleneck and eligible(p)):
            self._send(now, 1, tuple(train), ev.epoch, enlarged)
        self.source.timer_deadline = now + self.tk.timeout
        self.queue.schedule(self.source.timer_deadline, Timeout(ev.epoch))

    def _on_arrival(self, now: int, ev: PacketArrival):
        if ev.epoch != self.epoch or self.epoch_failed:
            return
        packets, pos, epoch, enlarged = ev.packets, ev.position, ev.epoch, ev.enlarged
        q = self.queue
        heap = q._heap
        hop = self._hop[enlarged]
        while True:
            if pos == self.n + 1:
                for pkt in packets:
                    self.arrived += pkt.size_octets
                    self.largest = max(self.largest, pkt.size_octets)
                if self.arrived >= self.source.pending.size_octets:
                    q.schedule(now, DeliveryComplete(epoch))
                return
            departures = self._at_node(now, pos, packets, epoch)
            if not departures:
                return
            if len(departures) > 1:
                for depart, train in departures:
                    self._send(depart, pos + 1, train, epoch, enlarged)
                return
            depart, packets = departures[0]
            now = depart + hop
            pos += 1
            # Lookahead: when nothing else is due before this arrival, handling
            # it right away is indistinguishable from a push and an immediate pop.
            if heap and heap[0][0] <= now:
                heapq.heappush(heap, (now, next(q._seq),
                                      PacketArrival(pos, packets, epoch, enlarged)))
                return
            q.now = now

    def _at_node(self, now: int, pos: int, packets: tuple, epoch: int):
        """Run node ``pos`` on each packet of a train, in order.

        Returns one ``(departure_time, packets)`` entry per departure time, or
        an empty list when the node dropped something and the epoch failed.
        """
        node = self.nodes[pos]
        node_action = self.behavior.node_action
        trace = self.trace
        # plain forwards depart at ``now``; ``out`` is only built once a
        # packet departs at another time
        plain: list = []
        out: Optional[dict[int, list]] = None
        for pkt in packets:
            action = node_action(node, pkt)
            kind = type(action)
            if trace is not None:
                self._log(now, "node", pos, pkt.size_octets, kind.__name__)
            if kind is Forward and not action.extra_delay:
                plain.append(action.packet)
                continue
            if out is None:
                out = {now: plain}
            if kind is Forward:
                out.setdefault(now + self._ticks(action.extra_delay), []).append(action.packet)
            elif kind is DropSendIcmp:
                if pos in self.blackholes:
                    self._fail_epoch(pos, DropReason.TOO_BIG_SILENT)
                    return []
                self._fail_epoch(pos, DropReason.TOO_BIG_ICMP_SENT)
                t = now
                for link in range(pos, 0, -1):
                    t = charge_hop(t, link, self.tk, is_icmp=True)
                self.queue.schedule(t, IcmpArrival(action.reported_mtu, epoch, pos))
                return []
            elif kind is OverrideMtu:
                apply_action(node, action)
                self._log(now, "override", pos, node.current_mtu, node.max_mtu)
                depart = now
                if action.fresh:
                    self.invocations += 1
                    depart += self.tk.t_o
                out.setdefault(depart, []).append(action.packet)
                if action.restore_after:
                    node.restore()
                    self._log(now, "restore", pos, node.current_mtu)
                else:
                    self.queue.schedule(now + self.tk.idle_restore,
                                        OverrideExpire(pos, node.generation))
            elif kind is ForwardMany:
                out.setdefault(now, []).extend(action.packets)
            elif kind is DropSilent:
                self._fail_epoch(pos, action.reason)
                return []
            else:  # pragma: no cover
                raise ProtocolError(f"unknown node action {action!r}")
        if out is None:
            return [(now, tuple(plain))]
        return [(t, tuple(train)) for t, train in out.items() if train]

    def _on_icmp(self, now: int, ev: IcmpArrival):
        src = self.source
        if ev.epoch != self.epoch or ev.reported_mtu >= src.pmtu_estimate:
            return
        src.timer_deadline = None
        frags, delay = source_on_ptb(src, ev.reported_mtu, self.params, self._next_id())
        self.queue.schedule(now + self._ticks(delay), Transmit(self.epoch + 1, tuple(frags)))

    def _on_timeout(self, now: int, ev: Timeout):
        src = self.source
        if ev.epoch != self.epoch or src.timer_deadline != now:
            return
        if not self.epoch_failed:
            src.timer_deadline = now + self.tk.timeout
            self.queue.schedule(src.timer_deadline, Timeout(ev.epoch))
            return
        src.timer_deadline = None
        limit = min(self.topo.first_hop_mtu, src.pmtu_estimate)
        frags = source_on_timeout(src, limit, self._next_id())
        if tuple(p.size_octets for p in frags) == self.epoch_sizes:
            # resending the same fragments would be dropped the same way
            self.done = (now, False)
            return
        self.queue.schedule(now + self.tk.t_f, Transmit(self.epoch + 1, tuple(frags)))

    def _on_expire(self, now: int, ev: OverrideExpire):
        node = self.nodes[ev.position]
        if node.override_active and node.generation == ev.generation:
            node.restore()
            self._log(now, "restore", ev.position, node.current_mtu)

    def _on_complete(self, now: int, ev: DeliveryComplete):
        if ev.epoch == self.epoch:
            self.done = (now, True)

    # -- driver ------------------------------------------------------------

    def run(self, initial: Packet) -> TransmissionReport:
        if self.source is not None:
            raise ProtocolError("a Simulator runs a single transmission; build a new one")
        if initial.mf:
            initial = replace(initial, mf=False)
        src = self.source = SourceState(self.topo.first_hop_mtu, initial)
        self.base_id = initial.frag_id
        self.epoch = -1
        self.epoch_failed = False
        self.epoch_sizes: tuple[int, ...] = ()
        self.arrived = self.largest = 0
        self.transmissions = self.invocations = 0
        self.drops: list[Drop] = []
        self.done: Optional[tuple[int, bool]] = None

        first = src.pending
        if self.behavior.source_runs_pmtud and first.size_octets > src.pmtu_estimate:
            frags = fragment(first, src.pmtu_estimate, self.base_id)
        else:
            frags = [first]
        self.queue.schedule(0, Transmit(0, tuple(frags)))

        queue, handlers = self.queue, self._handlers
        heap, pop = queue._heap, heapq.heappop
        while heap and self.done is None:
            time, _, kind = pop(heap)
            queue.now = time
            handlers[type(kind)](time, kind)
        if self.done is None:  # pragma: no cover
            raise ProtocolError("event queue drained before the datagram was resolved")

        total, delivered = self.done
        # overrides still pinned at the end are lifted by their idle timers
        while queue:
            time, _, kind = queue.pop()
            if type(kind) is OverrideExpire:
                self._on_expire(time, kind)

        baseline = (self.n + 1) * self.tk.t_d
        wastage = total - baseline if delivered else total
        return TransmissionReport(
            total_time=total / self.scale,
            wastage=wastage / self.scale,
            delivered=delivered,
            transmissions=self.transmissions,
            drops=tuple(self.drops),
            dmtu_invocations=self.invocations,
            final_packet_size=self.largest or max(self.epoch_sizes),
        )


def run_transmission(topo: PathTopology, behavior: Behavior, initial: Packet,
                     params: TimingParams, **kw) -> TransmissionReport:
    """Simulate ``initial`` crossing ``topo``; see :class:`Simulator` for options."""
    return Simulator(topo, behavior, params, **kw).run(initial)
