"""Per-node forwarding decisions and per-source reactions for PMTUD and DMTU.

Node functions are pure: they look at a :class:`NodeState` and a packet and
return a :data:`~dmtu.actions.NodeAction`.  The engine applies the action
(and any MTU override it carries) through :func:`apply_action`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .actions import DropSendIcmp, DropSilent, Forward, ForwardMany, NodeAction, OverrideMtu
from .model import (
    DEFAULT_MAX_MTU,
    DEFAULT_THRESHOLD,
    DropReason,
    IpVersion,
    LinkSpec,
    Packet,
    Priority,
    TimingParams,
    ValidationError,
    fragment,
)


class ProtocolError(RuntimeError):
    """A behaviour was driven outside its contract."""


@dataclass
class NodeState:
    position: int
    current_mtu: int
    max_mtu: int = DEFAULT_MAX_MTU
    original_mtu: int = 0
    override_active: bool = False
    stored_frag_id: Optional[int] = None
    pmtud_enabled: bool = True
    threshold: int = DEFAULT_THRESHOLD
    # bumped on every override touch so stale idle timers can be told apart
    generation: int = 0

    def __post_init__(self):
        if not self.original_mtu:
            self.original_mtu = self.current_mtu

    @classmethod
    def for_link(cls, position: int, link: LinkSpec, **kw) -> "NodeState":
        return cls(position, link.current_mtu, link.max_mtu, **kw)

    def restore(self) -> None:
        self.current_mtu = self.original_mtu
        self.override_active = False
        self.stored_frag_id = None
        self.generation += 1


@dataclass
class SourceState:
    pmtu_estimate: int
    pending: Packet
    timer_deadline: Optional[float] = None
    history: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.history:
            self.history.append(self.pmtu_estimate)


def _fits(state: NodeState, pkt: Packet) -> bool:
    # size == MTU forwards; only strictly larger packets are oversize
    return pkt.size_octets <= state.current_mtu


def _local_fragments(state: NodeState, pkt: Packet) -> ForwardMany:
    return ForwardMany(tuple(fragment(pkt, state.current_mtu)))


def pmtud_node(state: NodeState, pkt: Packet) -> NodeAction:
    if pkt.ip_version is not IpVersion.V6:
        raise ProtocolError("PMTUD node logic only handles IPv6 packets")
    if pkt.size_octets <= state.current_mtu:
        return Forward(pkt)
    return DropSendIcmp(state.current_mtu)


def post_dmtu(state: NodeState, pkt: Packet) -> NodeAction:
    """Override the next-interface MTU for ``pkt``'s identification.

    A packet whose identification matches the active override rides on it
    (raising it further if needed, never past ``max_mtu``); the override is
    lifted once the fragment with MF clear has gone through.
    """
    if pkt.size_octets > state.max_mtu:
        raise ProtocolError(
            f"post_dmtu called with {pkt.size_octets} octets above max_mtu {state.max_mtu}"
        )
    last = not pkt.mf
    if state.override_active and pkt.frag_id == state.stored_frag_id:
        return OverrideMtu(max(state.current_mtu, pkt.size_octets), pkt, fresh=False,
                           restore_after=last)
    return OverrideMtu(pkt.size_octets, pkt, fresh=True, restore_after=last)


def pre_standalone_dmtu(state: NodeState, pkt: Packet) -> NodeAction:
    if _fits(state, pkt):
        return Forward(pkt)
    if pkt.ip_version is not IpVersion.V6:
        return _local_fragments(state, pkt)
    if pkt.size_octets > state.threshold:
        return DropSilent(DropReason.EXCEEDS_THRESHOLD)
    if pkt.size_octets >= state.max_mtu:
        return DropSilent(DropReason.EXCEEDS_MAX_MTU)
    return post_dmtu(state, pkt)


def pre_parallel_dmtu(state: NodeState, pkt: Packet) -> NodeAction:
    if _fits(state, pkt):
        return Forward(pkt)
    if pkt.ip_version is not IpVersion.V6:
        return _local_fragments(state, pkt)
    if pkt.size_octets > state.threshold:
        if state.pmtud_enabled:
            return DropSendIcmp(state.current_mtu)
        return DropSilent(DropReason.EXCEEDS_THRESHOLD)
    if pkt.size_octets >= state.max_mtu:
        if state.pmtud_enabled:
            return DropSendIcmp(state.current_mtu)
        return DropSilent(DropReason.EXCEEDS_MAX_MTU)
    if state.pmtud_enabled and pkt.priority is not Priority.HIGH:
        return DropSendIcmp(state.current_mtu)
    # high priority with PMTUD running: the drop and the ICMP are suppressed
    return post_dmtu(state, pkt)


def apply_action(state: NodeState, action: NodeAction) -> None:
    """Apply the MTU side effects of ``action`` before the packet departs.

    Restoration requested by ``restore_after`` is left to the caller, which
    must call :meth:`NodeState.restore` once the packet is on the wire.
    """
    if not isinstance(action, OverrideMtu):
        return
    if action.new_mtu > state.max_mtu:
        raise ProtocolError(
            f"node {state.position}: override to {action.new_mtu} exceeds max_mtu {state.max_mtu}"
        )
    state.current_mtu = action.new_mtu
    state.override_active = True
    state.stored_frag_id = action.packet.frag_id
    state.generation += 1


def source_on_ptb(src: SourceState, reported_mtu: int, params: TimingParams,
                  frag_id: Optional[int] = None) -> tuple[list[Packet], float]:
    """Shrink the path MTU estimate and re-fragment the pending packet.

    Returns the new fragments and the fragmentation time the source spends
    before they depart.
    """
    if reported_mtu < 1:
        raise ValidationError(f"reported MTU must be >= 1, got {reported_mtu}")
    if reported_mtu >= src.pmtu_estimate:
        raise ProtocolError(
            f"PTB reports {reported_mtu}, not below current estimate {src.pmtu_estimate}"
        )
    src.pmtu_estimate = reported_mtu
    src.history.append(reported_mtu)
    return fragment(src.pending, reported_mtu, frag_id), params.t_f


def source_on_timeout(src: SourceState, first_hop_mtu: int,
                      frag_id: Optional[int] = None) -> list[Packet]:
    return fragment(src.pending, first_hop_mtu, frag_id)


class Behavior:
    """A protocol as seen by the engine: a node decision plus source policy."""

    name = "base"
    # the source seeds its estimate from the first hop and pre-fragments to it
    source_runs_pmtud = True
    pmtud_enabled = True

    def node_action(self, state: NodeState, pkt: Packet) -> NodeAction:
        raise NotImplementedError

    def dmtu_eligible(self, pkt: Packet) -> bool:
        return False


class Pmtud(Behavior):
    name = "pmtud"

    def node_action(self, state, pkt):
        if pkt.ip_version is IpVersion.V6:
            return pmtud_node(state, pkt)
        return Forward(pkt) if _fits(state, pkt) else _local_fragments(state, pkt)


class _Dmtu(Behavior):
    def _pre(self, state, pkt):
        raise NotImplementedError

    def node_action(self, state, pkt):
        if (state.override_active and pkt.frag_id == state.stored_frag_id
                and pkt.size_octets < state.max_mtu):
            return post_dmtu(state, pkt)
        return self._pre(state, pkt)


class DmtuStandalone(_Dmtu):
    name = "dmtu_standalone"
    source_runs_pmtud = False
    pmtud_enabled = False

    def _pre(self, state, pkt):
        return pre_standalone_dmtu(state, pkt)

    def dmtu_eligible(self, pkt):
        return pkt.ip_version is IpVersion.V6


class DmtuParallel(_Dmtu):
    name = "dmtu_parallel"

    def __init__(self, pmtud_enabled: bool = True):
        self.pmtud_enabled = pmtud_enabled
        self.source_runs_pmtud = pmtud_enabled

    def _pre(self, state, pkt):
        return pre_parallel_dmtu(state, pkt)

    def dmtu_eligible(self, pkt):
        if pkt.ip_version is not IpVersion.V6:
            return False
        return not self.pmtud_enabled or pkt.priority is Priority.HIGH


def behavior_for(protocol: str, pmtud_enabled: bool = True) -> Behavior:
    if protocol == "pmtud":
        return Pmtud()
    if protocol == "dmtu_standalone":
        return DmtuStandalone()
    if protocol == "dmtu_parallel":
        return DmtuParallel(pmtud_enabled)
    raise ValidationError(f"unknown protocol {protocol!r}")
