"""What a node decides to do with an arriving packet."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import DropReason, Packet


@dataclass(frozen=True, slots=True)
class Forward:
    packet: Packet
    extra_delay: float = 0.0


@dataclass(frozen=True, slots=True)
class ForwardMany:
    packets: tuple[Packet, ...]


@dataclass(frozen=True, slots=True)
class DropSendIcmp:
    reported_mtu: int


@dataclass(frozen=True, slots=True)
class DropSilent:
    reason: DropReason = DropReason.TOO_BIG_SILENT


@dataclass(frozen=True, slots=True)
class OverrideMtu:
    """Raise the next-interface MTU to ``new_mtu`` and forward ``packet``.

    ``fresh`` marks a new DMTU invocation (charged the per-override overhead);
    a continuation for an already matched identification is not fresh.
    ``restore_after`` puts the original MTU back once the packet has left.
    """

    new_mtu: int
    packet: Packet
    fresh: bool = True
    restore_after: bool = False


NodeAction = Union[Forward, ForwardMany, DropSendIcmp, DropSilent, OverrideMtu]
