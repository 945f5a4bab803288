"""Broadcast transmission records shared by both rebalancing protocols."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .database import NodeSet


@dataclass(frozen=True)
class Codeword:
    """One broadcast: a payload plus the labels of the packets inside it.

    ``constituents`` pairs each packet's box label with its true
    (pre-padding) length. The payload length equals the longest
    constituent; a codeword whose constituents are all empty is still a
    record, with a zero-length payload that is never put on the wire.
    """

    sender: int
    group: NodeSet
    payload: np.ndarray
    constituents: tuple[tuple[object, int], ...]

    @property
    def payload_bits(self) -> int:
        return int(self.payload.size)


def xor_packets(packets: Sequence[np.ndarray]) -> np.ndarray:
    """Position-wise XOR after zero-padding every packet at the tail."""
    length = max((int(p.size) for p in packets), default=0)
    out = np.zeros(length, dtype=np.uint8)
    for p in packets:
        out[: p.size] ^= p
    return out
