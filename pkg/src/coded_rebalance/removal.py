"""Rebalancing after a node removal.

Every bit the removed node held survives on its other holders, one fewer
than the replication factor. The protocol restores replication with coded
broadcasts instead of raw copies:

1.  Binning. Each affected bit picks, uniformly at random, one box labeled
    (target, remainder, holder): the target is the survivor that will store
    the bit afterwards, the holder is a survivor that already stores it and
    will broadcast it, and the remainder is the rest of the bit's class.
    The assignment is shared metadata, visible to every node.
2.  Encoding. For each remainder set and each sender, the packets the
    sender holds for the other members of its group are zero-padded to a
    common length and XORed into one codeword.
3.  Decoding. Each target cancels the packets it already stores and is
    left with exactly the packet addressed to it; the shared directory
    supplies bit order and true lengths so padding is discarded safely.

Storage is rewritten only after every recovered packet has been verified
against the original file values, so no partially rebalanced state is ever
observable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .codeword import Codeword, xor_packets
from .database import Database, NodeSet, PlacementMap, full_support, node_contents
from .exceptions import (
    DecodeVerificationError,
    DirectoryMismatch,
    InvalidLabel,
    NotARecipient,
    RebalanceError,
    ReplicationOutOfRange,
    UnknownNode,
)
from .rng import STREAM_REMOVAL_BINNING, RngSpec

_NO_BITS = np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class RemovalBoxLabel:
    """Names one box of the removal binning.

    ``target`` stores the box's packet after rebalancing, ``holder`` is a
    survivor that already stores it and broadcasts it, and ``remainder`` is
    the rest of the packet's class (the survivors missing the bits, minus
    the target).
    """

    target: int
    remainder: NodeSet
    holder: int

    @property
    def bit_class(self) -> NodeSet:
        """Survivors that did not store the box's bits before rebalancing."""
        return tuple(sorted((self.target, *self.remainder)))


def boxes_for_class(nodes: NodeSet, removed_node: int, bit_class: NodeSet) -> tuple[RemovalBoxLabel, ...]:
    """All (K-r)(r-1) boxes a bit of the given class may choose."""
    cls = tuple(sorted(bit_class))
    excluded = set(cls) | {removed_node}
    holders = tuple(n for n in sorted(nodes) if n not in excluded)
    labels = []
    for target in cls:
        remainder = tuple(n for n in cls if n != target)
        labels.extend(RemovalBoxLabel(target, remainder, h) for h in holders)
    return tuple(labels)


@dataclass
class BinDirectoryRemoval:
    """Shared box assignment for every bit the removed node stored.

    This is globally known metadata: all survivors see the same assignment,
    so XOR packets align position for position and true lengths are known
    for unpadding. It is never charged to the communication load.
    """

    removed_node: int
    survivors: NodeSet
    replication: int
    bits: np.ndarray
    targets: np.ndarray
    holders: np.ndarray
    class_ids: np.ndarray
    classes: tuple[NodeSet, ...]
    groups: dict[RemovalBoxLabel, np.ndarray] = field(repr=False)

    def __len__(self) -> int:
        return int(self.bits.size)

    def label_of(self, bit: int) -> RemovalBoxLabel:
        """The box assigned to one bit of the removed node's store."""
        pos = int(np.searchsorted(self.bits, bit))
        if pos == self.bits.size or int(self.bits[pos]) != bit:
            raise KeyError(f"bit {bit} was not stored at node {self.removed_node}")
        cls = self.classes[int(self.class_ids[pos])]
        target = int(self.targets[pos])
        remainder = tuple(n for n in cls if n != target)
        return RemovalBoxLabel(target, remainder, int(self.holders[pos]))

    def packet_bits(self, label: RemovalBoxLabel) -> np.ndarray:
        """Ascending bit indices assigned to one box (possibly empty)."""
        return self.groups.get(self.canonical_label(label), _NO_BITS)

    def box_labels(self) -> tuple[RemovalBoxLabel, ...]:
        """Every valid box label, across all classes, empty boxes included."""
        nodes = tuple(sorted((*self.survivors, self.removed_node)))
        out: list[RemovalBoxLabel] = []
        for cls in self.classes:
            out.extend(boxes_for_class(nodes, self.removed_node, cls))
        return tuple(out)

    def canonical_label(self, label: RemovalBoxLabel) -> RemovalBoxLabel:
        """Normalize and structurally validate a label against this directory."""
        target = int(label.target)
        holder = int(label.holder)
        remainder = tuple(sorted(int(n) for n in label.remainder))
        survivors = set(self.survivors)
        class_size = len(self.survivors) + 1 - self.replication
        ok = (
            target in survivors
            and holder in survivors
            and set(remainder) <= survivors
            and len(remainder) == len(set(remainder)) == class_size - 1
            and target not in remainder
            and holder not in remainder
            and holder != target
        )
        if not ok:
            raise InvalidLabel(f"{label} is not a valid box for this directory")
        return RemovalBoxLabel(target, remainder, holder)


def bin_removal(db: Database, removed_node: int, rng: RngSpec) -> BinDirectoryRemoval:
    """Assign every bit of the removed node's store to one box, uniformly.

    For each class of affected bits there are (K-r)(r-1) boxes: one per
    (target, holder) pair, with the target drawn from the class and the
    holder from the bit's surviving storers. Draws are independent across
    bits and consumed in ascending bit order.
    """
    place = db.placement
    nodes = place.nodes
    num_nodes = len(nodes)
    r = place.replication
    if removed_node not in nodes:
        raise UnknownNode(f"node {removed_node} is not part of this database")
    if r < 2 or r > num_nodes - 1:
        raise ReplicationOutOfRange(
            f"removal needs 2 <= replication <= {num_nodes - 1}, got {r}"
        )

    survivors = tuple(n for n in nodes if n != removed_node)
    boxes_per_class = (num_nodes - r) * (r - 1)

    member = place.support_membership(removed_node)
    affected = np.flatnonzero(member[place.set_index])
    sub_sets = place.set_index[affected]

    # Per-support-set decode tables; rows for sets without the removed node
    # stay unused.
    num_sets = len(place.support)
    target_table = np.zeros((num_sets, num_nodes - r), dtype=np.int16)
    holder_table = np.zeros((num_sets, r - 1), dtype=np.int16)
    class_ord = np.full(num_sets, -1, dtype=np.int32)
    classes: list[NodeSet] = []
    class_holders: list[NodeSet] = []
    for s, stored in enumerate(place.support):
        if removed_node not in stored:
            continue
        cls = tuple(sorted(set(nodes) - set(stored)))
        class_ord[s] = len(classes)
        classes.append(cls)
        holders = tuple(n for n in stored if n != removed_node)
        class_holders.append(holders)
        target_table[s, :] = cls
        holder_table[s, :] = holders

    codes = rng.generator(STREAM_REMOVAL_BINNING).integers(
        0, boxes_per_class, size=affected.size
    )
    targets = target_table[sub_sets, codes // (r - 1)]
    holders_arr = holder_table[sub_sets, codes % (r - 1)]
    class_ids = class_ord[sub_sets]

    # Group bits by box. The stable sort keeps the original ascending bit
    # order inside each group, which is the XOR alignment contract.
    group_key = class_ids * boxes_per_class + codes
    order = np.argsort(group_key, kind="stable")
    sorted_keys = group_key[order]
    groups: dict[RemovalBoxLabel, np.ndarray] = {}
    if order.size:
        boundaries = np.flatnonzero(np.diff(sorted_keys)) + 1
        starts = np.concatenate(([0], boundaries))
        stops = np.concatenate((boundaries, [order.size]))
        for start, stop in zip(starts, stops):
            key = int(sorted_keys[start])
            cls = classes[key // boxes_per_class]
            code = key % boxes_per_class
            target = cls[code // (r - 1)]
            remainder = tuple(n for n in cls if n != target)
            holder = class_holders[key // boxes_per_class][code % (r - 1)]
            label = RemovalBoxLabel(target, remainder, holder)
            groups[label] = affected[order[start:stop]]

    return BinDirectoryRemoval(
        removed_node=removed_node,
        survivors=survivors,
        replication=r,
        bits=affected,
        targets=targets,
        holders=holders_arr,
        class_ids=class_ids,
        classes=tuple(classes),
        groups=groups,
    )


def packet_contents(
    directory: BinDirectoryRemoval, label: RemovalBoxLabel, db: Database
) -> tuple[np.ndarray, np.ndarray]:
    """One box's bits in canonical ascending order, with their values."""
    bits = directory.packet_bits(label)
    return bits, db.file.values[bits]


def _check_directory(db: Database, directory: BinDirectoryRemoval) -> None:
    place = db.placement
    k = directory.removed_node
    if k not in place.nodes:
        raise DirectoryMismatch(f"directory removed node {k} is unknown to the database")
    if directory.survivors != tuple(n for n in place.nodes if n != k):
        raise DirectoryMismatch("directory survivor set does not match the database")
    if directory.replication != place.replication:
        raise DirectoryMismatch("directory replication does not match the database")
    if not np.array_equal(directory.bits, node_contents(db, k)):
        raise DirectoryMismatch(
            "directory does not cover exactly the removed node's stored bits"
        )


def encode_removal(db: Database, directory: BinDirectoryRemoval) -> list[Codeword]:
    """Build every broadcast of the removal schedule.

    One codeword per (remainder set, sender): the XOR of the sender's r-1
    packets for the other group members, zero-padded to the longest. Empty
    codewords are emitted as records so the schedule length is always
    r * C(K-1, K-r-1).
    """
    _check_directory(db, directory)
    place = db.placement
    values = db.file.values
    group_size = len(place.nodes) - place.replication - 1

    codewords: list[Codeword] = []
    for ctx in combinations(directory.survivors, group_size):
        ctx_set = set(ctx)
        members = tuple(n for n in directory.survivors if n not in ctx_set)
        for sender in members:
            constituents = []
            packets = []
            for target in members:
                if target == sender:
                    continue
                label = RemovalBoxLabel(target, ctx, sender)
                bits = directory.packet_bits(label)
                constituents.append((label, int(bits.size)))
                packets.append(values[bits])
            codewords.append(
                Codeword(
                    sender=sender,
                    group=ctx,
                    payload=xor_packets(packets),
                    constituents=tuple(constituents),
                )
            )
    return codewords


def decode_removal(
    node: int, codeword: Codeword, db: Database, directory: BinDirectoryRemoval
) -> tuple[np.ndarray, np.ndarray]:
    """Recover the packet addressed to ``node`` from one codeword.

    The node XORs away the constituents it already stores and truncates the
    result to the demanded packet's true length. Returns the packet's bit
    indices and recovered values.
    """
    demanded = None
    for label, true_len in codeword.constituents:
        if label.target == node:
            demanded = (label, true_len)
            break
    if demanded is None:
        raise NotARecipient(f"node {node} demands no packet of this codeword")

    acc = codeword.payload.copy()
    for label, true_len in codeword.constituents:
        if label.target == node:
            continue
        bits = directory.packet_bits(label)
        acc[: bits.size] ^= db.file.values[bits]
    label, true_len = demanded
    return directory.packet_bits(label), acc[:true_len]


def apply_removal_rebalance(
    db: Database, removed_node: int, rng: RngSpec
) -> tuple[Database, list[Codeword]]:
    """Run the full removal protocol and commit the new placement.

    Bins, encodes, decodes at every recipient (verifying each recovered
    value against the file), then atomically rewrites storage: each
    affected bit keeps its surviving holders and gains its box's target,
    every other bit is untouched, and the removed node vanishes from the
    node universe. Returns the new database and the broadcast schedule.
    """
    directory = bin_removal(db, removed_node, rng)
    codewords = encode_removal(db, directory)

    values = db.file.values
    for cw in codewords:
        for label, _ in cw.constituents:
            bits, recovered = decode_removal(label.target, cw, db, directory)
            if not np.array_equal(recovered, values[bits]):
                raise DecodeVerificationError(
                    f"packet for node {label.target} (holder {label.holder}, "
                    f"context {label.remainder}) decoded incorrectly"
                )

    place = db.placement
    r = place.replication
    new_support = full_support(directory.survivors, r)
    lookup = {s: i for i, s in enumerate(new_support)}

    num_sets = len(place.support)
    stay_map = np.full(num_sets, -1, dtype=np.int32)
    move_map = np.full((num_sets, max(place.nodes) + 1), -1, dtype=np.int32)
    for s, stored in enumerate(place.support):
        if removed_node in stored:
            base = tuple(n for n in stored if n != removed_node)
            for target in set(place.nodes) - set(stored):
                move_map[s, target] = lookup[tuple(sorted((*base, target)))]
        else:
            stay_map[s] = lookup[stored]

    new_index = stay_map[place.set_index]
    moved_sets = place.set_index[directory.bits]
    new_index[directory.bits] = move_map[moved_sets, directory.targets]
    if new_index.min(initial=0) < 0:
        raise RebalanceError("internal error: unmapped placement after removal")

    new_place = PlacementMap(directory.survivors, r, new_support, new_index)
    return Database(new_place, db.file), codewords
