"""Clustering layer: similarity aggregation, data-message handling, neighbor
tables, leader election and per-round cluster extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .domain import DataMessage


@dataclass
class ClusterConfig:
    cthresh: float = 3.0          # similarity threshold; comparisons are strict
    neighbor_ttl_rounds: int = 3  # evict records not refreshed within this many rounds

    def validate(self) -> None:
        if not self.cthresh > 0:
            raise ValueError("cthresh must be > 0")
        if self.neighbor_ttl_rounds < 1:
            raise ValueError("neighbor_ttl_rounds must be >= 1")


@dataclass(slots=True)
class NeighborRecord:
    """Last heard state of one neighbor: its reading, its disseminated
    aggregate, the count that aggregate represents, and when it was heard."""

    individual_reading: float
    aggregate_reading: float
    neighbor_count: int
    last_seen_round: int


def aggregate_reading(own: float, neighbors: Iterable[NeighborRecord]) -> float:
    """Weighted mean of the node's own reading and its similar neighbors'
    aggregates, each aggregate weighted by the reading count it carries."""
    num = float(own)
    den = 1.0
    for rec in neighbors:
        num += rec.aggregate_reading * rec.neighbor_count
        den += rec.neighbor_count
    return num / den


def is_similar(candidate_ir: float, candidate_ar: float,
               own_ir: float, own_aggregate: float, cfg: ClusterConfig) -> bool:
    """Two-sided similarity test, strict on both sides: the candidate's
    reading must sit inside the receiver's aggregate window and the
    receiver's reading inside the candidate's disseminated aggregate."""
    t = cfg.cthresh
    return abs(candidate_ir - own_aggregate) < t and abs(own_ir - candidate_ar) < t


class NeighborTable:
    """One node's view of its neighborhood.

    Every heard record is kept under the sender id; ``similar`` is the subset
    currently passing the similarity test. Weighted sums over the similar
    subset are maintained incrementally so the local aggregate is O(1) per
    received message.
    """

    __slots__ = ("records", "similar", "_sum_aw", "_sum_w")

    def __init__(self) -> None:
        self.records: Dict[int, NeighborRecord] = {}
        self.similar: Set[int] = set()
        self._sum_aw = 0.0  # sum of aggregate_reading * neighbor_count over similar
        self._sum_w = 0.0   # sum of neighbor_count over similar

    def aggregate(self, own_reading: float) -> float:
        return (own_reading + self._sum_aw) / (1.0 + self._sum_w)

    def similar_records(self) -> List[NeighborRecord]:
        return [self.records[i] for i in self.similar]

    def add_similar(self, sender: int) -> None:
        if sender not in self.similar:
            rec = self.records[sender]
            self.similar.add(sender)
            self._sum_aw += rec.aggregate_reading * rec.neighbor_count
            self._sum_w += rec.neighbor_count

    def drop_similar(self, sender: int) -> None:
        if sender in self.similar:
            rec = self.records[sender]
            self.similar.discard(sender)
            self._sum_aw -= rec.aggregate_reading * rec.neighbor_count
            self._sum_w -= rec.neighbor_count

    def remove(self, sender: int) -> None:
        """Forget a neighbor entirely (blacklist purge, staleness)."""
        self.drop_similar(sender)
        self.records.pop(sender, None)


def handle_data_message(table: NeighborTable, msg: DataMessage,
                        own_reading: float, cfg: ClusterConfig, rnd: int) -> bool:
    """Store the sender's record, re-derive the local aggregate and update the
    similar set. Returns the similarity verdict (True = similar).

    The record is stored before the aggregate is taken, so a refreshed
    similar neighbor contributes its newest values to its own test.
    """
    rec = table.records.get(msg.sender)
    if rec is None:
        table.records[msg.sender] = NeighborRecord(
            msg.individual_reading, msg.aggregate_reading, msg.neighbor_count, rnd)
    else:
        if msg.sender in table.similar:
            table._sum_aw += (msg.aggregate_reading * msg.neighbor_count
                              - rec.aggregate_reading * rec.neighbor_count)
            table._sum_w += msg.neighbor_count - rec.neighbor_count
        rec.individual_reading = msg.individual_reading
        rec.aggregate_reading = msg.aggregate_reading
        rec.neighbor_count = msg.neighbor_count
        rec.last_seen_round = rnd

    own_aggregate = table.aggregate(own_reading)
    verdict = is_similar(msg.individual_reading, msg.aggregate_reading,
                         own_reading, own_aggregate, cfg)
    if verdict:
        table.add_similar(msg.sender)
    else:
        table.drop_similar(msg.sender)
    return verdict


def build_data_message(node_id: int, own_reading: float, table: NeighborTable) -> DataMessage:
    """Assemble the node's periodic broadcast from its current view."""
    return DataMessage(
        sender=node_id,
        individual_reading=own_reading,
        aggregate_reading=table.aggregate(own_reading),
        neighbor_count=len(table.similar),
    )


def prune_stale_neighbors(table: NeighborTable, rnd: int, cfg: ClusterConfig) -> NeighborTable:
    """Evict every record not refreshed within the TTL window."""
    ttl = cfg.neighbor_ttl_rounds
    stale = [nid for nid, rec in table.records.items() if rnd - rec.last_seen_round > ttl]
    for nid in stale:
        table.remove(nid)
    return table


def prune_ids(table: NeighborTable, candidates: Iterable[int], rnd: int, cfg: ClusterConfig) -> None:
    """TTL check restricted to the given ids.

    Equivalent to prune_stale_neighbors when ``candidates`` covers every
    sender that stayed silent this round: records of senders heard this
    round carry last_seen_round == rnd and can never be stale.
    """
    ttl = cfg.neighbor_ttl_rounds
    for nid in candidates:
        rec = table.records.get(nid)
        if rec is not None and rnd - rec.last_seen_round > ttl:
            table.remove(nid)


def elect_leaders(counts: Mapping[int, int]) -> Set[int]:
    """Every node whose similar-neighbor count ties the maximum is a leader.

    Deterministic and invariant under the mapping's iteration order.
    """
    if not counts:
        return set()
    top = max(counts.values())
    return {nid for nid, c in counts.items() if c == top}


@dataclass
class ClusterSnapshot:
    """Per-round clustering state: disjoint clusters (each >= 2 members, as
    sorted member tuples) and the leader set of each cluster."""

    round: int
    clusters: List[Tuple[int, ...]]
    leaders: List[Tuple[int, ...]]

    def cluster_of(self, node_id: int) -> Optional[int]:
        for idx, members in enumerate(self.clusters):
            if node_id in members:
                return idx
        return None

    def all_leaders(self) -> Set[int]:
        out: Set[int] = set()
        for leads in self.leaders:
            out.update(leads)
        return out


def extract_clusters(similar_sets: Mapping[int, Set[int]], rnd: int,
                     excluded: Set[int] = frozenset()) -> ClusterSnapshot:
    """Connected components of the mutual-similarity graph.

    An edge (u, v) exists iff each node currently holds the other in its
    similar set; nodes in ``excluded`` (blacklisted anywhere) take part in no
    edge. Components of size >= 2 become clusters; leaders are the members
    with the most similar neighbors inside their own cluster.
    """
    parent: Dict[int, int] = {}

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    nodes = [n for n in similar_sets if n not in excluded]
    for n in nodes:
        parent[n] = n
    for u in nodes:
        su = similar_sets[u]
        for v in su:
            if v > u and v in parent and u in similar_sets.get(v, ()):
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[rv] = ru

    groups: Dict[int, List[int]] = {}
    for n in nodes:
        groups.setdefault(find(n), []).append(n)

    clusters: List[Tuple[int, ...]] = []
    leaders: List[Tuple[int, ...]] = []
    for members in sorted(groups.values(), key=min):
        if len(members) < 2:
            continue
        member_set = set(members)
        counts = {m: len(similar_sets[m] & member_set) for m in members}
        clusters.append(tuple(sorted(members)))
        leaders.append(tuple(sorted(elect_leaders(counts))))
    return ClusterSnapshot(round=rnd, clusters=clusters, leaders=leaders)
