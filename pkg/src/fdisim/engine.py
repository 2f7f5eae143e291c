"""Deterministic round-based world: node placement, unit-disk adjacency,
per-round data-message exchange, alert propagation, leader election and
cluster snapshotting."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .attacks import AttackConfig, GroundTruth, attack_is_active, forge_reading, select_attackers
from .clustering import (ClusterConfig, ClusterSnapshot, NeighborTable, build_data_message,
                         extract_clusters, handle_data_message, prune_ids)
from .detection import (BlacklistEntry, DetectionConfig, SuspectEntry,
                        SuspectOutcome, build_consensus_region, handle_alert, process_suspect)
from .domain import (AlertMessage, DataMessage, NodeLabel, NodeRole, transition_label,
                     validate_data_message)
from .metrics import (ConfusionCounts, MetricsReport, build_report, cluster_availability,
                      compute_confusion)
from .sensing import FieldConfig, SynthField, TraceError, load_trace

EVENT_DM_SENT = "dm_sent"
EVENT_DM_DISCARDED = "dm_discarded"
EVENT_SUSPECT_ADDED = "suspect_added"
EVENT_SUSPECT_CLEARED = "suspect_cleared"
EVENT_ATTACKER_DETECTED = "attacker_detected"
EVENT_ALERT_FORWARDED = "alert_forwarded"
EVENT_NODE_EXCLUDED = "node_excluded"


class ConfigError(Exception):
    pass


@dataclass
class ScenarioConfig:
    n_nodes: int = 100
    area_width_m: float = 200.0
    area_height_m: float = 200.0
    tx_radius_m: float = 100.0
    n_rounds: int = 600
    attacker_fraction: float = 0.1
    seed: int = 1
    crash_fraction: float = 0.0
    crash_round: int = 0
    trace_path: Optional[str] = None
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    sensing: FieldConfig = field(default_factory=FieldConfig)

    def validate(self) -> None:
        if self.n_nodes < 2:
            raise ConfigError("n_nodes must be >= 2")
        if self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if self.area_width_m <= 0 or self.area_height_m <= 0:
            raise ConfigError("area dimensions must be > 0")
        if self.tx_radius_m <= 0:
            raise ConfigError("tx_radius_m must be > 0")
        if not 0.0 <= self.attacker_fraction < 1.0:
            raise ConfigError("attacker_fraction must be in [0, 1)")
        if not 0.0 <= self.crash_fraction < 1.0:
            raise ConfigError("crash_fraction must be in [0, 1)")
        if self.crash_round < 0:
            raise ConfigError("crash_round must be >= 0")
        try:
            self.cluster.validate()
            self.detection.validate()
            self.attack.validate()
            self.sensing.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


class NodeState:
    """One node's protocol state."""

    __slots__ = ("node_id", "table", "suspects", "blacklist", "role", "label",
                 "known_leaders", "current_reading")

    def __init__(self, node_id: int) -> None:
        self.node_id = node_id
        self.table = NeighborTable()
        self.suspects: Dict[int, SuspectEntry] = {}
        self.blacklist: Dict[int, BlacklistEntry] = {}
        self.role = NodeRole.ISOLATED
        self.label = NodeLabel.HONEST
        self.known_leaders: Set[int] = set()
        self.current_reading = 0.0


@dataclass(slots=True)
class DetectionRecord:
    """One conviction, with the consensus spreads that produced it."""

    round: int
    detector: int
    attacker: int
    reading: float
    region_sd: float
    combined_sd: float


@dataclass
class RunResult:
    seed: int
    snapshots: List[ClusterSnapshot]
    events: List[Tuple]  # (round, event, node, subject, value)
    detections: List[DetectionRecord]
    availability: List[Tuple[int, int, int]]
    blacklisted_counts: List[int]
    node_blacklists: List[Dict[int, BlacklistEntry]]
    confusion: ConfusionCounts
    report: MetricsReport
    total_interactions: int
    ground_truth: GroundTruth


def place_nodes(cfg: ScenarioConfig, rng: random.Random) -> List[Tuple[float, float]]:
    """Independent uniform placement over the rectangle; fixed thereafter."""
    return [(rng.uniform(0.0, cfg.area_width_m), rng.uniform(0.0, cfg.area_height_m))
            for _ in range(cfg.n_nodes)]


def compute_adjacency(positions: Sequence[Tuple[float, float]],
                      tx_radius_m: float) -> List[List[int]]:
    """Unit-disk neighbor lists: an edge iff distance <= radius (inclusive)."""
    n = len(positions)
    r2 = tx_radius_m * tx_radius_m
    adjacency: List[List[int]] = [[] for _ in range(n)]
    for i in range(n):
        xi, yi = positions[i]
        for j in range(i + 1, n):
            dx = xi - positions[j][0]
            dy = yi - positions[j][1]
            if dx * dx + dy * dy <= r2:
                adjacency[i].append(j)
                adjacency[j].append(i)
    return adjacency


class WorldState:
    """Everything one run mutates, round by round."""

    def __init__(self, cfg: ScenarioConfig, positions, adjacency, ground_truth: GroundTruth,
                 source, crashed: Set[int]) -> None:
        n = cfg.n_nodes
        self.cfg = cfg
        self.positions = positions
        self.adjacency = adjacency
        self.adjacency_sets = [set(neigh) for neigh in adjacency]
        self.ground_truth = ground_truth
        self.source = source
        self.crashed = crashed
        self.states = [NodeState(i) for i in range(n)]
        self.round = 0
        self.pending_alerts: List[Tuple[AlertMessage, int]] = []
        self.excluded: Set[int] = set()
        self.blacklisted_union: Set[int] = set()
        self.global_leaders: Set[int] = set()
        self.suspect_refcount: Dict[int, int] = {}
        # per target: adjacent nodes currently blacklisting it (global
        # exclusion trips when this covers the whole neighborhood)
        self.blacklister_count: Dict[int, int] = {}
        self.total_interactions = 0
        self.events: List[Tuple] = []
        self.snapshots: List[ClusterSnapshot] = []
        self.detections: List[DetectionRecord] = []
        self.blacklisted_counts: List[int] = []
        self._forge_rngs: Dict[int, random.Random] = {}
        self._bl_touched: Set[int] = set()

    def forge_rng(self, node_id: int) -> random.Random:
        rng = self._forge_rngs.get(node_id)
        if rng is None:
            rng = random.Random(f"{self.cfg.seed}/forge/{node_id}")
            self._forge_rngs[node_id] = rng
        return rng

    def node_is_dead(self, node_id: int) -> bool:
        return node_id in self.crashed and self.round >= self.cfg.crash_round

    # -- label bookkeeping -------------------------------------------------

    def _mark_suspicious(self, node_id: int) -> None:
        self.suspect_refcount[node_id] = self.suspect_refcount.get(node_id, 0) + 1
        st = self.states[node_id]
        if st.label is NodeLabel.HONEST:
            st.label = transition_label(st.label, NodeLabel.SUSPICIOUS)

    def _unmark_suspicious(self, node_id: int) -> None:
        self.suspect_refcount[node_id] = self.suspect_refcount.get(node_id, 1) - 1
        st = self.states[node_id]
        if self.suspect_refcount[node_id] <= 0 and st.label is NodeLabel.SUSPICIOUS:
            st.label = transition_label(st.label, NodeLabel.HONEST)

    def _mark_attacker(self, node_id: int) -> None:
        st = self.states[node_id]
        if st.label is not NodeLabel.ATTACKER:
            st.label = transition_label(st.label, NodeLabel.ATTACKER)

    # -- blacklist bookkeeping ----------------------------------------------

    def _note_blacklisted(self, observer: int, target: int) -> None:
        self.blacklisted_union.add(target)
        if observer in self.adjacency_sets[target]:
            self.blacklister_count[target] = self.blacklister_count.get(target, 0) + 1
            self._bl_touched.add(target)


def _deliver_alert(world: WorldState, receiver: int, am: AlertMessage, rnd: int) -> bool:
    """Apply one alert at one node; returns True when it must be flooded."""
    st = world.states[receiver]
    if am.attacker in st.blacklist:
        return False
    had_suspect = am.attacker in st.suspects
    forward = handle_alert(st, am, receiver in world.global_leaders, rnd)
    if am.attacker not in st.blacklist:
        return False  # alert failed validation; nothing applied
    if had_suspect:
        world._unmark_suspicious(am.attacker)
    world._note_blacklisted(receiver, am.attacker)
    return forward


def run_round(world: WorldState, cfg: ScenarioConfig) -> None:
    rnd = world.round
    states = world.states
    events = world.events
    gt = world.ground_truth
    ccfg = cfg.cluster
    dcfg = cfg.detection
    acfg = cfg.attack
    cthresh = ccfg.cthresh
    detection_on = dcfg.detection_enabled
    n = cfg.n_nodes

    # phase 1: every live, non-excluded node broadcasts one data message
    emissions: List[Optional[DataMessage]] = [None] * n
    valid: List[bool] = [False] * n
    for i in range(n):
        if i in world.excluded or world.node_is_dead(i):
            continue
        st = states[i]
        true_reading = world.source.reading(i, rnd)
        st.current_reading = true_reading
        dm = build_data_message(i, true_reading, st.table)
        if gt.is_attacker(i) and attack_is_active(rnd, acfg):
            forged = forge_reading(true_reading, dm.aggregate_reading, acfg, cthresh,
                                   world.forge_rng(i))
            dm = DataMessage(i, forged, dm.aggregate_reading, dm.neighbor_count)
        emissions[i] = dm
        valid[i] = validate_data_message(dm)
        events.append((rnd, EVENT_DM_SENT, i, None, dm.individual_reading))

    # phase 2: in-range delivery and per-receiver processing
    fresh_alerts: List[AlertMessage] = []
    for i in range(n):
        if i in world.excluded or world.node_is_dead(i):
            continue
        st = states[i]
        blacklist = st.blacklist
        suspects = st.suspects
        table = st.table
        own = st.current_reading
        watch = detection_on and not gt.is_attacker(i)
        for j in world.adjacency[i]:
            dm = emissions[j]
            if dm is None or j in blacklist:
                continue
            if not valid[j]:
                events.append((rnd, EVENT_DM_DISCARDED, i, j, None))
                continue
            world.total_interactions += 1
            verdict = handle_data_message(table, dm, own, ccfg, rnd)
            if not watch:
                continue
            if j in suspects or not verdict:
                outcome, am, res = process_suspect(
                    st, j, dm.individual_reading, verdict,
                    lambda: build_consensus_region(st, own, dcfg.region_cap),
                    dcfg, rnd)
                if outcome is SuspectOutcome.ADDED:
                    events.append((rnd, EVENT_SUSPECT_ADDED, i, j, dm.individual_reading))
                    world._mark_suspicious(j)
                elif outcome is SuspectOutcome.CLEARED:
                    events.append((rnd, EVENT_SUSPECT_CLEARED, i, j, dm.individual_reading))
                    world._unmark_suspicious(j)
                elif outcome is SuspectOutcome.DETECTED:
                    events.append((rnd, EVENT_ATTACKER_DETECTED, i, j, dm.individual_reading))
                    world._unmark_suspicious(j)
                    world._mark_attacker(j)
                    world._note_blacklisted(i, j)
                    world.detections.append(DetectionRecord(
                        rnd, i, j, dm.individual_reading, res.region_sd, res.combined_sd))
                    fresh_alerts.append(am)
                # PENDING keeps the suspect unchanged

    # phase 3: alert delivery; scheduled floods first, then fresh detections
    if world.pending_alerts:
        due = [am for am, when in world.pending_alerts if when <= rnd]
        world.pending_alerts = [(am, when) for am, when in world.pending_alerts if when > rnd]
        leaders = sorted(world.global_leaders)
        for am in due:
            for target in leaders:
                if _deliver_alert(world, target, am, rnd):
                    world.pending_alerts.append((am, rnd + 1))
                    events.append((rnd, EVENT_ALERT_FORWARDED, target, am.attacker,
                                   am.attacker_reading))
    for am in fresh_alerts:
        # a detector that is itself a leader puts the alert on the overlay
        if am.detector in world.global_leaders:
            world.pending_alerts.append((am, rnd + 1))
            events.append((rnd, EVENT_ALERT_FORWARDED, am.detector, am.attacker,
                           am.attacker_reading))
        for target in sorted(states[am.detector].known_leaders):
            if target == am.detector:
                continue
            if _deliver_alert(world, target, am, rnd):
                world.pending_alerts.append((am, rnd + 1))
                events.append((rnd, EVENT_ALERT_FORWARDED, target, am.attacker,
                               am.attacker_reading))

    # newly silenced nodes: excluded once every neighbor blacklists them
    if world._bl_touched:
        for target in sorted(world._bl_touched):
            if target in world.excluded:
                continue
            degree = len(world.adjacency[target])
            if degree > 0 and world.blacklister_count.get(target, 0) >= degree:
                world.excluded.add(target)
                events.append((rnd, EVENT_NODE_EXCLUDED, target, None, None))
        world._bl_touched.clear()

    # phase 4: TTL maintenance; only silent senders can have gone stale
    silent = [j for j in range(n) if emissions[j] is None]
    if silent:
        for i in range(n):
            if i in world.excluded or world.node_is_dead(i):
                continue
            prune_ids(states[i].table, silent, rnd, ccfg)

    # phase 5: election and snapshot over globally non-blacklisted nodes;
    # dead nodes hold frozen state and cannot be cluster participants
    similar_sets = {i: states[i].table.similar for i in range(n)}
    snapshot_excluded = world.blacklisted_union
    if world.crashed and rnd >= cfg.crash_round:
        snapshot_excluded = snapshot_excluded | world.crashed
    snapshot = extract_clusters(similar_sets, rnd, excluded=snapshot_excluded)
    world.snapshots.append(snapshot)
    world.blacklisted_counts.append(len(world.blacklisted_union))
    clustered: Set[int] = set()
    world.global_leaders = set()
    for members, leads in zip(snapshot.clusters, snapshot.leaders):
        lead_set = set(leads)
        world.global_leaders.update(lead_set)
        for m in members:
            clustered.add(m)
            st = states[m]
            st.known_leaders = lead_set
            st.role = NodeRole.LEADER if m in lead_set else NodeRole.COMMON
    for i in range(n):
        if i not in clustered:
            states[i].role = NodeRole.ISOLATED
            states[i].known_leaders = set()

    world.round += 1


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Execute one full run; byte-identical output for equal (config, seed)."""
    cfg.validate()
    seed = cfg.seed
    place_rng = random.Random(f"{seed}/place")
    positions = place_nodes(cfg, place_rng)
    adjacency = compute_adjacency(positions, cfg.tx_radius_m)

    if cfg.trace_path is not None:
        source = load_trace(cfg.trace_path)
        if source.n_nodes != cfg.n_nodes:
            raise TraceError(f"trace covers {source.n_nodes} nodes, config expects {cfg.n_nodes}")
        if source.n_rounds < cfg.n_rounds:
            raise TraceError(f"trace covers {source.n_rounds} rounds, "
                             f"config expects {cfg.n_rounds}")
    else:
        source = SynthField(cfg.sensing, positions, cfg.n_rounds, seed)

    gt_rng = random.Random(f"{seed}/attackers")
    ground_truth = select_attackers(cfg.n_nodes, cfg.attacker_fraction, gt_rng)

    crashed: Set[int] = set()
    if cfg.crash_fraction > 0:
        crash_rng = random.Random(f"{seed}/crash")
        count = round(cfg.crash_fraction * cfg.n_nodes)
        if count:
            crashed = set(crash_rng.sample(range(cfg.n_nodes), count))

    world = WorldState(cfg, positions, adjacency, ground_truth, source, crashed)
    for _ in range(cfg.n_rounds):
        run_round(world, cfg)

    confusion = compute_confusion(ground_truth, world.blacklisted_union,
                                  world.total_interactions)
    availability = cluster_availability(world.snapshots, ground_truth)
    report = build_report(confusion, availability)
    return RunResult(
        seed=seed,
        snapshots=world.snapshots,
        events=world.events,
        detections=world.detections,
        availability=availability,
        blacklisted_counts=world.blacklisted_counts,
        node_blacklists=[st.blacklist for st in world.states],
        confusion=confusion,
        report=report,
        total_interactions=world.total_interactions,
        ground_truth=ground_truth,
    )
