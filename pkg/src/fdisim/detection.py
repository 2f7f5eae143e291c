"""Fault-management layer: consensus standard deviation, the two-step
collaborative filter, suspect bookkeeping, alerts and the blacklist."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .domain import AlertMessage, validate_alert_message


@dataclass
class DetectionConfig:
    consensus_threshold: float = 5.0  # verdict boundary: combined SD equal to it is honest
    detection_enabled: bool = True
    region_cap: int = 5  # max similar neighbors sampled into a consensus region

    def validate(self) -> None:
        if not self.consensus_threshold > 0:
            raise ValueError("consensus_threshold must be > 0")
        if self.region_cap < 1:
            raise ValueError("region_cap must be >= 1")


def region_sd(values: Sequence[float]) -> float:
    """Population standard deviation (divide by N) of a consensus region."""
    n = len(values)
    if n == 0:
        raise ValueError("empty consensus region")
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / n)


@dataclass
class ConsensusRegion:
    """The detector's own latest reading plus its sampled similar neighbors'
    latest readings; the material the two-step filter works on."""

    values: List[float]

    @property
    def count(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values)


class ClassifyOutcome(Enum):
    HONEST = "honest"
    ATTACKER = "attacker"
    REGION_INVALID = "region-invalid"


@dataclass
class ClassifyResult:
    outcome: ClassifyOutcome
    region_sd: float
    combined_sd: Optional[float]  # None when the region itself was rejected


def classify_suspect(region: ConsensusRegion, suspect_reading: float,
                     cfg: DetectionConfig) -> ClassifyResult:
    """Two-step collaborative filter.

    Step 1 validates the region itself: its own spread must sit within the
    consensus threshold, and it must contain at least one neighbor reading
    besides the detector's own (a consensus of one is no consensus). Step 2
    re-evaluates the spread with the suspect's reading included; exceeding
    the threshold convicts, equality acquits.
    """
    base_sd = region_sd(region.values)
    if region.count < 2 or base_sd > cfg.consensus_threshold:
        return ClassifyResult(ClassifyOutcome.REGION_INVALID, base_sd, None)
    combined = region_sd(list(region.values) + [suspect_reading])
    if combined > cfg.consensus_threshold:
        return ClassifyResult(ClassifyOutcome.ATTACKER, base_sd, combined)
    return ClassifyResult(ClassifyOutcome.HONEST, base_sd, combined)


@dataclass(slots=True)
class SuspectEntry:
    first_flag_round: int
    last_reading: float


@dataclass(slots=True)
class BlacklistEntry:
    detected_round: int
    detector: int
    reading: float


class SuspectOutcome(Enum):
    NO_CHANGE = "no-change"
    ADDED = "added"
    CLEARED = "cleared"
    DETECTED = "detected"
    PENDING = "pending"


def emit_alert(detector: int, attacker: int, reading: float) -> AlertMessage:
    """Build the alert for a freshly classified attacker."""
    if detector == attacker:
        raise ValueError("a node cannot accuse itself")
    return AlertMessage(detector=detector, attacker=attacker, attacker_reading=reading)


def process_suspect(state, sender: int, reading: float, similar_verdict: bool,
                    region_provider: Callable[[], ConsensusRegion],
                    cfg: DetectionConfig, rnd: int,
                    ) -> Tuple[SuspectOutcome, Optional[AlertMessage], Optional[ClassifyResult]]:
    """Advance one suspect state machine step for a received reading.

    A sender already under suspicion is put through the consensus filter
    with its newest reading: conviction moves it to the blacklist and emits
    an alert, acquittal clears it, an invalid region leaves it pending. A
    dissimilar sender not yet suspected is added to the suspect list. A
    similar, unsuspected sender changes nothing.
    """
    suspects: Dict[int, SuspectEntry] = state.suspects
    entry = suspects.get(sender)
    if entry is not None:
        entry.last_reading = reading
        result = classify_suspect(region_provider(), reading, cfg)
        if result.outcome is ClassifyOutcome.ATTACKER:
            del suspects[sender]
            state.blacklist[sender] = BlacklistEntry(rnd, state.node_id, reading)
            state.table.remove(sender)
            return SuspectOutcome.DETECTED, emit_alert(state.node_id, sender, reading), result
        if result.outcome is ClassifyOutcome.HONEST:
            del suspects[sender]
            return SuspectOutcome.CLEARED, None, result
        return SuspectOutcome.PENDING, None, result
    if not similar_verdict:
        suspects[sender] = SuspectEntry(rnd, reading)
        return SuspectOutcome.ADDED, None, None
    return SuspectOutcome.NO_CHANGE, None, None


def handle_alert(state, am: AlertMessage, is_leader: bool, rnd: int) -> bool:
    """Apply an alert to one node's state.

    The attacker is blacklisted and purged from the neighbor table, similar
    set and suspect list. Returns True when the receiving node is a leader
    and the entry was new, i.e. the alert should go out on the leader
    overlay; duplicates change nothing and are never re-forwarded.
    """
    if not validate_alert_message(am):
        return False
    if am.attacker in state.blacklist:
        return False
    state.blacklist[am.attacker] = BlacklistEntry(rnd, am.detector, am.attacker_reading)
    state.table.remove(am.attacker)
    state.suspects.pop(am.attacker, None)
    return is_leader


def is_blacklisted(state, node_id: int) -> bool:
    return node_id in state.blacklist


def build_consensus_region(state, own_reading: float, cap: int) -> ConsensusRegion:
    """Assemble the detector's region: its own reading plus the latest
    individual readings of up to ``cap`` similar neighbors, lowest ids
    first, skipping anything currently suspected or blacklisted."""
    values = [own_reading]
    taken = 0
    suspects = state.suspects
    blacklist = state.blacklist
    records = state.table.records
    for nid in sorted(state.table.similar):
        if taken >= cap:
            break
        if nid in suspects or nid in blacklist:
            continue
        values.append(records[nid].individual_reading)
        taken += 1
    return ConsensusRegion(values)
