"""Confusion-matrix accounting, the evaluation metric suite, cluster
availability series and cross-seed aggregation with confidence intervals."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .attacks import GroundTruth
from .clustering import ClusterSnapshot


@dataclass
class ConfusionCounts:
    """Per-run node-level outcome counts. A node counts as detected once, at
    its first blacklisting anywhere in the network."""

    tp: int  # attackers blacklisted
    tn: int  # honest nodes never blacklisted
    fp: int  # honest nodes blacklisted
    fn: int  # attackers never blacklisted
    attackers_inserted: int
    total_interactions: int

    def validate(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")
        if self.tp + self.fn != self.attackers_inserted:
            raise ValueError("tp + fn must equal attackers_inserted")


def compute_confusion(ground_truth: GroundTruth, blacklisted: Set[int],
                      total_interactions: int) -> ConfusionCounts:
    """Fold the final union blacklist against the ground-truth assignment."""
    attackers = ground_truth.attackers
    tp = len(attackers & blacklisted)
    fp = len(blacklisted - attackers)
    fn = len(attackers) - tp
    tn = ground_truth.n_nodes - len(attackers) - fp
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn,
                           attackers_inserted=len(attackers),
                           total_interactions=total_interactions)


def detection_rate(c: ConfusionCounts) -> Optional[float]:
    """Fraction of inserted attackers detected at least once; None when no
    attackers were inserted."""
    if c.attackers_inserted == 0:
        return None
    return c.tp / c.attackers_inserted


def accuracy(c: ConfusionCounts) -> Optional[float]:
    total = c.tp + c.tn + c.fp + c.fn
    if total == 0:
        return None
    return (c.tp + c.tn) / total


def fpr(c: ConfusionCounts) -> Optional[float]:
    denom = c.fp + c.tn
    if denom == 0:
        return None
    return c.fp / denom


def fnr(c: ConfusionCounts) -> Optional[float]:
    denom = c.fn + c.tp
    if denom == 0:
        return None
    return c.fn / denom


def precision_recall_f1(c: ConfusionCounts) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    if precision is None or recall is None:
        return precision, recall, None
    if precision == 0.0 and recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2.0 * precision * recall / (precision + recall)


def fn_count_paper(c: ConfusionCounts) -> int:
    """Legacy unnormalized miss count kept for traceability: interactions
    minus the detection total. Reported raw, never fed into the rates."""
    return c.total_interactions - c.tp


@dataclass
class MetricsReport:
    """Per-run metric values; None marks a metric whose denominator was
    empty (reported as not-applicable downstream)."""

    detection_rate: Optional[float]
    accuracy: Optional[float]
    accuracy_x100: Optional[float]
    fpr: Optional[float]
    fnr: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    clusters_total_mean: float
    clusters_attacker_free_mean: float
    fn_count_paper: int
    total_interactions: int


def cluster_availability(snapshots: Sequence[ClusterSnapshot], ground_truth: GroundTruth,
                         ) -> List[Tuple[int, int, int]]:
    """Per round: total cluster count and the count containing no
    ground-truth attacker."""
    if not snapshots:
        raise ValueError("no snapshots")
    attackers = ground_truth.attackers
    rows = []
    for snap in snapshots:
        total = len(snap.clusters)
        clean = sum(1 for members in snap.clusters if not attackers.intersection(members))
        rows.append((snap.round, total, clean))
    return rows


def build_report(c: ConfusionCounts, availability: Sequence[Tuple[int, int, int]]) -> MetricsReport:
    c.validate()
    acc = accuracy(c)
    precision, recall, f1 = precision_recall_f1(c)
    n_rounds = len(availability)
    return MetricsReport(
        detection_rate=detection_rate(c),
        accuracy=acc,
        accuracy_x100=None if acc is None else acc * 100.0,
        fpr=fpr(c),
        fnr=fnr(c),
        precision=precision,
        recall=recall,
        f1=f1,
        clusters_total_mean=sum(r[1] for r in availability) / n_rounds,
        clusters_attacker_free_mean=sum(r[2] for r in availability) / n_rounds,
        fn_count_paper=fn_count_paper(c),
        total_interactions=c.total_interactions,
    )


# metric fields aggregated across seeds for the summary report
AGGREGATE_KEYS = (
    "detection_rate", "accuracy", "fpr", "fnr",
    "precision", "recall", "f1",
    "clusters_total_mean", "clusters_attacker_free_mean",
)


def mean_ci(values: Sequence[float]) -> Tuple[float, Optional[float]]:
    """Sample mean and normal-approximation 95% CI half-width (1.96 s/sqrt n)."""
    mean = statistics.fmean(values)
    if len(values) < 2:
        return mean, None
    return mean, 1.96 * statistics.stdev(values) / math.sqrt(len(values))


def aggregate_runs(reports: Sequence[MetricsReport],
                   ) -> Dict[str, Tuple[Optional[float], Optional[float]]]:
    """Per metric: mean and 95% CI half-width over the runs where the metric
    was defined; (None, None) when it never was."""
    out: Dict[str, Tuple[Optional[float], Optional[float]]] = {}
    for key in AGGREGATE_KEYS:
        values = [getattr(rp, key) for rp in reports if getattr(rp, key) is not None]
        out[key] = mean_ci(values) if values else (None, None)
    return out
