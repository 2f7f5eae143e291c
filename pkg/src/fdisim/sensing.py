"""Ground-truth readings: a synthetic spatially smooth field and ingestion
of externally prepared trace files."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TRACE_HEADER = ["round", "node_id", "value"]

# entropy tag appended to the scenario seed for the sensing noise stream
_NOISE_STREAM = 0x5EED


class TraceError(Exception):
    pass


@dataclass
class FieldConfig:
    base_value: float = 16.0
    drift_per_round: float = 0.0
    spatial_gradient: float = 0.001  # reading units per meter of (x + y)
    noise_sigma: float = 0.3

    def validate(self) -> None:
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def synth_reading(position: Sequence[float], rnd: int, cfg: FieldConfig,
                  noise: float = 0.0) -> float:
    """Field value at a position and round: base plus linear drift, a linear
    spatial gradient and the supplied noise sample."""
    x, y = position[0], position[1]
    return cfg.base_value + cfg.drift_per_round * rnd + cfg.spatial_gradient * (x + y) + noise


class SynthField:
    """Precomputed reading matrix for one run.

    Noise is drawn once from a stream keyed by the scenario seed, so a
    reading depends only on (seed, node, round), never on evaluation order.
    """

    def __init__(self, cfg: FieldConfig, positions: Sequence[Sequence[float]],
                 n_rounds: int, seed: int) -> None:
        cfg.validate()
        n = len(positions)
        self.n_nodes = n
        self.n_rounds = n_rounds
        rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, _NOISE_STREAM])
        noise = rng.normal(0.0, cfg.noise_sigma, size=(n_rounds, n)) if cfg.noise_sigma > 0 \
            else np.zeros((n_rounds, n))
        base = np.empty((n_rounds, n))
        for i, pos in enumerate(positions):
            spatial = cfg.spatial_gradient * (pos[0] + pos[1])
            for r in range(n_rounds):
                base[r, i] = cfg.base_value + cfg.drift_per_round * r + spatial
        self._values = base + noise

    def reading(self, node_id: int, rnd: int) -> float:
        return float(self._values[rnd, node_id])


class TraceTable:
    """Dense externally supplied readings: one value per (round, node)."""

    def __init__(self, values: np.ndarray) -> None:
        self._values = values
        self.n_rounds = values.shape[0]
        self.n_nodes = values.shape[1]

    def reading(self, node_id: int, rnd: int) -> float:
        return float(self._values[rnd, node_id])

    def rows(self):
        for r in range(self.n_rounds):
            for n in range(self.n_nodes):
                yield r, n, float(self._values[r, n])

    def __eq__(self, other) -> bool:
        return isinstance(other, TraceTable) and np.array_equal(self._values, other._values)


def load_trace(path: str) -> TraceTable:
    """Parse a trace CSV (header ``round,node_id,value``) into a dense table.

    Node ids must cover 0..n-1 and rounds 0..R-1 with every pair present
    exactly once. Any structural problem raises TraceError naming the line
    or the missing pair.
    """
    if not os.path.exists(path):
        raise TraceError(f"trace not found: {path}")
    entries = {}
    max_round = -1
    max_node = -1
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceError(f"trace format error at line 1: empty file") from None
        if [h.strip() for h in header] != TRACE_HEADER:
            raise TraceError(f"trace format error at line 1: header must be "
                             f"'{','.join(TRACE_HEADER)}'")
        for ln, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise TraceError(f"trace format error at line {ln}: expected 3 fields")
            try:
                rnd = int(row[0])
                node = int(row[1])
                value = float(row[2])
            except ValueError:
                raise TraceError(f"trace format error at line {ln}: "
                                 f"non-numeric field") from None
            if rnd < 0 or node < 0:
                raise TraceError(f"trace format error at line {ln}: negative round or node id")
            if not math.isfinite(value):
                raise TraceError(f"trace format error at line {ln}: non-finite value")
            if (rnd, node) in entries:
                raise TraceError(f"trace format error at line {ln}: "
                                 f"duplicate pair (round {rnd}, node {node})")
            entries[(rnd, node)] = value
            max_round = max(max_round, rnd)
            max_node = max(max_node, node)
    if not entries:
        raise TraceError("trace format error: no data rows")
    n_rounds = max_round + 1
    n_nodes = max_node + 1
    values = np.empty((n_rounds, n_nodes))
    for r in range(n_rounds):
        for n in range(n_nodes):
            if (r, n) not in entries:
                raise TraceError(f"trace format error: missing pair (round {r}, node {n})")
            values[r, n] = entries[(r, n)]
    return TraceTable(values)


def dump_trace(table: TraceTable, path: str) -> None:
    """Serialize a table back to the trace CSV format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for rnd, node, value in table.rows():
            writer.writerow([rnd, node, repr(value)])
