"""
Per-round metrics: derivation from engine counters, range checks and CSV.

The CSV layout is versioned; see docs/METRICS.md. The first line is a
``# metrics-version: N`` comment, the second the fixed header.
"""

import csv
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from src.engine import InvariantViolation, RoundStats, ViolationType
from src.experiments.models import METRICS_COLUMNS, METRICS_VERSION, MetricsRecord
from src.radio import to_joules

VERSION_LINE = f"# metrics-version: {METRICS_VERSION}"


def record_from_stats(mode: str, seed: int, stats: RoundStats) -> MetricsRecord:
    """Build the metrics row of one finished round."""
    snapshot = stats.snapshot
    sizes = list(snapshot.cluster_sizes().values()) if snapshot else []
    return MetricsRecord(
        mode=mode,
        seed=seed,
        round=stats.round,
        delivery_ratio=stats.delivery_ratio,
        aggregate_delivery_ratio=stats.aggregate_delivery_ratio,
        ch_count=len(sizes),
        mean_cluster_size=float(np.mean(sizes)) if sizes else 0.0,
        max_cluster_size=max(sizes, default=0),
        clustering_iterations_max=snapshot.max_iterations_run if snapshot else 0,
        energy_consumed_j=to_joules(stats.energy_consumed_pj),
        alive_count=stats.alive_count,
        orphan_count=len(stats.orphans),
        recovery_frames_lost=stats.recovery_frames_lost,
        control_messages=stats.control_messages,
    )


def check_record(record: MetricsRecord, iteration_limit: int, node_count: int) -> None:
    """
    Raises:
        InvariantViolation: METRICS_RANGE when any field is out of range
    """
    problems = []
    for name in ("delivery_ratio", "aggregate_delivery_ratio"):
        value = getattr(record, name)
        if not 0.0 <= value <= 1.0:
            problems.append(f"{name}={value}")
    if record.clustering_iterations_max > iteration_limit:
        problems.append(
            f"clustering_iterations_max={record.clustering_iterations_max} > {iteration_limit}"
        )
    if not 0 <= record.alive_count <= node_count:
        problems.append(f"alive_count={record.alive_count}")
    if record.ch_count > record.alive_count or record.max_cluster_size > node_count:
        problems.append(f"ch_count={record.ch_count} max_cluster_size={record.max_cluster_size}")
    if record.energy_consumed_j < 0:
        problems.append(f"energy_consumed_j={record.energy_consumed_j}")
    for name in ("orphan_count", "recovery_frames_lost", "control_messages"):
        if getattr(record, name) < 0:
            problems.append(f"{name}={getattr(record, name)}")

    if problems:
        raise InvariantViolation(
            ViolationType.METRICS_RANGE,
            f"{record.mode} seed {record.seed} round {record.round}: {', '.join(problems)}",
        )


def write_metrics(path: Path, records: Iterable[MetricsRecord]) -> Path:
    """Write ``records`` as a versioned CSV and return ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(VERSION_LINE + "\n")
        writer = csv.DictWriter(fh, fieldnames=METRICS_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow(record.as_row())
    return path


def read_metrics(path: Path) -> list[MetricsRecord]:
    """
    Read a metrics CSV written by ``write_metrics``.

    Raises:
        ValueError: missing or unsupported version line, or a header mismatch
    """
    with path.open(encoding="utf-8", newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != VERSION_LINE:
            raise ValueError(f"unsupported metrics file: {first!r}")
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_COLUMNS:
            raise ValueError(f"unexpected metrics header: {reader.fieldnames}")
        return [MetricsRecord.model_validate(row) for row in reader]
