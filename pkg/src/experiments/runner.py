"""
Experiment runner: one simulation per seed, metrics folded in seed order.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from loguru import logger

from src.engine import (
    FailureMode,
    FailureTarget,
    Simulator,
    Tracer,
    build_world,
)
from src.experiments.metrics import check_record, record_from_stats, write_metrics
from src.experiments.models import MetricsRecord, ScenarioConfig
from src.experiments.registry import apply_mode
from src.protocol import max_iterations

runner_log = logger.bind(module="Runner")


@dataclass(frozen=True)
class SeedResult:
    seed: int
    records: list[MetricsRecord]
    trace_path: Path | None = None


@dataclass
class ExperimentResult:
    """
    Outcome of one mode over every seed of a scenario.

    Attributes:
        mode: Mode key
        seeds: Per-seed results, in the scenario's seed order
        metrics_path: CSV written for this mode, if any
    """

    mode: str
    seeds: list[SeedResult] = field(default_factory=list)
    metrics_path: Path | None = None

    @property
    def records(self) -> list[MetricsRecord]:
        return [r for result in self.seeds for r in result.records]

    @property
    def trace_paths(self) -> list[Path]:
        return [r.trace_path for r in self.seeds if r.trace_path is not None]


def trace_file(out_dir: Path, mode: str, seed: int) -> Path:
    return out_dir / "traces" / f"{mode}_seed{seed}.jsonl"


def metrics_file(out_dir: Path, mode: str) -> Path:
    return out_dir / f"metrics_{mode}.csv"


def schedule_failures(sim: Simulator, cfg: ScenarioConfig) -> int:
    """
    Register the scenario's failure injections with ``sim``.

    Returns:
        Number of injections scheduled

    Raises:
        DuplicateInjectionError: two injections hit the same node or role at
            the same time
    """
    schedule = cfg.schedule
    count = 0
    for failure in cfg.failures:
        if failure.is_targeted:
            sim.inject_role_failure(
                schedule.frame_time(failure.round, failure.frame),  # type: ignore[arg-type]
                failure.mode,
                failure.target,  # type: ignore[arg-type]
            )
        else:
            sim.inject_failure(failure.node, failure.time, failure.mode)  # type: ignore[arg-type]
        count += 1

    if cfg.ch_crash_each_round:
        for r in range(cfg.rounds):
            sim.inject_role_failure(
                schedule.frame_time(r, cfg.ch_crash_frame),
                FailureMode.CRASH,
                FailureTarget.CLUSTER_HEAD,
            )
            count += 1
    return count


def run_seed(
    cfg: ScenarioConfig,
    seed: int,
    mode: str,
    trace_path: Path | None = None,
) -> SeedResult:
    """
    Build the world for ``seed``, play every round and derive the metrics.

    Raises:
        InvariantViolation: the simulation broke a checked property
    """
    protocol = apply_mode(mode, cfg.protocol)
    world = build_world(
        cfg.node_count,
        cfg.mobility_config(seed),
        protocol.e_max,
        seed,
        positions=cfg.positions,
        sink_position=cfg.sink_position,
    )
    limit = max_iterations(protocol.p_min)

    with Tracer(trace_path) as tracer:
        sim = Simulator(
            world,
            protocol,
            cfg.power_table,
            cfg.radio,
            cfg.schedule,
            p_loss=cfg.p_loss,
            guards_enabled=cfg.guards_enabled,
            mid_round_rejoin=cfg.mid_round_rejoin,
            tracer=tracer,
        )
        schedule_failures(sim, cfg)
        stats = sim.run(cfg.rounds)

    records = [record_from_stats(mode, seed, s) for s in stats]
    for record in records:
        check_record(record, limit, cfg.node_count)

    runner_log.debug(
        f"{mode} seed {seed}: mean delivery "
        f"{sum(r.delivery_ratio for r in records) / len(records):.4f}"
    )
    return SeedResult(seed=seed, records=records, trace_path=trace_path)


def run_experiment(
    cfg: ScenarioConfig,
    *,
    mode: str | None = None,
    out_dir: Path | None = None,
    trace: bool | None = None,
    max_workers: int = 1,
) -> ExperimentResult:
    """
    Run one mode over every seed of ``cfg``.

    Args:
        cfg: Validated scenario
        mode: Mode key; the scenario's ``mode`` when None
        out_dir: Where metrics and traces go; the scenario's ``output.dir``
            when None. Nothing is written when both are unset.
        trace: Write per-seed traces; the scenario's ``output.trace`` when None
        max_workers: Seeds run in a process pool when > 1

    Returns:
        Per-seed results in seed order, whatever order the workers finish in

    Raises:
        UnknownModeError: ``mode`` is not registered
        DuplicateInjectionError: conflicting failure injections
        InvariantViolation: a checked property failed
    """
    mode = mode or cfg.mode
    apply_mode(mode, cfg.protocol)
    out_dir = out_dir or cfg.output.dir
    trace = cfg.output.trace if trace is None else trace

    seeds = list(cfg.seeds)
    traces = [
        trace_file(out_dir, mode, s) if (trace and out_dir is not None) else None
        for s in seeds
    ]
    runner_log.info(f"Running {mode}: {len(seeds)} seeds x {cfg.rounds} rounds")

    if max_workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(max_workers, len(seeds))) as pool:
            results = list(
                pool.map(run_seed, [cfg] * len(seeds), seeds, [mode] * len(seeds), traces)
            )
    else:
        results = [run_seed(cfg, s, mode, t) for s, t in zip(seeds, traces, strict=True)]

    result = ExperimentResult(mode=mode, seeds=results)
    if out_dir is not None:
        result.metrics_path = write_metrics(metrics_file(out_dir, mode), result.records)
        runner_log.info(f"Wrote {len(result.records)} rows to {result.metrics_path}")
    return result
