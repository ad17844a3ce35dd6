"""
Paired comparison of protocol modes over the same seeds.

Every mode runs the identical seed list, so per-seed differences against the
first (baseline) mode are paired. A two-sided sign test on those differences
says whether one mode wins more seeds than chance allows.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger
from scipy.stats import binomtest

from src.experiments.errors import DuplicateModeError, ModeError
from src.experiments.models import MetricsRecord, ScenarioConfig
from src.experiments.registry import get_mode
from src.experiments.runner import ExperimentResult, run_experiment

runner_log = logger.bind(module="Runner")

SUMMARY_FIELDS: tuple[str, ...] = (
    "delivery_ratio",
    "aggregate_delivery_ratio",
    "recovery_frames_lost",
    "orphan_count",
    "energy_consumed_j",
    "control_messages",
)

SUMMARY_COLUMNS = ("mode", "seeds", *(f"mean_{f}" for f in SUMMARY_FIELDS))
PAIRS_COLUMNS = ("mode", "baseline", "seed", "delivery_ratio_diff", "recovery_frames_lost_diff")
SIGN_TEST_COLUMNS = ("mode", "baseline", "wins", "losses", "ties", "p_value")


@dataclass(frozen=True)
class ModeSummary:
    mode: str
    seeds: int
    means: dict[str, float]


@dataclass(frozen=True)
class PairedDifference:
    """Per-seed difference ``baseline - mode`` of the round-averaged metrics."""

    mode: str
    baseline: str
    seed: int
    delivery_ratio_diff: float
    recovery_frames_lost_diff: float


@dataclass(frozen=True)
class SignTest:
    """
    Two-sided sign test of the baseline against one mode.

    ``wins`` counts seeds where the baseline delivered a higher ratio; ties
    are dropped before testing.
    """

    mode: str
    baseline: str
    wins: int
    losses: int
    ties: int
    p_value: float

    @property
    def favors_baseline(self) -> bool:
        return self.wins > self.losses


@dataclass(frozen=True)
class Comparison:
    baseline: str
    summaries: list[ModeSummary]
    differences: list[PairedDifference]
    sign_tests: list[SignTest]

    def sign_test(self, mode: str) -> SignTest:
        for test in self.sign_tests:
            if test.mode == mode:
                return test
        raise KeyError(mode)


def check_modes(modes: list[str]) -> None:
    """
    Raises:
        ModeError: fewer than two modes, or an unknown one
        DuplicateModeError: a mode appears twice
    """
    if len(modes) < 2:
        raise ModeError("compare needs at least two modes")
    seen: set[str] = set()
    for mode in modes:
        if mode in seen:
            raise DuplicateModeError(mode)
        seen.add(mode)
        get_mode(mode)


def per_seed_means(records: list[MetricsRecord], field_name: str) -> dict[int, float]:
    """seed -> mean of ``field_name`` over that seed's rounds."""
    by_seed: dict[int, list[float]] = {}
    for record in records:
        by_seed.setdefault(record.seed, []).append(float(getattr(record, field_name)))
    return {seed: float(np.mean(values)) for seed, values in by_seed.items()}


def sign_test(diffs: list[float], mode: str, baseline: str) -> SignTest:
    wins = sum(1 for d in diffs if d > 0)
    losses = sum(1 for d in diffs if d < 0)
    ties = len(diffs) - wins - losses
    trials = wins + losses
    p_value = 1.0 if trials == 0 else float(binomtest(wins, trials, 0.5).pvalue)
    return SignTest(mode, baseline, wins, losses, ties, p_value)


def summarize(result: ExperimentResult, seeds: list[int]) -> ModeSummary:
    means = {}
    for name in SUMMARY_FIELDS:
        seed_means = per_seed_means(result.records, name)
        means[name] = float(np.mean([seed_means[s] for s in seeds]))
    return ModeSummary(mode=result.mode, seeds=len(seeds), means=means)


def compare_modes(
    cfg: ScenarioConfig,
    modes: list[str],
    *,
    out_dir: Path | None = None,
    max_workers: int = 1,
) -> Comparison:
    """
    Run every mode on the scenario's seeds and compare them with the first.

    Args:
        cfg: Validated scenario
        modes: Mode keys; the first is the baseline
        out_dir: When set, per-mode metrics and the comparison CSVs go here
        max_workers: Process pool size for each mode's seed sweep

    Raises:
        ModeError: fewer than two modes or an unknown mode
        DuplicateModeError: a mode listed twice
    """
    check_modes(modes)
    seeds = list(cfg.seeds)
    results = {
        mode: run_experiment(cfg, mode=mode, out_dir=out_dir, trace=False, max_workers=max_workers)
        for mode in modes
    }

    baseline = modes[0]
    base_delivery = per_seed_means(results[baseline].records, "delivery_ratio")
    base_recovery = per_seed_means(results[baseline].records, "recovery_frames_lost")

    differences: list[PairedDifference] = []
    tests: list[SignTest] = []
    for mode in modes[1:]:
        delivery = per_seed_means(results[mode].records, "delivery_ratio")
        recovery = per_seed_means(results[mode].records, "recovery_frames_lost")
        pairs = [
            PairedDifference(
                mode=mode,
                baseline=baseline,
                seed=s,
                delivery_ratio_diff=base_delivery[s] - delivery[s],
                recovery_frames_lost_diff=base_recovery[s] - recovery[s],
            )
            for s in seeds
        ]
        differences.extend(pairs)
        test = sign_test([p.delivery_ratio_diff for p in pairs], mode, baseline)
        tests.append(test)
        runner_log.info(
            f"{baseline} vs {mode}: {test.wins} wins, {test.losses} losses, "
            f"{test.ties} ties, p={test.p_value:.4g}"
        )

    comparison = Comparison(
        baseline=baseline,
        summaries=[summarize(results[m], seeds) for m in modes],
        differences=differences,
        sign_tests=tests,
    )
    if out_dir is not None:
        write_comparison(out_dir, comparison)
    return comparison


def _write_csv(path: Path, columns: tuple[str, ...], rows: list[dict]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_comparison(out_dir: Path, comparison: Comparison) -> list[Path]:
    """Write summary, paired-difference and sign-test CSVs into ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = out_dir / "comparison_summary.csv"
    pairs = out_dir / "comparison_pairs.csv"
    tests = out_dir / "comparison_sign_test.csv"

    _write_csv(
        summary,
        SUMMARY_COLUMNS,
        [
            {"mode": s.mode, "seeds": s.seeds, **{f"mean_{k}": v for k, v in s.means.items()}}
            for s in comparison.summaries
        ],
    )
    _write_csv(
        pairs,
        PAIRS_COLUMNS,
        [
            {
                "mode": d.mode,
                "baseline": d.baseline,
                "seed": d.seed,
                "delivery_ratio_diff": d.delivery_ratio_diff,
                "recovery_frames_lost_diff": d.recovery_frames_lost_diff,
            }
            for d in comparison.differences
        ],
    )
    _write_csv(
        tests,
        SIGN_TEST_COLUMNS,
        [
            {
                "mode": t.mode,
                "baseline": t.baseline,
                "wins": t.wins,
                "losses": t.losses,
                "ties": t.ties,
                "p_value": t.p_value,
            }
            for t in comparison.sign_tests
        ],
    )
    return [summary, pairs, tests]
