"""Stratified bootstrap confidence intervals for metric gaps.

Resampling draws records with replacement within each group, keeping
group sizes fixed. Every (seed, iteration, group label) triple addresses
its own random substream, so replicates are a pure function of the data
order and those three values: reruns reproduce bit for bit, regardless
of how iterations are partitioned across workers.

Intervals are normal-approximation (Wald): the difference interval uses
the standard deviation of resampled differences; the ratio interval is
built on the log scale and exponentiated. Iterations where a statistic
is undefined (or non-positive, for ratios) are discarded; more than
``degenerate_tolerance`` of them is an error.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtri

from .dataset import AuditDataset
from .errors import ComputationError, InputError
from .metrics import (
    CONFUSION_METRICS,
    DECISION_METRICS,
    SCORE_METRICS,
    MetricId,
    _confusion_from_arrays,
    coerce_metric,
    compute_metric,
    group_metric,
    is_defined,
    metric_from_counts,
)


@dataclass(frozen=True)
class BootstrapConfig:
    """Resampling parameters.

    ``degenerate_tolerance`` caps the fraction of iterations an interval
    may discard for undefined statistics before the computation fails.
    """

    iterations: int = 1000
    alpha: float = 0.05
    seed: int = 0
    degenerate_tolerance: float = 0.01

    def __post_init__(self) -> None:
        if self.iterations < 2:
            raise InputError("bootstrap needs at least 2 iterations")
        if not 0.0 < self.alpha < 1.0:
            raise InputError("alpha outside (0, 1)")
        if self.seed < 0:
            raise InputError("seed must be non-negative")
        if not 0.0 <= self.degenerate_tolerance <= 1.0:
            raise InputError("degenerate_tolerance outside [0, 1]")

    @property
    def z(self) -> float:
        return float(ndtri(1.0 - self.alpha / 2.0))


class IntervalMethod(Enum):
    WALD_DIFF = "wald_diff"
    WALD_LOG_RATIO = "wald_log_ratio"


@dataclass(frozen=True)
class Interval:
    """Two-sided confidence interval with its construction method.

    ``discarded`` counts bootstrap iterations dropped because the
    statistic was undefined there.
    """

    lower: float
    upper: float
    method: IntervalMethod
    discarded: int = 0

    def __post_init__(self) -> None:
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ComputationError("interval bounds are NaN")
        if self.lower > self.upper:
            raise ComputationError("interval lower bound exceeds upper bound")
        if self.discarded < 0:
            raise InputError("discarded count must be non-negative")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _group_key(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _substream(seed: int, iteration: int, label: str) -> np.random.Generator:
    sequence = np.random.SeedSequence([seed, iteration, _group_key(label)])
    return np.random.Generator(np.random.PCG64(sequence))


def resample_within_groups(
    dataset: AuditDataset, seed: int = 0, iteration: int = 0
) -> AuditDataset:
    """One stratified resample: per-group draws with replacement.

    Group sizes are preserved exactly. The rows drawn for a group depend
    only on (seed, iteration, label) and the group's record order.
    """
    if seed < 0 or iteration < 0:
        raise InputError("seed and iteration must be non-negative")
    parts = []
    for label in dataset.groups:
        rows = dataset.group_positions(label)
        draw = _substream(seed, iteration, label).integers(0, rows.shape[0], rows.shape[0])
        parts.append(rows[draw])
    return dataset.take(np.concatenate(parts))


class _GroupSampler:
    """Caches one group's columns and evaluates metrics on index draws."""

    def __init__(self, dataset: AuditDataset, label: str, metrics: tuple[MetricId, ...]):
        rows = dataset.group_positions(label)
        self.label = label
        self.size = int(rows.shape[0])
        self.metrics = metrics
        self.outcome = dataset.outcome[rows]
        self.score = None
        self.decision = None
        if any(m in SCORE_METRICS for m in metrics):
            if dataset.score is None:
                raise InputError("bootstrap metric needs risk scores, none loaded")
            self.score = dataset.score[rows]
            if np.isnan(self.score).any():
                raise InputError(f"group {label!r} has records without scores")
        if any(m in DECISION_METRICS for m in metrics):
            if dataset.decision is None:
                raise InputError("bootstrap metric needs decisions, none set")
            self.decision = dataset.decision[rows]
            if (self.decision < 0).any():
                raise InputError(f"group {label!r} has records without decisions")
        self.need_counts = any(m in CONFUSION_METRICS for m in metrics)

    def evaluate(self, draw: np.ndarray, out: np.ndarray) -> None:
        outcome = self.outcome[draw]
        score = self.score[draw] if self.score is not None else None
        decision = self.decision[draw] if self.decision is not None else None
        counts = _confusion_from_arrays(outcome, decision) if self.need_counts else None
        for j, metric in enumerate(self.metrics):
            if metric in CONFUSION_METRICS:
                value = metric_from_counts(metric, counts)
            else:
                value = compute_metric(metric, outcome, score, decision)
            out[j] = value if is_defined(value) else math.nan


@dataclass(frozen=True)
class BootstrapReplicates:
    """Per-iteration metric values for two groups; NaN marks undefined."""

    metrics: tuple[MetricId, ...]
    group_a: str
    group_b: str
    values_a: np.ndarray
    values_b: np.ndarray


def bootstrap_replicates(
    dataset: AuditDataset,
    metrics,
    group_a: str,
    group_b: str,
    config: BootstrapConfig,
    *,
    workers: int = 1,
) -> BootstrapReplicates:
    """Evaluate metrics on every stratified resample of a group pair.

    All requested metrics share one draw per (iteration, group), so adding
    a metric never changes the resamples of the others. Output is
    identical for any worker count.
    """
    metric_tuple = tuple(dict.fromkeys(coerce_metric(m) for m in metrics))
    if not metric_tuple:
        raise InputError("no metrics requested")
    if group_a == group_b:
        raise InputError("group pair must name two distinct groups")
    if workers < 1:
        raise InputError("workers must be at least 1")
    samplers = (
        _GroupSampler(dataset, group_a, metric_tuple),
        _GroupSampler(dataset, group_b, metric_tuple),
    )
    B = config.iterations
    values = (
        np.empty((B, len(metric_tuple)), dtype=np.float64),
        np.empty((B, len(metric_tuple)), dtype=np.float64),
    )

    def fill(lo: int, hi: int) -> None:
        for iteration in range(lo, hi):
            for sampler, out in zip(samplers, values):
                rng = _substream(config.seed, iteration, sampler.label)
                draw = rng.integers(0, sampler.size, sampler.size)
                sampler.evaluate(draw, out[iteration])

    if workers == 1:
        fill(0, B)
    else:
        bounds = np.linspace(0, B, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(fill, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for future in futures:
                future.result()

    return BootstrapReplicates(
        metrics=metric_tuple,
        group_a=group_a,
        group_b=group_b,
        values_a=values[0],
        values_b=values[1],
    )


def _check_discarded(kept: np.ndarray, config: BootstrapConfig, what: str) -> int:
    B = kept.shape[0]
    discarded = int(B - kept.sum())
    if discarded > config.degenerate_tolerance * B:
        raise ComputationError(
            f"bootstrap discarded {discarded} of {B} iterations for the {what}; "
            f"tolerance is {config.degenerate_tolerance:g}"
        )
    if B - discarded < 2:
        raise ComputationError(f"fewer than 2 usable bootstrap iterations for the {what}")
    return discarded


def _diff_interval(
    va: np.ndarray, vb: np.ndarray, point_a: float, point_b: float, config: BootstrapConfig
) -> Interval:
    kept = np.isfinite(va) & np.isfinite(vb)
    discarded = _check_discarded(kept, config, "difference")
    se = float(np.std(va[kept] - vb[kept], ddof=1))
    center = point_a - point_b
    margin = config.z * se
    return Interval(center - margin, center + margin, IntervalMethod.WALD_DIFF, discarded)


def _ratio_interval(
    va: np.ndarray, vb: np.ndarray, point_a: float, point_b: float, config: BootstrapConfig
) -> Interval:
    with np.errstate(invalid="ignore"):
        kept = np.isfinite(va) & np.isfinite(vb) & (va > 0.0) & (vb > 0.0)
    discarded = _check_discarded(kept, config, "ratio")
    log_ratios = np.log(va[kept]) - np.log(vb[kept])
    se = float(np.std(log_ratios, ddof=1))
    center = math.log(point_a) - math.log(point_b)
    margin = config.z * se
    return Interval(
        math.exp(center - margin),
        math.exp(center + margin),
        IntervalMethod.WALD_LOG_RATIO,
        discarded,
    )


def _points(
    dataset: AuditDataset, metric: MetricId, group_a: str, group_b: str
) -> tuple[object, object]:
    return (
        group_metric(dataset, group_a, metric),
        group_metric(dataset, group_b, metric),
    )


def ci_diff(
    dataset: AuditDataset,
    metric,
    group_a: str,
    group_b: str,
    config: BootstrapConfig | None = None,
    *,
    workers: int = 1,
) -> Interval:
    """Wald interval for the between-group difference of one metric."""
    config = config or BootstrapConfig()
    metric = coerce_metric(metric)
    point_a, point_b = _points(dataset, metric, group_a, group_b)
    if not is_defined(point_a) or not is_defined(point_b):
        raise InputError(f"point estimate of {metric.value} is undefined")
    replicates = bootstrap_replicates(
        dataset, (metric,), group_a, group_b, config, workers=workers
    )
    return _diff_interval(
        replicates.values_a[:, 0], replicates.values_b[:, 0], point_a, point_b, config
    )


def ci_ratio(
    dataset: AuditDataset,
    metric,
    group_a: str,
    group_b: str,
    config: BootstrapConfig | None = None,
    *,
    workers: int = 1,
) -> Interval:
    """Wald interval for the between-group ratio, built on the log scale."""
    config = config or BootstrapConfig()
    metric = coerce_metric(metric)
    point_a, point_b = _points(dataset, metric, group_a, group_b)
    if not is_defined(point_a) or not is_defined(point_b):
        raise InputError(f"point estimate of {metric.value} is undefined")
    if point_a <= 0.0 or point_b <= 0.0:
        raise InputError(
            f"ratio interval for {metric.value} needs strictly positive point estimates"
        )
    replicates = bootstrap_replicates(
        dataset, (metric,), group_a, group_b, config, workers=workers
    )
    return _ratio_interval(
        replicates.values_a[:, 0], replicates.values_b[:, 0], point_a, point_b, config
    )


@dataclass(frozen=True)
class PairIntervals:
    """Difference and ratio intervals for one metric over a group pair.

    Either interval is None when its preconditions fail (undefined or
    non-positive point estimates); ``notes`` says which and why.
    """

    diff: Interval | None
    ratio: Interval | None
    notes: tuple[str, ...] = ()


def bootstrap_intervals(
    dataset: AuditDataset,
    metrics,
    group_a: str,
    group_b: str,
    config: BootstrapConfig | None = None,
    *,
    workers: int = 1,
) -> dict[MetricId, PairIntervals]:
    """Difference and ratio intervals for several metrics in one pass.

    All metrics share the same resamples. Precondition failures are
    reported per metric in notes rather than raised; exceeding the
    discard tolerance still raises.
    """
    config = config or BootstrapConfig()
    replicates = bootstrap_replicates(dataset, metrics, group_a, group_b, config, workers=workers)
    out: dict[MetricId, PairIntervals] = {}
    for j, metric in enumerate(replicates.metrics):
        point_a, point_b = _points(dataset, metric, group_a, group_b)
        va = replicates.values_a[:, j]
        vb = replicates.values_b[:, j]
        notes: list[str] = []
        diff = ratio = None
        if is_defined(point_a) and is_defined(point_b):
            diff = _diff_interval(va, vb, point_a, point_b, config)
            if point_a > 0.0 and point_b > 0.0:
                ratio = _ratio_interval(va, vb, point_a, point_b, config)
            else:
                notes.append("ratio interval skipped: needs strictly positive values")
        else:
            notes.append("intervals skipped: point estimate undefined")
        out[metric] = PairIntervals(diff=diff, ratio=ratio, notes=tuple(notes))
    return out
