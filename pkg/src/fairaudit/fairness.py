"""Group fairness criteria expressed as pairwise metric comparisons.

Each criterion compares one or two per-group metrics between a reference
group and a comparison group, reporting the difference and the ratio.
Calibration-style criteria compare binned curves instead and live in
:func:`compare_calibration`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .conditions import ConditionPredicate
from .dataset import AuditDataset, filter_condition
from .errors import ComputationError, InputError
from .inference import BootstrapConfig, Interval, bootstrap_intervals
from .metrics import (
    SCORE_METRICS,
    CalibrationCurve,
    MetricId,
    MetricValue,
    UNDEFINED,
    calibration_curve,
    group_metric,
    is_defined,
)


class Category(Enum):
    """Which conditional-independence family a criterion belongs to."""

    INDEPENDENCE = "independence"
    SEPARATION = "separation"
    SUFFICIENCY = "sufficiency"
    OTHER = "other"


class FairnessCriterion(Enum):
    STATISTICAL_PARITY = "statistical_parity"
    CONDITIONAL_STATISTICAL_PARITY = "conditional_statistical_parity"
    EQUALIZED_ODDS = "equalized_odds"
    PREDICTIVE_EQUALITY = "predictive_equality"
    EQUAL_OPPORTUNITY = "equal_opportunity"
    BALANCE_POSITIVE = "balance_positive"
    BALANCE_NEGATIVE = "balance_negative"
    CONDITIONAL_USE_ACCURACY = "conditional_use_accuracy"
    PREDICTIVE_PARITY = "predictive_parity"
    WELL_CALIBRATION = "well_calibration"
    TEST_FAIRNESS = "test_fairness"
    BRIER_PARITY = "brier_parity"
    OVERALL_ACCURACY = "overall_accuracy"
    TREATMENT_EQUALITY = "treatment_equality"


CRITERION_CATEGORY: Mapping[FairnessCriterion, Category] = {
    FairnessCriterion.STATISTICAL_PARITY: Category.INDEPENDENCE,
    FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY: Category.INDEPENDENCE,
    FairnessCriterion.EQUALIZED_ODDS: Category.SEPARATION,
    FairnessCriterion.PREDICTIVE_EQUALITY: Category.SEPARATION,
    FairnessCriterion.EQUAL_OPPORTUNITY: Category.SEPARATION,
    FairnessCriterion.BALANCE_POSITIVE: Category.SEPARATION,
    FairnessCriterion.BALANCE_NEGATIVE: Category.SEPARATION,
    FairnessCriterion.CONDITIONAL_USE_ACCURACY: Category.SUFFICIENCY,
    FairnessCriterion.PREDICTIVE_PARITY: Category.SUFFICIENCY,
    FairnessCriterion.WELL_CALIBRATION: Category.SUFFICIENCY,
    FairnessCriterion.TEST_FAIRNESS: Category.SUFFICIENCY,
    FairnessCriterion.BRIER_PARITY: Category.OTHER,
    FairnessCriterion.OVERALL_ACCURACY: Category.OTHER,
    FairnessCriterion.TREATMENT_EQUALITY: Category.OTHER,
}

# Scalar criteria map to the per-group metrics they compare. Two-metric
# criteria emit one comparison row per component. Calibration criteria
# have no scalar components and are handled separately.
CRITERION_COMPONENTS: Mapping[FairnessCriterion, tuple[MetricId, ...]] = {
    FairnessCriterion.STATISTICAL_PARITY: (MetricId.POSITIVE_RATE,),
    FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY: (MetricId.POSITIVE_RATE,),
    FairnessCriterion.EQUALIZED_ODDS: (MetricId.FNR, MetricId.FPR),
    FairnessCriterion.PREDICTIVE_EQUALITY: (MetricId.FPR,),
    FairnessCriterion.EQUAL_OPPORTUNITY: (MetricId.FNR,),
    FairnessCriterion.BALANCE_POSITIVE: (MetricId.MEAN_SCORE_POS,),
    FairnessCriterion.BALANCE_NEGATIVE: (MetricId.MEAN_SCORE_NEG,),
    FairnessCriterion.CONDITIONAL_USE_ACCURACY: (MetricId.PPV, MetricId.NPV),
    FairnessCriterion.PREDICTIVE_PARITY: (MetricId.PPV,),
    FairnessCriterion.WELL_CALIBRATION: (),
    FairnessCriterion.TEST_FAIRNESS: (),
    FairnessCriterion.BRIER_PARITY: (MetricId.BRIER_SCORE,),
    FairnessCriterion.OVERALL_ACCURACY: (MetricId.ACCURACY,),
    FairnessCriterion.TREATMENT_EQUALITY: (MetricId.FN_FP_RATIO,),
}

CRITERION_LABELS: Mapping[FairnessCriterion, str] = {
    FairnessCriterion.STATISTICAL_PARITY: "Statistical Parity",
    FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY: "Conditional Statistical Parity",
    FairnessCriterion.EQUALIZED_ODDS: "Equalized Odds",
    FairnessCriterion.PREDICTIVE_EQUALITY: "Predictive Equality",
    FairnessCriterion.EQUAL_OPPORTUNITY: "Equal Opportunity",
    FairnessCriterion.BALANCE_POSITIVE: "Balance for Positive Class",
    FairnessCriterion.BALANCE_NEGATIVE: "Balance for Negative Class",
    FairnessCriterion.CONDITIONAL_USE_ACCURACY: "Conditional Use Accuracy Equality",
    FairnessCriterion.PREDICTIVE_PARITY: "Predictive Parity",
    FairnessCriterion.WELL_CALIBRATION: "Well Calibration",
    FairnessCriterion.TEST_FAIRNESS: "Test Fairness",
    FairnessCriterion.BRIER_PARITY: "Brier Score Parity",
    FairnessCriterion.OVERALL_ACCURACY: "Overall Accuracy Equality",
    FairnessCriterion.TREATMENT_EQUALITY: "Treatment Equality",
}

# Row order for reports, and the default criteria an audit evaluates.
# Conditional rows follow statistical parity; calibration criteria are
# opt-in because they need well-populated score bins.
CANONICAL_ORDER: tuple[FairnessCriterion, ...] = (
    FairnessCriterion.STATISTICAL_PARITY,
    FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY,
    FairnessCriterion.EQUAL_OPPORTUNITY,
    FairnessCriterion.PREDICTIVE_EQUALITY,
    FairnessCriterion.EQUALIZED_ODDS,
    FairnessCriterion.BALANCE_POSITIVE,
    FairnessCriterion.BALANCE_NEGATIVE,
    FairnessCriterion.PREDICTIVE_PARITY,
    FairnessCriterion.CONDITIONAL_USE_ACCURACY,
    FairnessCriterion.WELL_CALIBRATION,
    FairnessCriterion.TEST_FAIRNESS,
    FairnessCriterion.BRIER_PARITY,
    FairnessCriterion.OVERALL_ACCURACY,
    FairnessCriterion.TREATMENT_EQUALITY,
)

DEFAULT_CRITERIA: tuple[FairnessCriterion, ...] = (
    FairnessCriterion.STATISTICAL_PARITY,
    FairnessCriterion.EQUAL_OPPORTUNITY,
    FairnessCriterion.PREDICTIVE_EQUALITY,
    FairnessCriterion.BALANCE_POSITIVE,
    FairnessCriterion.BALANCE_NEGATIVE,
    FairnessCriterion.PREDICTIVE_PARITY,
    FairnessCriterion.BRIER_PARITY,
    FairnessCriterion.OVERALL_ACCURACY,
    FairnessCriterion.TREATMENT_EQUALITY,
)


def coerce_criterion(criterion: FairnessCriterion | str) -> FairnessCriterion:
    if isinstance(criterion, FairnessCriterion):
        return criterion
    try:
        return FairnessCriterion(criterion)
    except ValueError:
        raise InputError(f"unknown criterion: {criterion!r}") from None


def criterion_components(criterion: FairnessCriterion | str) -> tuple[MetricId, ...]:
    """Per-group metrics a criterion compares; empty for calibration criteria."""
    return CRITERION_COMPONENTS[coerce_criterion(criterion)]


def criterion_category(criterion: FairnessCriterion | str) -> Category:
    return CRITERION_CATEGORY[coerce_criterion(criterion)]


class RowStatus(Enum):
    EVALUATED = "evaluated"
    NOT_EVALUATED = "not_evaluated"
    ERROR = "error"


@dataclass(frozen=True)
class Comparison:
    """One criterion component compared between two groups.

    ``diff`` is value_a minus value_b; ``ratio`` is value_a over value_b,
    UNDEFINED when value_b is zero or either value is UNDEFINED.
    ``condition`` names the stratum for conditional rows.
    """

    criterion: FairnessCriterion
    metric: MetricId | None
    group_a: str
    group_b: str
    value_a: MetricValue
    value_b: MetricValue
    diff: MetricValue
    ratio: MetricValue
    ci_diff: Interval | None = None
    ci_ratio: Interval | None = None
    condition: str | None = None
    status: RowStatus = RowStatus.EVALUATED
    notes: tuple[str, ...] = ()

    @property
    def category(self) -> Category:
        return CRITERION_CATEGORY[self.criterion]


def make_comparison(
    criterion: FairnessCriterion,
    metric: MetricId,
    group_a: str,
    group_b: str,
    value_a: MetricValue,
    value_b: MetricValue,
    condition: str | None = None,
) -> Comparison:
    notes: list[str] = []
    if is_defined(value_a) and is_defined(value_b):
        diff: MetricValue = value_a - value_b
        if value_b == 0.0:
            ratio: MetricValue = UNDEFINED
            notes.append("ratio undefined: reference value is 0")
        else:
            ratio = value_a / value_b
    else:
        diff = UNDEFINED
        ratio = UNDEFINED
        for label, value in ((group_a, value_a), (group_b, value_b)):
            if not is_defined(value):
                notes.append(f"{metric.value} undefined for group {label!r}")
    return Comparison(
        criterion=criterion,
        metric=metric,
        group_a=group_a,
        group_b=group_b,
        value_a=value_a,
        value_b=value_b,
        diff=diff,
        ratio=ratio,
        condition=condition,
        notes=tuple(notes),
    )


def _check_pair(dataset: AuditDataset, group_a: str, group_b: str) -> None:
    for label in (group_a, group_b):
        if label not in dataset.groups:
            raise InputError(f"unknown group: {label!r}")
    if group_a == group_b:
        raise InputError("comparison needs two distinct groups")


def compare(
    dataset: AuditDataset,
    criterion: FairnessCriterion | str,
    group_a: str,
    group_b: str,
) -> list[Comparison]:
    """Compare one criterion's components between two groups.

    Returns one row per component metric. Conditional and calibration
    criteria have their own entry points and are rejected here.
    """
    criterion = coerce_criterion(criterion)
    _check_pair(dataset, group_a, group_b)
    if criterion is FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY:
        raise InputError("conditional criterion needs a predicate: use compare_conditional")
    components = CRITERION_COMPONENTS[criterion]
    if not components:
        raise InputError(f"{criterion.value} compares curves: use compare_calibration")
    rows = []
    for metric in components:
        value_a = group_metric(dataset, group_a, metric)
        value_b = group_metric(dataset, group_b, metric)
        rows.append(make_comparison(criterion, metric, group_a, group_b, value_a, value_b))
    return rows


def compare_conditional(
    dataset: AuditDataset,
    predicate: ConditionPredicate | str,
    group_a: str,
    group_b: str,
    name: str | None = None,
) -> Comparison:
    """Positive-rate comparison restricted to records matching a predicate."""
    if isinstance(predicate, str):
        predicate = ConditionPredicate.parse(predicate)
    _check_pair(dataset, group_a, group_b)
    stratum = filter_condition(dataset, predicate)
    inner = compare(stratum, FairnessCriterion.STATISTICAL_PARITY, group_a, group_b)[0]
    return dataclasses.replace(
        inner,
        criterion=FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY,
        condition=name or str(predicate),
    )


@dataclass(frozen=True)
class CalibrationComparison:
    """Binned calibration curves for two groups plus summary gaps.

    ``gap_a`` and ``gap_b`` measure within-group miscalibration: the
    largest absolute difference between a bin's observed outcome rate and
    its mean score, over that group's non-sparse bins. ``between_gap``
    is the largest absolute difference of observed rates over bins that
    are non-sparse in both groups.
    """

    curve_a: CalibrationCurve
    curve_b: CalibrationCurve
    gap_a: float
    gap_b: float
    between_gap: float


def compare_calibration(
    dataset: AuditDataset,
    group_a: str,
    group_b: str,
    bins: int = 10,
    *,
    min_bin_count: int = 10,
) -> CalibrationComparison:
    """Compare score calibration between two groups on shared bins."""
    _check_pair(dataset, group_a, group_b)
    curve_a = calibration_curve(dataset, group_a, bins, min_bin_count=min_bin_count)
    curve_b = calibration_curve(dataset, group_b, bins, min_bin_count=min_bin_count)
    gaps = []
    for curve in (curve_a, curve_b):
        usable = ~curve.sparse
        if not usable.any():
            raise ComputationError(
                f"group {curve.group!r} has no score bin with at least {min_bin_count} records"
            )
        gaps.append(
            float(abs(curve.observed_rate[usable] - curve.mean_score[usable]).max())
        )
    shared = ~curve_a.sparse & ~curve_b.sparse
    if not shared.any():
        raise ComputationError(
            "no score bin is populated in both groups; use fewer bins or a lower min_bin_count"
        )
    between = float(abs(curve_a.observed_rate[shared] - curve_b.observed_rate[shared]).max())
    return CalibrationComparison(
        curve_a=curve_a,
        curve_b=curve_b,
        gap_a=gaps[0],
        gap_b=gaps[1],
        between_gap=between,
    )


@dataclass(frozen=True)
class FairnessReport:
    """All comparison rows for one group pair, plus shared context."""

    group_a: str
    group_b: str
    rows: tuple[Comparison, ...]
    calibration: CalibrationComparison | None = None
    notes: tuple[str, ...] = ()


def _not_evaluated(
    criterion: FairnessCriterion,
    metric: MetricId | None,
    group_a: str,
    group_b: str,
    note: str,
    condition: str | None = None,
    status: RowStatus = RowStatus.NOT_EVALUATED,
) -> Comparison:
    return Comparison(
        criterion=criterion,
        metric=metric,
        group_a=group_a,
        group_b=group_b,
        value_a=UNDEFINED,
        value_b=UNDEFINED,
        diff=UNDEFINED,
        ratio=UNDEFINED,
        condition=condition,
        status=status,
        notes=(note,),
    )


def _attach_intervals(row: Comparison, pair) -> Comparison:
    if pair is None:
        return row
    return dataclasses.replace(
        row,
        ci_diff=pair.diff,
        ci_ratio=pair.ratio,
        notes=row.notes + pair.notes,
    )


def evaluate_all(
    dataset: AuditDataset,
    group_a: str,
    group_b: str,
    *,
    criteria: Sequence[FairnessCriterion | str] | None = None,
    conditions: Mapping[str, ConditionPredicate | str] | None = None,
    bootstrap: BootstrapConfig | None = None,
    workers: int = 1,
    bins: int = 10,
    min_bin_count: int = 10,
) -> FairnessReport:
    """Evaluate many criteria for one group pair in canonical row order.

    The dataset must carry decisions. Score-based rows are marked
    NOT_EVALUATED when scores are absent rather than failing the audit,
    and per-row input problems (say, a condition that empties a stratum)
    become rows with ERROR status. With a bootstrap config, difference
    and ratio intervals are attached to every evaluated row; all rows
    share one set of resamples per stratum.
    """
    _check_pair(dataset, group_a, group_b)
    if not dataset.has_decisions:
        raise InputError("dataset has no decisions; apply a threshold first")
    if criteria is None:
        selected = set(DEFAULT_CRITERIA)
    else:
        selected = {coerce_criterion(c) for c in criteria}
    conditions = dict(conditions or {})
    if conditions:
        selected.add(FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY)
    elif FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY in selected:
        raise InputError("conditional statistical parity needs at least one condition")

    report_notes: list[str] = []
    rows: list[Comparison] = []
    conditional_rows: dict[str, Comparison] = {}

    for criterion in CANONICAL_ORDER:
        if criterion not in selected:
            continue
        if criterion in (FairnessCriterion.WELL_CALIBRATION, FairnessCriterion.TEST_FAIRNESS):
            continue
        if criterion is FairnessCriterion.CONDITIONAL_STATISTICAL_PARITY:
            for name, predicate in conditions.items():
                try:
                    row = compare_conditional(dataset, predicate, group_a, group_b, name)
                except InputError as exc:
                    row = _not_evaluated(
                        criterion,
                        MetricId.POSITIVE_RATE,
                        group_a,
                        group_b,
                        str(exc),
                        condition=name,
                        status=RowStatus.ERROR,
                    )
                conditional_rows[name] = row
                rows.append(row)
            continue
        components = CRITERION_COMPONENTS[criterion]
        needs_scores = any(metric in SCORE_METRICS for metric in components)
        if needs_scores and not dataset.has_scores:
            for metric in components:
                rows.append(
                    _not_evaluated(
                        criterion, metric, group_a, group_b, "risk scores not loaded"
                    )
                )
            continue
        rows.extend(compare(dataset, criterion, group_a, group_b))

    if bootstrap is not None:
        base_metrics = sorted(
            {
                row.metric
                for row in rows
                if row.status is RowStatus.EVALUATED and row.condition is None
            },
            key=lambda m: m.value,
        )
        base_intervals = (
            bootstrap_intervals(
                dataset, base_metrics, group_a, group_b, bootstrap, workers=workers
            )
            if base_metrics
            else {}
        )
        stratum_intervals: dict[str, dict] = {}
        for name, predicate in conditions.items():
            if conditional_rows[name].status is not RowStatus.EVALUATED:
                continue
            stratum = filter_condition(dataset, predicate)
            stratum_intervals[name] = bootstrap_intervals(
                stratum,
                (MetricId.POSITIVE_RATE,),
                group_a,
                group_b,
                bootstrap,
                workers=workers,
            )
        decorated = []
        for row in rows:
            if row.status is not RowStatus.EVALUATED:
                decorated.append(row)
            elif row.condition is not None:
                pair = stratum_intervals[row.condition][MetricId.POSITIVE_RATE]
                decorated.append(_attach_intervals(row, pair))
            else:
                decorated.append(_attach_intervals(row, base_intervals[row.metric]))
        rows = decorated

    calibration = None
    wants_calibration = selected & {
        FairnessCriterion.WELL_CALIBRATION,
        FairnessCriterion.TEST_FAIRNESS,
    }
    if wants_calibration:
        if not dataset.has_scores:
            report_notes.append("calibration criteria skipped: risk scores not loaded")
        else:
            calibration = compare_calibration(
                dataset, group_a, group_b, bins, min_bin_count=min_bin_count
            )

    return FairnessReport(
        group_a=group_a,
        group_b=group_b,
        rows=tuple(rows),
        calibration=calibration,
        notes=tuple(report_notes),
    )
