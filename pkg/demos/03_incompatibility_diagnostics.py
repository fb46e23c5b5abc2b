"""When can several fairness criteria hold at once?

Independence, separation, and sufficiency are mutually exclusive in
pairs once group base rates differ and the predictor is imperfect but
informative. This script builds two screening scenarios and shows how
the verdict reacts, then grades one of them against a tolerance.

Run with: python3 demos/03_incompatibility_diagnostics.py
"""

import numpy as np

from fairaudit import (
    AuditDataset,
    apply_threshold,
    epsilon_assessment,
    evaluate_all,
    incompatibility_verdict,
    independence_test,
)


def screening_cohort(rate_a: float, rate_b: float, n: int = 700, seed: int = 5) -> AuditDataset:
    rng = np.random.default_rng(seed)
    outcome = np.concatenate(
        [
            (rng.random(n) < rate_a).astype(np.int8),
            (rng.random(n) < rate_b).astype(np.int8),
        ]
    )
    labels = np.array(["urban"] * n + ["rural"] * n, dtype=object)
    score = np.clip(0.3 + 0.35 * outcome + rng.normal(0, 0.2, 2 * n), 0, 1)
    return AuditDataset(outcome=outcome, group=labels, score=score)


def describe(tag: str, ds: AuditDataset) -> None:
    print(f"--- {tag} ---")
    test = independence_test(ds)
    print(f"chi-square {test.statistic:.3f}, p = {test.p_value:.4f}")
    verdict = incompatibility_verdict(ds)
    print(f"base rates differ: {verdict.reject_independence}")
    print(f"predictor informative: {verdict.informative}, imperfect: {verdict.imperfect}")
    if verdict.flagged:
        for pair in verdict.flagged:
            print(f"  cannot hold together: {pair.value}")
    else:
        print("  no criterion pair is ruled out")
    print()


def run() -> None:
    same = apply_threshold(screening_cohort(0.22, 0.22), 0.55)
    describe("equal base rates", same)

    skewed = apply_threshold(screening_cohort(0.30, 0.18), 0.55)
    describe("unequal base rates", skewed)

    print("--- tolerance check on the skewed cohort, epsilon = 0.10 ---")
    report = evaluate_all(skewed, "urban", "rural")
    assessment = epsilon_assessment(report, 0.10)
    for key, verdict in assessment.verdicts.items():
        print(f"  {key:32s} {verdict.value}")


if __name__ == "__main__":
    run()
