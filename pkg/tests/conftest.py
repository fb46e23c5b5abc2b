"""Shared fixtures: a deterministic clinical-style CSV and toy datasets."""

from __future__ import annotations

import csv

import numpy as np
import pytest
from hypothesis import settings

from fairaudit import AuditDataset

settings.register_profile("suite", deadline=None, derandomize=True)
settings.load_profile("suite")

CLINICAL_SEED = 20240501
CLINICAL_N = 800


def write_clinical_csv(path: str, n: int = CLINICAL_N, seed: int = CLINICAL_SEED) -> None:
    """Synthetic ICU-flavoured table with the warts real extracts have.

    Deterministic in (n, seed). Includes a mostly-missing column (bmi),
    a lightly-missing column (pao2), an entirely empty column (sepsis),
    a categorical column (ward), and three malformed rows that loaders
    must drop.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for i in range(n):
        sex = "F" if rng.random() < 0.42 else "M"
        age = rng.normal(64.0, 13.0)
        base = rng.beta(2.2, 7.0)
        lift = 0.10 if sex == "F" else 0.0
        risk = float(np.clip(base + lift + 0.003 * (age - 64.0), 0.0, 1.0))
        died = int(rng.random() < min(0.92, risk + 0.03))
        ward = "icu" if rng.random() < 0.35 else "med"
        stay = int(rng.integers(1, 30))
        bmi = "" if i % 4 == 1 else f"{rng.normal(27.0, 4.0):.1f}"
        pao2 = "" if i % 20 == 3 else f"{rng.normal(92.0, 11.0):.1f}"
        rows.append(
            [died, f"{risk:.4f}", sex, f"{age:.1f}", bmi, pao2, ward, stay, ""]
        )
    # malformed rows: blank outcome, blank group, blank score
    rows.append(["", "0.5000", "F", "60.0", "", "90.0", "icu", 5, ""])
    rows.append([1, "0.5000", "", "60.0", "", "90.0", "icu", 5, ""])
    rows.append([1, "", "M", "60.0", "", "90.0", "icu", 5, ""])
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["died", "risk", "sex", "age", "bmi", "pao2", "ward", "stay_days", "sepsis"]
        )
        writer.writerows(rows)


@pytest.fixture(scope="session")
def clinical_csv(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("data") / "clinical.csv"
    write_clinical_csv(str(path))
    return str(path)


def toy_dataset() -> AuditDataset:
    """Two groups with hand-countable confusion tables.

    Group F: tp=2 fn=2 fp=1 tn=3. Group M: tp=1 fn=1 fp=1 tn=1.
    """
    outcome = [1, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1]
    decision = [1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1]
    score = [0.9, 0.3, 0.8, 0.6, 0.2, 0.1, 0.4, 0.45, 0.7, 0.2, 0.55, 0.65]
    group = ["F"] * 8 + ["M"] * 4
    return AuditDataset(
        outcome=np.array(outcome),
        group=np.array(group, dtype=object),
        score=np.array(score),
        decision=np.array(decision),
    )


@pytest.fixture
def toy() -> AuditDataset:
    return toy_dataset()
