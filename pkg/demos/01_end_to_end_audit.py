"""End-to-end audit of a synthetic clinical triage model.

Builds a CSV of admissions with a risk score whose errors differ by sex,
then runs the command-line auditor twice: once for the human-readable
table, once for the JSON document with bootstrap intervals.

Run with: python3 demos/01_end_to_end_audit.py
"""

import csv
import tempfile
from pathlib import Path

import numpy as np

from fairaudit.cli import main


def write_admissions(path: Path, n: int = 600, seed: int = 7) -> None:
    rng = np.random.default_rng(seed)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["died", "risk", "sex", "age"])
        for _ in range(n):
            sex = "F" if rng.random() < 0.55 else "M"
            age = int(rng.integers(25, 90))
            base = 0.15 + 0.004 * (age - 25)
            died = int(rng.random() < base)
            # the model reads risk systematically higher for one group,
            # and is noisy enough that every confusion cell stays populated
            noise = rng.normal(0.0, 0.20)
            lift = 0.08 if sex == "M" else 0.0
            risk = float(np.clip(0.35 + 0.30 * died + lift + noise, 0.0, 1.0))
            writer.writerow([died, f"{risk:.4f}", sex, age])


def run() -> None:
    with tempfile.TemporaryDirectory() as scratch:
        csv_path = Path(scratch) / "admissions.csv"
        write_admissions(csv_path)

        common = [
            "audit",
            "--input", str(csv_path),
            "--outcome", "died",
            "--group", "sex",
            "--score", "risk",
            "--threshold", "0.5",
            "--condition", "senior=age >= 60",
            "--epsilon", "0.05",
        ]

        print("=== Markdown report (point estimates only) ===")
        main(common)

        print()
        print("=== JSON report with 95% bootstrap intervals ===")
        out_path = Path(scratch) / "report.json"
        code = main(common + [
            "--bootstrap", "500",
            "--seed", "42",
            "--format", "json",
            "--output", str(out_path),
        ])
        print(f"exit code {code}, wrote {out_path.stat().st_size} bytes")
        for line in out_path.read_text().splitlines()[:24]:
            print(line)
        print("...")


if __name__ == "__main__":
    run()
