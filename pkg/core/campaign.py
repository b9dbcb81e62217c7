"""
Torus LSI - Campaign Module
Runs many independent verifications with split seeds and writes a
byte-deterministic CSV, a JSON summary and dumps of violating elements.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from core import serialization
from core.spectral import DEFAULT_Q_MAX, SYMBOL_SAMPLES
from core.verify import (
    THEOREM_TOL,
    WEISSLER_TOL,
    GeneratorSpec,
    InequalityReport,
    gen_random_diagonal,
    gen_random_positive,
    gen_random_trig_polynomial,
    verify_diagonal,
    verify_general,
    verify_weissler_baseline,
)

log = logging.getLogger(__name__)

CSV_HEADER = [
    "trial", "seed", "digest", "entropy", "energy", "l2",
    "slack", "min_coeff_sign", "entropy_err", "verdict",
]

EXIT_OK = 0
EXIT_THEOREM_VIOLATION = 1
EXIT_CONJECTURE_VIOLATION = 2


class CampaignConfig(BaseModel):
    suite: Literal["diagonal", "general", "weissler"] = "diagonal"
    trials: int = Field(0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    workers: int = Field(1, ge=1)
    out: Path = Path("campaign-out")
    generator: GeneratorSpec = GeneratorSpec()
    q_max: int = Field(DEFAULT_Q_MAX, ge=1)
    tol: float | None = Field(None, gt=0.0)
    max_degree: int | None = Field(12, ge=2)
    weissler_degree: int = Field(6, ge=0)
    weissler_squared: bool = True
    symbol_samples: int = Field(SYMBOL_SAMPLES, ge=1)

    @property
    def tolerance(self) -> float:
        if self.tol is not None:
            return self.tol
        return WEISSLER_TOL if self.suite == "weissler" else THEOREM_TOL


@dataclass
class TrialOutcome:
    index: int
    seed: int
    report: InequalityReport
    dump: str | None = None


@dataclass
class CampaignResult:
    outcomes: list[TrialOutcome]
    summary: dict
    exit_code: int
    csv_path: Path
    summary_path: Path
    violation_paths: list[Path] = field(default_factory=list)


def derive_seed(master: int, index: int) -> int:
    """Counter-based per-trial seed, independent of execution order."""
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0])


def run_trial(config: CampaignConfig, index: int) -> TrialOutcome:
    seed = derive_seed(config.seed, index)
    tol = config.tolerance

    if config.suite == "weissler":
        spec = config.generator
        f = gen_random_trig_polynomial(seed, config.weissler_degree, spec.magnitude, spec.positivity_floor)
        report = verify_weissler_baseline(f, squared=config.weissler_squared, tol=tol)
        dump = json.dumps(serialization.circle_coefficients_to_dict(f), indent=2) + "\n"
        return TrialOutcome(index, seed, report, dump if report.verdict == "violated" else None)

    spec = config.generator.model_copy(update={"kind": config.suite, "seed": seed})
    if config.suite == "diagonal":
        a = gen_random_diagonal(spec)
        report = verify_diagonal(
            a, q_max=config.q_max, tol=tol, max_degree=config.max_degree,
            symbol_samples=config.symbol_samples,
        )
        element = a.to_torus()
    else:
        element = gen_random_positive(spec)
        report = verify_general(element, q_max=config.q_max, tol=tol, max_degree=config.max_degree)
    dump = serialization.dumps(element) if report.verdict == "violated" else None
    return TrialOutcome(index, seed, report, dump)


def _fmt(value: float) -> str:
    return f"{value:.12e}"


def csv_row(outcome: TrialOutcome) -> list[str]:
    r = outcome.report
    sign = r.min_coeff_sign
    return [
        str(outcome.index),
        str(outcome.seed),
        r.element_digest,
        _fmt(r.entropy),
        _fmt(r.energy),
        _fmt(r.l2),
        _fmt(r.slack),
        "" if sign is None else str(sign),
        _fmt(r.entropy_error_estimate),
        r.verdict,
    ]


def write_csv(outcomes: list[TrialOutcome], path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for outcome in outcomes:
            writer.writerow(csv_row(outcome))
    return path


def exit_code_for(suite: str, counts: dict[str, int]) -> int:
    if counts.get("violated", 0) == 0:
        return EXIT_OK
    return EXIT_CONJECTURE_VIOLATION if suite == "general" else EXIT_THEOREM_VIOLATION


def run_campaign(config: CampaignConfig) -> CampaignResult:
    """
    Run config.trials independent verifications.

    Rows are ordered by trial index whatever the completion order.

    Returns:
        CampaignResult: outcomes, summary dict and exit code
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    log.info("campaign %s: %d trials on %d workers", config.suite, config.trials, config.workers)

    def one(index: int) -> TrialOutcome:
        outcome = run_trial(config, index)
        log.debug("trial %d: slack %.3e (%s)", index, outcome.report.slack, outcome.report.verdict)
        return outcome

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        outcomes = list(pool.map(one, range(config.trials)))

    csv_path = write_csv(outcomes, out / "campaign.csv")

    violation_paths = []
    for outcome in outcomes:
        if outcome.dump is None:
            continue
        path = out / "violations" / f"trial-{outcome.index}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(outcome.dump)
        violation_paths.append(path)
        log.info("trial %d violated the %s suite, element written to %s", outcome.index, config.suite, path)

    counts = {"holds": 0, "violated": 0, "inconclusive": 0}
    for outcome in outcomes:
        counts[outcome.report.verdict] += 1
    exit_code = exit_code_for(config.suite, counts)
    summary = {
        "suite": config.suite,
        "trials": config.trials,
        "seed": config.seed,
        "min_slack": min((o.report.slack for o in outcomes), default=None),
        "counts": counts,
        "runtime_seconds": round(time.perf_counter() - started, 3),
        "exit_code": exit_code,
    }
    summary_path = out / "summary.json"
    with open(summary_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(summary, indent=2) + "\n")

    log.info("campaign done: %s, exit code %d", counts, exit_code)
    return CampaignResult(outcomes, summary, exit_code, csv_path, summary_path, violation_paths)
