"""
Torus LSI CLI - command-line front end.
Generates or loads elements, runs the inequality checks, coefficient
extraction, spectra and campaigns, and prints reports as JSON or CSV.
"""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import argparse
import csv
import io
import json
import logging
import os

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from core import serialization
from core.campaign import CSV_HEADER, CampaignConfig, TrialOutcome, csv_row, run_campaign
from core.combinatorics import check_bpq_factorization, g_taylor
from core.errors import PreconditionError, TorusLSIError
from core.lattice import GOLDEN, ThetaParam, TorusElement, diagonal_view, trace
from core.spectral import (
    DEFAULT_Q_MAX,
    R_GRID_POINTS,
    SYMBOL_SAMPLES,
    spectral_bounds,
    spectrum,
    usable_convergents,
)
from core.verify import (
    GeneratorSpec,
    InequalityReport,
    gen_random_diagonal,
    gen_random_positive,
    gen_random_trig_polynomial,
    run_selftest,
    verify_diagonal,
    verify_general,
    verify_weissler_baseline,
)

ROOT = Path(__file__).resolve().parent.parent


# ─── Configuration ──────────────────────────────────────────────

def load_config(path: str | Path | None = None) -> dict:
    if path is None:
        path = os.getenv("TORUS_LSI_CONFIG") or ROOT / "config.yaml"
    path = Path(path)
    if not path.exists():
        print(f"{path} not found, using built-in defaults")
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def _pick(value, config: dict, section: str, key: str, default):
    """CLI flag, then config.yaml, then the built-in default."""
    if value is not None:
        return value
    return (config.get(section) or {}).get(key, default)


def resolve_theta(args, config: dict) -> ThetaParam:
    return ThetaParam.parse(_pick(args.theta, config, "theta", "value", "golden"))


def resolve_q_max(args, config: dict) -> int:
    return int(_pick(args.q, config, "theta", "q_max", DEFAULT_Q_MAX))


def resolve_workers(args, config: dict) -> int:
    if args.workers is not None:
        return args.workers
    env = os.getenv("TORUS_LSI_WORKERS")
    if env:
        return int(env)
    return int((config.get("campaign") or {}).get("workers", 1))


def build_generator(args, config: dict, kind: str) -> GeneratorSpec:
    gen_cfg = config.get("generator") or {}
    return GeneratorSpec(
        kind=kind,
        slope=args.s if args.s is not None else gen_cfg.get("slope", 1),
        support_radius=args.radius if args.radius is not None else gen_cfg.get("support_radius", 3),
        magnitude=args.magnitude if args.magnitude is not None else gen_cfg.get("magnitude", 0.3),
        positivity_floor=args.floor if args.floor is not None else gen_cfg.get("positivity_floor", 0.1),
        seed=args.seed if args.seed is not None else (config.get("campaign") or {}).get("seed", 0),
        theta=resolve_theta(args, config).value,
    )


def load_or_generate(args, config: dict, kind: str) -> TorusElement:
    if args.element:
        return serialization.load_element(args.element)
    return gen_random_positive(build_generator(args, config, kind))


# ─── Output ─────────────────────────────────────────────────────

def emit_report(report: InequalityReport, fmt: str, seed: int | None = None) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerow(csv_row(TrialOutcome(0, seed or 0, report)))
        print(buf.getvalue(), end="")
    else:
        print(report.model_dump_json(indent=2))


def emit_json(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


def _report_exit(report: InequalityReport) -> int:
    if report.verdict != "violated":
        return 0
    return 2 if report.suite == "general" else 1


# ─── Commands ───────────────────────────────────────────────────

def cmd_verify_diagonal(args, config: dict) -> int:
    if args.element:
        view = diagonal_view(serialization.load_element(args.element), args.s)
        if view is None:
            raise PreconditionError("element file is not in the diagonal class")
    else:
        view = gen_random_diagonal(build_generator(args, config, "diagonal"))
    report = verify_diagonal(
        view,
        q_max=resolve_q_max(args, config),
        tol=_pick(args.tol, config, "verification", "tol", 1e-7),
        max_degree=_pick(args.max_degree, config, "verification", "max_degree", 12),
        symbol_samples=(config.get("spectral") or {}).get("symbol_samples", SYMBOL_SAMPLES),
    )
    emit_report(report, args.format, args.seed)
    return _report_exit(report)


def cmd_verify_general(args, config: dict) -> int:
    a = load_or_generate(args, config, "general")
    report = verify_general(
        a,
        q_max=resolve_q_max(args, config),
        tol=_pick(args.tol, config, "verification", "tol", 1e-7),
        max_degree=_pick(args.max_degree, config, "verification", "max_degree", 12),
    )
    emit_report(report, args.format, args.seed)
    return _report_exit(report)


def cmd_weissler(args, config: dict) -> int:
    gen_cfg = config.get("generator") or {}
    f = gen_random_trig_polynomial(
        args.seed or 0,
        _pick(args.degree, config, "campaign", "weissler_degree", 6),
        args.magnitude if args.magnitude is not None else gen_cfg.get("magnitude", 0.3),
        args.floor if args.floor is not None else gen_cfg.get("positivity_floor", 0.1),
    )
    report = verify_weissler_baseline(
        f,
        squared=not args.linear,
        tol=_pick(args.tol, config, "verification", "weissler_tol", 1e-9),
    )
    emit_report(report, args.format, args.seed)
    return _report_exit(report)


def cmd_coeffs(args, config: dict) -> int:
    a = load_or_generate(args, config, "diagonal" if args.s is not None else "general")
    a_hat = a.scale(1.0 / trace(a).real)
    coeffs = g_taylor(a_hat, _pick(args.max_degree, config, "verification", "max_degree", 12))
    emit_json(coeffs.to_dict())
    return 0


def cmd_spectrum(args, config: dict) -> int:
    a = load_or_generate(args, config, "diagonal" if args.s is not None else "general")
    q_max = resolve_q_max(args, config)
    p, q = usable_convergents(a.theta, a.support_radius, q_max)[-1]
    doc = spectrum(a, p, q).to_dict()
    if args.bounds:
        grid = (config.get("spectral") or {}).get("r_grid_points", R_GRID_POINTS)
        bounds = spectral_bounds(a.scale(1.0 / trace(a).real), grid, q_max)
        doc["bounds"] = {"b1": bounds.b1, "b2": bounds.b2, "max_eigenvalue": bounds.max_eigenvalue}
    emit_json(doc)
    return 0


def cmd_bpq_rank(args, config: dict) -> int:
    if args.element:
        support = list(serialization.load_element(args.element).coeffs)
    else:
        radius = args.radius if args.radius is not None else 1
        support = [(m, n) for m in range(-radius, radius + 1) for n in range(-radius, radius + 1)]
    raw = _pick(args.theta, config, "theta", "value", "golden")
    theta = GOLDEN if str(raw).lower() == "golden" else float(raw)
    report = check_bpq_factorization(support, args.k, theta)
    emit_json(report.to_dict())
    return 0


def cmd_campaign(args, config: dict) -> int:
    camp_cfg = config.get("campaign") or {}
    ver_cfg = config.get("verification") or {}
    suite = args.suite or camp_cfg.get("suite", "diagonal")
    campaign = CampaignConfig(
        suite=suite,
        trials=_pick(args.trials, config, "campaign", "trials", 0),
        seed=_pick(args.seed, config, "campaign", "seed", 0),
        workers=resolve_workers(args, config),
        out=Path(_pick(args.out, config, "campaign", "out", "campaign-out")),
        generator=build_generator(args, config, "general" if suite == "general" else "diagonal"),
        q_max=resolve_q_max(args, config),
        tol=args.tol if args.tol is not None else (ver_cfg.get("weissler_tol") if suite == "weissler" else ver_cfg.get("tol")),
        max_degree=_pick(args.max_degree, config, "verification", "max_degree", 12),
        weissler_degree=_pick(args.degree, config, "campaign", "weissler_degree", 6),
        weissler_squared=False if args.linear else camp_cfg.get("weissler_squared", True),
        symbol_samples=(config.get("spectral") or {}).get("symbol_samples", SYMBOL_SAMPLES),
    )

    print("=" * 50)
    print(f"Torus LSI campaign: {campaign.suite}, {campaign.trials} trials")
    print("=" * 50)
    result = run_campaign(campaign)
    print(f"CSV:     {result.csv_path}")
    print(f"Summary: {result.summary_path}")
    print(f"Counts:  {result.summary['counts']}")
    print(f"Min slack: {result.summary['min_slack']}")
    for path in result.violation_paths:
        print(f"Violation dumped: {path}")
    return result.exit_code


def cmd_selftest(args, config: dict) -> int:
    print("=" * 50)
    print("Torus LSI self test")
    print("=" * 50)
    results = run_selftest(seed=args.seed or 0, q_max=args.q or 400)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"\n{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


COMMANDS = {
    "verify-diagonal": cmd_verify_diagonal,
    "verify-general": cmd_verify_general,
    "weissler": cmd_weissler,
    "coeffs": cmd_coeffs,
    "spectrum": cmd_spectrum,
    "bpq-rank": cmd_bpq_rank,
    "campaign": cmd_campaign,
    "selftest": cmd_selftest,
}


# ─── Argument parsing ───────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--theta", help="deformation angle: a float in (0,1) or 'golden'")
    common.add_argument("--q", type=int, help="largest convergent denominator")
    common.add_argument("--s", type=int, help="diagonal slope")
    common.add_argument("--radius", type=int, help="support radius of generated elements")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--trials", type=int, help="number of campaign trials")
    common.add_argument("--max-degree", type=int, help="highest r-degree of G coefficients")
    common.add_argument("--tol", type=float, help="slack tolerance")
    common.add_argument("--out", help="campaign output directory")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--element", help="element file to load instead of generating one")
    common.add_argument("--magnitude", type=float, help="coefficient scale of generated elements")
    common.add_argument("--floor", type=float, help="positivity floor eps of generated elements")
    common.add_argument("--workers", type=int, help="campaign worker threads")
    common.add_argument("--config", help="alternate config.yaml")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="torus-lsi",
        description="Log-Sobolev inequality checks on the noncommutative two-torus",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-diagonal", parents=[common], help="check the diagonal-class inequality")
    sub.add_parser("verify-general", parents=[common], help="check the general (conjectured) inequality")
    weissler = sub.add_parser("weissler", parents=[common], help="circle baseline on a random trig polynomial")
    weissler.add_argument("--degree", type=int, help="degree of the trigonometric polynomial")
    weissler.add_argument("--linear", action="store_true", help="integrate f log f instead of f^2 log f")
    sub.add_parser("coeffs", parents=[common], help="emit the G(r) Taylor coefficients")
    spec = sub.add_parser("spectrum", parents=[common], help="spectrum at the largest usable convergent")
    spec.add_argument("--bounds", action="store_true", help="also compute the r-grid bounds")
    bpq = sub.add_parser("bpq-rank", parents=[common], help="rank of the B_{P,Q} blocks")
    bpq.add_argument("--k", type=int, default=4, help="word length")
    campaign = sub.add_parser("campaign", parents=[common], help="run a randomized campaign")
    campaign.add_argument("--suite", choices=["diagonal", "general", "weissler"])
    campaign.add_argument("--degree", type=int, help="trig polynomial degree for the weissler suite")
    campaign.add_argument("--linear", action="store_true", help="weissler suite: integrate f log f instead of f^2 log f")
    sub.add_parser("selftest", parents=[common], help="desk-scale self test")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[%(name)s] %(levelname)s: %(message)s",
    )

    load_dotenv(ROOT / ".env")
    config = load_config(args.config)

    try:
        return COMMANDS[args.command](args, config)
    except (TorusLSIError, ValidationError, OSError) as e:
        print(f"Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
