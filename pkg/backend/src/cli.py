"""Command-line entry point.

Usage:
    python -m backend.src.cli solve backend/config/instances/two_hour.json
    python -m backend.src.cli aggregate --synthetic alternating-days --hours 96 --method lossless
    python -m backend.src.cli compare backend/config/scenarios/peaky_day.json
    python -m backend.src.cli extreme-days --synthetic seasonal --hours 720 --regions 3 --radius 0.2
    python -m backend.src.cli valuation backend/config/instances/two_gen_storage.json
    python -m backend.src.cli admm backend/config/instances/two_gen_storage.json --partition hour

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 valuation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from backend.src.config import REPORTS_DIR
from backend.src.models.domain import SystemInstance
from backend.src.models.schemas import METHOD_KINDS, MethodDocument
from backend.src.processors.admm import PARTITIONS, AdmmConfig, admm_solve
from backend.src.processors.agg_model import expand_solution, solve_aggregated
from backend.src.processors.aggregation import (
    LINKAGES,
    SELECTIONS,
    check_lossless,
    lossless_feasibility_curve,
)
from backend.src.processors.extreme_days import COVER_METHODS, cumulative_days, select_extreme_days
from backend.src.processors.model_core import audit_kkt, solve_core
from backend.src.processors.valuation import value_report
from backend.src.services.comparison_service import Scenario, build_aggregation, run_comparison
from backend.src.services.export_service import EXPORT_FORMATS, ExportService
from backend.src.services.instance_service import (
    load_instance,
    load_scenario_document,
    resolve_instance,
    save_aggregation,
)
from backend.src.services.synthetic_service import generate_regional_series, generate_synthetic
from backend.src.solvers.lp import CvxpyLpSolver, HighsLpSolver
from backend.src.utils.constants import DEFAULT_ADMM, SYNTHETIC_PROFILES
from backend.src.utils.errors import (
    InvalidInstance,
    MaxItersExceeded,
    SolverError,
    StoragePlanError,
    ValuationError,
)


EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_VALUATION = 3

AGGREGATE_METHODS = tuple(k for k in METHOD_KINDS if k not in ("full", "admm"))


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------
def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("instance", nargs="?", help="instance JSON file")
    p.add_argument("--synthetic", choices=SYNTHETIC_PROFILES, help="generate instead of loading")
    p.add_argument("--hours", type=int, default=168)
    p.add_argument("--regions", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--non-cyclic", action="store_true", help="start with empty storage")


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help=f"report directory (e.g. {REPORTS_DIR})")
    p.add_argument("--format", nargs="+", choices=EXPORT_FORMATS, default=["txt", "csv"])


def _instance(args: argparse.Namespace) -> SystemInstance:
    if args.synthetic:
        return generate_synthetic(
            args.synthetic, args.hours, args.regions, args.seed, cyclic=not args.non_cyclic
        )
    if not args.instance:
        raise InvalidInstance("give an instance file or --synthetic PROFILE")
    return load_instance(args.instance)


def _emit(frame: pd.DataFrame, args: argparse.Namespace, subject: str) -> None:
    print(ExportService.export_to_text(frame))
    if args.out is not None:
        for path in ExportService.write(frame, args.out, subject, tuple(args.format)):
            print(f"wrote {path}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def cmd_solve(args: argparse.Namespace) -> int:
    instance = _instance(args)
    solver = CvxpyLpSolver() if args.backend == "cvxpy" else HighsLpSolver()
    result = solve_core(instance, solver=solver, with_storage=not args.no_storage)
    kkt = audit_kkt(instance, result)
    print(f"objective      {result.objective:.6g}")
    print(f"storage room   {result.u:.6g}")
    print(f"storage door   {result.t:.6g}")
    for name, z in zip(instance.generator_names, result.z, strict=True):
        print(f"capacity {name:<12} {z:.6g}")
    print(f"kkt            {'ok' if kkt.ok else f'{len(kkt.violations)} violation(s)'}")
    if args.out is not None:
        hourly = ExportService.hourly_table(
            {
                "demand": instance.demand,
                "r": result.r,
                "s": result.s,
                "lambda": result.lambda_,
                "omega": result.omega,
            }
        )
        ExportService.write(hourly, args.out, "solve_hourly", tuple(args.format))
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    instance = _instance(args)
    if args.curve:
        ks = args.ks or None
        curve = lossless_feasibility_curve(instance, ks=ks, tol=args.tol)
        frame = pd.DataFrame(
            [
                {
                    "k": p.k,
                    "states": p.n_states,
                    "lossless": p.lossless,
                    "max_violation": p.max_violation,
                    "violations": p.violations,
                }
                for p in curve.points
            ]
        )
        _emit(frame, args, "lossless_curve")
        print(f"first lossless k: {curve.first_lossless_k}")
        return 0

    method = MethodDocument(
        kind=args.method, k=args.k, selection=args.selection, linkage=args.linkage, tol=args.tol
    )
    agg = build_aggregation(instance, method)
    report = check_lossless(agg, instance, tol=args.tol)
    print(f"method         {agg.method}")
    print(f"states         {agg.n_states} (from {agg.n_hours} hours)")
    print(f"lossless       {report.lossless} (max violation {report.max_violation:.3g})")
    if args.save is not None:
        print(f"wrote {save_aggregation(agg, instance, args.save)}")
    if args.solve:
        agg_res = solve_aggregated(instance, agg)
        full = solve_core(instance)
        expanded = expand_solution(agg_res, agg)
        print(f"objective      {agg_res.objective:.6g} (full {full.objective:.6g})")
        print(f"storage room   {expanded.u:.6g} (full {full.u:.6g})")
        print(f"storage door   {expanded.t:.6g} (full {full.t:.6g})")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    doc = load_scenario_document(args.scenario)
    instance = resolve_instance(doc, base_dir=Path(args.scenario).parent)
    scenario = Scenario.from_document(doc, instance)
    report = run_comparison(scenario, workers=args.workers)
    _emit(ExportService.comparison_table(report), args, f"compare_{scenario.name}")
    for row in report.rows:
        if row.error:
            print(f"{row.label}: {row.error}", file=sys.stderr)
    if not report.sweep.empty:
        _emit(report.sweep, args, f"sweep_{scenario.name}")
    return EXIT_SOLVER if any(r.error for r in report.rows) else 0


def cmd_extreme_days(args: argparse.Namespace) -> int:
    if args.synthetic:
        series = generate_regional_series(args.synthetic, args.hours, args.regions, args.seed)
    else:
        instance = _instance(args)
        varying = {
            g.name: g.availability for g in instance.generators if np.ptp(g.availability) > 0
        }
        series = pd.DataFrame({"load": instance.demand} | varying)
    cds = cumulative_days(series)
    cover = select_extreme_days(cds, args.radius, method=args.method)
    print(f"days           {cds.n_days}")
    print(f"regions        {len(cds.regions)}")
    print(f"vertices       {len(cover.vertices)}")
    print(f"chosen days    {cover.n_chosen}: {cover.chosen_days}")
    if cover.uncoverable:
        print(f"uncoverable    {len(cover.uncoverable)} vertices served by their nearest day")
    if args.out is not None:
        ExportService.write(cover.scatter_frame(cds), args.out, "extreme_days", ("csv",))
        ExportService.write(cover.assignment_frame(), args.out, "extreme_vertices", ("csv",))
    return 0


def cmd_valuation(args: argparse.Namespace) -> int:
    instance = _instance(args)
    result = solve_core(instance)
    report = value_report(result, instance, check=not args.no_check)
    _emit(ExportService.value_table(report), args, "valuation")
    print()
    print(ExportService.export_to_text(ExportService.identity_table(report)))
    if report.cycles:
        print()
        print(ExportService.export_to_text(ExportService.cycles_table(report)))
    if report.flags:
        print(f"flags: {', '.join(report.flags)}")
    return 0


def cmd_admm(args: argparse.Namespace) -> int:
    instance = _instance(args)
    cfg = AdmmConfig(
        beta=args.beta,
        max_iters=args.max_iters,
        eps_primal=args.eps if args.eps is not None else args.eps_primal,
        eps_dual=args.eps if args.eps is not None else args.eps_dual,
        partition=args.partition,
        adaptive_penalty=args.adaptive,
    )
    status = 0
    try:
        result, trace = admm_solve(instance, cfg)
    except MaxItersExceeded as e:
        result, trace, status = e.result, e.trace, EXIT_SOLVER
        print(f"warning: {e}", file=sys.stderr)
    final = trace.final
    print(f"iterations     {trace.iterations} (converged: {trace.converged})")
    print(f"objective      {result.objective:.6g}")
    print(f"primal resid   {final.primal_residual:.3g}")
    print(f"dual resid     {final.dual_residual:.3g}")
    if args.reference:
        ref = solve_core(instance)
        rel = abs(result.objective - ref.objective) / max(1.0, abs(ref.objective))
        print(f"direct solve   {ref.objective:.6g} (relative gap {rel:.3g})")
    if args.out is not None:
        ExportService.write(trace.to_frame(), args.out, "admm_trace", tuple(args.format))
    return status


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storage-plan", description="Capacity planning with storage: solve, aggregate, value."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="full-resolution solve and KKT audit")
    _add_instance_args(p)
    _add_output_args(p)
    p.add_argument("--backend", choices=("highs", "cvxpy"), default="highs")
    p.add_argument("--no-storage", action="store_true", help="force t = u = 0")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("aggregate", help="build and check a temporal aggregation")
    _add_instance_args(p)
    _add_output_args(p)
    p.add_argument("--method", choices=AGGREGATE_METHODS, default="lossless")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--selection", choices=SELECTIONS, default="kmeans-medoid")
    p.add_argument("--linkage", choices=LINKAGES, default="isolated")
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--save", type=Path, default=None, help="write the aggregation document")
    p.add_argument("--solve", action="store_true", help="solve and compare against full")
    p.add_argument("--curve", action="store_true", help="adjacent-clustering lossless sweep")
    p.add_argument("--ks", type=int, nargs="*", default=None)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("compare", help="run a comparison scenario")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--workers", type=int, default=None)
    _add_output_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("extreme-days", help="extreme-vertex day cover")
    _add_instance_args(p)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--method", choices=COVER_METHODS, default="greedy")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_extreme_days)

    p = sub.add_parser("valuation", help="storage value report")
    _add_instance_args(p)
    _add_output_args(p)
    p.add_argument("--no-check", action="store_true", help="report without asserting identities")
    p.set_defaults(func=cmd_valuation)

    p = sub.add_parser("admm", help="decomposed solve")
    _add_instance_args(p)
    _add_output_args(p)
    p.add_argument(
        "--partition",
        "--blocks",
        dest="partition",
        choices=PARTITIONS,
        default=DEFAULT_ADMM["partition"],
    )
    p.add_argument("--beta", type=float, default=DEFAULT_ADMM["beta"])
    p.add_argument("--max-iters", type=int, default=DEFAULT_ADMM["max_iters"])
    p.add_argument("--eps-primal", type=float, default=DEFAULT_ADMM["eps_primal"])
    p.add_argument("--eps-dual", type=float, default=DEFAULT_ADMM["eps_dual"])
    p.add_argument("--eps", type=float, default=None, help="set both residual tolerances")
    p.add_argument("--adaptive", action="store_true", help="residual balancing")
    p.add_argument("--reference", action="store_true", help="also solve directly and compare")
    p.set_defaults(func=cmd_admm)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except ValuationError as e:
        print(f"valuation error: {e}", file=sys.stderr)
        return EXIT_VALUATION
    except (StoragePlanError, ValidationError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
