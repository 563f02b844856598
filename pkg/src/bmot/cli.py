"""Command-line front end: scenario runner, per-module subcommands, paper-check.

Exit codes are a small CI-facing taxonomy: 0 success, 1 contract violation,
2 parse error, 3 validation error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, acceptance, approx, discrete_mot, equilibrium, io, riccati
from .errors import NumericalFailure
from .sspace import LinearMonotoneGraph

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


def _scenario_gaussian(payload: dict, seed: int, tols: dict) -> tuple[dict, bool]:
    blocks = io.blocks_from_dict(payload["blocks"])
    sol = riccati.solve_nare(blocks, max_iter=int(tols.get("max_iter", 100)))
    a = np.asarray(sol.A)
    b = a + a.T
    eq = equilibrium.GaussianEquilibrium(
        blocks=blocks,
        A=a,
        rmap_u=np.linalg.solve(b, a.T),
        rmap_v=np.linalg.solve(b, np.eye(blocks.m)),
    )
    lam = riccati.lambda_symmetric(blocks)
    primal, dual = equilibrium.primal_dual_values(eq)
    n = int(payload.get("n", 10000))
    report_sim = equilibrium.simulate(eq, n, seed)
    eff_thr, ind_thr = equilibrium.gap_thresholds(eq, n, seed, sigmas=float(tols.get("gap_sigmas", 5.0)))
    samples = equilibrium.equilibrium_samples(eq, int(payload.get("n_profit_samples", 200)), seed)
    profit = equilibrium.profit_check(
        eq,
        samples,
        n_perturb=int(payload.get("n_perturb", 50)),
        radius=float(payload.get("profit_radius", 1.0)),
        seed=seed,
    )
    tol_res = float(tols.get("residual", 1e-10 * (1.0 + np.linalg.norm(blocks.svv, "fro"))))
    contracts = {
        "residual": riccati.nare_residual(a, blocks) <= tol_res,
        "positive_definite": float(np.linalg.eigvalsh(b / 2.0)[0]) > 0.0,
        "primal_equals_dual": abs(primal - dual)
        <= float(tols.get("duality_rel", 1e-12)) * max(abs(primal), abs(dual), 1e-300),
        "efficiency_gap": report_sim.efficiency_gap <= eff_thr,
        "independence_gap": report_sim.independence_gap <= ind_thr,
        "profit_optimality": profit <= float(tols.get("profit", 1e-10)),
    }
    report = {
        "A": a,
        "lambda": lam,
        "residual_norm": sol.residual_norm,
        "iterations": sol.iterations,
        "symmetric_case": sol.symmetric_case,
        "primal": primal,
        "dual": dual,
        "simulation": {
            "n_samples": report_sim.n_samples,
            "seed": report_sim.seed,
            "efficiency_gap": report_sim.efficiency_gap,
            "independence_gap": report_sim.independence_gap,
            "mean_profit": report_sim.mean_profit,
            "primal_mc": report_sim.primal_mc,
            "dual_mc": report_sim.dual_mc,
            "primal_exact": report_sim.primal_exact,
            "dual_exact": report_sim.dual_exact,
        },
        "profit_violation": profit,
        "contracts": contracts,
    }
    return report, all(contracts.values())


def _scenario_discrete(payload: dict, seed: int, tols: dict) -> tuple[dict, bool]:
    nu = io.measure_from_dict(payload["nu"])
    S = io.parse_scalar_matrix(payload.get("s", "standard:1"))
    grid = payload.get("grid")
    grid = np.asarray(grid, dtype=float) if grid is not None else discrete_mot.default_grid(nu, seed=seed)
    plan = discrete_mot.solve_plan_lp(nu, grid, S)
    if "graph" in payload and payload["graph"] is not None:
        graph = io.graph_from_dict(payload["graph"])
    else:
        graph = LinearMonotoneGraph.from_matrix(np.eye(S.index))
    dual = discrete_mot.dual_value(nu, graph)
    cert = discrete_mot.certify_optimality(plan, graph, tol=float(tols.get("certify", 1e-8)))
    cmap = discrete_mot.conditional_map_from_plan(plan)
    mart_lhs = plan.value
    masses = plan.row_masses()
    sq = np.einsum("ij,jk,ik->i", plan.x_grid, S.entries, plan.x_grid)
    mart_rhs = 0.5 * float(masses @ sq)
    contracts = {
        "weak_duality": plan.value <= dual + float(tols.get("duality_margin", 1e-9)),
        "martingale_value_identity": abs(mart_lhs - mart_rhs) <= 1e-10 * (1.0 + abs(plan.value)),
        "nonnegative_certificate": cert.max_gap >= -1e-9,
    }
    if "certify" in tols:
        contracts["certified"] = cert.certified
    report = {
        "primal": plan.value,
        "dual": dual,
        "certificate_max_gap": cert.max_gap,
        "certificate_pairs": cert.n_pairs,
        "grid_size": int(plan.x_grid.shape[0]),
        "randomized_support_points": cmap.n_randomized,
        "contracts": contracts,
    }
    return report, all(contracts.values())


def _scenario_approx(payload: dict, seed: int, tols: dict) -> tuple[dict, bool]:
    if "samples_csv" in payload:
        samples = io.read_samples_csv(payload["samples_csv"])
    else:
        raw = payload["samples"]
        samples = approx.SampleSet(X=raw["X"], Y=raw["Y"])
    epsilon = float(payload["epsilon"])
    rear = approx.uniform_approximation(samples, epsilon)
    check = approx.verify_rearrangement(samples, rear)
    contracts = {
        "law_preserved": check.law_preserved,
        "displacement": check.displacement_ok,
        "functional_dependence": check.dependence_ok,
    }
    report = {
        "n": samples.n,
        "epsilon": epsilon,
        "cells": len(rear.cells),
        "max_displacement": check.max_displacement,
    }
    if samples.X.shape[1] == samples.Y.shape[1] and samples.X.shape[1] % 2 == 0:
        S = io.parse_scalar_matrix(payload.get("s", f"standard:{samples.X.shape[1] // 2}"))
        result = approx.map_from_plan(samples, epsilon, S)
        report["value_gap"] = result.value_gap
        report["value_gap_bound"] = result.bound
        contracts["value_gap_bound"] = result.value_gap <= result.bound + float(
            tols.get("bound_slack", 1e-9)
        )
    report["contracts"] = contracts
    return report, all(contracts.values())


_SCENARIOS = {
    "gaussian": _scenario_gaussian,
    "discrete": _scenario_discrete,
    "approx": _scenario_approx,
}


def run_scenario(path: str, out_path: str | None = None) -> int:
    """Dispatch a scenario file, write its report, return the exit code."""
    with open(path) as fh:
        doc = json.load(fh)
    kind = doc["kind"]
    if kind not in _SCENARIOS:
        raise KeyError(f"unknown scenario kind {kind!r}")
    seed = int(doc.get("seed", 0))
    tols = doc.get("tolerances") or {}
    report, ok = _SCENARIOS[kind](doc["payload"], seed, tols)
    report = {"version": __version__, "kind": kind, "seed": seed, **report, "passed": ok}
    if out_path:
        io.dump_report(report, out_path)
    for key, value in report["contracts"].items():
        print(f"{'PASS' if value else 'FAIL'}  {kind}:{key}")
    print(f"scenario {'passed' if ok else 'FAILED'} ({path})")
    return EXIT_OK if ok else EXIT_CONTRACT


def paper_check(out_path: str | None = None) -> int:
    """Run the full acceptance battery; one line per criterion."""
    results = acceptance.run_all()
    sys.stdout.write(acceptance.render(results))
    overall = all(r.passed for r in results)
    sys.stdout.write("ALL CRITERIA PASSED\n" if overall else "CRITERIA FAILED\n")
    if out_path:
        io.dump_report(
            {
                "version": __version__,
                "criteria": [
                    {"name": r.name, "passed": r.passed, "detail": r.detail} for r in results
                ],
                "passed": overall,
            },
            out_path,
        )
    return EXIT_OK if overall else EXIT_CONTRACT


def _cmd_riccati(args) -> int:
    with open(args.blocks) as fh:
        blocks = io.blocks_from_dict(json.load(fh))
    sol = riccati.solve_nare(blocks)
    lam = riccati.lambda_symmetric(blocks)
    report = {
        "version": __version__,
        "A": np.asarray(sol.A),
        "residual_norm": sol.residual_norm,
        "iterations": sol.iterations,
        "symmetric_case": sol.symmetric_case,
        "lambda": lam,
        "lambda_gap": float(np.linalg.norm(np.asarray(sol.A) - lam, "fro")),
    }
    if args.out:
        io.dump_report(report, args.out)
    print(f"A = {np.array2string(np.asarray(sol.A), precision=10)}")
    print(f"residual {sol.residual_norm:.3e} after {sol.iterations} iterations; "
          f"symmetric case: {sol.symmetric_case}")
    return EXIT_OK


def _cmd_equilibrium_solve(args) -> int:
    with open(args.blocks) as fh:
        blocks = io.blocks_from_dict(json.load(fh))
    eq = equilibrium.solve_gaussian(blocks)
    primal, dual = equilibrium.primal_dual_values(eq)
    report = {
        "version": __version__,
        "A": eq.A,
        "rmap_u": eq.rmap_u,
        "rmap_v": eq.rmap_v,
        "primal": primal,
        "dual": dual,
    }
    if args.out:
        io.dump_report(report, args.out)
    print(f"pricing matrix A = {np.array2string(np.asarray(eq.A), precision=10)}")
    print(f"primal = dual = {primal:.12g}")
    return EXIT_OK


def _cmd_equilibrium_simulate(args) -> int:
    with open(args.blocks) as fh:
        blocks = io.blocks_from_dict(json.load(fh))
    eq = equilibrium.solve_gaussian(blocks)
    rep = equilibrium.simulate(eq, args.n, args.seed)
    report = {
        "version": __version__,
        "n_samples": rep.n_samples,
        "seed": rep.seed,
        "efficiency_gap": rep.efficiency_gap,
        "independence_gap": rep.independence_gap,
        "mean_profit": rep.mean_profit,
        "primal_mc": rep.primal_mc,
        "dual_mc": rep.dual_mc,
        "primal_exact": rep.primal_exact,
        "dual_exact": rep.dual_exact,
    }
    io.dump_report(report, args.out)
    if args.dump_samples:
        uv = equilibrium.draw_samples(blocks, args.n, args.seed)
        m = blocks.m
        r = uv[:, :m] @ eq.rmap_u.T + uv[:, m:] @ eq.rmap_v.T
        io.write_samples_csv(args.dump_samples, {"u": uv[:, :m], "v": uv[:, m:], "r": r})
    print(f"efficiency gap {rep.efficiency_gap:.6g}; independence gap {rep.independence_gap:.6g}")
    print(f"primal_mc {rep.primal_mc:.12g} vs exact {rep.primal_exact:.12g}")
    return EXIT_OK


def _cmd_mot_solve(args) -> int:
    with open(args.nu) as fh:
        nu = io.measure_from_dict(json.load(fh))
    S = io.parse_scalar_matrix(args.S)
    grid = None
    if args.grid:
        with open(args.grid) as fh:
            grid = np.asarray(json.load(fh), dtype=float)
    plan = discrete_mot.solve_plan_lp(nu, grid, S)
    io.dump_report(io.plan_to_dict(plan), args.out)
    print(f"plan value {plan.value:.12g} over grid of {plan.x_grid.shape[0]} points")
    return EXIT_OK


def _cmd_mot_certify(args) -> int:
    with open(args.plan) as fh:
        plan = io.plan_from_dict(json.load(fh))
    with open(args.G) as fh:
        graph = io.graph_from_dict(json.load(fh))
    tol = args.tol if args.tol is not None else 1e-8
    cert = discrete_mot.certify_optimality(plan, graph, tol=tol)
    print(f"max certificate gap {cert.max_gap:.12g} over {cert.n_pairs} pairs; "
          f"certified at {tol:g}: {cert.certified}")
    if args.tol is not None and not cert.certified:
        return EXIT_CONTRACT
    return EXIT_OK


def _cmd_mot_oracle(args) -> int:
    with open(args.nu) as fh:
        nu = io.measure_from_dict(json.load(fh))
    S = io.parse_scalar_matrix(args.S)
    value = discrete_mot.partition_oracle(nu, S, max_n=args.max_n)
    print(f"partition oracle value {value:.12g}")
    return EXIT_OK


def _cmd_approx(args) -> int:
    samples = io.read_samples_csv(args.samples)
    rear = approx.uniform_approximation(samples, args.epsilon)
    check = approx.verify_rearrangement(samples, rear)
    report = {
        "version": __version__,
        "epsilon": args.epsilon,
        "n": samples.n,
        "perm": rear.perm,
        "cells": [c.tolist() for c in rear.cells],
        "max_displacement": check.max_displacement,
        "law_preserved": check.law_preserved,
        "displacement_ok": check.displacement_ok,
        "dependence_ok": check.dependence_ok,
    }
    if args.out:
        io.dump_report(report, args.out)
    print(f"{len(rear.cells)} cells; max displacement {check.max_displacement:.6g}; "
          f"checks passed: {check.ok}")
    return EXIT_OK if check.ok else EXIT_CONTRACT


def _cmd_run(args) -> int:
    return run_scenario(args.scenario, args.out)


def _cmd_paper_check(args) -> int:
    return paper_check(args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmot",
        description="Backward-martingale transport toolkit: pricing equation, "
        "Gaussian equilibrium, discrete transport LP, plan-to-map approximation.",
    )
    parser.add_argument("--version", action="version", version=f"bmot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("riccati", help="solve the pricing equation for covariance blocks")
    p.add_argument("--blocks", required=True, help="JSON file with m, suu, suv, svv")
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=_cmd_riccati)

    peq = sub.add_parser("equilibrium", help="Gaussian insider equilibrium")
    eqsub = peq.add_subparsers(dest="subcommand", required=True)
    p = eqsub.add_parser("solve", help="pricing matrix and order-flow maps")
    p.add_argument("--blocks", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_equilibrium_solve)
    p = eqsub.add_parser("simulate", help="seeded Monte Carlo verification")
    p.add_argument("--blocks", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-samples", help="optional CSV dump of (U, V, R) samples")
    p.set_defaults(func=_cmd_equilibrium_simulate)

    pmot = sub.add_parser("mot", help="discrete transport over a grid")
    motsub = pmot.add_subparsers(dest="subcommand", required=True)
    p = motsub.add_parser("solve", help="grid-restricted coupling LP")
    p.add_argument("--nu", required=True, help="JSON file with points and weights")
    p.add_argument("--grid", help="optional JSON array of grid points")
    p.add_argument("--S", default="standard:1", help="scalar product, e.g. standard:1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mot_solve)
    p = motsub.add_parser("certify", help="pointwise optimality certificate")
    p.add_argument("--plan", required=True)
    p.add_argument("--G", required=True, help="JSON graph description")
    p.add_argument("--tol", type=float, help="fail (exit 1) if the max gap exceeds this")
    p.set_defaults(func=_cmd_mot_certify)
    p = motsub.add_parser("oracle", help="exhaustive partition lower bound")
    p.add_argument("--nu", required=True)
    p.add_argument("--S", default="standard:1")
    p.add_argument("--max-n", type=int, default=10, dest="max_n")
    p.set_defaults(func=_cmd_mot_oracle)

    p = sub.add_parser("approx", help="uniform rearrangement of paired samples")
    p.add_argument("--samples", required=True, help="CSV with x_*, y_* columns")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out", help="rearrangement JSON path")
    p.set_defaults(func=_cmd_approx)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("paper-check", help="run the acceptance battery")
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=_cmd_paper_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (json.JSONDecodeError, FileNotFoundError, KeyError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, TypeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
