"""Self-contained acceptance battery: one pass/fail record per criterion.

Everything runs from fixed seeds so repeated invocations produce identical
records; `bmot paper-check` prints them and the test suite asserts them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import approx, discrete_mot, equilibrium, riccati
from .sspace import LinearMonotoneGraph, standard_matrix

__all__ = ["CriterionResult", "random_blocks", "run_all", "render"]


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str


def random_blocks(rng: np.random.Generator, m: int, ridge: float = 0.5) -> riccati.CovarianceBlocks:
    """A random non-degenerate covariance in block form."""
    g = rng.standard_normal((2 * m, 2 * m))
    full = g @ g.T + ridge * np.eye(2 * m)
    return riccati.CovarianceBlocks(m=m, suu=full[:m, :m], suv=full[:m, m:], svv=full[m:, m:])


def _min_sym_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((a + a.T) / 2.0)[0])


def _c1_riccati_correctness() -> CriterionResult:
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    worst = 0.0
    min_pd = np.inf
    for _ in range(100):
        m = int(rng.integers(1, 6))
        blocks = random_blocks(rng, m)
        sol = riccati.solve_nare(blocks)
        scale = 1.0 + float(np.linalg.norm(blocks.svv, "fro"))
        worst = max(worst, riccati.nare_residual(sol.A, blocks) / scale)
        min_pd = min(min_pd, _min_sym_eig(np.asarray(sol.A)))
    in_time = (time.perf_counter() - t0) < 10.0
    passed = worst <= 1e-10 and min_pd > 0.0 and in_time
    return CriterionResult(
        "riccati correctness (100 random blocks, m in 1..5)",
        passed,
        f"max scaled residual {worst:.3e}; min symmetric-part eigenvalue {min_pd:.3e}; under 10 s: {in_time}",
    )


def _c2_scalar_lambda() -> CriterionResult:
    rng = np.random.default_rng(22)
    worst = 0.0
    for _ in range(50):
        su, sv = rng.uniform(0.5, 3.0, size=2)
        rho = rng.uniform(-0.95, 0.95)
        blocks = riccati.CovarianceBlocks(
            m=1, suu=[[su**2]], suv=[[rho * su * sv]], svv=[[sv**2]]
        )
        a = float(np.asarray(riccati.solve_nare(blocks).A)[0, 0])
        worst = max(worst, abs(a - sv / su))
    passed = worst <= 1e-12
    return CriterionResult(
        "scalar pricing law a = sigma_v / sigma_u (50 draws)",
        passed,
        f"max |a - sigma_v/sigma_u| = {worst:.3e}",
    )


def _symmetric_design_blocks(rng: np.random.Generator, m: int) -> riccati.CovarianceBlocks:
    base = random_blocks(rng, m)
    lam = riccati.lambda_symmetric(base)
    g = rng.standard_normal((m, m))
    q = (g + g.T) / 2.0
    q *= 0.3 * np.linalg.norm(base.suu, "fro") / np.linalg.norm(q, "fro")
    suv = np.linalg.solve(lam, q)
    while True:
        full = np.block([[base.suu, suv], [suv.T, base.svv]])
        if np.linalg.eigvalsh(full)[0] > 1e-3:
            break
        suv *= 0.5
    return riccati.CovarianceBlocks(m=m, suu=base.suu, suv=suv, svv=base.svv)


def _asymmetric_design_blocks(rng: np.random.Generator, m: int) -> riccati.CovarianceBlocks:
    base = random_blocks(rng, m)
    lam = riccati.lambda_symmetric(base)
    while True:
        g = rng.standard_normal((m, m))
        g *= 0.35 * np.linalg.norm(base.suu, "fro") / np.linalg.norm(g, "fro")
        prod = lam @ g
        rel = np.linalg.norm(prod - prod.T, "fro") / np.linalg.norm(prod, "fro")
        if rel >= 0.2:
            break
    suv = g
    while True:
        full = np.block([[base.suu, suv], [suv.T, base.svv]])
        if np.linalg.eigvalsh(full)[0] > 1e-3:
            break
        suv = suv * 0.7
    return riccati.CovarianceBlocks(m=m, suu=base.suu, suv=suv, svv=base.svv)


def _c3_symmetric_case() -> CriterionResult:
    rng = np.random.default_rng(33)
    sym_worst = 0.0
    asym_best = np.inf
    flags_ok = True
    for i in range(20):
        m = 2 + (i % 2)
        blocks = _symmetric_design_blocks(rng, m)
        sol = riccati.solve_nare(blocks)
        report = riccati.check_symmetric_case(blocks, sol.A)
        sym_worst = max(sym_worst, report.lambda_gap)
        flags_ok = flags_ok and report.symmetric
    for i in range(20):
        m = 2 + (i % 2)
        blocks = _asymmetric_design_blocks(rng, m)
        sol = riccati.solve_nare(blocks)
        report = riccati.check_symmetric_case(blocks, sol.A)
        asym_best = min(asym_best, report.lambda_gap)
        flags_ok = flags_ok and not report.symmetric
    passed = sym_worst <= 1e-8 and asym_best > 1e-4 and flags_ok
    return CriterionResult(
        "commuting case iff Lambda*Suv symmetric (20 + 20 designs)",
        passed,
        f"max ||A - Lambda|| on symmetric designs {sym_worst:.3e}; "
        f"min on asymmetric designs {asym_best:.3e}; flags consistent: {flags_ok}",
    )


def _c4_exact_duality() -> CriterionResult:
    rng = np.random.default_rng(44)
    worst_rel = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 5))
        eq = equilibrium.solve_gaussian(random_blocks(rng, m))
        primal, dual = equilibrium.primal_dual_values(eq)
        worst_rel = max(worst_rel, abs(primal - dual) / max(abs(primal), abs(dual)))
    eq = equilibrium.solve_gaussian(random_blocks(rng, 2))
    samples = equilibrium.equilibrium_samples(eq, 10**4, seed=444)
    graph = LinearMonotoneGraph.from_matrix(eq.A)
    cert = discrete_mot.certify_optimality(samples, graph, tol=1e-10)
    passed = worst_rel <= 1e-12 and cert.certified
    return CriterionResult(
        "exact duality and projected-sample certificate",
        passed,
        f"max relative primal/dual gap {worst_rel:.3e}; "
        f"certificate max gap {cert.max_gap:.3e} over {cert.n_pairs} pairs",
    )


def _c5_equilibrium_statistics() -> CriterionResult:
    rng = np.random.default_rng(55)
    eq = equilibrium.solve_gaussian(random_blocks(rng, 2))
    rep5 = equilibrium.simulate(eq, 10**5, seed=555)
    rep6 = equilibrium.simulate(eq, 10**6, seed=555)
    eff_thr5, ind_thr5 = equilibrium.gap_thresholds(eq, 10**5, 555)
    eff_thr6, ind_thr6 = equilibrium.gap_thresholds(eq, 10**6, 555)
    within = (
        rep5.efficiency_gap <= eff_thr5
        and rep5.independence_gap <= ind_thr5
        and rep6.efficiency_gap <= eff_thr6
        and rep6.independence_gap <= ind_thr6
    )
    shrinking = (
        rep6.efficiency_gap <= rep5.efficiency_gap
        and rep6.independence_gap <= rep5.independence_gap
    )
    samples = equilibrium.equilibrium_samples(eq, 10**3, seed=556)
    worst_profit = equilibrium.profit_check(eq, samples, n_perturb=100, radius=1.0, seed=557)
    passed = within and shrinking and worst_profit <= 1e-10
    return CriterionResult(
        "equilibrium statistics at 1e5 and 1e6 samples",
        passed,
        f"gaps within 5 SE: {within}; gaps shrink with n: {shrinking}; "
        f"max profit improvement {worst_profit:.3e}",
    )


def _random_instance(rng: np.random.Generator, n: int) -> discrete_mot.DiscreteMeasure:
    while True:
        pts = np.round(rng.normal(scale=1.5, size=(n, 2)), 6)
        if np.unique(pts, axis=0).shape[0] == n:
            break
    w = rng.dirichlet(np.ones(n))
    w = w / w.sum()
    return discrete_mot.DiscreteMeasure(points=pts, weights=w)


def _c6_weak_duality() -> CriterionResult:
    rng = np.random.default_rng(66)
    S = standard_matrix(1)
    margin = np.inf
    for i in range(50):
        nu = _random_instance(rng, int(rng.integers(2, 8)))
        plan = discrete_mot.solve_plan_lp(nu, discrete_mot.default_grid(nu, seed=i), S)
        graphs = [LinearMonotoneGraph.from_matrix([[1.0]])]
        graphs += [
            LinearMonotoneGraph.from_matrix([[float(np.exp(rng.normal()))]]) for _ in range(3)
        ]
        for graph in graphs:
            margin = min(margin, discrete_mot.dual_value(nu, graph) - plan.value)
    nu2 = discrete_mot.DiscreteMeasure(points=[[1.0, 0.0], [0.0, 1.0]], weights=[0.5, 0.5])
    plan2 = discrete_mot.solve_plan_lp(nu2, discrete_mot.default_grid(nu2), S)
    dual2 = discrete_mot.dual_value(nu2, LinearMonotoneGraph.from_matrix([[1.0]]))
    worked = abs(plan2.value - 0.25) <= 1e-10 and abs(dual2 - 0.25) <= 1e-10
    passed = margin >= -1e-9 and worked
    return CriterionResult(
        "weak duality on 50 random planar instances",
        passed,
        f"min dual - primal margin {margin:.3e}; two-point example primal "
        f"{plan2.value:.12g}, dual {dual2:.12g}",
    )


def _c7_oracle_dominance() -> CriterionResult:
    rng = np.random.default_rng(77)
    S = standard_matrix(1)
    margin = np.inf
    sizes = [int(rng.integers(2, 7)) for _ in range(47)] + [7, 7, 8]
    for n in sizes:
        nu = _random_instance(rng, n)
        grid = discrete_mot.subset_barycenter_grid(nu)
        plan = discrete_mot.solve_plan_lp(nu, grid, S)
        oracle = discrete_mot.partition_oracle(nu, S, max_n=8)
        margin = min(margin, plan.value - oracle)
    passed = margin >= -1e-9
    return CriterionResult(
        "partition-oracle dominance on 50 subset-barycenter grids",
        passed,
        f"min primal - oracle margin {margin:.3e}",
    )


def _c8_uniform_approximation() -> CriterionResult:
    rng = np.random.default_rng(88)
    eps_menu = (1e-3, 1e-2, 1e-1, 1.0, 10.0)
    violations = 0
    for i in range(100):
        n = int(rng.integers(2, 61))
        dy = int(rng.integers(1, 4))
        dx = int(rng.integers(1, 4))
        while True:
            y = rng.normal(size=(n, dy))
            if np.unique(y, axis=0).shape[0] == n:
                break
        if rng.uniform() < 0.5:
            pool = rng.normal(size=(max(1, n // 3), dx))
            x = pool[rng.integers(0, pool.shape[0], size=n)]
        else:
            x = rng.normal(size=(n, dx))
        samples = approx.SampleSet(X=x, Y=y)
        rear = approx.uniform_approximation(samples, eps_menu[i % len(eps_menu)])
        report = approx.verify_rearrangement(samples, rear)
        if not report.ok:
            violations += 1
    passed = violations == 0
    return CriterionResult(
        "uniform approximation on 100 random sample sets",
        passed,
        f"violations: {violations}",
    )


def _martingale_samples(rng: np.random.Generator, n: int) -> approx.SampleSet:
    while True:
        y = rng.normal(scale=rng.uniform(0.5, 3.0), size=(n, 2))
        if np.unique(y, axis=0).shape[0] == n:
            break
    n_groups = max(1, n // 4)
    assign = rng.integers(0, n_groups, size=n)
    x = np.zeros_like(y)
    for g in range(n_groups):
        mask = assign == g
        if mask.any():
            x[mask] = y[mask].mean(axis=0)
    return approx.SampleSet(X=x, Y=y)


def _c9_value_gap_bound() -> CriterionResult:
    rng = np.random.default_rng(99)
    S = standard_matrix(1)
    worst_excess = -np.inf
    for _ in range(50):
        samples = _martingale_samples(rng, int(rng.integers(6, 40)))
        for eps in (0.01, 0.1, 1.0):
            result = approx.map_from_plan(samples, eps, S)
            worst_excess = max(worst_excess, result.value_gap - result.bound)
    passed = worst_excess <= 1e-9
    return CriterionResult(
        "plan-to-map value-gap bound on 50 sample sets x 3 epsilons",
        passed,
        f"max value_gap - bound = {worst_excess:.3e}",
    )


_CORE = (
    _c1_riccati_correctness,
    _c2_scalar_lambda,
    _c3_symmetric_case,
    _c4_exact_duality,
    _c5_equilibrium_statistics,
    _c6_weak_duality,
    _c7_oracle_dominance,
    _c8_uniform_approximation,
    _c9_value_gap_bound,
)


def render(results) -> str:
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}" for r in results]
    return "\n".join(lines) + "\n"


def run_all() -> list[CriterionResult]:
    """Run criteria 1-9 twice for the determinism meta-criterion, then report."""
    t0 = time.perf_counter()
    first = [fn() for fn in _CORE]
    second = [fn() for fn in _CORE]
    elapsed = time.perf_counter() - t0
    identical = render(first) == render(second)
    in_time = elapsed < 300.0
    meta = CriterionResult(
        "determinism and runtime",
        identical and in_time,
        f"double run byte-identical: {identical}; runtime under 5 min: {in_time}",
    )
    return first + [meta]
