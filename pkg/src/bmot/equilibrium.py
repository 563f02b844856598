"""Gaussian insider equilibrium: pricing matrix, order flow and verification.

Given covariance blocks for (U, V), the equilibrium prices at f(u) = Au with
A the positive solution of the quadratic pricing equation; the total order is
R = (A + A^T)^{-1} (A^T U + V).  The module provides the exact primal/dual
transport values, a seeded Monte Carlo verification of efficiency and
independence, a pointwise profit-optimality check, and the least-squares
recovery of A from samples.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .approx import SampleSet
from .errors import NumericalFailure
from .riccati import CovarianceBlocks, solve_nare
from .sspace import _readonly

__all__ = [
    "GaussianEquilibrium",
    "SimulationReport",
    "solve_gaussian",
    "primal_dual_values",
    "draw_samples",
    "simulate",
    "gap_thresholds",
    "equilibrium_samples",
    "profit_check",
    "efficiency_regression",
]

# Fixed shard width: results must not depend on how many workers run.
_SHARD = 1 << 16


def _worker_count() -> int:
    raw = os.environ.get("BMOT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        n = os.cpu_count() or 1
    return n


@dataclass(frozen=True, eq=False)
class GaussianEquilibrium:
    """Equilibrium data: pricing matrix A and the total-order maps.

    R = rmap_u @ U + rmap_v @ V with rmap_u = (A+A^T)^{-1} A^T and
    rmap_v = (A+A^T)^{-1}; the optimal transport map is X = (R, AR).
    """

    blocks: CovarianceBlocks
    A: np.ndarray
    rmap_u: np.ndarray
    rmap_v: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=float)
        b = a + a.T
        m = self.blocks.m
        if a.shape != (m, m):
            raise ValueError(f"A must be {m}x{m}")
        if np.linalg.norm(b @ self.rmap_u - a.T, "fro") > 1e-8 * (1.0 + np.linalg.norm(a)):
            raise ValueError("rmap_u is inconsistent with A")
        if np.linalg.norm(b @ self.rmap_v - np.eye(m), "fro") > 1e-8:
            raise ValueError("rmap_v is inconsistent with A")
        object.__setattr__(self, "A", _readonly(a))
        object.__setattr__(self, "rmap_u", _readonly(self.rmap_u))
        object.__setattr__(self, "rmap_v", _readonly(self.rmap_v))

    @property
    def m(self) -> int:
        return self.blocks.m

    def rmap(self) -> np.ndarray:
        """The m x 2m matrix with R = rmap @ (U, V)."""
        return np.hstack([self.rmap_u, self.rmap_v])

    def cov_r(self) -> np.ndarray:
        """Exact covariance of the total order R."""
        r = self.rmap()
        return r @ self.blocks.full() @ r.T


@dataclass(frozen=True)
class SimulationReport:
    n_samples: int
    seed: int
    efficiency_gap: float
    independence_gap: float
    mean_profit: float
    primal_mc: float
    dual_mc: float
    primal_exact: float
    dual_exact: float


def solve_gaussian(blocks: CovarianceBlocks) -> GaussianEquilibrium:
    """Solve the pricing equation and assemble the equilibrium maps."""
    sol = solve_nare(blocks)
    a = np.asarray(sol.A)
    b = a + a.T
    m = blocks.m
    rmap_u = np.linalg.solve(b, a.T)
    rmap_v = np.linalg.solve(b, np.eye(m))
    return GaussianEquilibrium(blocks=blocks, A=a, rmap_u=rmap_u, rmap_v=rmap_v)


def primal_dual_values(eq: GaussianEquilibrium) -> tuple[float, float]:
    """Exact primal and dual transport values; equal by construction.

    The primal is the expected half scalar product of X = (R, AR) with
    Y = (U, V), i.e. trace(A Cov R); the dual is the expected Fitzpatrick
    value trace((A + A^T) Cov R) / 2.
    """
    c = eq.cov_r()
    primal = float(np.trace(eq.A @ c))
    dual = float(0.5 * np.trace((eq.A + eq.A.T) @ c))
    return primal, dual


def _shard_sizes(n: int) -> list[int]:
    sizes = [_SHARD] * (n // _SHARD)
    if n % _SHARD:
        sizes.append(n % _SHARD)
    return sizes


def _shard_normals(seed: int, shard: int, size: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(shard,)))
    return rng.standard_normal((size, dim))


def draw_samples(blocks: CovarianceBlocks, n: int, seed: int) -> np.ndarray:
    """Draw n rows of (U, V) from the block Gaussian, deterministically.

    Sampling goes through the Cholesky factor of the full covariance and a
    fixed shard decomposition keyed by (seed, shard index), so the output
    depends only on (n, seed).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    chol = np.linalg.cholesky(blocks.full())
    parts = []
    for k, size in enumerate(_shard_sizes(n)):
        parts.append(_shard_normals(seed, k, size, 2 * blocks.m) @ chol.T)
    return np.vstack(parts)


def _shard_moments(eq: GaussianEquilibrium, uv: np.ndarray) -> dict:
    m = eq.m
    a = np.asarray(eq.A)
    u, v = uv[:, :m], uv[:, m:]
    r = u @ eq.rmap_u.T + v @ eq.rmap_v.T
    price = r @ a.T
    markout = v - price   # V - AR; uncorrelated with R iff the pricing is efficient
    lead = u @ a + v      # A^T U + V = (A + A^T) R
    lag = u @ a.T - v     # A U - V = (A + A^T)(U - R); independent of `lead` at equilibrium
    half_s = 0.5 * (np.einsum("ij,ij->i", r, v) + np.einsum("ij,ij->i", price, u))
    dual_vals = 0.5 * np.einsum("ij,ij->i", r, r @ (a + a.T).T)
    profit = np.einsum("ij,ij->i", r - u, markout)
    return {
        "n": uv.shape[0],
        "sum_r": r.sum(axis=0),
        "sum_markout": markout.sum(axis=0),
        "sum_lead": lead.sum(axis=0),
        "sum_lag": lag.sum(axis=0),
        "sum_markout_r": markout.T @ r,
        "sum_lead_lag": lead.T @ lag,
        "sum_profit": float(profit.sum()),
        "sum_half_s": float(half_s.sum()),
        "sum_dual": float(dual_vals.sum()),
    }


def simulate(eq: GaussianEquilibrium, n: int, seed: int) -> SimulationReport:
    """Seeded Monte Carlo verification of the equilibrium structure.

    ``efficiency_gap`` is the Frobenius norm of the sample covariance of
    (V - AR, R); ``independence_gap`` the same for (A^T U + V, A U - V).
    Both vanish at rate O(1/sqrt(n)) at the true equilibrium.  Sharded
    accumulation with a fixed reduction order makes the report a pure
    function of (blocks, n, seed) regardless of worker count.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    chol = np.linalg.cholesky(eq.blocks.full())
    sizes = _shard_sizes(n)

    def run_shard(k_size):
        k, size = k_size
        uv = _shard_normals(seed, k, size, 2 * eq.m) @ chol.T
        return _shard_moments(eq, uv)

    jobs = list(enumerate(sizes))
    workers = min(_worker_count(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_shard, jobs))
    else:
        results = [run_shard(j) for j in jobs]

    # order-fixed reduction
    tot = results[0]
    for part in results[1:]:
        tot = {
            key: (tot[key] + part[key]) for key in tot
        }

    inv_n = 1.0 / n
    mean_markout = tot["sum_markout"] * inv_n
    mean_r = tot["sum_r"] * inv_n
    mean_lead = tot["sum_lead"] * inv_n
    mean_lag = tot["sum_lag"] * inv_n
    cov_eff = tot["sum_markout_r"] * inv_n - np.outer(mean_markout, mean_r)
    cov_ind = tot["sum_lead_lag"] * inv_n - np.outer(mean_lead, mean_lag)
    primal_exact, dual_exact = primal_dual_values(eq)
    return SimulationReport(
        n_samples=n,
        seed=seed,
        efficiency_gap=float(np.linalg.norm(cov_eff, "fro")),
        independence_gap=float(np.linalg.norm(cov_ind, "fro")),
        mean_profit=tot["sum_profit"] * inv_n,
        primal_mc=tot["sum_half_s"] * inv_n,
        dual_mc=tot["sum_dual"] * inv_n,
        primal_exact=primal_exact,
        dual_exact=dual_exact,
    )


def gap_thresholds(
    eq: GaussianEquilibrium,
    n: int,
    seed: int,
    sigmas: float = 5.0,
    probe_cap: int = 10**5,
) -> tuple[float, float]:
    """CLT thresholds for the efficiency and independence gaps at sample size n.

    Entrywise standard errors of the two sample covariances are estimated
    from up to ``probe_cap`` draws of the same seeded stream and scaled to
    n; the threshold aggregates them in Frobenius norm times ``sigmas``.
    """
    uv = draw_samples(eq.blocks, min(n, probe_cap), seed)
    m = eq.m
    a = np.asarray(eq.A)
    u, v = uv[:, :m], uv[:, m:]
    r = u @ eq.rmap_u.T + v @ eq.rmap_v.T

    def se(lhs, rhs):
        var_l = lhs.var(axis=0)
        var_r = rhs.var(axis=0)
        cov = (lhs - lhs.mean(axis=0)).T @ (rhs - rhs.mean(axis=0)) / lhs.shape[0]
        return float(np.sqrt((np.outer(var_l, var_r) + cov**2).sum() / n))

    return sigmas * se(v - r @ a.T, r), sigmas * se(u @ a + v, u @ a.T - v)


def equilibrium_samples(eq: GaussianEquilibrium, n: int, seed: int) -> SampleSet:
    """Paired samples with Y = (U, V) and X = (R, AR), the optimal map."""
    uv = draw_samples(eq.blocks, n, seed)
    m = eq.m
    r = uv[:, :m] @ eq.rmap_u.T + uv[:, m:] @ eq.rmap_v.T
    x = np.hstack([r, r @ eq.A.T])
    return SampleSet(X=x, Y=uv)


def profit_check(
    eq: GaussianEquilibrium,
    samples: SampleSet,
    n_perturb: int,
    radius: float,
    seed: int = 0,
) -> float:
    """Largest profit improvement found by perturbing the total order.

    For each sample and each random perturbation r' = R + delta with
    |delta| <= radius, evaluates profit(r') - profit(R) where
    profit(r) = <r - U, V - Ar>.  The profit is strictly concave with
    vertex R, so the returned maximum is <= 0 up to roundoff.
    """
    m = eq.m
    if samples.X.shape[1] != 2 * m or samples.Y.shape[1] != 2 * m:
        raise ValueError("samples must pair (R, AR) with (U, V)")
    a = np.asarray(eq.A)
    r = samples.X[:, :m]
    u = samples.Y[:, :m]
    v = samples.Y[:, m:]
    base = np.einsum("ij,ij->i", r - u, v - r @ a.T)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    delta = rng.standard_normal((samples.n, n_perturb, m))
    norms = np.linalg.norm(delta, axis=2, keepdims=True)
    norms[norms == 0.0] = 1.0
    scale = radius * rng.uniform(size=(samples.n, n_perturb, 1)) ** (1.0 / m)
    delta = delta / norms * scale
    moved = r[:, None, :] + delta
    perturbed = np.einsum("ikj,ikj->ik", moved - u[:, None, :], v[:, None, :] - moved @ a.T)
    return float(np.max(perturbed - base[:, None]))


def efficiency_regression(samples: SampleSet, eq: GaussianEquilibrium) -> np.ndarray:
    """Least-squares coefficient B of V on R (zero means, no intercept).

    At the equilibrium the conditional expectation of V given R is linear,
    so B converges to the pricing matrix as the sample grows.
    """
    m = eq.m
    if samples.n < m + 1:
        raise ValueError(f"need at least {m + 1} samples, got {samples.n}")
    r = samples.X[:, :m]
    v = samples.Y[:, m:]
    beta, _, rank, _ = np.linalg.lstsq(r, v, rcond=None)
    if rank < m:
        raise NumericalFailure(f"rank-deficient design: rank {rank} < {m}")
    return beta.T
