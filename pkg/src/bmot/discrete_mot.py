"""Grid-restricted backward-martingale transport for finite-support laws.

The coupling problem (maximize the half scalar product subject to a fixed
second marginal and the per-row barycenter constraint) is solved as a dense
LP over a user-supplied or generated grid of candidate x-points.  An
exhaustive set-partition search provides an independent lower-bound oracle,
the Fitzpatrick sum over a candidate dual set provides an upper bound, and
pointwise gaps over the support of a coupling certify joint optimality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import simplex
from .approx import SampleSet
from .sspace import (
    LinearMonotoneGraph,
    PiecewiseMonotoneGraph,
    ScalarProductMatrix,
    _readonly,
    fitzpatrick_pwl,
    standard_matrix,
)

__all__ = [
    "TOL_LP",
    "DiscreteMeasure",
    "PlanMatrix",
    "CertificateReport",
    "PlanConditionalMap",
    "default_grid",
    "subset_barycenter_grid",
    "solve_plan_lp",
    "partition_oracle",
    "dual_value",
    "certify_optimality",
    "conditional_map_from_plan",
]

TOL_LP = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite-support law: distinct points with nonnegative weights summing to one."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must be a nonempty (n, d) array")
        if w.shape != (pts.shape[0],):
            raise ValueError("weights must match the number of points")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 within 1e-12, got {w.sum()!r}")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("support points must be pairwise distinct")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def barycenter(self) -> np.ndarray:
        return self.weights @ self.points


@dataclass(frozen=True, eq=False)
class PlanMatrix:
    """Coupling gamma over x_grid x support with machine-checked feasibility.

    The support of the second marginal is carried along (``y_points``,
    ``y_weights``) so the object is self-contained: column sums must match
    the weights and every row with mass above TOL_LP must have its grid
    point as barycenter of the assigned mass.
    """

    x_grid: np.ndarray
    gamma: np.ndarray
    value: float
    y_points: np.ndarray
    y_weights: np.ndarray

    def __post_init__(self):
        xg = np.asarray(self.x_grid, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        yp = np.asarray(self.y_points, dtype=float)
        yw = np.asarray(self.y_weights, dtype=float)
        if g.shape != (xg.shape[0], yp.shape[0]):
            raise ValueError("gamma must be (len(x_grid), len(y_points))")
        if np.any(g < 0.0):
            raise ValueError("gamma must be nonnegative")
        col_res = float(np.max(np.abs(g.sum(axis=0) - yw)))
        if col_res > TOL_LP:
            raise ValueError(f"second marginal violated by {col_res:.3e}")
        mass = g.sum(axis=1)
        for k in np.flatnonzero(mass > TOL_LP):
            drift = g[k] @ yp - mass[k] * xg[k]
            if float(np.linalg.norm(drift)) > TOL_LP:
                raise ValueError(f"barycenter constraint violated on row {k} by {np.linalg.norm(drift):.3e}")
        object.__setattr__(self, "x_grid", _readonly(xg))
        object.__setattr__(self, "gamma", _readonly(g))
        object.__setattr__(self, "y_points", _readonly(yp))
        object.__setattr__(self, "y_weights", _readonly(yw))

    def row_masses(self) -> np.ndarray:
        return self.gamma.sum(axis=1)


def default_grid(nu: DiscreteMeasure, seed: int = 0) -> np.ndarray:
    """Support points, pairwise midpoints and k-means barycenters (k = 1..n)."""
    pts, w = nu.points, nu.weights
    chunks = [pts]
    if nu.n >= 2:
        pairs = list(itertools.combinations(range(nu.n), 2))
        chunks.append(np.array([(pts[i] + pts[j]) / 2.0 for i, j in pairs]))
    rng = np.random.default_rng(seed)
    for k in range(1, nu.n + 1):
        chunks.append(_weighted_kmeans(pts, w, k, rng))
    return np.unique(np.vstack(chunks), axis=0)


def _weighted_kmeans(points, weights, k, rng, iters=60):
    centers = points[rng.choice(points.shape[0], size=k, replace=False)].copy()
    assign = None
    for _ in range(iters):
        d2 = ((points[:, None, :] - centers[None]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            mask = assign == j
            wsum = weights[mask].sum()
            if wsum > 0.0:
                centers[j] = (weights[mask, None] * points[mask]).sum(axis=0) / wsum
            else:
                centers[j] = points[int(d2[:, j].argmax())]
    return centers


def subset_barycenter_grid(nu: DiscreteMeasure, max_support: int = 12) -> np.ndarray:
    """Barycenters of every nonempty support subset; contains all partition blocks."""
    if nu.n > max_support:
        raise ValueError(f"support too large for subset enumeration ({nu.n} > {max_support})")
    pts, w = nu.points, nu.weights
    rows = []
    for size in range(1, nu.n + 1):
        for combo in itertools.combinations(range(nu.n), size):
            idx = list(combo)
            mass = w[idx].sum()
            if mass <= 0.0:
                continue
            rows.append(w[idx] @ pts[idx] / mass)
    return np.unique(np.array(rows), axis=0)


def solve_plan_lp(
    nu: DiscreteMeasure,
    x_grid: np.ndarray | None,
    S: ScalarProductMatrix,
) -> PlanMatrix:
    """Maximize the half scalar product over grid-restricted couplings.

    Constraints: column sums equal the weights of ``nu`` and every grid row
    is the barycenter of its assigned mass.  The optimum is a lower bound
    for the unrestricted coupling problem and never decreases when the grid
    grows.
    """
    if x_grid is None:
        x_grid = default_grid(nu)
    xg = np.asarray(x_grid, dtype=float)
    if xg.ndim != 2 or xg.shape[0] < 1 or xg.shape[1] != nu.d:
        raise ValueError(f"x_grid must be (K, {nu.d}) and nonempty")
    if nu.d != S.dim:
        raise ValueError(f"S has dimension {S.dim}, measure lives in dimension {nu.d}")
    K, n, d = xg.shape[0], nu.n, nu.d
    half_products = 0.5 * (xg @ S.entries @ nu.points.T)  # (K, n)

    a = np.zeros((n + K * d, K * n))
    b = np.zeros(n + K * d)
    for j in range(n):
        a[j, j::n] = 1.0
    b[:n] = nu.weights
    for k in range(K):
        diff = nu.points - xg[k]  # (n, d)
        for t in range(d):
            a[n + k * d + t, k * n : (k + 1) * n] = diff[:, t]
    try:
        sol = simplex.solve_lp(half_products.ravel(), a, b, maximize=True)
    except simplex.InfeasibleLP as exc:
        bary = nu.barycenter()
        has_bary = bool(np.min(np.linalg.norm(xg - bary, axis=1)) <= 1e-12)
        raise ValueError(
            f"{exc}; grid {'contains' if has_bary else 'does not contain'} the support barycenter"
        ) from exc
    gamma = sol.x.reshape(K, n)
    value = float(np.sum(gamma * half_products))
    return PlanMatrix(x_grid=xg, gamma=gamma, value=value, y_points=nu.points, y_weights=nu.weights)


def _restricted_growth_strings(n: int):
    """Yield all set partitions of range(n) as block-assignment arrays."""
    a = np.zeros(n, dtype=int)
    bmax = np.zeros(n, dtype=int)  # bmax[i] = 1 + max(a[:i])
    for i in range(1, n):
        bmax[i] = 1
    while True:
        yield a
        i = n - 1
        while i > 0 and a[i] == bmax[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, n):
            a[j] = 0
            bmax[j] = max(bmax[j - 1], a[j - 1] + 1)


def partition_oracle(nu: DiscreteMeasure, S: ScalarProductMatrix, max_n: int = 10) -> float:
    """Exhaustive maximum of sum_B mass_B * S(bary_B, bary_B) / 2 over partitions.

    Every partition induces a feasible coupling (each block pooled at its
    barycenter), so the result is a lower bound for the coupling optimum.
    Bell-number growth restricts this to n <= max_n support points.
    """
    if nu.n > max_n:
        raise ValueError(f"support size {nu.n} exceeds max_n={max_n}")
    if nu.d != S.dim:
        raise ValueError(f"S has dimension {S.dim}, measure lives in dimension {nu.d}")
    pts = nu.weights[:, None] * nu.points  # pre-weighted for block sums
    w = nu.weights
    best = -math.inf
    for assign in _restricted_growth_strings(nu.n):
        k = assign.max() + 1
        masses = np.bincount(assign, weights=w, minlength=k)
        sums = np.zeros((k, nu.d))
        np.add.at(sums, assign, pts)
        live = masses > 0.0
        bary = sums[live] / masses[live, None]
        vals = np.einsum("ij,jk,ik->i", bary, S.entries, bary)
        best = max(best, 0.5 * float(masses[live] @ vals))
    return best


def dual_value(nu: DiscreteMeasure, G) -> float:
    """Weighted Fitzpatrick sum over the support; +inf when any term is infinite."""
    if isinstance(G, LinearMonotoneGraph):
        if nu.d != 2 * G.m:
            raise ValueError(f"graph lives in dimension {2 * G.m}, measure in {nu.d}")
        b = G.A + G.A.T
        rhs = nu.points[:, : G.m] @ G.A + nu.points[:, G.m :]  # rows A^T u + v
        rs = np.linalg.solve(b, rhs.T).T
        vals = 0.5 * np.einsum("ij,ij->i", rs, rs @ b.T)
        return float(nu.weights @ vals)
    if isinstance(G, PiecewiseMonotoneGraph):
        if nu.d != 2:
            raise ValueError("piecewise graphs require a planar measure")
        total = 0.0
        for w, y in zip(nu.weights, nu.points):
            psi = fitzpatrick_pwl(G, y)
            if math.isinf(psi):
                return math.inf
            total += w * psi
        return total
    raise TypeError(f"unsupported dual set type {type(G).__name__}")


@dataclass(frozen=True)
class CertificateReport:
    max_gap: float
    n_pairs: int
    certified: bool
    worst_pair: tuple


def certify_optimality(samples_or_plan, G, tol: float) -> CertificateReport:
    """Pointwise optimality certificate over the support of a coupling.

    For every carried pair (x, y) the gap psi_G(y) - (S(x, y) - S(x, x)/2)
    is nonnegative; a maximum below ``tol`` certifies that the coupling and
    the dual set are jointly optimal.
    """
    if isinstance(samples_or_plan, PlanMatrix):
        ks, js = np.nonzero(samples_or_plan.gamma > TOL_LP)
        xs = np.asarray(samples_or_plan.x_grid)[ks]
        ys = np.asarray(samples_or_plan.y_points)[js]
        labels = list(zip(ks.tolist(), js.tolist()))
    elif isinstance(samples_or_plan, SampleSet):
        xs = np.asarray(samples_or_plan.X)
        ys = np.asarray(samples_or_plan.Y)
        labels = list(range(samples_or_plan.n))
    else:
        raise TypeError(f"unsupported coupling type {type(samples_or_plan).__name__}")
    if xs.shape[0] == 0:
        return CertificateReport(max_gap=0.0, n_pairs=0, certified=True, worst_pair=())

    if isinstance(G, LinearMonotoneGraph):
        S = standard_matrix(G.m)
        b = G.A + G.A.T
        rhs = ys[:, : G.m] @ G.A + ys[:, G.m :]
        rs = np.linalg.solve(b, rhs.T).T
        psi = 0.5 * np.einsum("ij,ij->i", rs, rs @ b.T)
    elif isinstance(G, PiecewiseMonotoneGraph):
        S = standard_matrix(1)
        psi = np.array([fitzpatrick_pwl(G, y) for y in ys])
    else:
        raise TypeError(f"unsupported dual set type {type(G).__name__}")
    sxy = np.einsum("ij,jk,ik->i", xs, S.entries, ys)
    sxx = np.einsum("ij,jk,ik->i", xs, S.entries, xs)
    gaps = psi - (sxy - 0.5 * sxx)
    worst = int(np.argmax(gaps))
    max_gap = float(gaps[worst])
    return CertificateReport(
        max_gap=max_gap,
        n_pairs=len(labels),
        certified=bool(max_gap <= tol),
        worst_pair=(labels[worst],) if labels else (),
    )


@dataclass(frozen=True, eq=False)
class PlanConditionalMap:
    """Barycenter map of a coupling: y_j -> conditional mean of x given y_j.

    Wherever the mass of a support point sits in a single grid row the map
    is genuine; points whose mass splits across rows are flagged
    ``randomized`` and quantify how far the coupling is from a map.
    """

    targets: np.ndarray
    randomized: np.ndarray

    @property
    def n_randomized(self) -> int:
        return int(self.randomized.sum())


def conditional_map_from_plan(plan: PlanMatrix, mass_tol: float = TOL_LP) -> PlanConditionalMap:
    gamma = np.asarray(plan.gamma)
    xg = np.asarray(plan.x_grid)
    n = gamma.shape[1]
    targets = np.zeros((n, xg.shape[1]))
    randomized = np.zeros(n, dtype=bool)
    for j in range(n):
        col = gamma[:, j]
        rows = np.flatnonzero(col > mass_tol)
        if rows.size == 0:
            rows = np.flatnonzero(col > 0.0)
        if rows.size == 0:
            rows = np.array([int(col.argmax())])
        targets[j] = col[rows] @ xg[rows] / col[rows].sum() if col[rows].sum() > 0 else xg[rows[0]]
        randomized[j] = rows.size > 1
    return PlanConditionalMap(targets=targets, randomized=randomized)
