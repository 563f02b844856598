"""Dense two-phase tableau simplex for small equality-form LPs.

Bland's rule is used for both the entering and leaving choices, which
precludes cycling on the heavily degenerate barycenter constraints this
package produces.  The final point is recomputed from the optimal basis
against the original data, so feasibility residuals are at the level of a
single dense solve rather than accumulated pivot drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure

__all__ = ["InfeasibleLP", "LPSolution", "solve_lp"]

_PIVOT_TOL = 1e-9


class InfeasibleLP(ValueError):
    """The equality constraints admit no nonnegative solution."""


@dataclass(frozen=True, eq=False)
class LPSolution:
    x: np.ndarray
    value: float
    basis: np.ndarray
    iterations: int


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    other = tableau[:, col].copy()
    other[row] = 0.0
    tableau -= np.outer(other, tableau[row])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _run(tableau: np.ndarray, basis: np.ndarray, ncols: int, budget: list[int]) -> None:
    """Pivot to optimality (minimization canonical form).

    Entering column: most negative reduced cost, falling back to Bland's
    least-index rule after a run of degenerate pivots so cycling cannot
    occur.  Leaving row: minimum ratio with ties broken by least basis
    index.  Tiny negative right-hand sides are pivot noise and get snapped
    back to zero to keep degenerate steps exact.
    """
    nrows = tableau.shape[0] - 1
    rhs_scale = max(1.0, float(np.abs(tableau[:nrows, -1]).max(initial=0.0)))
    degenerate_run = 0
    while True:
        reduced = tableau[-1, :ncols]
        negative = np.flatnonzero(reduced < -_PIVOT_TOL)
        if negative.size == 0:
            return
        if degenerate_run >= 40:
            col = int(negative[0])  # Bland
        else:
            col = int(negative[np.argmin(reduced[negative])])  # Dantzig
        column = tableau[:-1, col]
        rows = np.flatnonzero(column > _PIVOT_TOL)
        if rows.size == 0:
            raise NumericalFailure("LP is unbounded")
        rhs = np.clip(tableau[:-1, -1][rows], 0.0, None)
        ratios = rhs / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + best)]
        row = int(ties[np.argmin(basis[ties])])
        before = tableau[-1, -1]
        _pivot(tableau, basis, row, col)
        final_col = tableau[:-1, -1]
        noise = (final_col < 0.0) & (final_col > -1e-11 * rhs_scale)
        final_col[noise] = 0.0
        if tableau[-1, -1] > before + 1e-12 * (1.0 + abs(before)):
            degenerate_run = 0
        else:
            degenerate_run += 1
        budget[0] -= 1
        if budget[0] <= 0:
            raise NumericalFailure("simplex iteration cap reached")


def solve_lp(c, a_eq, b_eq, maximize: bool = False, max_iter: int = 20000) -> LPSolution:
    """Optimize c @ x subject to a_eq @ x = b_eq, x >= 0.

    Raises ValueError when the constraints are infeasible and
    NumericalFailure on an unbounded objective or exhausted pivot budget.
    """
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    c = np.asarray(c, dtype=float)
    if a.ndim != 2 or b.shape != (a.shape[0],) or c.shape != (a.shape[1],):
        raise ValueError("inconsistent LP shapes")
    m, n = a.shape
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0
    internal_c = -c if maximize else c

    # phase 1: minimize the sum of artificial variables
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = a
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[m, :n] = -a.sum(axis=0)
    tableau[m, -1] = -b.sum()
    basis = np.arange(n, n + m)
    budget = [max_iter]
    _run(tableau, basis, n + m, budget)
    scale = max(1.0, float(np.abs(b).sum()))
    if tableau[m, -1] < -_PIVOT_TOL * scale:
        raise InfeasibleLP(f"LP is infeasible (phase-1 objective {-tableau[m, -1]:.3e})")

    # drive leftover artificials out of the basis; all-zero rows are redundant
    drop: list[int] = []
    for pos in range(m):
        if basis[pos] < n:
            continue
        in_basis = set(basis.tolist())
        candidates = [j for j in range(n) if j not in in_basis and abs(tableau[pos, j]) > _PIVOT_TOL]
        if candidates:
            _pivot(tableau, basis, pos, candidates[0])
        else:
            drop.append(pos)
    keep = [i for i in range(m) if i not in drop]
    a_kept = a[keep]
    b_kept = b[keep]

    # phase 2 on the original columns only
    t2 = np.zeros((len(keep) + 1, n + 1))
    t2[:-1, :n] = tableau[keep, :n]
    t2[:-1, -1] = tableau[keep, -1]
    basis2 = basis[keep].copy()
    t2[-1, :n] = internal_c
    for pos in range(len(keep)):
        t2[-1] -= t2[-1, basis2[pos]] * t2[pos]
    _run(t2, basis2, n, budget)

    # recompute the vertex from the optimal basis against the original data;
    # a singular basis (near-duplicate columns) falls back to least squares
    x = np.zeros(n)
    bmat = a_kept[:, basis2]
    try:
        xb = np.linalg.solve(bmat, b_kept)
    except np.linalg.LinAlgError:
        xb = np.linalg.lstsq(bmat, b_kept, rcond=None)[0]
    rhs_scale = max(1.0, float(np.abs(b_kept).max(initial=0.0)))
    low = xb.min() if xb.size else 0.0
    if low < -1e-7 * rhs_scale:
        raise NumericalFailure(f"optimal basis re-solve produced negative mass {low:.3e}")
    x[basis2] = np.clip(xb, 0.0, None)
    residual = float(np.abs(a @ x - b).max(initial=0.0))
    if residual > _PIVOT_TOL * rhs_scale:
        raise NumericalFailure(f"optimal point violates constraints by {residual:.3e}")
    return LPSolution(
        x=x,
        value=float(c @ x),
        basis=basis2.copy(),
        iterations=max_iter - budget[0],
    )
