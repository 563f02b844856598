"""Pseudo-Euclidean geometry: scalar products, monotone sets, Fitzpatrick
values and projections.

The bilinear form is S(x, y) = <x, Sy> for a symmetric invertible matrix S
with ``index`` positive eigenvalues.  Candidate dual sets are either linear
graphs {(r, Ar)} with A positive-definite (any dimension, standard S) or
piecewise-linear monotone graphs in the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EIG_REL_TOL",
    "ScalarProductMatrix",
    "LinearMonotoneGraph",
    "PiecewiseMonotoneGraph",
    "standard_matrix",
    "s_product",
    "is_s_monotone",
    "fitzpatrick_linear",
    "project_linear",
    "fitzpatrick_pwl",
    "project_pwl",
    "pwl_value",
]

# Relative eigenvalue band below which a symmetric matrix counts as singular.
EIG_REL_TOL = 1e-10


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ScalarProductMatrix:
    """Symmetric invertible matrix defining the scalar product <x, Sy>.

    ``index`` is the number of eigenvalues above ``EIG_REL_TOL * max|eig|``;
    the other ``dim - index`` eigenvalues must sit below the negative band.
    Construction rejects singular or asymmetric input and stores an exactly
    symmetric, read-only copy.
    """

    dim: int
    index: int
    entries: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.entries, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError(f"scalar-product matrix must be square, got shape {s.shape}")
        scale = float(np.max(np.abs(s))) if s.size else 0.0
        if scale == 0.0:
            raise ValueError("scalar-product matrix is zero")
        if np.max(np.abs(s - s.T)) > 1e-12 * scale:
            raise ValueError("scalar-product matrix must be symmetric")
        s = (s + s.T) / 2.0  # exact symmetry from here on
        eigs = np.linalg.eigvalsh(s)
        tol = EIG_REL_TOL * np.max(np.abs(eigs))
        if np.any(np.abs(eigs) <= tol):
            raise ValueError("scalar-product matrix is numerically singular")
        index = int(np.sum(eigs > tol))
        if self.dim != s.shape[0]:
            raise ValueError(f"dim={self.dim} does not match matrix shape {s.shape}")
        if self.index != index:
            raise ValueError(f"index={self.index} does not match spectrum (found {index})")
        object.__setattr__(self, "entries", _readonly(s))

    @classmethod
    def from_matrix(cls, entries) -> "ScalarProductMatrix":
        s = np.asarray(entries, dtype=float)
        eigs = np.linalg.eigvalsh((s + s.T) / 2.0)
        tol = EIG_REL_TOL * np.max(np.abs(eigs)) if s.size else 0.0
        index = int(np.sum(eigs > tol))
        return cls(dim=s.shape[0], index=index, entries=s)


def standard_matrix(m: int) -> ScalarProductMatrix:
    """The 2m x 2m matrix with S(x, y) = sum_i (x_i y_{m+i} + x_{m+i} y_i).

    Under this form, S-monotonicity of a set in R^m x R^m is ordinary
    monotonicity of the corresponding relation.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    s = np.zeros((2 * m, 2 * m))
    s[:m, m:] = np.eye(m)
    s[m:, :m] = np.eye(m)
    return ScalarProductMatrix(dim=2 * m, index=m, entries=s)


def s_product(S: ScalarProductMatrix, x, y) -> float:
    """Scalar product <x, Sy>; symmetric in (x, y), may be negative."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (S.dim,) or y.shape != (S.dim,):
        raise ValueError(f"expected vectors of length {S.dim}, got {x.shape} and {y.shape}")
    return float(x @ S.entries @ y)


def is_s_monotone(S: ScalarProductMatrix, points, tol: float = 1e-12) -> bool:
    """True iff S(x - y, x - y) >= -tol for every pair of the given points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != S.dim:
        raise ValueError(f"points must be (n, {S.dim})")
    if pts.shape[0] < 2:
        return True
    gram = pts @ S.entries @ pts.T
    diag = np.diag(gram)
    sq = diag[:, None] + diag[None, :] - 2.0 * gram
    iu = np.triu_indices(pts.shape[0], k=1)
    return bool(np.min(sq[iu]) >= -tol)


@dataclass(frozen=True, eq=False)
class LinearMonotoneGraph:
    """Linear candidate set {(r, Ar) : r in R^m} with A positive-definite.

    Positive-definiteness is meant in the non-symmetric sense: the least
    eigenvalue of (A + A^T)/2 must be strictly positive, which makes the
    graph maximal strictly S-monotone for the standard S on R^{2m}.
    """

    m: int
    A: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=float)
        if a.ndim != 2 or a.shape != (self.m, self.m):
            raise ValueError(f"A must be {self.m}x{self.m}, got {a.shape}")
        sym_eigs = np.linalg.eigvalsh((a + a.T) / 2.0)
        if sym_eigs[0] <= 0.0:
            raise ValueError(f"A must be positive-definite; min eig of symmetric part is {sym_eigs[0]:.3e}")
        object.__setattr__(self, "A", _readonly(a))

    @classmethod
    def from_matrix(cls, A) -> "LinearMonotoneGraph":
        a = np.asarray(A, dtype=float)
        return cls(m=a.shape[0], A=a)


def _split(G: LinearMonotoneGraph, y) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    if y.shape != (2 * G.m,):
        raise ValueError(f"expected a vector of length {2 * G.m}, got {y.shape}")
    return y[: G.m], y[G.m :]


def _argmax_r(G: LinearMonotoneGraph, y) -> np.ndarray:
    # maximizer of <r, A^T u + v> - <r, (A+A^T) r>/2 over r
    u, v = _split(G, y)
    return np.linalg.solve(G.A + G.A.T, G.A.T @ u + v)


def fitzpatrick_linear(G: LinearMonotoneGraph, y) -> float:
    """Fitzpatrick value sup_x { S(x, y) - S(x, x)/2 } over the linear graph.

    The supremand is a strictly concave quadratic in r; the maximizer is
    r* = (A + A^T)^{-1} (A^T u + v) and the value is <r*, (A+A^T) r*>/2.
    The result dominates S(y, y)/2, with equality exactly on the graph.
    """
    b = G.A + G.A.T
    r = _argmax_r(G, y)
    return float(0.5 * r @ (b @ r))


def project_linear(G: LinearMonotoneGraph, y) -> np.ndarray:
    """S-projection (r*, A r*) of y onto the linear graph."""
    r = _argmax_r(G, y)
    return np.concatenate([r, G.A @ r])


@dataclass(frozen=True, eq=False)
class PiecewiseMonotoneGraph:
    """Piecewise-linear monotone graph in the plane (standard S, m = 1).

    ``breakpoints`` is a (k, 2) array of (r, v) nodes with r strictly
    increasing and v nondecreasing.  The graph continues past both ends
    with ``left_slope`` and ``right_slope`` (>= 0); by default the end
    segments' slopes are reused, which requires at least two breakpoints.
    """

    breakpoints: np.ndarray
    left_slope: float | None = None
    right_slope: float | None = None

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 2 or bp.shape[1] != 2 or bp.shape[0] < 1:
            raise ValueError("breakpoints must be a nonempty (k, 2) array")
        r, v = bp[:, 0], bp[:, 1]
        if np.any(np.diff(r) <= 0):
            raise ValueError("breakpoint r-coordinates must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ValueError("breakpoint v-coordinates must be nondecreasing")
        left = self.left_slope
        right = self.right_slope
        if left is None or right is None:
            if bp.shape[0] < 2:
                raise ValueError("a single breakpoint needs explicit extension slopes")
            slopes = np.diff(v) / np.diff(r)
            if left is None:
                left = float(slopes[0])
            if right is None:
                right = float(slopes[-1])
        if left < 0 or right < 0:
            raise ValueError("extension slopes must be nonnegative")
        object.__setattr__(self, "breakpoints", _readonly(bp))
        object.__setattr__(self, "left_slope", float(left))
        object.__setattr__(self, "right_slope", float(right))

    def segments(self):
        """Yield (r_lo, r_hi, a, b) with the graph equal to a + b*r on each piece."""
        bp = self.breakpoints
        r, v = bp[:, 0], bp[:, 1]
        yield (-math.inf, r[0], v[0] - self.left_slope * r[0], self.left_slope)
        for i in range(len(r) - 1):
            b = (v[i + 1] - v[i]) / (r[i + 1] - r[i])
            yield (r[i], r[i + 1], v[i] - b * r[i], b)
        yield (r[-1], math.inf, v[-1] - self.right_slope * r[-1], self.right_slope)


def pwl_value(G: PiecewiseMonotoneGraph, r):
    """Evaluate the graph height at r (scalar or array)."""
    r = np.asarray(r, dtype=float)
    bp = G.breakpoints
    rs, vs = bp[:, 0], bp[:, 1]
    out = np.interp(r, rs, vs)
    out = np.where(r < rs[0], vs[0] + G.left_slope * (r - rs[0]), out)
    out = np.where(r > rs[-1], vs[-1] + G.right_slope * (r - rs[-1]), out)
    return out if out.ndim else float(out)


def _pwl_scan(G: PiecewiseMonotoneGraph, y):
    """Per-segment exact maximization of phi(r) = r*w + g(r)*u - r*g(r).

    Returns (value, candidate_r_list); value is +inf with an empty list when
    the supremum is unbounded (flat extension pushing the linear term up).
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {y.shape}")
    u, w = float(y[0]), float(y[1])
    cands: list[tuple[float, float]] = []
    for lo, hi, a, b in G.segments():
        lin = w + b * u - a  # phi(r) = -b r^2 + lin * r + a u
        if b > 0.0:
            r = min(max(lin / (2.0 * b), lo), hi)
            cands.append((r, -b * r * r + lin * r + a * u))
        else:
            if lin > 0.0:
                if math.isinf(hi):
                    return math.inf, []
                cands.append((hi, lin * hi + a * u))
            elif lin < 0.0:
                if math.isinf(lo):
                    return math.inf, []
                cands.append((lo, lin * lo + a * u))
            else:
                # phi constant on the piece: every finite endpoint ties
                for e in (lo, hi):
                    if math.isfinite(e):
                        cands.append((e, a * u))
    best = max(val for _, val in cands)
    return best, cands


def fitzpatrick_pwl(G: PiecewiseMonotoneGraph, y) -> float:
    """Fitzpatrick value over a planar piecewise-linear graph.

    Returns math.inf when the supremum is unbounded (the point lies outside
    the domain of the dual function)."""
    value, _ = _pwl_scan(G, y)
    return value


def project_pwl(G: PiecewiseMonotoneGraph, y, tol: float | None = None) -> list[np.ndarray]:
    """All maximizers of S(x, y) - S(x, x)/2 over the graph, within ``tol``.

    Candidates come from exact per-segment quadratic optimization plus the
    breakpoints; maximizers within ``tol`` of the best value are returned
    (default band 1e-9 * (1 + |max|)).  A list of length > 1 flags a
    singular point.  An unbounded supremum yields an empty list; check
    :func:`fitzpatrick_pwl` for the +inf flag.
    """
    value, cands = _pwl_scan(G, y)
    if math.isinf(value):
        return []
    band = tol if tol is not None else 1e-9 * (1.0 + abs(value))
    rs = sorted(r for r, val in cands if val >= value - band)
    winners: list[float] = []
    for r in rs:
        if not winners or abs(r - winners[-1]) > 1e-12 * (1.0 + abs(r)):
            winners.append(r)
    return [np.array([r, pwl_value(G, r)]) for r in winners]
