"""The quadratic pricing equation A*Suu*A + A*Suv - Svu*A = Svv.

The unique positive-definite solution is found by damped Newton iteration;
each step solves a small dense Sylvester system.  The commuting special
case has the closed form Lambda = Suu^{-1/2} (Suu^{1/2} Svv Suu^{1/2})^{1/2}
Suu^{-1/2}, which also serves as the Newton starting point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure
from .sspace import EIG_REL_TOL, _readonly

__all__ = [
    "CovarianceBlocks",
    "RiccatiSolution",
    "SymmetryReport",
    "spd_sqrt",
    "lambda_symmetric",
    "nare_residual",
    "sylvester_solve",
    "solve_nare",
    "check_symmetric_case",
]


def _check_spd(name: str, a: np.ndarray) -> np.ndarray:
    """Validate symmetry and positive-definiteness; return the exact-symmetric copy."""
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0 or np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise ValueError(f"{name} must be symmetric and nonzero")
    a = (a + a.T) / 2.0
    eigs = np.linalg.eigvalsh(a)
    if eigs[0] <= EIG_REL_TOL * np.max(np.abs(eigs)):
        raise ValueError(f"{name} must be positive-definite; min eigenvalue {eigs[0]:.3e}")
    return a


@dataclass(frozen=True, eq=False)
class CovarianceBlocks:
    """Block description (Suu, Suv, Svv) of a non-degenerate centered Gaussian.

    Svu is never stored; it is the transpose of ``suv``.  Construction
    requires Suu > 0, Svv > 0 and the full 2m x 2m covariance to be
    positive-definite.
    """

    m: int
    suu: np.ndarray
    suv: np.ndarray
    svv: np.ndarray

    def __post_init__(self):
        suu = _check_spd("suu", np.asarray(self.suu, dtype=float))
        svv = _check_spd("svv", np.asarray(self.svv, dtype=float))
        suv = np.asarray(self.suv, dtype=float)
        m = self.m
        if suu.shape != (m, m) or svv.shape != (m, m) or suv.shape != (m, m):
            raise ValueError(f"blocks must all be {m}x{m}")
        full = np.block([[suu, suv], [suv.T, svv]])
        eigs = np.linalg.eigvalsh(full)
        if eigs[0] <= EIG_REL_TOL * np.max(np.abs(eigs)):
            raise ValueError(f"full covariance must be positive-definite; min eigenvalue {eigs[0]:.3e}")
        object.__setattr__(self, "suu", _readonly(suu))
        object.__setattr__(self, "suv", _readonly(suv))
        object.__setattr__(self, "svv", _readonly(svv))

    @property
    def svu(self) -> np.ndarray:
        return self.suv.T

    def full(self) -> np.ndarray:
        """The 2m x 2m covariance of (U, V)."""
        return np.block([[self.suu, self.suv], [self.suv.T, self.svv]])


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    A: np.ndarray
    residual_norm: float
    iterations: int
    symmetric_case: bool


@dataclass(frozen=True)
class SymmetryReport:
    symmetric: bool
    asymmetry: float
    relative_asymmetry: float
    lambda_gap: float


def spd_sqrt(c: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric positive-definite matrix.

    Eigenvalues at or below the relative tolerance band are an error, not
    something to clamp: callers must supply genuinely definite input.
    """
    c = np.asarray(c, dtype=float)
    w, v = np.linalg.eigh((c + c.T) / 2.0)
    if w[0] <= EIG_REL_TOL * np.max(np.abs(w)):
        raise ValueError(f"matrix is not positive-definite; min eigenvalue {w[0]:.3e}")
    return (v * np.sqrt(w)) @ v.T


def lambda_symmetric(blocks: CovarianceBlocks) -> np.ndarray:
    """Unique symmetric positive-definite solution of L*Suu*L = Svv."""
    w, v = np.linalg.eigh(blocks.suu)
    root = (v * np.sqrt(w)) @ v.T
    inv_root = (v / np.sqrt(w)) @ v.T
    inner = spd_sqrt(root @ blocks.svv @ root)
    lam = inv_root @ inner @ inv_root
    return (lam + lam.T) / 2.0


def nare_residual(A: np.ndarray, blocks: CovarianceBlocks) -> float:
    """Frobenius norm of A*Suu*A + A*Suv - Svu*A - Svv.

    Kept independent of the solver so it can serve as its oracle.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (blocks.m, blocks.m):
        raise ValueError(f"A must be {blocks.m}x{blocks.m}, got {A.shape}")
    res = A @ blocks.suu @ A + A @ blocks.suv - blocks.suv.T @ A - blocks.svv
    return float(np.linalg.norm(res, "fro"))


def sylvester_solve(M: np.ndarray, N: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Solve H M + N H = C by a dense Kronecker system (desk scale m <= ~20).

    Solvable iff the spectra of M and -N are disjoint; conditioning of the
    Kronecker matrix is checked and a failure carries the estimate.  The
    relative residual of the returned H must be <= 1e-12.
    """
    M = np.asarray(M, dtype=float)
    N = np.asarray(N, dtype=float)
    C = np.asarray(C, dtype=float)
    m = M.shape[0]
    if M.shape != (m, m) or N.shape != (m, m) or C.shape != (m, m):
        raise ValueError("M, N, C must be square matrices of equal size")
    eye = np.eye(m)
    k = np.kron(M.T, eye) + np.kron(eye, N)
    cond = np.linalg.cond(k)
    if not np.isfinite(cond) or cond > 1e13:
        raise NumericalFailure(f"Sylvester system is singular or ill-conditioned (cond ~ {cond:.2e})")
    h = np.linalg.solve(k, C.ravel(order="F"))
    H = h.reshape((m, m), order="F")
    scale = max(float(np.linalg.norm(C, "fro")), 1e-30)
    rel = float(np.linalg.norm(H @ M + N @ H - C, "fro")) / scale
    if rel > 1e-12:
        raise NumericalFailure(f"Sylvester residual {rel:.2e} exceeds 1e-12 (cond ~ {cond:.2e})")
    return H


def _min_sym_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((a + a.T) / 2.0)[0])


def solve_nare(
    blocks: CovarianceBlocks,
    a0: np.ndarray | None = None,
    tol_res: float | None = None,
    max_iter: int = 100,
    max_damping: int = 30,
) -> RiccatiSolution:
    """Positive-definite solution of A*Suu*A + A*Suv - Svu*A = Svv.

    Newton iteration starts from the commuting-case solution (exact when
    Lambda*Suv is symmetric).  Each update H solves
    H (Suu A + Suv) + (A Suu - Svu) H = -F(A); steps are halved when the
    residual fails to decrease or the symmetric part of A would lose
    definiteness.  After reaching ``tol_res`` the iteration keeps polishing
    while full steps still reduce the residual.
    """
    suu, suv, svv = blocks.suu, blocks.suv, blocks.svv
    svu = blocks.svu
    if tol_res is None:
        tol_res = 1e-10 * (1.0 + float(np.linalg.norm(svv, "fro")))

    def f(a):
        return a @ suu @ a + a @ suv - svu @ a - svv

    if a0 is None:
        A = lambda_symmetric(blocks)
    else:
        A = np.array(a0, dtype=float)
        if A.shape != (blocks.m, blocks.m):
            raise ValueError(f"a0 must be {blocks.m}x{blocks.m}")
        if _min_sym_eig(A) <= 0.0:
            raise ValueError("a0 must have positive-definite symmetric part")

    res = float(np.linalg.norm(f(A), "fro"))
    trace = [res]
    converged = res <= tol_res
    iterations = 0
    for _ in range(max_iter):
        if converged and iterations > 0:
            break
        try:
            H = sylvester_solve(suu @ A + suv, A @ suu - svu, -f(A))
        except NumericalFailure:
            if converged:
                break  # polishing is best-effort once the tolerance is met
            raise
        step = 1.0
        accepted = False
        for _ in range(max_damping):
            cand = A + step * H
            if _min_sym_eig(cand) > 0.0:
                cand_res = float(np.linalg.norm(f(cand), "fro"))
                if cand_res < res:
                    A, res = cand, cand_res
                    accepted = True
                    break
            step /= 2.0
        if not accepted:
            if converged:
                break
            raise NumericalFailure(
                "Newton step rejected at every damping level; residual trace: "
                + ", ".join(f"{r:.3e}" for r in trace)
            )
        iterations += 1
        trace.append(res)
        if res <= tol_res:
            converged = True
    if not converged:
        raise NumericalFailure(
            f"no convergence in {max_iter} iterations (tol {tol_res:.3e}); residual trace: "
            + ", ".join(f"{r:.3e}" for r in trace)
        )
    report = check_symmetric_case(blocks, A)
    return RiccatiSolution(
        A=_readonly(A),
        residual_norm=res,
        iterations=iterations,
        symmetric_case=report.symmetric,
    )


def check_symmetric_case(blocks: CovarianceBlocks, A: np.ndarray, tol_sym: float = 1e-8) -> SymmetryReport:
    """Determine whether the solution must coincide with the commuting case.

    The criterion is symmetry of Lambda * Suv (relative Frobenius asymmetry
    below ``tol_sym``); the report also carries ||A - Lambda||_F so callers
    can confirm the coincidence when the flag is set.
    """
    lam = lambda_symmetric(blocks)
    prod = lam @ blocks.suv
    asym = float(np.linalg.norm(prod - prod.T, "fro"))
    scale = float(np.linalg.norm(prod, "fro"))
    rel = asym / scale if scale > 0.0 else 0.0
    return SymmetryReport(
        symmetric=bool(rel <= tol_sym),
        asymmetry=asym,
        relative_asymmetry=rel,
        lambda_gap=float(np.linalg.norm(np.asarray(A, dtype=float) - lam, "fro")),
    )
