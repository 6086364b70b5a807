"""Dense complex LU solves with pivot and conditioning guards."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = ["SingularSystem", "IllConditionedWarning", "LUFactor", "SolveResult",
           "lu_factor", "solve_complex_dense"]

PIVOT_TOL = 1e-13
COND_WARN = 1e8


class SingularSystem(np.linalg.LinAlgError):
    """A pivot fell below the threshold."""


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass
class LUFactor:
    lu: np.ndarray
    piv: np.ndarray
    n: int
    condition: float
    min_pivot: float

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=complex)
        if self.n == 0:
            return b.copy()
        return sla.lu_solve((self.lu, self.piv), b)


@dataclass
class SolveResult:
    x: np.ndarray
    residual: float
    condition: float


def lu_factor(A: np.ndarray, pivot_tol: float = PIVOT_TOL, cond_warn: float = COND_WARN) -> LUFactor:
    """LU with partial pivoting; raises :class:`SingularSystem` on a tiny pivot."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n == 0:
        return LUFactor(A.copy(), np.zeros(0, dtype=np.int32), 0, 1.0, np.inf)
    lu, piv = sla.lu_factor(A, check_finite=True)
    min_pivot = float(np.abs(np.diag(lu)).min())
    if min_pivot < pivot_tol:
        raise SingularSystem(f"pivot {min_pivot:.3e} below {pivot_tol:.1e}")
    # reciprocal 1-norm condition estimate from LAPACK
    gecon, = sla.get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, np.linalg.norm(A, 1), norm="1")
    condition = np.inf if rcond == 0 else float(1.0 / rcond)
    if condition > cond_warn:
        warnings.warn(f"ill-conditioned system: condition estimate {condition:.3e}",
                      IllConditionedWarning, stacklevel=2)
    return LUFactor(lu, piv, n, condition, min_pivot)


def solve_complex_dense(A, b, pivot_tol: float = PIVOT_TOL, cond_warn: float = COND_WARN) -> SolveResult:
    """Solve ``A x = b`` for one or several right-hand sides.

    The relative residual ``|A x - b| / |b|`` (Frobenius over all columns) is
    reported along with the 1-norm condition estimate.
    """
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    fac = lu_factor(A, pivot_tol=pivot_tol, cond_warn=cond_warn)
    x = fac.solve(b)
    nb = np.linalg.norm(b)
    res = 0.0 if A.shape[0] == 0 else float(np.linalg.norm(A @ x - b) / (nb if nb > 0 else 1.0))
    return SolveResult(x, res, fac.condition)
