"""
Tridiagonal linear solves on top of LAPACK's banded solver.
"""
import logging

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from app.exceptions import ParameterError, SingularMatrixError

logger = logging.getLogger(__name__)

# ||A|| ||x|| / ||b|| beyond this means the pivots carried no information
_CONDITION_LIMIT = 1e14


def _off_diagonal(values: np.ndarray, n: int, name: str) -> np.ndarray:
    if values.shape[0] == n - 1:
        return values
    if values.shape[0] == n:
        return values[1:] if name == "sub" else values[:-1]
    raise ParameterError(f"{name}-diagonal must have length {n - 1} or {n}, got {values.shape[0]}")


def tridiagonal_norm(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray) -> float:
    """Max-row-sum norm of the tridiagonal matrix."""
    rows = np.abs(diag).astype(float)
    rows[1:] += np.abs(sub)
    rows[:-1] += np.abs(sup)
    return float(rows.max())


def solve_tridiagonal(sub, diag, sup, rhs) -> np.ndarray:
    """
    Solve A x = rhs for tridiagonal A.

    Args:
        sub: Sub-diagonal, length n-1 (or n with sub[0] ignored)
        diag: Main diagonal, length n
        sup: Super-diagonal, length n-1 (or n with sup[-1] ignored)
        rhs: Right-hand side, shape (n,) or (n, k); real or complex

    Raises:
        SingularMatrixError: zero pivot or numerically singular system
    """
    diag = np.asarray(diag)
    n = diag.shape[0]
    if n == 0:
        raise ParameterError("empty system")
    sub = _off_diagonal(np.asarray(sub), n, "sub")
    sup = _off_diagonal(np.asarray(sup), n, "sup")
    rhs = np.asarray(rhs)
    if rhs.shape[0] != n:
        raise ParameterError(f"right-hand side has length {rhs.shape[0]}, expected {n}")

    dtype = np.result_type(sub, diag, sup, rhs, np.float64)
    bands = np.zeros((3, n), dtype=dtype)
    bands[0, 1:] = sup
    bands[1, :] = diag
    bands[2, :-1] = sub

    try:
        solution = solve_banded((1, 1), bands, rhs, check_finite=True)
    except LinAlgError as e:
        logger.warning("Tridiagonal solve hit a zero pivot", extra={"size": n, "error": str(e)})
        raise SingularMatrixError(f"singular tridiagonal system: {e}") from e

    rhs_norm = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    solution_norm = float(np.max(np.abs(solution)))
    if not np.all(np.isfinite(solution)) or (
        rhs_norm > 0.0
        and tridiagonal_norm(sub, diag, sup) * solution_norm > _CONDITION_LIMIT * rhs_norm
    ):
        logger.warning("Tridiagonal solve is numerically singular", extra={
            "size": n, "solution_norm": solution_norm, "rhs_norm": rhs_norm
        })
        raise SingularMatrixError("tridiagonal system is numerically singular")
    return solution
