"""
Direct solve of the bordered saddle system [[Kt, C], [Cᵀ, 0]].
"""

import logging
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from utils.errors import SingularSystem

logger = logging.getLogger('solver')

RESIDUAL_RTOL = 1e-10
REFINE_SWEEPS = 3


def bordered_matrix(Kt, C: Optional[sp.spmatrix] = None) -> sp.csc_matrix:
    Kt = sp.csc_matrix(Kt)
    if C is None or C.shape[1] == 0:
        return Kt
    C = sp.csc_matrix(C)
    return sp.bmat([[Kt, C], [C.T, None]], format='csc')


def saddle_solve(Kt, C, rhs_u, rhs_c=None, symmetric: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solve [[Kt, C], [Cᵀ, 0]]·(Δu, Δλ) = (rhs_u, rhs_c) by sparse LU.

    `symmetric` selects a symmetric fill-reducing ordering; with F-bar the
    tangent is unsymmetric and a column ordering is used. Iterative refinement
    runs until the relative residual is at most RESIDUAL_RTOL, at most
    REFINE_SWEEPS times.

    Raises:
        SingularSystem: zero pivot, non-finite solution, or a residual still
            above RESIDUAL_RTOL after refinement
    """
    rhs_u = np.asarray(rhs_u, dtype=float)
    m = 0 if C is None else C.shape[1]
    rhs_c = np.zeros(m) if rhs_c is None else np.asarray(rhs_c, dtype=float)
    n = len(rhs_u)
    if n + m == 0:
        return np.zeros(0), np.zeros(0)

    A = bordered_matrix(Kt, C)
    b = np.concatenate([rhs_u, rhs_c])
    try:
        lu = splu(A, permc_spec='MMD_AT_PLUS_A' if symmetric else 'COLAMD')
    except RuntimeError as e:
        raise SingularSystem(f"Saddle factorization failed ({n}+{m} unknowns): {e}")

    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("Saddle solve produced non-finite values")

    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    residual = np.linalg.norm(b - A @ x) / scale
    for _ in range(REFINE_SWEEPS):
        if residual <= RESIDUAL_RTOL:
            break
        x = x + lu.solve(b - A @ x)
        residual = np.linalg.norm(b - A @ x) / scale
    if not np.isfinite(residual) or (residual > RESIDUAL_RTOL and np.linalg.norm(b) > 0):
        raise SingularSystem(
            f"Saddle solve relative residual {residual:.3e} above {RESIDUAL_RTOL:g} "
            f"after {REFINE_SWEEPS} refinement sweeps ({n}+{m} unknowns)"
        )
    logger.debug(f"Saddle solve: {n}+{m} unknowns, relative residual {residual:.3e}")
    return x[:n], x[n:]
