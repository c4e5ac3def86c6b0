"""
Dense 2-norm condition number of the saddle matrix.
"""

import numpy as np

from assembly.system import AssembledSystem
from utils.errors import TooLarge

MAX_DENSE_SIZE = 20000


def condition_number(assembled, cap: int = MAX_DENSE_SIZE) -> float:
    """
    κ₂ of the full block matrix via singular values.

    Accepts an AssembledSystem or any square matrix.

    Raises:
        TooLarge: dimension above `cap`
    """
    if isinstance(assembled, AssembledSystem):
        matrix = assembled.block_matrix()
    else:
        matrix = assembled
    size = matrix.shape[0]
    if size > cap:
        raise TooLarge(f"Condition number requested for {size} unknowns (cap {cap})")
    dense = matrix.toarray() if hasattr(matrix, 'toarray') else np.asarray(matrix, dtype=float)
    return float(np.linalg.cond(dense, 2))
