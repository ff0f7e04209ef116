"""Maximum-weight assignment on rectangular matrices."""
from __future__ import annotations

from typing import List, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment


def max_weight_matching(weights) -> List[Tuple[int, int]]:
    """Pairs ``(row, col)`` maximising the total weight; the smaller side is fully matched."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-D matrix")
    if w.shape[0] == 0 or w.shape[1] == 0:
        return []
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    rows, cols = linear_sum_assignment(w, maximize=True)
    return sorted((int(r), int(c)) for r, c in zip(rows, cols))


def matching_weight(weights, pairs) -> float:
    w = np.asarray(weights, dtype=float)
    return float(sum(w[i, j] for i, j in pairs))


__all__ = ["matching_weight", "max_weight_matching"]
