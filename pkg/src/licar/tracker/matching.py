"""Gated optimal assignment."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def assign(cost, gate: float):
    """Optimal one-to-one matching of rows to columns.

    A pair is admissible when its cost is at most ``1 - gate``.  Each
    admissible match earns ``(1 - gate) - cost``; the matching with the
    largest total earning is returned, which is the plain minimum-cost
    assignment when every pair is admissible.

    Returns ``(matches, unmatched_rows, unmatched_cols)`` with matches as
    ``(row, col)`` pairs sorted by row.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        cost = cost.reshape(len(cost), -1)
    n_rows, n_cols = cost.shape
    limit = 1.0 - gate
    admissible = cost <= limit
    matches = []
    if n_rows and n_cols and admissible.any():
        work = cost if admissible.all() else np.where(admissible, cost - limit, 0.0)
        rows, cols = linear_sum_assignment(work)
        matches = [(int(r), int(c)) for r, c in zip(rows, cols) if admissible[r, c]]
    matched_r = {r for r, _ in matches}
    matched_c = {c for _, c in matches}
    return (
        matches,
        [r for r in range(n_rows) if r not in matched_r],
        [c for c in range(n_cols) if c not in matched_c],
    )
