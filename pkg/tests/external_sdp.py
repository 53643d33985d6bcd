"""External cross-check: solve an SDPA problem with cvxpy (test-only dependency).

The SDPA data are ``G_b(x) = sum_i x_i F_i[b] - F_0[b] >= 0``.  The check
maximizes the common eigenvalue margin ``s`` with ``G_b(x) >= s I`` inside the
same ball the in-process solver uses, so ``s >= 0`` means feasible.
"""

from __future__ import annotations

import numpy as np

RADIUS = 1e3


def solve_sdpa(prob, solver="CLARABEL"):
    """Return ``(status, margin, x)``; ``status`` is 'feasible' or 'infeasible'."""
    import cvxpy as cp

    x = cp.Variable(prob.nvars)
    s = cp.Variable()
    cons = [cp.norm(x) <= RADIUS, s <= 1.0]
    for b, n in enumerate(prob.blocks):
        n = abs(n)
        G = -prob.F[0][b] + sum(x[i] * prob.F[i + 1][b] for i in range(prob.nvars)
                                if np.any(prob.F[i + 1][b]))
        cons.append((G + G.T) / 2 - s * np.eye(n) >> 0)
    p = cp.Problem(cp.Maximize(s), cons)
    p.solve(solver=solver)
    if p.status not in ("optimal", "optimal_inaccurate"):
        return p.status, float("nan"), None
    xv = np.asarray(x.value, dtype=float)
    # judge by the true eigenvalues at the returned point, not the solver's s
    margin = min(np.linalg.eigvalsh(G).min() for G in prob.evaluate(xv))
    return ("feasible" if margin >= 0 else "infeasible"), float(margin), xv
