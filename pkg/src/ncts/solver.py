"""Dense log-det barrier solver for LMI feasibility.

Phase-1 form over ``z = (x, t)``::

    minimize t   s.t.   t I - A_k(x) > 0   (A_k < 0 constraints)
                        A_k(x) + t I > 0   (A_k >= 0 constraints)
                        |x|^2 < rho^2

The ball keeps the problem bounded when the LMIs are homogeneous.  Each
outer iteration minimizes ``t + mu * phi(z)`` by damped Newton steps and then
shrinks ``mu``.  The verdict comes from the residuals of the final point: a
strict constraint must reach ``lambda_max <= -delta/2`` with its own margin
``delta``, a PSD one ``lambda_min >= -1e-9``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from .lmi.affine import NEG, PSD, AssemblyError, LmiSystem

__all__ = [
    "SolverOptions",
    "SdpSolution",
    "ConstraintResidual",
    "solve",
    "residuals",
    "FEASIBLE",
    "INFEASIBLE",
    "MAX_ITER",
    "NUMERICAL_FAILURE",
    "PSD_TOL",
]

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible_certificate"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"
PSD_TOL = 1e-9


@dataclass(frozen=True)
class SolverOptions:
    mu0: float = 1.0
    mu_factor: float = 0.25
    gap_tol: float = 1e-8
    max_outer: int = 60
    max_inner: int = 50
    radius: float = 1e3
    newton_tol: float = 1e-9
    seed: int = 0  # the method is deterministic; kept so callers can record it


@dataclass(frozen=True)
class ConstraintResidual:
    name: str
    sense: str
    min_eig: float
    max_eig: float
    delta: float

    @property
    def margin(self) -> float:
        """Positive when the constraint holds (``-lambda_max`` or ``lambda_min``)."""
        return -self.max_eig if self.sense == NEG else self.min_eig

    @property
    def ok(self) -> bool:
        if self.sense == NEG:
            return self.max_eig <= -0.5 * self.delta
        return self.min_eig >= -PSD_TOL

    def to_dict(self) -> dict:
        return {"name": self.name, "sense": self.sense, "min_eig": self.min_eig,
                "max_eig": self.max_eig, "delta": self.delta, "margin": self.margin,
                "ok": self.ok}


@dataclass
class SdpSolution:
    status: str
    x: np.ndarray
    assignment: dict
    residuals: list[ConstraintResidual]
    t: float
    iterations: int
    outer_iterations: int
    wall_time: float
    t_history: list[float] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def worst_margin(self) -> float:
        return min((r.margin for r in self.residuals), default=np.inf)

    def summary(self, timing: bool = False) -> dict:
        """Plain-dict digest; wall time only on request so files stay reproducible."""
        out = {"status": self.status, "t": self.t, "iterations": self.iterations,
               "outer_iterations": self.outer_iterations,
               "worst_margin": self.worst_margin(),
               "residuals": [r.to_dict() for r in self.residuals]}
        if timing:
            out["wall_time"] = self.wall_time
        return out


def residuals(sys_: LmiSystem, assignment) -> list[ConstraintResidual]:
    """Extreme eigenvalues of every constraint at an assignment.

    ``assignment`` is either a flat vector or a dict keyed by registry name.
    """
    if isinstance(assignment, dict):
        missing = [n for n in sys_.registry.entries if n not in assignment]
        if missing:
            raise AssemblyError(f"assignment is missing variable(s): {missing}")
        x = sys_.registry.pack(assignment)
    else:
        x = np.asarray(assignment, dtype=float)
        if x.shape != (sys_.nvars,):
            raise AssemblyError(f"assignment has shape {x.shape}, expected ({sys_.nvars},)")
    out = []
    for c in sys_.constraints:
        if c.dim == 0:
            continue
        M = c.evaluate(x)
        w = np.linalg.eigvalsh(0.5 * (M + M.T))
        out.append(ConstraintResidual(c.name, c.sense, float(w[0]), float(w[-1]),
                                      c.margin_delta()))
    return out


class _Block:
    """One barrier term ``-log det(G0 + sum_i z_i G_i)`` over z = (x, t)."""

    def __init__(self, const, idx, stack, sense, nz):
        N = const.shape[0]
        sign = -1.0 if sense == NEG else 1.0
        self.G0 = sign * const
        self.idx = np.append(idx, nz - 1).astype(int)  # t is the last coordinate
        self.D = np.concatenate([sign * stack, np.eye(N)[None]], axis=0)
        self.N = N

    def matrix(self, z):
        return self.G0 + np.tensordot(z[self.idx], self.D, axes=1)

    def chol(self, z):
        G = self.matrix(z)
        try:
            return np.linalg.cholesky(0.5 * (G + G.T))
        except np.linalg.LinAlgError:
            return None

    def value(self, L) -> float:
        return -2.0 * float(np.sum(np.log(np.diag(L))))

    def derivatives(self, L):
        k, N = self.D.shape[0], self.N
        # Dt_i = L^-1 D_i L^-T, batched through two triangular solves
        P = solve_triangular(L, self.D.transpose(1, 0, 2).reshape(N, k * N), lower=True)
        P = P.reshape(N, k, N).transpose(1, 2, 0)  # (k, N, N) holding (L^-1 D_i)^T
        Q = solve_triangular(L, P.transpose(1, 0, 2).reshape(N, k * N), lower=True)
        Dt = Q.reshape(N, k, N).transpose(1, 0, 2).reshape(k, N * N)
        g = -np.trace(Dt.reshape(k, N, N), axis1=1, axis2=2)
        H = Dt @ Dt.T
        return g, H


def _initial_t(blocks, z) -> float:
    worst = 0.0
    for b in blocks:
        G = b.G0 + np.tensordot(z[b.idx[:-1]], b.D[:-1], axes=1)
        worst = max(worst, -float(np.linalg.eigvalsh(0.5 * (G + G.T))[0]))
    return worst + 1.0


def solve(sys_: LmiSystem, opts: SolverOptions | None = None) -> SdpSolution:
    """Phase-1 barrier solve; see the module docstring for the formulation."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    n = sys_.nvars
    nz = n + 1
    blocks = []
    for c in sys_.constraints:
        if c.sense not in (NEG, PSD):
            raise AssemblyError(f"constraint {c.name!r}: unsupported sense {c.sense!r}")
        if c.dim == 0:
            continue
        blocks.append(_Block(*c.compile(), c.sense, nz))
    nu = sum(b.N for b in blocks) + 1  # barrier parameter incl. the ball
    rho2 = opts.radius ** 2

    z = np.zeros(nz)
    z[-1] = _initial_t(blocks, z)

    def phi(z, need_derivs):
        ball = rho2 - float(z[:n] @ z[:n])
        if ball <= 0:
            return None
        val = -np.log(ball)
        g = np.zeros(nz)
        H = np.zeros((nz, nz)) if need_derivs else None
        Ls = []
        for b in blocks:
            L = b.chol(z)
            if L is None:
                return None
            Ls.append(L)
            val += b.value(L)
        if need_derivs:
            for b, L in zip(blocks, Ls):
                gb, Hb = b.derivatives(L)
                g[b.idx] += gb
                H[np.ix_(b.idx, b.idx)] += Hb
            xz = z[:n]
            g[:n] += 2 * xz / ball
            H[:n, :n] += 2 * np.eye(n) / ball + 4 * np.outer(xz, xz) / ball ** 2
        return val, g, H

    mu = opts.mu0
    iters = outer = 0
    t_hist = [float(z[-1])]
    status = MAX_ITER
    try:
        for outer in range(1, opts.max_outer + 1):
            for _ in range(opts.max_inner):
                val, g, H = phi(z, True)
                f = z[-1] + mu * val
                grad = mu * g
                grad[-1] += 1.0
                Hs = mu * H
                step = _newton_step(Hs, grad)
                if step[-1] > 0:
                    # keep t monotone: center in x with t frozen
                    step = np.zeros(nz)
                    step[:-1] = _newton_step(Hs[:-1, :-1], grad[:-1])
                dec = -float(grad @ step)
                if not np.all(np.isfinite(step)):
                    status = NUMERICAL_FAILURE
                    raise FloatingPointError("non-finite Newton step")
                if dec < opts.newton_tol * max(1.0, abs(f)):
                    break
                alpha = 1.0
                while alpha > 1e-12:
                    cand = z + alpha * step
                    res = phi(cand, False)
                    if res is not None and cand[-1] + mu * res[0] <= f - 0.25 * alpha * dec:
                        break
                    alpha *= 0.5
                else:
                    break
                z = cand
                iters += 1
                t_hist.append(float(z[-1]))
            if mu * nu < opts.gap_tol * (1.0 + abs(z[-1])):
                status = "converged"
                break
            mu *= opts.mu_factor
    except (FloatingPointError, LinAlgError) as exc:
        log.warning("barrier solve failed: %s", exc)
        status = NUMERICAL_FAILURE

    x = z[:n].copy()
    res = residuals(sys_, x)
    all_ok = all(r.ok for r in res)
    if status != NUMERICAL_FAILURE:
        if all_ok:
            status = FEASIBLE
        elif status == "converged":
            status = INFEASIBLE
    elif all_ok and np.all(np.isfinite(x)):
        status = FEASIBLE
    wall = time.perf_counter() - t0
    log.info("solve: status=%s t=%.3e newton=%d outer=%d %.2fs", status, z[-1], iters,
             outer, wall)
    return SdpSolution(status, x, sys_.registry.unpack(x), res, float(z[-1]), iters, outer,
                       wall, t_hist)


def _newton_step(H, grad):
    scale = max(1.0, float(np.max(np.abs(np.diag(H))))) if H.size else 1.0
    reg = 0.0
    for _ in range(8):
        try:
            cf = cho_factor(H + reg * np.eye(H.shape[0]), lower=True, check_finite=True)
            return -cho_solve(cf, grad)
        except (LinAlgError, ValueError):
            reg = 1e-12 * scale if reg == 0.0 else reg * 100
    raise LinAlgError("Newton system is not positive definite")
