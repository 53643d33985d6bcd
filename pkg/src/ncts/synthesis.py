"""Gain synthesis: assemble the LMIs, solve, recover gains, certify.

``synthesize`` picks the known-fault LMI when the fault matrix is given and
the norm-bounded one otherwise.  Infeasible solves come back as
:class:`SynthesisInfeasible` rather than as exceptions so sweeps over
``gamma`` or ``mu`` can run without try/except noise.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .lmi import SynthesisScalars, build_theorem1, build_theorem2
from .model import CascadeModel, is_regular_impulse_free
from .numerics import dae_coordinates, symmetrize
from .solver import FEASIBLE, SdpSolution, SolverOptions, solve

__all__ = [
    "ExtractionError",
    "CertReport",
    "GainCertificate",
    "SynthesisInfeasible",
    "synthesize",
    "certify_closed_loop",
    "slow_eigenvalues",
    "gamma_threshold",
    "KNOWN",
    "UNKNOWN",
    "COND_LIMIT",
]

log = logging.getLogger(__name__)

KNOWN = "known"
UNKNOWN = "unknown"
COND_LIMIT = 1e10
UNCERTIFIED = "uncertified"


class ExtractionError(RuntimeError):
    """Decision matrices too ill-conditioned to invert reliably."""


def _c2list(z) -> list:
    return [[float(v.real), float(v.imag)] for v in np.atleast_1d(z)]


@dataclass(frozen=True)
class CertReport:
    regular: bool
    impulse_free: bool
    slow_eigenvalues: np.ndarray
    unstable: list[int] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return self.regular and self.impulse_free and not self.unstable

    def to_dict(self) -> dict:
        return {"regular": self.regular, "impulse_free": self.impulse_free,
                "slow_eigenvalues": _c2list(self.slow_eigenvalues),
                "unstable_indices": list(self.unstable), "admissible": self.admissible}


@dataclass
class GainCertificate:
    status: str
    theorem: int
    K1: np.ndarray
    K2: np.ndarray
    W: np.ndarray
    decision: dict
    cert: CertReport
    solver: dict
    conditioning: dict
    reason: str = ""

    feasible = True

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "theorem": self.theorem,
            "reason": self.reason,
            "K1": self.K1.tolist(),
            "K2": self.K2.tolist(),
            "W": self.W.tolist(),
            "admissibility": self.cert.to_dict(),
            "conditioning": self.conditioning,
            "solver": self.solver,
            "decision": {k: np.asarray(v).tolist() for k, v in self.decision.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class SynthesisInfeasible:
    status: str
    theorem: int
    solver: dict
    reason: str

    feasible = False

    def to_dict(self) -> dict:
        return {"status": self.status, "theorem": self.theorem, "reason": self.reason,
                "solver": self.solver}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def slow_eigenvalues(E, A) -> np.ndarray:
    """Eigenvalues of the slow subsystem of ``E x' = A x``.

    In SVD coordinates ``E = diag(sigma, 0)`` the algebraic block ``A22`` is
    eliminated by a Schur complement.  If ``A22`` is singular the finite
    generalized eigenvalues are returned instead.
    """
    E = np.atleast_2d(np.asarray(E, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    dec = dae_coordinates(E)
    r = dec.rank
    At = dec.U.T @ A @ dec.V
    if r == E.shape[0]:
        return np.linalg.eigvals(np.diag(1.0 / dec.sigma) @ At)
    A11, A12 = At[:r, :r], At[:r, r:]
    A21, A22 = At[r:, :r], At[r:, r:]
    if np.linalg.cond(A22) < 1e12:
        slow = A11 - A12 @ np.linalg.solve(A22, A21)
        return np.linalg.eigvals(np.diag(1.0 / dec.sigma) @ slow)
    w = sla.eigvals(A, E)
    return w[np.isfinite(w)]


def certify_closed_loop(model: CascadeModel, gains) -> CertReport:
    """Regularity, impulse-freeness and slow-mode stability of ``(E, A2 + B2 K2)``.

    ``gains`` is a :class:`GainCertificate` or a bare ``K2`` array.
    """
    K2 = gains.K2 if isinstance(gains, GainCertificate) else np.atleast_2d(
        np.asarray(gains, dtype=float))
    if K2.shape != (model.m, model.n2):
        raise ValueError(f"K2 has shape {K2.shape}, expected {(model.m, model.n2)}")
    Acl = model.A2 + model.B2 @ K2
    regular, impulse_free = is_regular_impulse_free(model.E, Acl)
    if not regular:
        return CertReport(False, False, np.zeros(0, dtype=complex), [])
    ev = slow_eigenvalues(model.E, Acl)
    bad = [i for i, z in enumerate(ev) if z.real >= 0]
    return CertReport(regular, impulse_free, ev, bad)


def _checked_inverse(M: np.ndarray, name: str) -> tuple[np.ndarray, float]:
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ExtractionError(f"{name} is near singular (condition {cond:.3e})")
    return np.linalg.inv(M), cond


def _extract(model: CascadeModel, sol: SdpSolution, secondary_map, theorem: int):
    v = sol.assignment
    X1, Y1, Y2, What = v["X1"], v["Y1"], v["Y2"], v["W"]
    X2 = v["X2"] if secondary_map is None else secondary_map @ v["X2"]
    X1inv, c1 = _checked_inverse(X1, "X1")
    X2inv, c2 = _checked_inverse(X2, "X2")
    K1 = Y1 @ X1inv
    K2 = Y2 @ X2inv
    W = symmetrize(X1inv.T @ What @ X1inv)
    decision = dict(v)
    decision["X2"] = X2  # physical coordinates, so Y2 = K2 X2 holds as stored
    cert = certify_closed_loop(model, K2)
    status, reason = FEASIBLE, ""
    if not cert.impulse_free:
        status, reason = UNCERTIFIED, "closed-loop pair (E, A2 + B2 K2) is not impulse free"
    elif cert.unstable:
        status, reason = UNCERTIFIED, "closed-loop slow subsystem has eigenvalues with Re >= 0"
    elif np.min(np.linalg.eigvalsh(W)) <= 0:
        status, reason = UNCERTIFIED, "recovered event weight W is not positive definite"
    return GainCertificate(status, theorem, K1, K2, W, decision, cert, sol.summary(),
                           {"X1": c1, "X2": c2}, reason)


def synthesize(model: CascadeModel, scalars: SynthesisScalars | None = None,
               fault_mode: str = UNKNOWN, G=None, options: SolverOptions | None = None):
    """Run the synthesis pipeline.

    Parameters
    ----------
    model : CascadeModel
    scalars : SynthesisScalars, optional
        Tuning scalars; defaults to all ones.
    fault_mode : {"known", "unknown"}
        ``known`` uses the realized fault matrix (``G`` if given, else the
        model's), ``unknown`` the norm-bounded fault description.
    G : array_like, optional
        Realized diagonal fault matrix for ``fault_mode="known"``.

    Returns
    -------
    GainCertificate or SynthesisInfeasible
    """
    if fault_mode == KNOWN:
        theorem = 1
        sys_ = build_theorem1(model, G=G, scalars=scalars)
    elif fault_mode == UNKNOWN:
        if G is not None:
            raise ValueError("a fault matrix was given with fault_mode='unknown'")
        theorem = 2
        sys_ = build_theorem2(model, scalars=scalars)
    else:
        raise ValueError(f"fault_mode must be 'known' or 'unknown', got {fault_mode!r}")
    sol = solve(sys_, options)
    if not sol.feasible:
        return SynthesisInfeasible(sol.status, theorem, sol.summary(),
                                   f"solver returned {sol.status} (t = {sol.t:.3e})")
    out = _extract(model, sol, sys_.secondary_map, theorem)
    log.info("synthesize: theorem %d, status %s, K2 = %s", theorem, out.status, out.K2)
    return out


def gamma_threshold(model: CascadeModel, lo: float, hi: float, tol: float = 1e-2,
                    **kw) -> tuple[float, float]:
    """Bisect on ``gamma`` between a feasible ``lo`` and an infeasible ``hi``.

    Returns the final ``(feasible, infeasible)`` bracket.
    """
    def ok(g):
        return synthesize(model.with_scalars(gamma=g), **kw).feasible

    if not ok(lo):
        raise ValueError(f"gamma = {lo} is not feasible")
    if ok(hi):
        raise ValueError(f"gamma = {hi} is still feasible")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi
