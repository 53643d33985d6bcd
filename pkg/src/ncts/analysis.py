"""Post-hoc checks on simulated traces and numeric oracles for the lemmas.

* :func:`dissipativity_index` integrates the supply rate
  ``y'Qy + 2 y'Sw + w'Rw - gamma w'w`` along a trace.
* :func:`lkf_value` evaluates the Lyapunov-Krasovskii functional from the
  trace history.
* :func:`lemma_gap` returns the slack of each inequality used by the
  synthesis machinery, oriented so that a valid inequality gives ``>= 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from .model import CascadeModel, DissipativityTriple

__all__ = [
    "AnalysisError",
    "DissipativityReport",
    "LkfWeights",
    "dissipativity_index",
    "supply_rate",
    "lkf_value",
    "lemma_gap",
    "LEMMAS",
]

LEMMAS = ("schur", "norm_bound", "wirtinger_split", "recip_convex", "jensen", "wirtinger_pi")
MIN_POINTS = 201


class AnalysisError(ValueError):
    pass


# ---------------------------------------------------------------- dissipativity

def supply_rate(y, w, triple: DissipativityTriple) -> np.ndarray:
    """Pointwise supply ``y'Qy + 2 y'Sw + w'(R - gamma I)w`` for row-stacked samples."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    Q, S, R = triple.Q, triple.S, triple.R
    Rg = R - triple.gamma * np.eye(R.shape[0])
    return (np.einsum("ki,ij,kj->k", y, Q, y) + 2.0 * np.einsum("ki,ij,kj->k", y, S, w)
            + np.einsum("ki,ij,kj->k", w, Rg, w))


@dataclass
class DissipativityReport:
    t: np.ndarray
    J: np.ndarray
    gamma: float
    tol: float
    nonzero_initial: bool = False
    violations: list = field(default_factory=list)

    @property
    def terminal(self) -> float:
        return float(self.J[-1])

    @property
    def minimum(self) -> float:
        return float(np.min(self.J))

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "tol": self.tol, "terminal": self.terminal,
                "minimum": self.minimum, "ok": self.ok,
                "nonzero_initial_state": self.nonzero_initial,
                "violation_times": [float(v) for v in self.violations[:100]],
                "n_violations": len(self.violations)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def dissipativity_index(trace, triple: DissipativityTriple, tol: float = 1e-6
                        ) -> DissipativityReport:
    """Running supply integral ``J(t)`` by the trapezoid rule on the trace grid.

    ``trace`` needs ``t``, ``y1`` and ``w``; when ``x1``/``x2`` (and the
    history ``x2_before``) are present a nonzero initial state is flagged,
    since the dissipation inequality is stated from rest.
    """
    t = np.asarray(trace.t, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise AnalysisError("trace time grid must be a non-empty vector")
    f = supply_rate(trace.y1, trace.w, triple)
    if f.shape != t.shape:
        raise AnalysisError("y1 and w must have one row per grid point")
    J = cumulative_trapezoid(f, t, initial=0.0) if t.size > 1 else np.zeros(1)
    nonzero = False
    for name in ("x1", "x2", "x2_before"):
        arr = getattr(trace, name, None)
        if arr is None:
            continue
        arr = np.asarray(arr)
        probe = arr if name == "x2_before" else arr[:1]
        if probe.size and np.any(probe != 0):
            nonzero = True
    viol = t[J < -tol].tolist()
    return DissipativityReport(t, J, float(triple.gamma), tol, nonzero, viol)


# ---------------------------------------------------------------- LKF

@dataclass(frozen=True)
class LkfWeights:
    P1: np.ndarray
    P2: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    Q3: np.ndarray
    Q4: np.ndarray
    Q4t: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    R3: np.ndarray
    Z1: np.ndarray
    Z2: np.ndarray

    @classmethod
    def identity(cls, n1: int, n2: int) -> "LkfWeights":
        I1, I2 = np.eye(n1), np.eye(n2)
        return cls(I1, I2, I1, I1, I1, I2, I2, I1, I1, I1, I2, I2)

    @classmethod
    def from_decision(cls, decision: dict) -> "LkfWeights":
        """Undo the congruence: ``P1 = X1^-1``, ``Qi = X1^-1 Qi_hat X1^-1`` etc.

        ``decision['X2']`` must be in physical coordinates (as stored by
        synthesis).
        """
        X1i = np.linalg.inv(np.asarray(decision["X1"], dtype=float))
        X2i = np.linalg.inv(np.asarray(decision["X2"], dtype=float))

        def p(name):
            return X1i @ np.asarray(decision[name], dtype=float) @ X1i

        def s(name):
            M = X2i.T @ np.asarray(decision[name], dtype=float) @ X2i
            return 0.5 * (M + M.T)

        return cls(X1i, X2i, p("Q1"), p("Q2"), p("Q3"), s("Q4"), s("Q4t"), p("R1"),
                   p("R2"), p("R3"), s("Z1"), s("Z2"))


def _window(t_grid, t, width):
    lo = t - width
    if lo < t_grid[0] - 1e-12 or t > t_grid[-1] + 1e-12:
        raise AnalysisError(f"window [{lo:.6g}, {t:.6g}] is outside the trace "
                            f"[{t_grid[0]:.6g}, {t_grid[-1]:.6g}]")
    i0 = int(np.searchsorted(t_grid, lo - 1e-12))
    i1 = int(np.searchsorted(t_grid, t + 1e-12))
    return slice(i0, i1)


def _int(t_grid, sl, integrand):
    ts = t_grid[sl]
    if ts.size < 2:
        return 0.0
    return float(simpson(integrand, x=ts))


def _quad(X, M):
    return np.einsum("ki,ij,kj->k", X, M, X)


def lkf_value(trace, weights: LkfWeights, t: float, model: CascadeModel,
              theta: float | None = None) -> float:
    """Evaluate ``V = V1 + V2 + V3 + V4`` at time ``t`` from the trace history.

    Derivatives come from second-order finite differences of the recorded
    states; integrals use Simpson's rule on the trace grid.  ``theta`` is
    the realized secondary delay (default: the trace's, else the bound).
    """
    tg = np.asarray(trace.t, dtype=float)
    x1 = np.asarray(trace.x1, dtype=float)
    x2 = np.asarray(trace.x2, dtype=float)
    E = model.E
    if theta is None:
        meta = getattr(trace, "meta", {}) or {}
        theta = meta.get("delays", {}).get("theta", model.theta_bar)
    longest = max(model.zeta2, model.d2, model.tau2, model.theta_bar)
    k = int(np.argmin(np.abs(tg - t)))
    if abs(tg[k] - t) > 1e-9 * max(1.0, abs(t)):
        raise AnalysisError(f"t = {t} is not on the trace grid")
    _window(tg, t, longest)

    x1t, x2t = x1[k], x2[k]
    EP2 = E.T @ weights.P2
    V1 = float(x1t @ weights.P1 @ x1t + x2t @ (0.5 * (EP2 + EP2.T)) @ x2t)

    V2 = 0.0
    for width, Qm in ((model.zeta2, weights.Q1), (model.d2, weights.Q2), (model.tau2, weights.Q3)):
        sl = _window(tg, t, width)
        V2 += _int(tg, sl, _quad(x1[sl], Qm))
    sl = _window(tg, t, theta)
    V2 += _int(tg, sl, _quad(x2[sl], weights.Q4t))
    sl = _window(tg, t, model.theta_bar)
    V2 += _int(tg, sl, _quad(x2[sl], weights.Q4))

    dx1 = np.gradient(x1, tg, axis=0, edge_order=2) if tg.size > 2 else np.zeros_like(x1)
    Ex2 = x2 @ E.T
    dEx2 = np.gradient(Ex2, tg, axis=0, edge_order=2) if tg.size > 2 else np.zeros_like(Ex2)

    V3 = 0.0
    for width, Rm in ((model.zeta2, weights.R1), (model.d2, weights.R2), (model.tau2, weights.R3)):
        sl = _window(tg, t, width)
        # swapping the double integral leaves the weight s - (t - width)
        wgt = tg[sl] - (t - width)
        V3 += width * _int(tg, sl, wgt * _quad(dx1[sl], Rm))

    sl = _window(tg, t, model.theta_bar)
    wgt = tg[sl] - (t - model.theta_bar)
    V4 = _int(tg, sl, wgt * _quad(x2[sl], weights.Z1))
    V4 += model.theta_bar * _int(tg, sl, wgt * _quad(dEx2[sl], weights.Z2))
    return V1 + V2 + V3 + V4


# ---------------------------------------------------------------- lemma oracles

def _sym(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1] or np.max(np.abs(a - a.T), initial=0.0) > 1e-10 * max(
            1.0, np.max(np.abs(a), initial=0.0)):
        raise AnalysisError(f"{name} must be a symmetric square matrix")
    return 0.5 * (a + a.T)


def _lam_min(a) -> float:
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])


def _grid(inputs):
    a, b = float(inputs["a"]), float(inputs["b"])
    if not b > a:
        raise AnalysisError("interval needs a < b")
    n = max(int(inputs.get("points", MIN_POINTS)), MIN_POINTS)
    n += 1 - n % 2  # odd count for composite Simpson
    return a, b, np.linspace(a, b, n)


def _samples(fn, s, name):
    if not callable(fn):
        raise AnalysisError(f"{name} must be callable on an array of times")
    v = np.asarray(fn(s), dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != s.size:
        raise AnalysisError(f"{name} must return one row per sample")
    return v


def _schur(inp):
    O1 = _sym(inp["Omega1"], "Omega1")
    O2 = _sym(inp["Omega2"], "Omega2")
    O3 = np.atleast_2d(np.asarray(inp["Omega3"], dtype=float))
    if O3.shape != (O2.shape[0], O1.shape[0]):
        raise AnalysisError("Omega3 must be (dim Omega2) x (dim Omega1)")
    if _lam_min(-O1) <= 0 or _lam_min(O2) <= 0:
        raise AnalysisError("Omega1 must be negative and Omega2 positive definite")
    block = np.block([[O1, O3.T], [O3, -O2]])
    lhs = np.max(np.linalg.eigvalsh(block)) < 0
    rhs = np.max(np.linalg.eigvalsh(O1 + O3.T @ np.linalg.solve(O2, O3))) < 0
    return 0.0 if lhs == rhs else -1.0


def _norm_bound(inp):
    M = np.atleast_2d(np.asarray(inp["M"], dtype=float))
    N = np.atleast_2d(np.asarray(inp["N"], dtype=float))
    F = np.atleast_2d(np.asarray(inp["F"], dtype=float))
    eps = float(inp.get("eps", 1.0))
    if eps <= 0:
        raise AnalysisError("eps must be positive")
    if M.shape[1] != F.shape[0] or F.shape[1] != N.shape[0] or M.shape[0] != N.shape[1]:
        raise AnalysisError("shapes must satisfy M F N square")
    if np.linalg.norm(F, 2) > 1.0 + 1e-12:
        raise AnalysisError("F must satisfy F'F <= I")
    MFN = M @ F @ N
    return _lam_min(M @ M.T / eps + eps * N.T @ N - MFN - MFN.T)


def _wirtinger_split(inp):
    R = _sym(inp["R"], "R")
    a, b, s = _grid(inp)
    x = _samples(inp["x"], s, "x")
    dx = _samples(inp["xdot"], s, "xdot")
    lhs = simpson(_quad(dx, R), x=s)
    avg = simpson(x, x=s, axis=0) / (b - a)
    P1 = x[-1] - x[0]
    P2 = x[-1] + x[0] - 2.0 * avg
    return float(lhs - (P1 @ R @ P1 + 3.0 * P2 @ R @ P2) / (b - a))


def _recip_convex(inp):
    R = _sym(inp["R"], "R")
    M = np.atleast_2d(np.asarray(inp["M"], dtype=float))
    th = float(inp["theta"])
    if not 0.0 < th < 1.0:
        raise AnalysisError("theta must lie in (0, 1)")
    if M.shape != R.shape:
        raise AnalysisError("M must have the shape of R")
    big = np.block([[R, M.T], [M, R]])
    if _lam_min(big) < -1e-10 * max(1.0, np.max(np.abs(big))):
        raise AnalysisError("[[R, M'], [M, R]] must be positive semidefinite")
    Z = np.zeros_like(R)
    return _lam_min(np.block([[R / th, Z], [Z, R / (1.0 - th)]]) - big)


def _jensen(inp):
    W = _sym(inp["W1"], "W1")
    a, b, s = _grid(inp)
    x = _samples(inp["x"], s, "x")
    ix = simpson(x, x=s, axis=0)
    return float((b - a) * simpson(_quad(x, W), x=s) - ix @ W @ ix)


def _wirtinger_pi(inp):
    R = _sym(inp["R"], "R")
    a, b, s = _grid(inp)
    x = _samples(inp["x"], s, "x")
    dx = _samples(inp["xdot"], s, "xdot")
    lhs = simpson(_quad(dx, R), x=s)
    avg = simpson(x, x=s, axis=0) / (b - a)
    v1 = x[-1] - x[0]
    v2 = 0.5 * (x[-1] + x[0]) - avg
    return float(lhs - (v1 @ R @ v1 + np.pi ** 2 * v2 @ R @ v2) / (b - a))


_ORACLES = {
    "schur": _schur,
    "norm_bound": _norm_bound,
    "wirtinger_split": _wirtinger_split,
    "recip_convex": _recip_convex,
    "jensen": _jensen,
    "wirtinger_pi": _wirtinger_pi,
}


def lemma_gap(lemma: str, inputs: dict) -> float:
    """Slack of one lemma's inequality (``>= 0`` when it holds).

    ``schur`` returns 0 when the block-matrix and Schur-complement verdicts
    agree and -1 otherwise.  Function lemmas take callables ``x`` (and
    ``xdot``) evaluated on a grid of at least 201 points over ``[a, b]``.
    """
    try:
        fn = _ORACLES[lemma]
    except KeyError:
        raise AnalysisError(f"unknown lemma {lemma!r}; expected one of {LEMMAS}") from None
    try:
        return fn(inputs)
    except KeyError as exc:
        raise AnalysisError(f"{lemma}: missing input {exc.args[0]!r}") from None
