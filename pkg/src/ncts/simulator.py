"""Fixed-step closed-loop simulation of the cascade with mixed triggering.

The primary state and the differential coordinates of the secondary DAE are
integrated by classical RK4; the algebraic coordinates are solved exactly at
every stage.  Sampling, triggering and the Bernoulli draws happen in Python
at the sampling instants; the inner integration runs in the kernel selected
by :mod:`ncts.kernels`.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import CascadeModel, is_regular_impulse_free
from .numerics import dae_coordinates
from .trigger import (ATTACK_PATH, EVENT_PATH, TIME_PATH, event_release, exact_remainder,
                      primary_input)

__all__ = [
    "SignalError",
    "ScenarioError",
    "SimulationError",
    "Gains",
    "Scenario",
    "SimTrace",
    "eval_signal",
    "bernoulli_schedule",
    "run",
    "transmission_stats",
    "algebraic_residual",
    "write_csv",
]

log = logging.getLogger(__name__)

DELAY_NAMES = ("zeta", "d", "tau", "theta")
_BOUND_FIELD = {"zeta": "zeta2", "d": "d2", "tau": "tau2", "theta": "theta_bar"}


class SignalError(ValueError):
    pass


class ScenarioError(ValueError):
    pass


class SimulationError(RuntimeError):
    """Runtime failure with the simulation time at which it happened."""

    def __init__(self, kind: str, time: float, message: str):
        super().__init__(f"{kind} at t = {time:.6g} s: {message}")
        self.kind = kind
        self.time = time


# ---------------------------------------------------------------- signals

def _table(spec, t):
    ts = np.asarray(spec["t"], dtype=float)
    vals = np.asarray(spec["values"], dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if ts.ndim != 1 or ts.size == 0 or vals.shape[0] != ts.size:
        raise SignalError("table needs matching 't' and 'values' rows")
    if np.any(np.diff(ts) <= 0):
        raise SignalError("table times must be strictly increasing")
    return np.array([np.interp(t, ts, vals[:, j]) for j in range(vals.shape[1])])


def eval_signal(spec: dict, arg) -> np.ndarray:
    """Evaluate a signal spec.

    Time signals (``zero``, ``const``, ``sin_window``, ``table``) take a time
    in seconds; the attack map ``tanh`` takes the state it acts on.
    Piecewise segments are closed on the left, so ``sin_window`` is
    ``amplitude * sin(t)`` on ``[t_start, t_end)`` and zero elsewhere.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SignalError(f"signal spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "zero":
        return np.zeros(int(spec.get("dim", 1)))
    if kind == "const":
        return np.atleast_1d(np.asarray(spec["value"], dtype=float)).copy()
    if kind == "sin_window":
        t = float(arg)
        amp = np.atleast_1d(np.asarray(spec.get("amplitude", 1.0), dtype=float))
        lo, hi = float(spec.get("t_start", 0.0)), float(spec["t_end"])
        return amp * math.sin(t) if lo <= t < hi else np.zeros_like(amp)
    if kind == "table":
        return _table(spec, float(arg))
    if kind == "tanh":
        x = np.atleast_1d(np.asarray(arg, dtype=float))
        g = np.atleast_1d(np.asarray(spec["gains"], dtype=float))
        if g.shape != x.shape:
            raise SignalError(f"tanh gains have shape {g.shape}, state has {x.shape}")
        return float(spec.get("sign", 1.0)) * np.tanh(g * x)
    raise SignalError(f"unknown signal kind {kind!r}")


# ---------------------------------------------------------------- inputs

@dataclass(frozen=True)
class Gains:
    K1: np.ndarray
    K2: np.ndarray
    W: np.ndarray | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "Gains":
        W = doc.get("W")
        return cls(np.atleast_2d(np.asarray(doc["K1"], dtype=float)),
                   np.atleast_2d(np.asarray(doc["K2"], dtype=float)),
                   None if W is None else np.atleast_2d(np.asarray(W, dtype=float)))


@dataclass
class Scenario:
    x1_0: np.ndarray
    x2_history: object  # constant vector or a time-signal spec on [-theta, 0]
    disturbance: dict = field(default_factory=lambda: {"kind": "zero"})
    attack: dict = field(default_factory=lambda: {"kind": "zero"})
    horizon: float = 15.0
    step: float = 1e-3
    seed: int = 0
    delay_fraction: float = 1.0
    delays: dict = field(default_factory=dict)  # explicit constants override the fraction
    g_realized: np.ndarray | None = None

    @classmethod
    def from_dict(cls, doc: dict, seed: int | None = None) -> "Scenario":
        known = {"x1_0", "x2_history", "disturbance", "attack", "horizon", "step", "seed",
                 "delay_fraction", "delays", "g_realized"}
        extra = set(doc) - known
        if extra:
            raise ScenarioError(f"unknown scenario key(s): {sorted(extra)}")
        kw = dict(doc)
        kw["x1_0"] = np.atleast_1d(np.asarray(doc["x1_0"], dtype=float))
        if isinstance(doc["x2_history"], (list, tuple, int, float)):
            kw["x2_history"] = np.atleast_1d(np.asarray(doc["x2_history"], dtype=float))
        if doc.get("g_realized") is not None:
            kw["g_realized"] = np.atleast_1d(np.asarray(doc["g_realized"], dtype=float))
        if seed is not None:
            kw["seed"] = int(seed)
        return cls(**kw)

    def to_dict(self) -> dict:
        hist = self.x2_history
        return {
            "x1_0": self.x1_0.tolist(),
            "x2_history": hist.tolist() if isinstance(hist, np.ndarray) else hist,
            "disturbance": self.disturbance, "attack": self.attack,
            "horizon": self.horizon, "step": self.step, "seed": self.seed,
            "delay_fraction": self.delay_fraction, "delays": dict(self.delays),
            "g_realized": None if self.g_realized is None else self.g_realized.tolist(),
        }

    def history(self, t: float) -> np.ndarray:
        if isinstance(self.x2_history, np.ndarray):
            return self.x2_history.copy()
        return eval_signal(self.x2_history, t)

    def delay_values(self, model: CascadeModel) -> dict:
        out = {}
        for name in DELAY_NAMES:
            bound = getattr(model, _BOUND_FIELD[name])
            val = float(self.delays.get(name, self.delay_fraction * bound))
            if not 0.0 <= val <= bound + 1e-12:
                raise ScenarioError(f"delay {name} = {val} outside [0, {bound}]")
            out[name] = val
        return out


def bernoulli_schedule(seed: int, n: int, alpha_bar: float, beta_bar: float):
    """Switch and attack draws for ``n`` sampling instants (alpha first, then beta)."""
    rng = np.random.default_rng(seed)
    u = rng.random((n, 2))
    return (u[:, 0] < alpha_bar).astype(int), (u[:, 1] < beta_bar).astype(int)


# ---------------------------------------------------------------- trace

@dataclass
class SimTrace:
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    xhat: np.ndarray
    u1g: np.ndarray
    u2: np.ndarray
    sat_u2: np.ndarray
    psi_u2: np.ndarray
    y1: np.ndarray
    w: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    released: np.ndarray
    eq5_violation: np.ndarray
    sample_rows: np.ndarray
    sample_paths: list
    x2_before: np.ndarray  # history rows on the grid before t = 0
    x2_left: np.ndarray  # left limits of x2 (differ at jumps of the algebraic part)
    lag: float
    meta: dict = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return self.t.size

    def state_norm(self, k: int) -> float:
        return float(np.linalg.norm(np.concatenate([self.x1[k], self.x2[k]])))

    def x2_delayed(self) -> np.ndarray:
        """x2(t - theta) on the grid, with the same interpolation as the kernel."""
        right = np.vstack([self.x2_before, self.x2])
        left = np.vstack([self.x2_before, self.x2_left])
        off = self.x2_before.shape[0]
        pos = off + np.arange(self.n_rows) - self.lag
        i0 = np.floor(pos).astype(int)
        f = (pos - i0)[:, None]
        i1 = np.minimum(i0 + 1, right.shape[0] - 1)
        return np.where(f == 0.0, right[i0], (1.0 - f) * right[i0] + f * left[i1])

    def columns(self) -> list[str]:
        def names(base, n):
            return [base] if n == 1 else [f"{base}_{i + 1}" for i in range(n)]

        cols = ["t"]
        cols += [f"x1_{i + 1}" for i in range(self.x1.shape[1])]
        cols += [f"x2_{i + 1}" for i in range(self.x2.shape[1])]
        cols += [f"xhat_{i + 1}" for i in range(self.xhat.shape[1])]
        for base, arr in (("u1g", self.u1g), ("u2", self.u2), ("sat_u2", self.sat_u2),
                          ("psi_u2", self.psi_u2), ("y1", self.y1), ("w", self.w)):
            cols += names(base, arr.shape[1])
        return cols + ["alpha", "beta", "released", "eq5_violation"]

    def rows(self):
        fmt = "{:.10g}".format
        for k in range(self.n_rows):
            vals = [self.t[k]]
            for arr in (self.x1, self.x2, self.xhat, self.u1g, self.u2, self.sat_u2,
                        self.psi_u2, self.y1, self.w):
                vals.extend(arr[k])
            row = [fmt(float(v)) for v in vals]
            row += [str(int(self.alpha[k])), str(int(self.beta[k])),
                    str(int(self.released[k])), str(int(self.eq5_violation[k]))]
            yield row


def write_csv(trace: SimTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(trace.columns())
        wr.writerows(trace.rows())


# ---------------------------------------------------------------- run

def _patterns(m: int) -> np.ndarray:
    # all-linear pattern first so the unsaturated branch wins ties
    codes = sorted(itertools.product((0, 1, -1), repeat=m), key=lambda c: sum(map(abs, c)))
    return np.array(codes, dtype=float).reshape(-1, m)


def _plant_data(model: CascadeModel, K2: np.ndarray, fold_delay: bool) -> dict:
    dec = dae_coordinates(model.E)
    r = dec.rank
    U, V = dec.U, dec.V
    A2 = model.A2 + (model.A3 if fold_delay else 0.0)
    A3 = np.zeros_like(model.A3) if fold_delay else model.A3
    At, A3t = U.T @ A2 @ V, U.T @ A3
    Bt, B3t = U.T @ model.B2, U.T @ model.B3
    KV = K2 @ V
    inv_s = (1.0 / dec.sigma)[:, None]
    pat = _patterns(model.m)
    na = model.n2 - r
    Minv = np.zeros((pat.shape[0], na, na))
    ok = np.zeros(pat.shape[0], dtype=np.int_)
    for p, code in enumerate(pat):
        lin = (code == 0).astype(float)
        M = At[r:, r:] + Bt[r:] @ (lin[:, None] * KV[:, r:])
        if na == 0:
            ok[p] = 1
        elif np.linalg.cond(M) < 1e12:
            Minv[p] = np.linalg.inv(M)
            ok[p] = 1
    return dict(
        A1=model.A1, B1C2=model.B1 @ model.C2, B1D2=model.B1 @ model.D2,
        Ad=inv_s * At[:r], A3d=inv_s * A3t[:r], Bd=inv_s * Bt[:r], B3d=inv_s * B3t[:r],
        Aa_d=At[r:, :r], A3a=A3t[r:], Ba=Bt[r:], B3a=B3t[r:],
        KVd=KV[:, :r], KVa=KV[:, r:], pat=pat, Minv=Minv, pat_ok=ok,
        xi=np.asarray(model.xi, dtype=float), V=V,
    )


def _interp_rows(arr: np.ndarray, pos: float, upto: int) -> np.ndarray:
    """Linear interpolation at fractional row ``pos``; clamped to ``[0, upto]``."""
    if pos <= 0:
        return arr[0].copy()
    pos = min(pos, float(upto))
    i0 = int(math.floor(pos))
    f = pos - i0
    if f == 0.0:
        return arr[i0].copy()
    return (1.0 - f) * arr[i0] + f * arr[i0 + 1]


def _attack_value(spec: dict, x_delayed: np.ndarray, t: float, n1: int) -> np.ndarray:
    kind = spec.get("kind")
    if kind == "tanh":
        return eval_signal(spec, x_delayed)
    if kind == "zero":
        return np.zeros(n1)
    val = eval_signal(spec, t)
    if val.shape != (n1,):
        raise ScenarioError(f"attack signal has shape {val.shape}, expected ({n1},)")
    return val


def run(model: CascadeModel, gains, scenario: Scenario, backend: str | None = None) -> SimTrace:
    """Simulate the closed loop over ``scenario.horizon`` seconds.

    ``gains`` is anything with ``K1``, ``K2`` and ``W`` attributes (a
    :class:`~ncts.synthesis.GainCertificate` or :class:`Gains`).  ``W`` may be
    ``None`` only when every sample takes the time-triggered path.
    """
    K1 = np.atleast_2d(np.asarray(gains.K1, dtype=float))
    K2 = np.atleast_2d(np.asarray(gains.K2, dtype=float))
    W = None if gains.W is None else np.atleast_2d(np.asarray(gains.W, dtype=float))
    n1, n2, m = model.n1, model.n2, model.m
    if K1.shape != (m, n1) or K2.shape != (m, n2):
        raise ScenarioError(f"gain shapes {K1.shape}, {K2.shape} do not match the model")
    if scenario.x1_0.shape != (n1,):
        raise ScenarioError(f"x1_0 has shape {scenario.x1_0.shape}, expected ({n1},)")
    regular, impulse_free = is_regular_impulse_free(model.E, model.A2 + model.B2 @ K2)
    if not (regular and impulse_free):
        raise ScenarioError("closed loop (E, A2 + B2 K2) is not regular and impulse free; "
                            "the algebraic solve would be singular")

    dt = float(scenario.step)
    if dt <= 0:
        raise ScenarioError("integration step must be positive")
    spp = int(round(model.h / dt))
    if spp < 1 or abs(spp * dt - model.h) > 1e-9 * model.h:
        raise ScenarioError(f"step {dt} does not divide the sampling period {model.h}")
    N = int(round(scenario.horizon / dt))
    if N < 1 or abs(N * dt - scenario.horizon) > 1e-9 * max(1.0, scenario.horizon):
        raise ScenarioError(f"step {dt} does not divide the horizon {scenario.horizon}")

    delays = scenario.delay_values(model)
    lag = delays["theta"] / dt
    if 0.0 < lag < 1.0:
        raise ScenarioError("secondary delay must be 0 or at least one integration step")
    fold = lag == 0.0
    data = _plant_data(model, K2, fold)

    G = model.fault.G if scenario.g_realized is None else np.diag(scenario.g_realized)
    if G.shape != (m, m):
        raise ScenarioError(f"realized fault has shape {G.shape}, expected ({m}, {m})")

    t = np.arange(N + 1) * dt
    q = model.q
    w_half = np.array([eval_signal(scenario.disturbance, 0.5 * j * dt) for j in range(2 * N + 1)],
                      dtype=float).reshape(2 * N + 1, -1)
    w_left = np.array([eval_signal(scenario.disturbance, np.nextafter(0.5 * j * dt, -np.inf))
                       for j in range(2 * N + 1)], dtype=float).reshape(2 * N + 1, -1)
    if w_half.shape[1] != q:
        raise ScenarioError(f"disturbance has dimension {w_half.shape[1]}, expected {q}")

    off = int(math.ceil(lag)) + 1
    hist = np.zeros((off + N + 1, n2))
    for i in range(off + 1):
        hist[i] = scenario.history((i - off) * dt)
    if hist.shape[1] != n2 or not np.all(np.isfinite(hist)):
        raise ScenarioError("bad x2 history")
    hist_left = hist.copy()
    x1 = np.zeros((N + 1, n1))
    x1[0] = scenario.x1_0
    u2 = np.zeros((N + 1, m))
    sat = np.zeros((N + 1, m))
    xhat = np.zeros((N + 1, n1))
    u1g = np.zeros((N + 1, m))
    alpha_row = np.zeros(N + 1, dtype=int)
    beta_row = np.zeros(N + 1, dtype=int)
    released = np.zeros(N + 1, dtype=int)

    starts = np.arange(0, N + 1, spp)
    starts = starts[starts < N] if N > 0 else starts
    alpha, beta = bernoulli_schedule(scenario.seed, starts.size, model.alpha_bar,
                                     model.beta_bar)
    integrate = kernels.integrate if backend is None else kernels.get_integrate(backend)
    tau_steps = delays["tau"] / dt
    last = None
    paths = []
    for j, k0 in enumerate(starts):
        xk = x1[k0].copy()
        a, b = int(alpha[j]), int(beta[j])
        if a == 1 or last is None:
            rel = True
        else:
            if W is None:
                raise ScenarioError("event-triggered samples need the weight W")
            rel = event_release(last - xk, xk, W, model.mu).released
        if rel:
            last = xk
        f_del = _attack_value(scenario.attack, _interp_rows(x1, k0 - tau_steps, k0),
                              k0 * dt, n1)
        sample = primary_input(a, b, xk, xk, last - xk, f_del)
        paths.append(sample.source)
        hold = G @ K1 @ sample.value
        n = min(spp, N - k0)
        sl = slice(k0, k0 + n + 1)
        xhat[sl], u1g[sl] = sample.value, hold
        alpha_row[sl], beta_row[sl] = a, b
        released[k0] = int(rel)
        status, row = integrate(int(k0), int(n), dt, float(lag), off, hold, w_half, w_left,
                                data["A1"], data["B1C2"], data["B1D2"], data["Ad"],
                                data["A3d"], data["Bd"], data["B3d"], data["Aa_d"],
                                data["A3a"], data["Ba"], data["B3a"], data["KVd"],
                                data["KVa"], data["pat"], data["Minv"], data["pat_ok"],
                                data["xi"], data["V"], hist, hist_left, x1, u2, sat)
        if status == kernels.ALGEBRAIC_FAIL:
            raise SimulationError("algebraic_singular", row * dt,
                                  "no saturation region admits a consistent algebraic state")
        if status == kernels.NONFINITE:
            raise SimulationError("divergence", row * dt, "non-finite state")

    x2 = hist[off:]
    w = w_half[::2]
    psi = exact_remainder(u2, sat)
    y1 = x1 @ model.C1.T + w @ model.D1.T
    eq5 = model.eps_sat * np.sum(u2 * u2, axis=1) < np.sum(psi * psi, axis=1)
    meta = {"seed": scenario.seed, "backend": "python" if integrate is kernels.get_integrate("python") else "cython",
            "step": dt, "h": model.h, "delays": delays, "samples_per_period": spp}
    return SimTrace(t, x1, x2.copy(), xhat, u1g, u2, sat, psi, y1, w, alpha_row, beta_row,
                    released, eq5.astype(int), starts, paths, hist[:off].copy(),
                    hist_left[off:].copy(), 0.0 if fold else lag, meta)


# ---------------------------------------------------------------- post

def transmission_stats(trace: SimTrace) -> dict:
    rows = trace.sample_rows
    rel = trace.released[rows].astype(bool)
    alpha = trace.alpha[rows]
    beta = trace.beta[rows]
    total = int(rows.size)
    return {
        "samples": total,
        "released": int(rel.sum()),
        "ratio": float(rel.sum() / total) if total else 0.0,
        "paths": {
            TIME_PATH: int(np.sum(rel & (alpha == 1))),
            EVENT_PATH: int(np.sum(rel & (alpha == 0))),
            ATTACK_PATH: int(np.sum(beta == 1)),
        },
    }


def algebraic_residual(model: CascadeModel, trace: SimTrace) -> np.ndarray:
    """Infinity norm of the algebraic rows of ``E x2' - rhs`` on every row.

    The rows are the left null space of ``E``, so ``x2'`` drops out.  The
    delayed term is rebuilt from the trace itself.
    """
    dec = dae_coordinates(model.E)
    Ua = dec.U[:, dec.rank:]
    if Ua.shape[1] == 0:
        return np.zeros(trace.n_rows)
    A2, A3 = model.A2, model.A3
    if trace.lag == 0.0:
        A2, A3 = A2 + A3, np.zeros_like(A3)
    rhs = (trace.x2 @ A2.T + trace.x2_delayed() @ A3.T + trace.sat_u2 @ model.B2.T
           + trace.w @ model.B3.T)
    return np.max(np.abs(rhs @ Ua), axis=1)
