"""Domain model of the singular networked cascade system.

A :class:`CascadeModel` bundles the primary plant, the singular secondary
plant with state delay, the network timing bounds, the mixed trigger, the
attack channel, the actuator fault interval, the saturation limits and the
dissipativity supply rate.  Models are immutable values; ``validate`` reports
problems instead of raising.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .numerics import as_matrix, dae_coordinates

__all__ = [
    "ModelError",
    "CascadeModel",
    "FaultModel",
    "DissipativityTriple",
    "ValidationReport",
    "validate",
    "bernoulli_moments",
    "is_regular_impulse_free",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "save_model",
    "SCALAR_FIELDS",
]


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class FaultModel:
    """Diagonal actuator effectiveness ``G = G0 + G1 * Sigma`` with ``|Sigma| <= I``."""

    g_lower: np.ndarray
    g_upper: np.ndarray
    g_realized: np.ndarray | None = None

    @property
    def G0(self) -> np.ndarray:
        return np.diag((self.g_upper + self.g_lower) / 2.0)

    @property
    def G1(self) -> np.ndarray:
        return np.diag((self.g_upper - self.g_lower) / 2.0)

    @property
    def G(self) -> np.ndarray:
        """Realized fault matrix, defaulting to the interval midpoint."""
        if self.g_realized is None:
            return self.G0
        return np.diag(self.g_realized)


@dataclass(frozen=True)
class DissipativityTriple:
    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray
    gamma: float

    @property
    def Q_bar(self) -> np.ndarray:
        """Symmetric square root of ``-Q``."""
        w, v = np.linalg.eigh(-0.5 * (self.Q + self.Q.T))
        return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


@dataclass(frozen=True)
class CascadeModel:
    # primary plant
    A1: np.ndarray
    B1: np.ndarray
    C1: np.ndarray
    D1: np.ndarray
    # secondary singular plant
    E: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    C2: np.ndarray
    D2: np.ndarray
    xi: np.ndarray  # saturation limits, one per input channel
    eps_sat: float  # sector bound for the dead-zone
    # delay bounds (s) and delay-rate bound
    zeta2: float
    d2: float
    tau2: float
    theta_bar: float
    lam: float
    # mixed trigger
    h: float
    mu: float
    alpha_bar: float
    # attack
    beta_bar: float
    F: np.ndarray
    fault: FaultModel
    diss: DissipativityTriple

    @property
    def n1(self) -> int:
        return self.A1.shape[0]

    @property
    def n2(self) -> int:
        return self.A2.shape[0]

    @property
    def m(self) -> int:
        return self.B2.shape[1]

    @property
    def q(self) -> int:
        return self.B3.shape[1]

    @property
    def qy(self) -> int:
        return self.C1.shape[0]

    @property
    def sigma(self) -> float:
        return float(np.sqrt(bernoulli_moments(self.alpha_bar)[1]))

    @property
    def delta(self) -> float:
        return float(np.sqrt(bernoulli_moments(self.beta_bar)[1]))

    def with_scalars(self, **kw) -> "CascadeModel":
        """Copy with scalar overrides; dissipativity ``gamma`` is accepted too."""
        gamma = kw.pop("gamma", None)
        unknown = set(kw) - set(SCALAR_FIELDS)
        if unknown:
            raise ModelError(f"unknown scalar(s): {sorted(unknown)}")
        out = replace(self, **{k: float(v) for k, v in kw.items()})
        if gamma is not None:
            out = replace(out, diss=replace(out.diss, gamma=float(gamma)))
        return out


SCALAR_FIELDS = ("eps_sat", "zeta2", "d2", "tau2", "theta_bar", "lam", "h", "mu",
                 "alpha_bar", "beta_bar")


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def add(self, field_name: str, message: str) -> None:
        self.violations.append(f"{field_name}: {message}")


def bernoulli_moments(p: float) -> tuple[float, float]:
    """Mean and variance of a Bernoulli(p) draw."""
    p = float(p)
    if not 0.0 <= p <= 1.0 or not np.isfinite(p):
        raise ModelError(f"probability must lie in [0, 1], got {p}")
    return p, p * (1.0 - p)


def _cheb_nodes(k: int) -> np.ndarray:
    j = np.arange(k)
    return np.cos((2 * j + 1) * np.pi / (2 * k))


def is_regular_impulse_free(E, A) -> tuple[bool, bool]:
    """Regularity and impulse-freeness of the pencil ``sE - A``.

    ``det(sE - A)`` is sampled at ``n + 2`` Chebyshev points on a radius
    matched to ``|A| / |E|`` and fitted exactly by a polynomial of degree
    ``<= n``.  The pair is regular if the determinant is not identically
    zero and impulse free if the fitted degree equals ``rank(E)``.
    """
    E = as_matrix(E, "E")
    A = as_matrix(A, "A")
    n = E.shape[0]
    if E.shape != (n, n) or A.shape != (n, n):
        raise ModelError(f"E and A must be square of equal size, got {E.shape}, {A.shape}")
    if n == 0:
        return True, True
    ne, na = np.linalg.norm(E), np.linalg.norm(A)
    rho = 1.0 + (na / ne if ne > 0 else 0.0)
    u = _cheb_nodes(n + 2)
    vals = np.empty(u.size)
    hadamard = np.empty(u.size)
    for k, uk in enumerate(u):
        M = rho * uk * E - A
        vals[k] = np.linalg.det(M)
        hadamard[k] = np.prod(np.linalg.norm(M, axis=1))
    scale = float(np.max(hadamard))
    if scale == 0.0 or np.max(np.abs(vals)) <= 1e-9 * scale:
        return False, False
    cheb = np.polynomial.chebyshev.chebfit(u, vals, n)
    coef = np.polynomial.chebyshev.cheb2poly(cheb)
    # coefficients of u^k equal those of s^k times rho^k: degree is unchanged
    big = np.max(np.abs(coef))
    nz = np.nonzero(np.abs(coef) > 1e-9 * big)[0]
    degree = int(nz[-1]) if nz.size else 0
    rank = dae_coordinates(E).rank
    return True, degree == rank


def _shape_ok(rep: ValidationReport, name: str, arr: np.ndarray, shape: tuple) -> None:
    if arr.shape != shape:
        rep.add(name, f"dimension mismatch: shape {arr.shape}, expected {shape}")


def validate(model: CascadeModel) -> ValidationReport:
    """Check dimensions and parameter ranges; never raises, never mutates."""
    rep = ValidationReport()
    mdl = model
    n1, n2 = mdl.A1.shape[0], mdl.A2.shape[0]
    m, q = mdl.B2.shape[1], mdl.B3.shape[1]
    qy = mdl.C1.shape[0]
    p2 = mdl.C2.shape[0]
    _shape_ok(rep, "A1", mdl.A1, (n1, n1))
    _shape_ok(rep, "B1", mdl.B1, (n1, p2))
    _shape_ok(rep, "C1", mdl.C1, (qy, n1))
    _shape_ok(rep, "D1", mdl.D1, (qy, q))
    _shape_ok(rep, "E", mdl.E, (n2, n2))
    _shape_ok(rep, "A2", mdl.A2, (n2, n2))
    _shape_ok(rep, "A3", mdl.A3, (n2, n2))
    _shape_ok(rep, "B2", mdl.B2, (n2, m))
    _shape_ok(rep, "B3", mdl.B3, (n2, q))
    _shape_ok(rep, "C2", mdl.C2, (p2, n2))
    _shape_ok(rep, "D2", mdl.D2, (p2, q))
    _shape_ok(rep, "F", mdl.F, (n1, n1))
    if mdl.xi.shape != (m,):
        rep.add("xi", f"dimension mismatch: {mdl.xi.shape[0]} limits for {m} inputs")
    elif np.any(mdl.xi <= 0):
        rep.add("xi", "saturation limits must be positive")
    d = mdl.diss
    _shape_ok(rep, "Q", d.Q, (qy, qy))
    _shape_ok(rep, "S", d.S, (qy, q))
    _shape_ok(rep, "R", d.R, (q, q))
    if d.Q.shape == (qy, qy):
        if np.max(np.abs(d.Q - d.Q.T), initial=0.0) > 1e-12:
            rep.add("Q", "must be symmetric")
        elif np.linalg.eigvalsh(d.Q)[-1] > 1e-12:
            rep.add("Q", "must be negative semidefinite")
    if d.R.shape == (q, q) and np.max(np.abs(d.R - d.R.T), initial=0.0) > 1e-12:
        rep.add("R", "must be symmetric")
    if not d.gamma > 0:
        rep.add("gamma", f"must be positive, got {d.gamma}")

    for name in ("zeta2", "d2", "tau2", "theta_bar"):
        if not getattr(mdl, name) >= 0:
            rep.add(name, f"delay bound must be >= 0, got {getattr(mdl, name)}")
    if not mdl.lam < 1:
        rep.add("lam", f"delay-rate bound must be < 1, got {mdl.lam}")
    if not mdl.h > 0:
        rep.add("h", f"sampling period must be positive, got {mdl.h}")
    if not 0 <= mdl.mu < 1:
        rep.add("mu", f"trigger threshold must lie in [0, 1), got {mdl.mu}")
    for name in ("alpha_bar", "beta_bar"):
        if not 0 <= getattr(mdl, name) <= 1:
            rep.add(name, f"probability must lie in [0, 1], got {getattr(mdl, name)}")
    if not 0 < mdl.eps_sat < 1:
        rep.add("eps_sat", f"sector bound must lie in (0, 1), got {mdl.eps_sat}")

    f = mdl.fault
    if f.g_lower.shape != (m,) or f.g_upper.shape != (m,):
        rep.add("fault", f"fault interval needs {m} entries per bound")
    else:
        if np.any(f.g_lower < 0) or np.any(f.g_upper > 1) or np.any(f.g_lower > f.g_upper):
            rep.add("fault", "need 0 <= g_lower <= g_upper <= 1 per channel")
        if f.g_realized is not None:
            g = f.g_realized
            if g.shape != (m,):
                rep.add("fault", "realized fault has wrong length")
            elif np.any(g < f.g_lower - 1e-12) or np.any(g > f.g_upper + 1e-12):
                rep.add("fault", "realized fault outside the fault interval")
    if mdl.E.shape == (n2, n2) and dae_coordinates(mdl.E).rank > n2:
        rep.add("E", "rank exceeds state dimension")
    return rep


# --- JSON schema -----------------------------------------------------------

_SECTIONS = {
    "primary": {"A1", "B1", "C1", "D1"},
    "secondary": {"E", "A2", "A3", "B2", "B3", "C2", "D2", "xi", "eps_sat"},
    "delays": {"zeta2", "d2", "tau2", "theta_bar", "lam"},
    "trigger": {"h", "mu", "alpha_bar"},
    "attack": {"beta_bar", "F"},
    "fault": {"g_lower", "g_upper", "g_realized"},
    "dissipativity": {"Q", "S", "R", "gamma"},
}
_OPTIONAL = {"g_realized"}
_VECTORS = {"xi", "g_lower", "g_upper", "g_realized"}


def model_from_dict(doc: dict) -> CascadeModel:
    """Build a model from the JSON layout; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    extra = set(doc) - set(_SECTIONS)
    if extra:
        raise ModelError(f"unknown top-level key(s): {sorted(extra)}")
    missing = set(_SECTIONS) - set(doc)
    if missing:
        raise ModelError(f"missing top-level key(s): {sorted(missing)}")
    flat: dict = {}
    for section, keys in _SECTIONS.items():
        body = doc[section]
        if not isinstance(body, dict):
            raise ModelError(f"section {section!r} must be an object")
        extra = set(body) - keys
        if extra:
            raise ModelError(f"unknown key(s) in {section!r}: {sorted(extra)}")
        for key in keys:
            if key not in body:
                if key in _OPTIONAL:
                    flat[key] = None
                    continue
                raise ModelError(f"missing key {section}.{key}")
            val = body[key]
            if val is None:
                flat[key] = None
            elif key in _VECTORS:
                flat[key] = np.atleast_1d(np.asarray(val, dtype=float)).ravel()
            elif isinstance(val, (list, tuple)):
                flat[key] = as_matrix(val, key)
            elif key in {"D1", "D2", "Q", "S", "R"}:
                flat[key] = as_matrix(val, key)
            else:
                flat[key] = float(val)
    fault = FaultModel(flat.pop("g_lower"), flat.pop("g_upper"), flat.pop("g_realized"))
    diss = DissipativityTriple(flat.pop("Q"), flat.pop("S"), flat.pop("R"), flat.pop("gamma"))
    return CascadeModel(fault=fault, diss=diss, **flat)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def model_to_dict(model: CascadeModel) -> dict:
    flat = {f.name: getattr(model, f.name) for f in fields(model)}
    fault, diss = flat.pop("fault"), flat.pop("diss")
    flat.update(g_lower=fault.g_lower, g_upper=fault.g_upper, g_realized=fault.g_realized,
                Q=diss.Q, S=diss.S, R=diss.R, gamma=diss.gamma)
    doc = {}
    for section, keys in _SECTIONS.items():
        doc[section] = {k: _jsonable(flat[k]) for k in sorted(keys)
                        if not (k in _OPTIONAL and flat[k] is None)}
    return doc


def load_model(path) -> CascadeModel:
    with open(Path(path)) as fh:
        return model_from_dict(json.load(fh))


def save_model(model: CascadeModel, path) -> None:
    with open(Path(path), "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")
