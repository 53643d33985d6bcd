"""Affine matrix expressions over a registry of scalar decision variables."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from numbers import Real

import numpy as np

from ..numerics import BlockLayout, DaeDecomposition, dae_coordinates

__all__ = [
    "AssemblyError",
    "Affine",
    "he",
    "VarEntry",
    "VarRegistry",
    "StructuredVar",
    "Constraint",
    "LmiSystem",
    "NEG",
    "PSD",
    "ZERO",
]

NEG = "neg"  # strictly negative definite
PSD = "psd"  # positive semidefinite
ZERO = "zero"  # equality, must be eliminated before solving/exporting


class AssemblyError(ValueError):
    pass


class Affine:
    """``const + sum_k x[k] * coefs[k]`` with matrix-valued coefficients.

    Supports ``+``, ``-``, scalar ``*``, ``@`` with constant arrays on either
    side and ``.T``.  Numpy defers to these operators (``__array_ufunc__``
    is disabled) so ``A @ X`` works for a constant array ``A``.
    """

    __array_ufunc__ = None

    def __init__(self, const, coefs: dict[int, np.ndarray] | None = None):
        self.const = np.atleast_2d(np.asarray(const, dtype=float))
        self.coefs = coefs if coefs is not None else {}

    @classmethod
    def zeros(cls, p: int, q: int) -> "Affine":
        return cls(np.zeros((p, q)))

    @classmethod
    def lift(cls, v) -> "Affine":
        return v if isinstance(v, Affine) else cls(v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.const.shape

    @property
    def T(self) -> "Affine":
        return Affine(self.const.T, {k: c.T for k, c in self.coefs.items()})

    def variables(self) -> list[int]:
        return sorted(self.coefs)

    def is_constant(self) -> bool:
        return not any(np.any(c) for c in self.coefs.values())

    def _check(self, other: "Affine") -> None:
        if self.shape != other.shape:
            raise AssemblyError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other):
        if isinstance(other, Real) and other == 0:
            return self
        other = Affine.lift(other)
        self._check(other)
        coefs = dict(self.coefs)
        for k, c in other.coefs.items():
            coefs[k] = coefs[k] + c if k in coefs else c
        return Affine(self.const + other.const, coefs)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.const, {k: -c for k, c in self.coefs.items()})

    def __sub__(self, other):
        return self + (-Affine.lift(other))

    def __rsub__(self, other):
        return Affine.lift(other) + (-self)

    def __mul__(self, s):
        if not isinstance(s, Real):
            return NotImplemented
        s = float(s)
        return Affine(s * self.const, {k: s * c for k, c in self.coefs.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Affine):
            raise AssemblyError("product of two decision expressions is not affine")
        b = np.atleast_2d(np.asarray(other, dtype=float))
        if self.shape[1] != b.shape[0]:
            raise AssemblyError(f"cannot multiply {self.shape} by {b.shape}")
        return Affine(self.const @ b, {k: c @ b for k, c in self.coefs.items()})

    def __rmatmul__(self, other):
        a = np.atleast_2d(np.asarray(other, dtype=float))
        if a.shape[1] != self.shape[0]:
            raise AssemblyError(f"cannot multiply {a.shape} by {self.shape}")
        return Affine(a @ self.const, {k: a @ c for k, c in self.coefs.items()})

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        out = self.const.copy()
        for k, c in self.coefs.items():
            out += x[k] * c
        return out

    def __repr__(self) -> str:
        return f"Affine(shape={self.shape}, vars={len(self.coefs)})"


def he(a) -> Affine:
    """Hermitian part ``A + A.T`` (written ``2A`` on diagonal blocks)."""
    a = Affine.lift(a)
    return a + a.T


@dataclass
class VarEntry:
    name: str
    shape: tuple[int, int]
    kind: str  # "sym", "full", "scalar", "structured"
    cone: str | None  # "pd", "lower", or None
    start: int
    count: int
    lower: float | None = None


@dataclass
class StructuredVar:
    """Descriptor-compatible variable ``X = V [[inv(Sig) S, 0], [Z21, Z22]] U.T``.

    With ``E = U diag(Sig, 0) V.T`` every parameter value gives
    ``E X = U diag(S, 0) U.T``, symmetric and PSD when ``S`` is, and every
    ``X`` with ``E X = X.T E.T >= 0`` is reached.
    """

    expr: Affine
    S: Affine
    dae: DaeDecomposition


class VarRegistry:
    def __init__(self):
        self.entries: dict[str, VarEntry] = {}
        self.size = 0
        self._exprs: dict[str, Affine] = {}
        self._labels: list[str] = []

    def _new(self, name, shape, kind, cone, count, lower=None) -> VarEntry:
        if name in self.entries:
            raise AssemblyError(f"duplicate variable {name!r}")
        entry = VarEntry(name, tuple(shape), kind, cone, self.size, count, lower)
        self.entries[name] = entry
        self.size += count
        return entry

    def __contains__(self, name) -> bool:
        return name in self.entries

    def __getitem__(self, name) -> Affine:
        return self._exprs[name]

    def sym(self, name: str, n: int, cone: str | None = "pd") -> Affine:
        entry = self._new(name, (n, n), "sym", cone, n * (n + 1) // 2)
        coefs, k = {}, entry.start
        for i in range(n):
            for j in range(i, n):
                c = np.zeros((n, n))
                c[i, j] = c[j, i] = 1.0
                coefs[k] = c
                self._labels.append(f"{name}[{i},{j}]")
                k += 1
        self._exprs[name] = Affine(np.zeros((n, n)), coefs)
        return self._exprs[name]

    def full(self, name: str, p: int, q: int) -> Affine:
        entry = self._new(name, (p, q), "full", None, p * q)
        coefs, k = {}, entry.start
        for i in range(p):
            for j in range(q):
                c = np.zeros((p, q))
                c[i, j] = 1.0
                coefs[k] = c
                self._labels.append(f"{name}[{i},{j}]")
                k += 1
        self._exprs[name] = Affine(np.zeros((p, q)), coefs)
        return self._exprs[name]

    def scalar(self, name: str, lower: float | None = None) -> Affine:
        entry = self._new(name, (1, 1), "scalar", "lower" if lower is not None else None,
                          1, lower)
        self._labels.append(name)
        self._exprs[name] = Affine(np.zeros((1, 1)), {entry.start: np.ones((1, 1))})
        return self._exprs[name]

    def structured(self, name: str, E) -> StructuredVar:
        dae = dae_coordinates(E)
        n, r = dae.n, dae.rank
        count = r * (r + 1) // 2 + (n - r) * n
        entry = self._new(name, (n, n), "structured", "pd", count)
        k = entry.start
        s_coefs, x_coefs = {}, {}
        sig_inv = np.diag(1.0 / dae.sigma) if r else np.zeros((0, 0))
        for i in range(r):
            for j in range(i, r):
                s = np.zeros((r, r))
                s[i, j] = s[j, i] = 1.0
                z = np.zeros((n, n))
                z[:r, :r] = sig_inv @ s
                s_coefs[k] = s
                x_coefs[k] = dae.V @ z @ dae.U.T
                self._labels.append(f"{name}.S[{i},{j}]")
                k += 1
        for i in range(r, n):
            for j in range(n):
                z = np.zeros((n, n))
                z[i, j] = 1.0
                x_coefs[k] = dae.V @ z @ dae.U.T
                self._labels.append(f"{name}.Z[{i},{j}]")
                k += 1
        expr = Affine(np.zeros((n, n)), x_coefs)
        self._exprs[name] = expr
        return StructuredVar(expr, Affine(np.zeros((r, r)), s_coefs), dae)

    @property
    def labels(self) -> list[str]:
        return list(self._labels)

    def unpack(self, x) -> dict[str, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise AssemblyError(f"assignment has {x.shape}, registry needs ({self.size},)")
        return {name: self._exprs[name].evaluate(x) for name in self.entries}

    def pack(self, values: dict) -> np.ndarray:
        """Inverse of :meth:`unpack` for unstructured variables."""
        x = np.zeros(self.size)
        for name, entry in self.entries.items():
            if name not in values:
                raise AssemblyError(f"missing variable {name!r}")
            v = np.atleast_2d(np.asarray(values[name], dtype=float))
            if entry.kind in ("sym", "full", "scalar"):
                k = entry.start
                p, q = entry.shape
                for i in range(p):
                    for j in range(i if entry.kind == "sym" else 0, q):
                        x[k] = v[i, j]
                        k += 1
            else:
                expr = self._exprs[name]
                idx = sorted(expr.coefs)
                basis = np.stack([expr.coefs[i].ravel() for i in idx], axis=1)
                sol, *_ = np.linalg.lstsq(basis, v.ravel(), rcond=None)
                x[idx] = sol
        return x

    def to_json(self) -> str:
        doc = [{"name": e.name, "shape": list(e.shape), "kind": e.kind, "cone": e.cone,
                "offset": e.start, "count": e.count} for e in self.entries.values()]
        return json.dumps(doc, indent=2)


@dataclass
class Constraint:
    """One symmetric matrix inequality assembled from upper blocks."""

    name: str
    sense: str
    layout: BlockLayout
    blocks: dict[tuple[int, int], Affine] = field(default_factory=dict)
    labels: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self._compiled = None

    @property
    def dim(self) -> int:
        return self.layout.dim

    def add(self, i: int, j: int, expr) -> None:
        """Accumulate ``expr`` into block ``(i, j)``; ``i > j`` is stored transposed."""
        expr = Affine.lift(expr)
        if i > j:
            i, j, expr = j, i, expr.T
        want = (self.layout.size(i), self.layout.size(j))
        if 0 in want:
            return  # empty block (e.g. no attack channel); nothing to place
        if expr.shape != want:
            raise AssemblyError(
                f"{self.name}: block ({i},{j}) has shape {expr.shape}, layout expects {want}")
        if i == j:
            asym = [np.max(np.abs(c - c.T), initial=0.0)
                    for c in [expr.const, *expr.coefs.values()]]
            if max(asym) > 1e-14:
                raise AssemblyError(f"{self.name}: diagonal block ({i},{i}) is not symmetric")
        key = (i, j)
        self.blocks[key] = self.blocks[key] + expr if key in self.blocks else expr
        self._compiled = None

    def compile(self):
        """Dense form: ``(const, var_index, coef_stack)``; lower half mirrored."""
        if self._compiled is not None:
            return self._compiled
        N = self.dim
        const = np.zeros((N, N))
        coefs: dict[int, np.ndarray] = {}
        for (i, j), expr in sorted(self.blocks.items()):
            ri, cj = self.layout.span(i), self.layout.span(j)
            const[ri, cj] += expr.const
            if i != j:
                const[cj, ri] += expr.const.T
            for k, c in expr.coefs.items():
                if not np.any(c):
                    continue
                if k not in coefs:
                    coefs[k] = np.zeros((N, N))
                coefs[k][ri, cj] += c
                if i != j:
                    coefs[k][cj, ri] += c.T
        idx = np.array(sorted(coefs), dtype=int)
        stack = np.stack([coefs[k] for k in idx]) if idx.size else np.zeros((0, N, N))
        self._compiled = (const, idx, stack)
        return self._compiled

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        const, idx, stack = self.compile()
        if idx.size == 0:
            return const.copy()
        return const + np.tensordot(x[idx], stack, axes=1)

    def margin_delta(self) -> float:
        """Strictness margin for ``NEG`` constraints."""
        const = self.compile()[0]
        return 1e-7 * (1.0 + float(np.linalg.norm(const)))


@dataclass
class LmiSystem:
    registry: VarRegistry
    constraints: list[Constraint] = field(default_factory=list)
    params: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    # x2 = secondary_map @ x2n; the secondary block is assembled in x2n
    secondary_map: np.ndarray | None = None

    @property
    def nvars(self) -> int:
        return self.registry.size

    def constraint(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def evaluate(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [c.evaluate(x) for c in self.constraints]

    def scaled(self, factor: float) -> "LmiSystem":
        """Copy with every constraint multiplied by ``factor > 0``."""
        out = LmiSystem(self.registry, [], dict(self.params), list(self.notes),
                        self.secondary_map)
        for c in self.constraints:
            nc = Constraint(c.name, c.sense, c.layout, {k: factor * v for k, v in c.blocks.items()},
                            dict(c.labels))
            out.constraints.append(nc)
        return out
