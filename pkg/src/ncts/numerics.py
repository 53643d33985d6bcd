"""Dense real matrix kernels shared by every other module.

Symmetric eigenvalue checks, the SVD split of a descriptor matrix into
differential and algebraic coordinates, and a small block composer used to
lay out the synthesis inequalities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NumericsError",
    "as_matrix",
    "symmetrize",
    "min_eig_sym",
    "max_eig_sym",
    "DaeDecomposition",
    "dae_coordinates",
    "BlockLayout",
    "compose_blocks",
    "read_block",
]

SYM_RTOL = 1e-12
RANK_RTOL = 1e-10


class NumericsError(ValueError):
    """Raised on dimension or symmetry violations."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce scalars, vectors and nested lists to a finite 2-D float array."""
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise NumericsError(f"{name}: expected a 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NumericsError(f"{name}: non-finite entries")
    return m


def _check_symmetric(m: np.ndarray, name: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NumericsError(f"{name}: expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    if m.size and np.max(np.abs(m - m.T)) > SYM_RTOL * scale:
        raise NumericsError(f"{name}: matrix is not symmetric")


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def min_eig_sym(m) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    The input is symmetrized as ``(M + M.T) / 2`` after the asymmetry check,
    which absorbs rounding left over from block assembly.
    """
    m = np.asarray(m, dtype=float)
    m = np.atleast_2d(m)
    _check_symmetric(m, "min_eig_sym")
    return float(np.linalg.eigvalsh(symmetrize(m))[0])


def max_eig_sym(m) -> float:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    _check_symmetric(m, "max_eig_sym")
    return float(np.linalg.eigvalsh(symmetrize(m))[-1])


@dataclass(frozen=True)
class DaeDecomposition:
    """Orthogonal split ``U.T @ E @ V = diag(sigma, 0)``.

    The first ``rank`` columns of ``V`` span the differential coordinates,
    the remaining ones the algebraic coordinates.
    """

    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    rank: int

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def n_alg(self) -> int:
        return self.n - self.rank

    def canonical(self) -> np.ndarray:
        d = np.zeros((self.n, self.n))
        d[: self.rank, : self.rank] = np.diag(self.sigma)
        return d


def dae_coordinates(E) -> DaeDecomposition:
    """Split a (possibly singular) descriptor matrix by SVD.

    Singular values below ``1e-10 * sigma_max`` count as zero.  Already
    diagonal inputs keep the identity transforms so that the canonical form
    ``diag(1, 0)`` maps to itself.
    """
    E = as_matrix(E, "E")
    n, k = E.shape
    if n != k:
        raise NumericsError(f"E must be square, got {E.shape}")
    if n == 0:
        return DaeDecomposition(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros(0), 0)

    offdiag = E - np.diag(np.diag(E))
    d = np.diag(E)
    smax = float(np.max(np.abs(d))) if n else 0.0
    if not np.any(offdiag) and smax > 0 and np.all(np.diff(np.abs(d)) <= 0):
        # diagonal with non-increasing magnitudes: fix signs on U only
        mask = np.abs(d) > RANK_RTOL * smax
        r = int(np.count_nonzero(mask))
        signs = np.where(d < 0, -1.0, 1.0)
        return DaeDecomposition(np.diag(signs), np.eye(n), np.abs(d[:r]).copy(), r)

    U, s, Vt = np.linalg.svd(E)
    smax = float(s[0]) if s.size else 0.0
    r = int(np.count_nonzero(s > RANK_RTOL * smax)) if smax > 0 else 0
    return DaeDecomposition(U, Vt.T, s[:r].copy(), r)


@dataclass
class BlockLayout:
    """Ordered block sizes with optional block names (1-based indices)."""

    sizes: list[int]
    names: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.sizes = [int(s) for s in self.sizes]
        if any(s < 0 for s in self.sizes):
            raise NumericsError("block sizes must be non-negative")
        for name, idx in self.names.items():
            if not 1 <= idx <= len(self.sizes):
                raise NumericsError(f"block name {name!r} points outside the layout")
        self._offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)

    @property
    def dim(self) -> int:
        return int(self._offsets[-1])

    def __len__(self) -> int:
        return len(self.sizes)

    def index(self, key) -> int:
        return self.names[key] if isinstance(key, str) else int(key)

    def span(self, key) -> slice:
        i = self.index(key)
        if not 1 <= i <= len(self.sizes):
            raise NumericsError(f"block index {i} outside 1..{len(self.sizes)}")
        return slice(int(self._offsets[i - 1]), int(self._offsets[i]))

    def size(self, key) -> int:
        return self.sizes[self.index(key) - 1]


def compose_blocks(layout: BlockLayout, blocks: dict) -> np.ndarray:
    """Assemble a symmetric matrix from upper-triangular blocks.

    ``blocks`` maps ``(i, j)`` with ``i <= j`` to arrays; the lower triangle
    is filled by mirroring, never by a second copy.
    """
    out = np.zeros((layout.dim, layout.dim))
    for (i, j), b in blocks.items():
        if i > j:
            raise NumericsError(f"block ({i},{j}) lies below the diagonal")
        b = np.atleast_2d(np.asarray(b, dtype=float))
        ri, cj = layout.span(i), layout.span(j)
        if b.shape != (ri.stop - ri.start, cj.stop - cj.start):
            raise NumericsError(
                f"block ({i},{j}) has shape {b.shape}, layout expects "
                f"{(ri.stop - ri.start, cj.stop - cj.start)}"
            )
        out[ri, cj] = b
        if i != j:
            out[cj, ri] = b.T
    return out


def read_block(layout: BlockLayout, m: np.ndarray, i, j) -> np.ndarray:
    return m[layout.span(i), layout.span(j)].copy()
