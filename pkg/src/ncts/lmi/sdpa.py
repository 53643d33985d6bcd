"""SDPA sparse (.dat-s) export and import.

The SDPA primal form is ``F(x) = sum_i x_i F_i - F_0 >= 0`` with the
objective ``min c'x``.  A constraint ``A(x) = A0 + sum x_i A_i`` is written
as ``F_0 = -A0``, ``F_i = A_i``; a strict ``A(x) < 0`` becomes
``-A(x) - delta I >= 0`` with the constraint's own margin ``delta``.

The max-eig variant appends an epigraph variable ``t`` (last index):
``t I - A(x) - delta I >= 0`` for negative constraints and ``A(x) + t I >= 0``
for PSD ones, with objective ``min t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .affine import NEG, PSD, AssemblyError, LmiSystem

__all__ = ["SdpaError", "SdpaProblem", "export_sdpa", "parse_sdpa", "to_sdpa_problem",
           "FEASIBILITY", "MAX_EIG"]

FEASIBILITY = "feasibility"
MAX_EIG = "max_eig"


class SdpaError(AssemblyError):
    pass


@dataclass
class SdpaProblem:
    """Dense in-memory SDPA data: ``sum_i x_i F[i] - F[0] >= 0``, ``min c'x``."""

    c: np.ndarray
    blocks: list[int]
    F: list[list[np.ndarray]]  # F[matno][block] for matno 0..m

    @property
    def nvars(self) -> int:
        return self.c.size

    def evaluate(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        out = []
        for b in range(len(self.blocks)):
            acc = -self.F[0][b].copy()
            for i in range(self.nvars):
                acc += x[i] * self.F[i + 1][b]
            out.append(acc)
        return out


def to_sdpa_problem(sys_: LmiSystem, objective: str = FEASIBILITY) -> SdpaProblem:
    if objective not in (FEASIBILITY, MAX_EIG):
        raise SdpaError(f"unknown objective {objective!r}")
    n = sys_.nvars
    m = n + (1 if objective == MAX_EIG else 0)
    c = np.zeros(m)
    if objective == MAX_EIG:
        c[-1] = 1.0
    sizes: list[int] = []
    F: list[list[np.ndarray]] = [[] for _ in range(m + 1)]
    for con in sys_.constraints:
        if con.sense not in (NEG, PSD):
            raise SdpaError(f"constraint {con.name!r}: unsupported sense {con.sense!r}")
        const, idx, stack = con.compile()
        N = con.dim
        if N == 0:
            continue
        sizes.append(N)
        sign = -1.0 if con.sense == NEG else 1.0
        shift = -con.margin_delta() * np.eye(N) if con.sense == NEG else np.zeros((N, N))
        # G(x) = sign*A(x) + shift = sum x_i (sign A_i) - F0, F0 = -(sign A0 + shift)
        F[0].append(-(sign * const + shift))
        coef = {int(k): sign * stack[p] for p, k in enumerate(idx)}
        for i in range(n):
            F[i + 1].append(coef.get(i, np.zeros((N, N))))
        if objective == MAX_EIG:
            F[m].append(np.eye(N))
    return SdpaProblem(c, sizes, F)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_sdpa(sys_: LmiSystem, objective: str = FEASIBILITY) -> str:
    """SDPA sparse text; entries ordered by (matrix, block, row, col)."""
    prob = to_sdpa_problem(sys_, objective)
    lines = [f"{prob.nvars} = mDIM", f"{len(prob.blocks)} = nBLOCK"]
    lines.append(" ".join(str(s) for s in prob.blocks) if prob.blocks else "0")
    lines.append(" ".join(_fmt(v) for v in prob.c) if prob.nvars else "0")
    for matno, mats in enumerate(prob.F):
        for blk, A in enumerate(mats, start=1):
            rows, cols = np.nonzero(np.triu(A))
            for i, j in zip(rows, cols):
                lines.append(f"{matno} {blk} {i + 1} {j + 1} {_fmt(A[i, j])}")
    return "\n".join(lines) + "\n"


def _numbers(line: str) -> list[str]:
    for ch in ",{}()":
        line = line.replace(ch, " ")
    return line.split()


def parse_sdpa(text: str) -> SdpaProblem:
    """Read an SDPA sparse file (comments ``"``/``*`` allowed before the header)."""
    raw = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in raw if ln and ln[0] not in '"*']
    if len(lines) < 4:
        raise SdpaError("truncated SDPA file")
    try:
        m = int(_numbers(lines[0])[0])
        nblock = int(_numbers(lines[1])[0])
        sizes = [int(v) for v in _numbers(lines[2])][: max(nblock, 0)]
        c = np.array([float(v) for v in _numbers(lines[3])][:m]) if m else np.zeros(0)
    except (ValueError, IndexError) as exc:
        raise SdpaError(f"bad SDPA header: {exc}") from None
    if nblock and len(sizes) != nblock:
        raise SdpaError("block structure line does not match nBLOCK")
    if c.size != m:
        raise SdpaError("objective vector length does not match mDIM")
    dims = [abs(s) for s in sizes]
    F = [[np.zeros((d, d)) for d in dims] for _ in range(m + 1)]
    for ln in lines[4:]:
        tok = _numbers(ln)
        if len(tok) != 5:
            raise SdpaError(f"bad entry line: {ln!r}")
        mat, blk, i, j = (int(t) for t in tok[:4])
        v = float(tok[4])
        if not (0 <= mat <= m and 1 <= blk <= len(dims)):
            raise SdpaError(f"entry out of range: {ln!r}")
        A = F[mat][blk - 1]
        A[i - 1, j - 1] = v
        A[j - 1, i - 1] = v
    return SdpaProblem(c, dims, F)
