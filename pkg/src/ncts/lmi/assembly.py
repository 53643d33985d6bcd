"""Block assembly of the reliable dissipative synthesis LMIs.

The main inequality acts on the 22-block stacked vector

    [x1, chi_zeta(4), chi_d(4), chi_tau(4), x2, x2(t-theta), x2(t-theta_bar),
     avg x2 on [t-theta, t], avg x2 on [t-theta_bar, t-theta], e_k, f, Psi, w]

with sizes ``{n1 x 13, n2 x 5, n1, n1, m, q}``, bordered by 13 Schur
columns (three for the primary derivative, four for the secondary
derivative, four for the saturation sector, the attack bound and the
output).  Each ``chi`` group is ``[x1(t-h(t)), x1(t-h_max), avg on
[t-h(t), t], avg on [t-h_max, t-h(t)]]``.

All variables are congruence-scaled ("hatted") so the gains come out as
``K = Y @ inv(X)``.  The secondary plant is handled in normalized descriptor
coordinates ``x2 = R x2n`` in which ``E`` becomes ``diag(I_r, 0)``; for the
canonical ``E = diag(I, 0)`` this map is the identity.

Entries written ``2Z`` on diagonal blocks mean ``Z + Z.T``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..model import CascadeModel
from ..numerics import BlockLayout, dae_coordinates
from .affine import NEG, PSD, Affine, AssemblyError, Constraint, LmiSystem, VarRegistry, he

__all__ = [
    "SynthesisScalars",
    "SecondaryCoordinates",
    "MAIN_BLOCKS",
    "parameterize_X2",
    "secondary_coordinates",
    "build_theorem1",
    "build_theorem2",
    "family_bound",
    "OMEGA_SYMBOLS",
    "FAULT_SYMBOLS",
    "EPS_TILDE_MIN",
]

EPS_TILDE_MIN = 1e-6
PI2_4 = np.pi ** 2 / 4.0
PI2_2 = np.pi ** 2 / 2.0

# 1-based block indices of the stacked vector
B_X1, XZ, XD, XT = 1, 2, 6, 10  # x1 and the first entry of each chi group
B_X2, X2TH, X2BAR, IREC, IOLD = 14, 15, 16, 17, 18
EK, FATT, PSI, WD = 19, 20, 21, 22
MAIN_BLOCKS = 22
# coupling columns carrying the fault matrix G: time path, event path, e_k, f
G_COLUMNS = (XZ, XD, EK, FATT)

_OMEGA_CHECK = (
    (1, 1), (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7), (1, 8), (1, 9), (1, 10),
    (1, 11), (1, 12), (1, 13), (1, 14), (1, 22), (2, 2), (2, 3), (2, 4), (2, 5), (2, 14),
    (3, 3), (3, 4), (3, 5), (4, 4), (4, 5), (5, 5), (6, 6), (6, 7), (6, 8), (6, 9),
    (6, 14), (7, 7), (7, 8), (7, 9), (8, 8), (8, 9), (9, 9), (10, 10), (10, 11),
    (10, 12), (10, 13), (11, 11), (11, 12), (11, 13), (12, 12), (12, 13), (13, 13),
    (14, 14), (14, 15), (14, 17), (14, 19), (14, 20), (14, 21), (14, 22), (15, 15),
    (15, 16), (15, 17), (15, 18), (16, 16), (16, 18), (17, 17), (18, 18), (19, 19),
    (20, 20), (21, 21), (22, 22))
OMEGA_SYMBOLS = (
    [f"Omega_check[{i},{j}]" for i, j in _OMEGA_CHECK]
    + [f"Omega_hat_{k}" for k in range(1, 12)]
    + [f"kappa_{k}" for k in range(1, 5)]
    + ["Upsilon_1", "Upsilon_2", "U_1", "U_2", "U_3"]
)
FAULT_SYMBOLS = (["B_tilde", "eps_tilde"] + [f"B_tilde_{k}" for k in range(1, 9)]
                      + [f"Y_tilde_{k}" for k in range(1, 9)])

# Reinterpretations applied on top of the printed tables (also kept in
# ``LmiSystem.notes`` so every built system carries its own audit trail).
NOTES = (
    "blocks (2,4),(3,4) of each delay family use the slack orientation of the "
    "reciprocally convex constraint (2(U2+U4), -2U2+2U4)",
    "Wirtinger cross terms with the averaged integrals carry pi^2/2",
    "blocks 17-18 are interval averages; the Jensen Z1 term has no uniform "
    "lower bound over theta in [0, theta_bar] and is omitted from (17,17),(18,18)",
    "block (14,14) carries theta_bar*Z1 from the derivative of the Z1 double integral",
    "block (20,20) is -beta_bar*(2 eps_f X1 - eps_f^2 I), the bound of -beta_bar X1 X1 "
    "left by the X1 congruence of the attack block",
    "block (22,22) uses -(D1'S + S'D1)",
    "Omega_hat_3/4 follow the variance expansion (+,-,- on blocks 2,6,19; "
    "-alpha_bar,-alpha1,-alpha1,+1 on blocks 2,6,19,20)",
    "Omega_hat_6 uses Y2 where K2 is printed",
    "Omega_hat_11 uses sqrt(-Q)",
    "kappa_4 = -eps4 (X2 + X2') + eps4^2 Z2",
)


@dataclass(frozen=True)
class SynthesisScalars:
    """Fixed tuning scalars of the synthesis conditions."""

    eps1: float = 1.0
    eps2: float = 1.0
    eps3: float = 1.0
    eps4: float = 1.0
    eps_f: float = 1.0

    def with_overrides(self, **kw) -> "SynthesisScalars":
        d = asdict(self)
        unknown = set(kw) - set(d)
        if unknown:
            raise AssemblyError(f"unknown synthesis scalar(s): {sorted(unknown)}")
        d.update({k: float(v) for k, v in kw.items()})
        out = SynthesisScalars(**d)
        if min(asdict(out).values()) <= 0:
            raise AssemblyError("synthesis scalars must be positive")
        return out


@dataclass(frozen=True)
class SecondaryCoordinates:
    """Normalized secondary data: ``L E R = diag(I_r, 0)``, ``x2 = R x2n``."""

    E: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    C2: np.ndarray
    L: np.ndarray
    R: np.ndarray
    rank: int


def secondary_coordinates(model: CascadeModel) -> SecondaryCoordinates:
    dae = dae_coordinates(model.E)
    n, r = dae.n, dae.rank
    scale = np.ones(n)
    scale[:r] = 1.0 / dae.sigma
    L = np.diag(scale) @ dae.U.T
    R = dae.V
    En = L @ model.E @ R
    En[np.abs(En) < 1e-13] = 0.0
    return SecondaryCoordinates(En, L @ model.A2 @ R, L @ model.A3 @ R, L @ model.B2,
                                L @ model.B3, model.C2 @ R, L, R, r)


def parameterize_X2(E, registry: VarRegistry | None = None, name: str = "X2"):
    """Descriptor variable with ``E X2 = X2' E' >= 0`` built in.

    In the SVD coordinates of ``E`` the upper-left ``r x r`` block is a
    symmetric matrix ``S`` (PD-tagged), the upper-right block is zero and the
    lower rows are free.
    """
    registry = registry if registry is not None else VarRegistry()
    return registry.structured(name, E)


def family_bound(R, U):
    """Wirtinger plus reciprocally convex bound for one delay family.

    Returns the 5x5 block matrix (as a dict of upper blocks) over
    ``[x, x(t-h), x(t-h_max), avg1, avg2]`` equal to ``-G' [[Rt, X], [X', Rt]] G``
    with ``Rt = diag(R, 3R)`` and ``X = [[U1', U3'], [U2', U4']]``.
    """
    U1, U2, U3, U4 = U
    return {
        (1, 1): -4 * R,
        (1, 2): -2 * R - (U1 + U2 + U3 + U4).T,
        (1, 3): (U1 + U2 - U3 - U4).T,
        (1, 4): 6 * R,
        (1, 5): 2 * (U3 + U4).T,
        (2, 2): -8 * R + he((U1 - U2 + U3 - U4).T),
        (2, 3): -2 * R + (-U1 + U2 + U3 - U4).T,
        (2, 4): 6 * R + 2 * (U2 + U4),
        (2, 5): 6 * R - 2 * U3.T + 2 * U4.T,
        (3, 3): -4 * R,
        (3, 4): -2 * U2 + 2 * U4,
        (3, 5): 6 * R,
        (4, 4): -12 * R,
        (4, 5): -4 * U4.T,
        (5, 5): -12 * R,
    }


class _Z:
    """``count`` zero blocks inside a padded row."""

    __slots__ = ("count",)

    def __init__(self, count: int):
        self.count = count


def _row(name: str, *items) -> dict[int, Affine]:
    """Tile a padded row over the 22 main blocks; mis-tiling is an error."""
    out, pos = {}, 1
    for it in items:
        if isinstance(it, _Z):
            pos += it.count
        else:
            out[pos] = Affine.lift(it)
            pos += 1
    if pos - 1 != MAIN_BLOCKS:
        raise AssemblyError(f"{name}: padded row covers {pos - 1} blocks, expected {MAIN_BLOCKS}")
    return out


def _fault_matrix(model: CascadeModel, G) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.ndim == 1:
        G = np.diag(G)
    G = np.atleast_2d(G)
    if G.shape != (model.m, model.m):
        raise AssemblyError(f"fault matrix must be {model.m}x{model.m}, got {G.shape}")
    return G


class _Builder:
    def __init__(self, model: CascadeModel, G: np.ndarray, scalars: SynthesisScalars):
        if model.theta_bar <= 0:
            raise AssemblyError("theta_bar must be positive for the delay-integral terms")
        self.m = model
        self.G = _fault_matrix(model, G)
        self.s = scalars
        self.sec = secondary_coordinates(model)
        self.reg = VarRegistry()
        self.used: set[str] = set()
        self.notes: list[str] = list(NOTES)

    def use(self, *symbols: str) -> None:
        self.used.update(symbols)

    def variables(self) -> None:
        m, reg = self.m, self.reg
        n1, n2, nu = m.n1, m.n2, m.m
        self.X1 = reg.sym("X1", n1)
        self.X2s = parameterize_X2(self.sec.E, reg, "X2")
        self.X2 = self.X2s.expr
        self.Q = [reg.sym(f"Q{i}", n1) for i in (1, 2, 3)]
        self.Q4 = reg.sym("Q4", n2)
        self.Q4t = reg.sym("Q4t", n2)
        self.Z1 = reg.sym("Z1", n2)
        self.Z2 = reg.sym("Z2", n2)
        self.R = [reg.sym(f"R{i}", n1) for i in (1, 2, 3)]
        self.W = reg.sym("W", n1)
        self.Y1 = reg.full("Y1", nu, n1)
        self.Y2 = reg.full("Y2", nu, n2)
        # slack matrices of the reciprocally convex bound, one family per delay
        self.U = [[reg.full(f"{fam}{k}", n1, n1) for k in (1, 2, 3, 4)]
                  for fam in ("M", "N", "S")]
        self.use("U_1", "U_2", "U_3")

    def main_layout(self) -> list[int]:
        m = self.m
        f_dim = m.n1 if m.beta_bar > 0 else 0
        return [m.n1] * 13 + [m.n2] * 5 + [m.n1, f_dim, m.m, m.q]

    def aug_layout(self) -> list[int]:
        m = self.m
        return [m.n1] * 3 + [m.n2] * 4 + [m.m] * 4 + [m.n1, m.qy]

    # --- main 22 x 22 block -------------------------------------------------
    def main_entries(self, c: Constraint) -> None:
        m, sec, G = self.m, self.sec, self.G
        a, b = m.alpha_bar, m.beta_bar
        a1, b1 = 1.0 - a, 1.0 - b
        X1, X2, Y1, Y2 = self.X1, self.X2, self.Y1, self.Y2
        R, Q = self.R, self.Q
        E = sec.E
        EZE = E.T @ self.Z2 @ E
        S = m.diss.S

        def add(i, j, expr):
            c.add(i, j, expr)
            self.use(f"Omega_check[{i},{j}]")

        add(1, 1, he(m.A1 @ X1) + Q[0] + Q[1] + Q[2])
        for fam, (Rk, U, base) in enumerate(zip(R, self.U, (XZ, XD, XT))):
            idx = (B_X1, base, base + 1, base + 2, base + 3)
            for (i, j), expr in family_bound(Rk, U).items():
                add(idx[i - 1], idx[j - 1], expr)
            add(base + 1, base + 1, -Q[fam])
        add(XD, XD, m.mu * self.W)
        add(1, B_X2, m.B1 @ sec.C2 @ X2)
        add(1, WD, m.B1 @ m.D2 - X1 @ m.C1.T @ S)

        ups1 = sec.B2 @ G @ Y1
        self.use("Upsilon_1", "Upsilon_2")
        add(XZ, B_X2, b1 * a * ups1.T)
        add(XD, B_X2, b1 * a1 * ups1.T)

        add(B_X2, B_X2, self.Q4 + self.Q4t + he(sec.A2 @ X2) + he(sec.B2 @ Y2)
            - EZE - PI2_4 * EZE + m.theta_bar * self.Z1)
        add(B_X2, X2TH, sec.A3 @ X2 + EZE - PI2_4 * EZE)
        add(B_X2, IREC, PI2_2 * EZE)
        add(B_X2, EK, b1 * a1 * ups1)
        add(B_X2, FATT, b * ups1)
        add(B_X2, PSI, -sec.B2)
        add(B_X2, WD, sec.B3)
        add(X2TH, X2TH, -2 * EZE - 2 * PI2_4 * EZE - (1.0 - m.lam) * self.Q4t)
        add(X2TH, X2BAR, EZE - PI2_4 * EZE)
        add(X2TH, IREC, PI2_2 * EZE)
        add(X2TH, IOLD, PI2_2 * EZE)
        add(X2BAR, X2BAR, -self.Q4 - EZE - PI2_4 * EZE)
        add(X2BAR, IOLD, PI2_2 * EZE)
        # averages enter only through E; their null(E) part is pinned by -P
        P = np.eye(E.shape[1]) - np.linalg.pinv(E) @ E
        add(IREC, IREC, -np.pi ** 2 * EZE - P)
        add(IOLD, IOLD, -np.pi ** 2 * EZE - P)
        add(EK, EK, -self.W)
        ef = self.s.eps_f
        add(FATT, FATT, -b * (2 * ef * X1 - ef ** 2 * np.eye(m.n1)))
        add(PSI, PSI, -np.eye(m.m))
        DS = m.D1.T @ S
        add(WD, WD, -(DS + DS.T) - m.diss.R + m.diss.gamma * np.eye(m.q))

    # --- Schur border ------------------------------------------------------
    def border_rows(self):
        """Schur border as ``(symbol, scale, diagonal, row)`` tuples."""
        m, sec, G = self.m, self.sec, self.G
        a, b = m.alpha_bar, m.beta_bar
        a1, b1 = 1.0 - a, 1.0 - b
        sg, dl = m.sigma, m.delta
        X1, X2, Y1, Y2 = self.X1, self.X2, self.Y1, self.Y2
        ups = sec.B2 @ G @ Y1
        GY = G @ Y1
        Z = _Z
        Om = {
            1: _row("Omega_hat_1", m.A1 @ X1, Z(12), m.B1 @ sec.C2 @ X2, Z(7), m.B1 @ m.D2),
            2: _row("Omega_hat_2", Z(1), a * b1 * ups, Z(3), a1 * b1 * ups, Z(7),
                    sec.A2 @ X2 + sec.B2 @ Y2, sec.A3 @ X2, Z(3), a1 * b1 * ups, b * ups,
                    -sec.B2, sec.B3),
            3: _row("Omega_hat_3", Z(1), sg * b1 * ups, Z(3), -sg * b1 * ups, Z(12),
                    -sg * b1 * ups, Z(3)),
            4: _row("Omega_hat_4", Z(1), -dl * a * ups, Z(3), -dl * a1 * ups, Z(12),
                    -dl * a1 * ups, dl * ups, Z(2)),
            5: _row("Omega_hat_5", Z(1), sg * dl * ups, Z(3), -sg * dl * ups, Z(12),
                    -sg * dl * ups, Z(3)),
            6: _row("Omega_hat_6", Z(1), b1 * a * GY, Z(3), b1 * a1 * GY, Z(7), Y2, Z(4),
                    b1 * a1 * GY, b * GY, Z(2)),
            7: _row("Omega_hat_7", Z(1), b1 * GY, Z(3), -b1 * GY, Z(12), -b1 * GY, Z(3)),
            8: _row("Omega_hat_8", Z(1), -a * GY, Z(3), -a1 * GY, Z(12), -a1 * GY, GY, Z(2)),
            9: _row("Omega_hat_9", Z(1), -GY, Z(3), GY, Z(12), GY, Z(3)),
            10: _row("Omega_hat_10", Z(9), np.sqrt(b) * m.F @ X1, Z(12)),
            11: _row("Omega_hat_11", m.diss.Q_bar @ m.C1 @ X1, Z(20), m.diss.Q_bar @ m.D1),
        }
        self.use(*(f"Omega_hat_{k}" for k in range(1, 12)))
        s = self.s
        kap = [
            -2 * s.eps1 * X1 + s.eps1 ** 2 * self.R[0],
            -2 * s.eps2 * X1 + s.eps2 ** 2 * self.R[1],
            -2 * s.eps3 * X1 + s.eps3 ** 2 * self.R[2],
            -s.eps4 * he(X2) + s.eps4 ** 2 * self.Z2,
        ]
        self.use("kappa_1", "kappa_2", "kappa_3", "kappa_4")
        Im, In1, Iqy = np.eye(m.m), np.eye(m.n1), np.eye(m.qy)
        tb, se = m.theta_bar, np.sqrt(m.eps_sat)
        return [
            ("Omega_hat_1", m.zeta2, kap[0], Om[1]),
            ("Omega_hat_1", m.d2, kap[1], Om[1]),
            ("Omega_hat_1", m.tau2, kap[2], Om[1]),
            ("Omega_hat_2", tb, kap[3], Om[2]),
            ("Omega_hat_3", tb, kap[3], Om[3]),
            ("Omega_hat_4", tb, kap[3], Om[4]),
            ("Omega_hat_5", tb, kap[3], Om[5]),
            ("Omega_hat_6", se, -Im, Om[6]),
            ("Omega_hat_7", se * sg, -Im, Om[7]),
            ("Omega_hat_8", se * dl, -Im, Om[8]),
            ("Omega_hat_9", se * sg * dl, -Im, Om[9]),
            ("Omega_hat_10", 1.0, -In1, Om[10]),
            ("Omega_hat_11", 1.0, -Iqy, Om[11]),
        ]

    def omega_constraint(self, name: str, extra: list[int] | None = None) -> Constraint:
        sizes = self.main_layout() + self.aug_layout() + (extra or [])
        c = Constraint(name, NEG, BlockLayout(sizes))
        self.main_entries(c)
        self.border = self.border_rows()
        for k, (_, scale, diag, row) in enumerate(self.border, start=1):
            col = MAIN_BLOCKS + k
            if scale != 0.0:
                for j, expr in row.items():
                    c.add(col, j, scale * expr)
            c.add(col, col, diag)
        c.labels.update({"main_blocks": MAIN_BLOCKS, "border_blocks": len(self.border)})
        return c

    def side_constraints(self) -> list[Constraint]:
        m = self.m
        out = []
        for i, (Rk, U) in enumerate(zip(self.R, self.U), start=1):
            U1, U2, U3, U4 = U
            c = Constraint(f"recip_convex_{i}", PSD, BlockLayout([m.n1] * 4))
            c.add(1, 1, Rk)
            c.add(1, 3, U1.T)
            c.add(1, 4, U3.T)
            c.add(2, 2, 3 * Rk)
            c.add(2, 3, U2.T)
            c.add(2, 4, U4.T)
            c.add(3, 3, Rk)
            c.add(4, 4, 3 * Rk)
            out.append(c)
        for name, entry in self.reg.entries.items():
            if entry.cone == "pd":
                expr = self.X2s.S if name == "X2" else self.reg[name]
                if expr.shape[0] == 0:
                    continue
                c = Constraint(f"pd_{name}", NEG, BlockLayout([expr.shape[0]]))
                c.add(1, 1, -expr)
                out.append(c)
            elif entry.cone == "lower":
                c = Constraint(f"lb_{name}", PSD, BlockLayout([1]))
                c.add(1, 1, self.reg[name] - entry.lower)
                out.append(c)
        return out

    def params(self, theorem: int) -> dict[str, float]:
        m, s = self.m, self.s
        return dict(theorem=theorem, alpha_bar=m.alpha_bar, beta_bar=m.beta_bar,
                    sigma=m.sigma, delta=m.delta, eps_sat=m.eps_sat, eps1=s.eps1,
                    eps2=s.eps2, eps3=s.eps3, eps4=s.eps4, eps_f=s.eps_f, mu=m.mu,
                    gamma=m.diss.gamma, zeta2=m.zeta2, d2=m.d2, tau2=m.tau2,
                    theta_bar=m.theta_bar, lam=m.lam)

    def check_symbols(self, expected) -> None:
        missing = [s for s in expected if s not in self.used]
        if missing:
            raise AssemblyError(f"unmapped symbol(s): {missing}")

    def finish(self, constraints, theorem: int) -> LmiSystem:
        return LmiSystem(self.reg, constraints + self.side_constraints(),
                         self.params(theorem), self.notes, self.sec.R)


def build_theorem1(model: CascadeModel, G=None, scalars: SynthesisScalars | None = None
                   ) -> LmiSystem:
    """Known-fault synthesis conditions for the realized fault matrix ``G``.

    ``G`` may be a diagonal matrix or its diagonal; it defaults to the
    model's realized fault.
    """
    scalars = scalars or SynthesisScalars()
    b = _Builder(model, model.fault.G if G is None else G, scalars)
    b.variables()
    main = b.omega_constraint("omega")
    b.check_symbols(OMEGA_SYMBOLS)
    return b.finish([main], 1)


def _coef_of(expr, b: _Builder, unit: Affine) -> float:
    """Scalar ``c`` with ``expr == c * unit``, probed at a fixed random point."""
    if expr is None:
        return 0.0
    x = np.random.default_rng(0).standard_normal(b.reg.size)
    u, v = unit.evaluate(x), expr.evaluate(x)
    denom = float(np.vdot(u, u))
    if denom == 0.0:
        return 0.0
    c = float(np.vdot(u, v)) / denom
    if not np.allclose(v, c * u, rtol=0, atol=1e-10 * (1 + np.abs(v).max())):
        raise AssemblyError("uncertain entry is not a multiple of the fault coupling")
    return c


def _pair_columns(b: _Builder):
    """Left/right factors of the eight fault-uncertainty pairs.

    With ``G = G0 + G1 Sigma`` the uncertain part of the bordered matrix is a
    sum over the coupling columns ``j`` of ``M_j Sigma N_j + (.)'`` where
    ``N_j = G1 Y1`` sits at column ``j``.  Each ``M_j`` is split into the rows
    carrying ``B2`` (block 14 and secondary-derivative border rows) and the
    rows carrying the identity (saturation-sector border rows), giving two
    pairs per column.
    """
    m, sec = b.m, b.sec
    a, be = m.alpha_bar, m.beta_bar
    a1, b1 = 1.0 - a, 1.0 - be
    main_coef = {XZ: b1 * a, XD: b1 * a1, EK: b1 * a1, FATT: be}
    G1Y1 = m.fault.G1 @ b.Y1
    ups = sec.B2 @ b.G @ b.Y1
    gy = b.G @ b.Y1
    pairs_b2, pairs_id = [], []
    for j in G_COLUMNS:
        mb2 = {}
        if main_coef[j] != 0.0:
            mb2[B_X2] = main_coef[j] * sec.B2
        for k in (4, 5, 6, 7):
            _, scale, _, row = b.border[k - 1]
            coef = scale * _coef_of(row.get(j), b, ups)
            if coef != 0.0:
                mb2[MAIN_BLOCKS + k] = coef * sec.B2
        mid = {}
        for k in (8, 9, 10, 11):
            _, scale, _, row = b.border[k - 1]
            coef = scale * _coef_of(row.get(j), b, gy)
            if coef != 0.0:
                mid[MAIN_BLOCKS + k] = coef * np.eye(m.m)
        pairs_b2.append((j, mb2, G1Y1))
        pairs_id.append((j, mid, G1Y1))
    return pairs_b2 + pairs_id


def _scalar_times(eps: Affine, M) -> Affine:
    (k, one), = eps.coefs.items()
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return Affine(np.zeros_like(M), {k: float(one[0, 0]) * M})


def build_theorem2(model: CascadeModel, scalars: SynthesisScalars | None = None) -> LmiSystem:
    """Unknown-fault synthesis conditions over the fault interval.

    ``Theta`` is the known-fault matrix at the interval midpoint ``G0``;
    eight bordered pairs ``[eps_i M_i, N_i']`` with diagonal ``-eps_i I``
    absorb the fault radius ``G1``.  The ``eps_i`` are decision scalars
    bounded below by ``EPS_TILDE_MIN``.
    """
    scalars = scalars or SynthesisScalars()
    b = _Builder(model, model.fault.G0, scalars)
    b.variables()
    eps_t = [b.reg.scalar(f"eps_t{k}", lower=EPS_TILDE_MIN) for k in range(1, 9)]
    nu = model.m
    c = b.omega_constraint("lambda", extra=[nu] * 16)
    b.check_symbols(OMEGA_SYMBOLS)
    base = MAIN_BLOCKS + len(b.border)
    Im = np.eye(nu)
    for k, (j, mcols, N) in enumerate(_pair_columns(b)):
        cm, cn = base + 2 * k + 1, base + 2 * k + 2
        if mcols and np.any(model.fault.G1):
            for row, Mblk in mcols.items():
                c.add(row, cm, _scalar_times(eps_t[k], Mblk))
            c.add(j, cn, N.T)
        c.add(cm, cm, -_scalar_times(eps_t[k], Im))
        c.add(cn, cn, -_scalar_times(eps_t[k], Im))
        b.use(f"B_tilde_{k + 1}", f"Y_tilde_{k + 1}")
    b.use("B_tilde", "eps_tilde")
    b.check_symbols(FAULT_SYMBOLS)
    b.notes.append("fault-uncertainty pairs: per coupling column (2, 6, 19, 20) one pair "
                   "over the B2-type rows and one over the identity rows")
    return b.finish([c], 2)
