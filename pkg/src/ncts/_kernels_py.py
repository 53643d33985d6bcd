"""Pure-Python reference for the simulation kernel.

Same contract as the compiled ``_kernels`` module; used when the extension
is not built.  See :func:`integrate` for the data layout.
"""

from __future__ import annotations

import math

import numpy as np

OK = 0
ALGEBRAIC_FAIL = 1
NONFINITE = 2

_TOL = 1e-12


def _delayed(hist, hist_left, pos, left):
    # inside a grid interval use its right limit at the start and left limit at the end
    i0 = int(math.floor(pos))
    f = pos - i0
    if f == 0.0:
        return hist_left[i0] if left else hist[i0]
    return (1.0 - f) * hist[i0] + f * hist_left[i0 + 1]


def _solve_alg(zd, x2del, w, u1g, P):
    """Return ``(z, u, sat)`` or ``None`` when no saturation pattern is consistent."""
    (Ad, A3d, Bd, B3d, Aa_d, A3a, Ba, B3a, KVd, KVa, pat, Minv, pat_ok, xi, V) = P
    r = zd.shape[0]
    na = Aa_d.shape[0]
    ud = u1g + KVd @ zd
    if na == 0:
        u = ud
        return zd.copy(), u, np.clip(u, -xi, xi)
    base = Aa_d @ zd + A3a @ x2del + B3a @ w
    for p in range(pat.shape[0]):
        if not pat_ok[p]:
            continue
        code = pat[p]
        drive = np.where(code == 0, ud, code * xi)
        za = -Minv[p] @ (base + Ba @ drive)
        u = ud + KVa @ za
        good = True
        for i in range(code.shape[0]):
            lim = xi[i] * (1.0 + _TOL)
            if code[i] == 0 and abs(u[i]) > lim:
                good = False
            elif code[i] == 1 and u[i] < xi[i] * (1.0 - _TOL):
                good = False
            elif code[i] == -1 and u[i] > -xi[i] * (1.0 - _TOL):
                good = False
            if not good:
                break
        if good:
            sat = np.where(code == 0, u, code * xi)
            z = np.empty(r + na)
            z[:r] = zd
            z[r:] = za
            return z, u, sat
    return None


def integrate(k0, nsteps, dt, lag, hist_off, u1g, w_half, w_left, A1, B1C2, B1D2,
              Ad, A3d, Bd, B3d, Aa_d, A3a, Ba, B3a, KVd, KVa, pat, Minv, pat_ok, xi, V,
              hist, hist_left, out_x1, out_u2, out_sat):
    """Advance the closed loop from grid row ``k0`` by ``nsteps`` RK4 steps.

    ``hist`` and ``hist_left`` hold x2 on the grid (row ``hist_off`` is
    t = 0) as right and left limits; they differ where the algebraic part
    jumps (sampling instants, t = 0).  Row ``k0`` holds the state on entry
    and its right limit is re-solved for the new held input ``u1g``.
    ``lag`` is the secondary delay in steps (0 means the delay was folded
    into ``Ad``/``Aa_d`` upstream).  ``w_half[j]`` and ``w_left[j]`` are the
    disturbance and its left limit at ``j * dt / 2``.

    Returns ``(status, row)``; ``row`` is the failing grid row or -1.
    """
    P = (Ad, A3d, Bd, B3d, Aa_d, A3a, Ba, B3a, KVd, KVa, pat, Minv, pat_ok, xi, V)
    r = Ad.shape[0]
    Vd = V[:, :r]

    def stage(k2, x1, zd, left=False):
        # k2 is the stage time in half steps
        x2del = _delayed(hist, hist_left, hist_off + 0.5 * k2 - lag, left)
        w = w_left[k2] if left else w_half[k2]
        sol = _solve_alg(zd, x2del, w, u1g, P)
        if sol is None:
            return None
        z, u, sat = sol
        x2 = V @ z
        dx1 = A1 @ x1 + B1C2 @ x2 + B1D2 @ w
        dzd = Ad @ z + A3d @ x2del + Bd @ sat + B3d @ w
        return dx1, dzd, x2, u, sat

    x1 = np.array(out_x1[k0], dtype=float)
    zd = Vd.T @ hist[hist_off + k0]
    s1 = stage(2 * k0, x1, zd)
    if s1 is None:
        return ALGEBRAIC_FAIL, k0
    hist[hist_off + k0] = s1[2]
    out_u2[k0] = s1[3]
    out_sat[k0] = s1[4]
    for k in range(k0, k0 + nsteps):
        s2 = stage(2 * k + 1, x1 + 0.5 * dt * s1[0], zd + 0.5 * dt * s1[1])
        if s2 is None:
            return ALGEBRAIC_FAIL, k
        s3 = stage(2 * k + 1, x1 + 0.5 * dt * s2[0], zd + 0.5 * dt * s2[1])
        if s3 is None:
            return ALGEBRAIC_FAIL, k
        s4 = stage(2 * k + 2, x1 + dt * s3[0], zd + dt * s3[1], left=True)
        if s4 is None:
            return ALGEBRAIC_FAIL, k + 1
        x1 = x1 + dt / 6.0 * (s1[0] + 2.0 * s2[0] + 2.0 * s3[0] + s4[0])
        zd = zd + dt / 6.0 * (s1[1] + 2.0 * s2[1] + 2.0 * s3[1] + s4[1])
        if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(zd))):
            return NONFINITE, k + 1
        # consistent algebraic part at the new row, both one-sided limits
        fin_left = stage(2 * (k + 1), x1, zd, left=True)
        fin = stage(2 * (k + 1), x1, zd)
        if fin is None or fin_left is None:
            return ALGEBRAIC_FAIL, k + 1
        out_x1[k + 1] = x1
        hist_left[hist_off + k + 1] = fin_left[2]
        hist[hist_off + k + 1] = fin[2]
        out_u2[k + 1] = fin[3]
        out_sat[k + 1] = fin[4]
        s1 = fin  # first stage of the next step
    return OK, -1
