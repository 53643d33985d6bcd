# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernel; mirrors ``ncts._kernels_py.integrate``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, isfinite

cnp.import_array()

OK = 0
ALGEBRAIC_FAIL = 1
NONFINITE = 2

cdef double _TOL = 1e-12


cdef class _Ctx:
    cdef double[:, ::1] A1, B1C2, B1D2, Ad, A3d, Bd, B3d, Aa_d, A3a, Ba, B3a, KVd, KVa, V
    cdef double[:, ::1] hist, hist_left, w_half, w_left, pat
    cdef double[:, :, ::1] Minv
    cdef long[::1] pat_ok
    cdef double[::1] xi, u1g
    cdef int n1, n2, r, na, m, q
    cdef double lag
    cdef Py_ssize_t hist_off
    # scratch
    cdef double[::1] x2del, base, drive, za, ud, z

    cdef int stage(self, Py_ssize_t k2, double[::1] x1, double[::1] zd,
                   double[::1] dx1, double[::1] dzd, double[::1] x2,
                   double[::1] u, double[::1] sat, int left) nogil:
        cdef Py_ssize_t i, j, p, i0
        cdef double pos, f, acc, lim, c
        cdef int good
        cdef int n1 = self.n1, n2 = self.n2, r = self.r, na = self.na
        cdef int m = self.m, q = self.q
        cdef double[:, ::1] wv
        pos = self.hist_off + 0.5 * k2 - self.lag
        i0 = <Py_ssize_t>floor(pos)
        f = pos - i0
        wv = self.w_left if left else self.w_half
        # inside a grid interval: right limit at its start, left limit at its end
        for j in range(n2):
            if f == 0.0:
                self.x2del[j] = self.hist_left[i0, j] if left else self.hist[i0, j]
            else:
                self.x2del[j] = (1.0 - f) * self.hist[i0, j] + f * self.hist_left[i0 + 1, j]
        for i in range(m):
            acc = self.u1g[i]
            for j in range(r):
                acc = acc + self.KVd[i, j] * zd[j]
            self.ud[i] = acc
        for j in range(r):
            self.z[j] = zd[j]
        if na == 0:
            for i in range(m):
                u[i] = self.ud[i]
                lim = self.xi[i]
                sat[i] = lim if u[i] > lim else (-lim if u[i] < -lim else u[i])
        else:
            for i in range(na):
                acc = 0.0
                for j in range(r):
                    acc = acc + self.Aa_d[i, j] * zd[j]
                for j in range(n2):
                    acc = acc + self.A3a[i, j] * self.x2del[j]
                for j in range(q):
                    acc = acc + self.B3a[i, j] * wv[k2, j]
                self.base[i] = acc
            good = 0
            for p in range(self.pat.shape[0]):
                if not self.pat_ok[p]:
                    continue
                for i in range(m):
                    c = self.pat[p, i]
                    self.drive[i] = self.ud[i] if c == 0.0 else c * self.xi[i]
                for i in range(na):
                    acc = self.base[i]
                    for j in range(m):
                        acc = acc + self.Ba[i, j] * self.drive[j]
                    self.za[i] = acc
                for i in range(na):
                    acc = 0.0
                    for j in range(na):
                        acc = acc - self.Minv[p, i, j] * self.za[j]
                    self.z[r + i] = acc
                good = 1
                for i in range(m):
                    acc = self.ud[i]
                    for j in range(na):
                        acc = acc + self.KVa[i, j] * self.z[r + j]
                    u[i] = acc
                    c = self.pat[p, i]
                    lim = self.xi[i]
                    if c == 0.0 and fabs(acc) > lim * (1.0 + _TOL):
                        good = 0
                    elif c == 1.0 and acc < lim * (1.0 - _TOL):
                        good = 0
                    elif c == -1.0 and acc > -lim * (1.0 - _TOL):
                        good = 0
                    if not good:
                        break
                if good:
                    for i in range(m):
                        c = self.pat[p, i]
                        sat[i] = u[i] if c == 0.0 else c * self.xi[i]
                    break
            if not good:
                return 1
        for i in range(n2):
            acc = 0.0
            for j in range(n2):
                acc = acc + self.V[i, j] * self.z[j]
            x2[i] = acc
        for i in range(n1):
            acc = 0.0
            for j in range(n1):
                acc = acc + self.A1[i, j] * x1[j]
            for j in range(n2):
                acc = acc + self.B1C2[i, j] * x2[j]
            for j in range(q):
                acc = acc + self.B1D2[i, j] * wv[k2, j]
            dx1[i] = acc
        for i in range(r):
            acc = 0.0
            for j in range(n2):
                acc = acc + self.Ad[i, j] * self.z[j] + self.A3d[i, j] * self.x2del[j]
            for j in range(m):
                acc = acc + self.Bd[i, j] * sat[j]
            for j in range(q):
                acc = acc + self.B3d[i, j] * wv[k2, j]
            dzd[i] = acc
        return 0


def integrate(Py_ssize_t k0, Py_ssize_t nsteps, double dt, double lag, Py_ssize_t hist_off,
              u1g, w_half, w_left, A1, B1C2, B1D2, Ad, A3d, Bd, B3d, Aa_d, A3a, Ba, B3a, KVd, KVa,
              pat, Minv, pat_ok, xi, V, double[:, ::1] hist, double[:, ::1] hist_left, double[:, ::1] out_x1,
              double[:, ::1] out_u2, double[:, ::1] out_sat):
    """See ``ncts._kernels_py.integrate``."""
    cdef _Ctx c = _Ctx()
    c.A1 = np.ascontiguousarray(A1, dtype=float)
    c.B1C2 = np.ascontiguousarray(B1C2, dtype=float)
    c.B1D2 = np.ascontiguousarray(B1D2, dtype=float)
    c.Ad = np.ascontiguousarray(Ad, dtype=float)
    c.A3d = np.ascontiguousarray(A3d, dtype=float)
    c.Bd = np.ascontiguousarray(Bd, dtype=float)
    c.B3d = np.ascontiguousarray(B3d, dtype=float)
    c.Aa_d = np.ascontiguousarray(Aa_d, dtype=float)
    c.A3a = np.ascontiguousarray(A3a, dtype=float)
    c.Ba = np.ascontiguousarray(Ba, dtype=float)
    c.B3a = np.ascontiguousarray(B3a, dtype=float)
    c.KVd = np.ascontiguousarray(KVd, dtype=float)
    c.KVa = np.ascontiguousarray(KVa, dtype=float)
    c.V = np.ascontiguousarray(V, dtype=float)
    c.w_half = np.ascontiguousarray(w_half, dtype=float)
    c.w_left = np.ascontiguousarray(w_left, dtype=float)
    c.pat = np.ascontiguousarray(pat, dtype=float)
    c.Minv = np.ascontiguousarray(Minv, dtype=float)
    c.pat_ok = np.ascontiguousarray(pat_ok, dtype=np.int_)
    c.xi = np.ascontiguousarray(xi, dtype=float)
    c.u1g = np.ascontiguousarray(u1g, dtype=float)
    c.hist = hist
    c.hist_left = hist_left
    c.lag = lag
    c.hist_off = hist_off
    c.n1 = out_x1.shape[1]
    c.n2 = hist.shape[1]
    c.r = c.Ad.shape[0]
    c.na = c.n2 - c.r
    c.m = c.xi.shape[0]
    c.q = c.w_half.shape[1]
    c.x2del = np.zeros(c.n2)
    c.base = np.zeros(max(c.na, 1))
    c.drive = np.zeros(c.m)
    c.za = np.zeros(max(c.na, 1))
    c.ud = np.zeros(c.m)
    c.z = np.zeros(c.n2)

    cdef int n1 = c.n1, r = c.r, n2 = c.n2, m = c.m
    cdef double[:, ::1] dx = np.zeros((4, n1)), dz = np.zeros((4, max(r, 1)))
    cdef double[::1] x1 = np.array(out_x1[k0], dtype=float)
    cdef double[::1] zd = np.zeros(max(r, 1))
    cdef double[::1] xs = np.zeros(n1), zs = np.zeros(max(r, 1))
    cdef double[::1] x2 = np.zeros(n2), u = np.zeros(m), sat = np.zeros(m)
    cdef double[::1] x2l = np.zeros(n2), ul = np.zeros(m), satl = np.zeros(m)
    cdef double[::1] dxl = np.zeros(n1), dzl = np.zeros(max(r, 1))
    cdef Py_ssize_t k, i, j, s
    cdef double acc
    cdef double[3] frac
    frac[0] = 0.5
    frac[1] = 0.5
    frac[2] = 1.0

    for j in range(r):
        acc = 0.0
        for i in range(n2):
            acc = acc + c.V[i, j] * hist[hist_off + k0, i]
        zd[j] = acc
    if c.stage(2 * k0, x1, zd, dx[0], dz[0], x2, u, sat, 0):
        return ALGEBRAIC_FAIL, k0
    for i in range(n2):
        hist[hist_off + k0, i] = x2[i]
    for i in range(m):
        out_u2[k0, i] = u[i]
        out_sat[k0, i] = sat[i]
    for k in range(k0, k0 + nsteps):
        for s in range(3):
            for i in range(n1):
                xs[i] = x1[i] + frac[s] * dt * dx[s, i]
            for i in range(r):
                zs[i] = zd[i] + frac[s] * dt * dz[s, i]
            if c.stage(2 * k + 1 + (s // 2), xs, zs, dx[s + 1], dz[s + 1], x2, u, sat,
                       1 if s == 2 else 0):
                return ALGEBRAIC_FAIL, (k + 1 if s == 2 else k)
        for i in range(n1):
            x1[i] = x1[i] + dt / 6.0 * (dx[0, i] + 2.0 * dx[1, i] + 2.0 * dx[2, i] + dx[3, i])
            if not isfinite(x1[i]):
                return NONFINITE, k + 1
        for i in range(r):
            zd[i] = zd[i] + dt / 6.0 * (dz[0, i] + 2.0 * dz[1, i] + 2.0 * dz[2, i] + dz[3, i])
            if not isfinite(zd[i]):
                return NONFINITE, k + 1
        # consistent algebraic part at the new row, both one-sided limits;
        # the right limit is reused as the next first stage
        if c.stage(2 * (k + 1), x1, zd, dxl, dzl, x2l, ul, satl, 1):
            return ALGEBRAIC_FAIL, k + 1
        if c.stage(2 * (k + 1), x1, zd, dx[0], dz[0], x2, u, sat, 0):
            return ALGEBRAIC_FAIL, k + 1
        for i in range(n1):
            out_x1[k + 1, i] = x1[i]
        for i in range(n2):
            hist[hist_off + k + 1, i] = x2[i]
            hist_left[hist_off + k + 1, i] = x2l[i]
        for i in range(m):
            out_u2[k + 1, i] = u[i]
            out_sat[k + 1, i] = sat[i]
    return OK, -1
