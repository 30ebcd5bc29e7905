# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: trajectory simulation, path log-densities, forward pass.

Mirrors ``_kernels_py`` operation for operation.  Simulation and lattice
sampling are bit-identical with the fallback; density evaluations agree
to the last few ulp (reduction order differs).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport erf, erfc, exp, log, sqrt, INFINITY

cnp.import_array()

cdef double SQRT_HALF = sqrt(0.5)


cdef inline double _phi_diff(double z1, double z2) noexcept nogil:
    # Phi(z1) - Phi(z2) for z1 >= z2, stable in both tails.
    if z2 >= 0.0:
        return 0.5 * (erfc(z2 * SQRT_HALF) - erfc(z1 * SQRT_HALF))
    if z1 <= 0.0:
        return 0.5 * (erfc(-z1 * SQRT_HALF) - erfc(-z2 * SQRT_HALF))
    return 0.5 * (erf(z1 * SQRT_HALF) - erf(z2 * SQRT_HALF))


cdef inline double _start_dens(double y, double v, double a1, double a2) noexcept nogil:
    return _phi_diff(y - v - a1, y - v - a2) / (a2 - a1)


cdef inline double _step_dens(
    double y, double y_prev, double v_prev, double v_next,
    double sa2, double sb2, double a1, double a2,
    const double* gh_e, const double* gh_w, Py_ssize_t nq,
) noexcept nogil:
    cdef double acc = 0.0
    cdef double sig, shifted, d
    cdef Py_ssize_t q
    shifted = y - v_next
    for q in range(nq):
        d = y_prev - gh_e[q]
        sig = sqrt(sa2 * v_prev * v_prev + sb2 * d * d + 1.0)
        acc += gh_w[q] * _phi_diff((shifted - a1) / sig, (shifted - a2) / sig)
    return acc / (a2 - a1)


def phi_diff(z1, z2):
    """Vectorized Phi(z1) - Phi(z2); thin wrapper for parity tests."""
    z1a = np.atleast_1d(np.asarray(z1, dtype=np.float64))
    z2a = np.atleast_1d(np.asarray(z2, dtype=np.float64))
    z1a, z2a = np.broadcast_arrays(z1a, z2a)
    out = np.empty(z1a.shape, dtype=np.float64)
    cdef const double[::1] f1 = np.ascontiguousarray(z1a).ravel()
    cdef const double[::1] f2 = np.ascontiguousarray(z2a).ravel()
    cdef double[::1] fo = out.ravel()
    cdef Py_ssize_t i
    for i in range(f1.shape[0]):
        fo[i] = _phi_diff(f1[i], f2[i])
    return out if np.ndim(z1) or np.ndim(z2) else float(out[0])


def simulate_paths(xv, a, b, e, w, u, start, xprev_val, yprev):
    """Run the output recursion for each row; same contract as the fallback."""
    cdef const double[:, ::1] xvv = np.ascontiguousarray(xv, dtype=np.float64)
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[:, ::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef const double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[:, ::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] xpv = np.ascontiguousarray(xprev_val, dtype=np.float64)
    cdef const double[::1] ypv = np.ascontiguousarray(yprev, dtype=np.float64)
    cdef Py_ssize_t B = xvv.shape[0], N = xvv.shape[1]
    out = np.empty((B, N), dtype=np.float64)
    cdef double[:, ::1] y = out
    cdef bint st = bool(start)
    cdef Py_ssize_t i, t
    with nogil:
        for i in range(B):
            if st:
                y[i, 0] = xvv[i, 0] + wv[i, 0] + uv[i, 0]
            else:
                y[i, 0] = xvv[i, 0] + av[i, 0] * xpv[i] + bv[i, 0] * (ypv[i] - ev[i, 0]) + wv[i, 0] + uv[i, 0]
            for t in range(1, N):
                y[i, t] = xvv[i, t] + av[i, t] * xvv[i, t - 1] + bv[i, t] * (y[i, t - 1] - ev[i, t]) + wv[i, t] + uv[i, t]
    return out


def conditional_loglik(y, xv, start, xprev_val, yprev, sa2, sb2, alpha1, alpha2, gh_e, gh_w):
    """log f(y | x) per row plus the first underflow step (-1 if none)."""
    cdef const double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] xvv = np.ascontiguousarray(xv, dtype=np.float64)
    cdef const double[::1] xpv = np.ascontiguousarray(xprev_val, dtype=np.float64)
    cdef const double[::1] ypv = np.ascontiguousarray(yprev, dtype=np.float64)
    cdef const double[::1] ghe = np.ascontiguousarray(gh_e, dtype=np.float64)
    cdef const double[::1] ghw = np.ascontiguousarray(gh_w, dtype=np.float64)
    cdef Py_ssize_t B = yv.shape[0], N = yv.shape[1], nq = ghe.shape[0]
    cdef double csa2 = sa2, csb2 = sb2, ca1 = alpha1, ca2 = alpha2
    ll_arr = np.zeros(B, dtype=np.float64)
    bad_arr = np.full(B, -1, dtype=np.int64)
    cdef double[::1] ll = ll_arr
    cdef cnp.int64_t[::1] bad = bad_arr
    cdef bint st = bool(start)
    cdef Py_ssize_t i, t
    cdef double d
    with nogil:
        for i in range(B):
            if st:
                d = _start_dens(yv[i, 0], xvv[i, 0], ca1, ca2)
            else:
                d = _step_dens(yv[i, 0], ypv[i], xpv[i], xvv[i, 0], csa2, csb2, ca1, ca2, &ghe[0], &ghw[0], nq)
            if d <= 0.0:
                bad[i] = 0
                ll[i] = -INFINITY
                continue
            ll[i] = log(d)
            for t in range(1, N):
                d = _step_dens(yv[i, t], yv[i, t - 1], xvv[i, t - 1], xvv[i, t], csa2, csb2, ca1, ca2, &ghe[0], &ghw[0], nq)
                if d <= 0.0:
                    bad[i] = t
                    ll[i] = -INFINITY
                    break
                ll[i] += log(d)
    return ll_arr, bad_arr


def forward_loglik(y, levels, last, trans, init_probs, start, xprev_val, yprev,
                   sa2, sb2, alpha1, alpha2, gh_e, gh_w):
    """Scaled forward pass over the input lattice; log f(y_0^n) per row."""
    cdef const double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] lev = np.ascontiguousarray(levels, dtype=np.float64)
    cdef const cnp.int64_t[::1] lastv = np.ascontiguousarray(last, dtype=np.int64)
    cdef const double[:, ::1] tr = np.ascontiguousarray(trans, dtype=np.float64)
    cdef const double[::1] ip = np.ascontiguousarray(init_probs, dtype=np.float64)
    cdef const double[::1] xpv = np.ascontiguousarray(xprev_val, dtype=np.float64)
    cdef const double[::1] ypv = np.ascontiguousarray(yprev, dtype=np.float64)
    cdef const double[::1] ghe = np.ascontiguousarray(gh_e, dtype=np.float64)
    cdef const double[::1] ghw = np.ascontiguousarray(gh_w, dtype=np.float64)
    cdef Py_ssize_t B = yv.shape[0], N = yv.shape[1], nq = ghe.shape[0]
    cdef Py_ssize_t S = tr.shape[0], M = lev.shape[0]
    cdef double csa2 = sa2, csb2 = sb2, ca1 = alpha1, ca2 = alpha2
    ll_arr = np.zeros(B, dtype=np.float64)
    bad_arr = np.full(B, -1, dtype=np.int64)
    cdef double[::1] ll = ll_arr
    cdef cnp.int64_t[::1] bad = bad_arr
    msg_arr = np.empty(S, dtype=np.float64)
    nxt_arr = np.empty(S, dtype=np.float64)
    dmat_arr = np.empty((M, M), dtype=np.float64)
    cdef double[::1] msg = msg_arr
    cdef double[::1] nxt = nxt_arr
    cdef double[:, ::1] dmat = dmat_arr
    cdef bint st = bool(start)
    cdef Py_ssize_t i, t, s, s2, mp, mn
    cdef double c, d, acc
    with nogil:
        for i in range(B):
            # time 0
            c = 0.0
            for s in range(S):
                if st:
                    d = _start_dens(yv[i, 0], lev[lastv[s]], ca1, ca2)
                else:
                    d = _step_dens(yv[i, 0], ypv[i], xpv[i], lev[lastv[s]], csa2, csb2, ca1, ca2, &ghe[0], &ghw[0], nq)
                msg[s] = ip[s] * d
                c += msg[s]
            if c <= 0.0:
                bad[i] = 0
                ll[i] = -INFINITY
                continue
            ll[i] = log(c)
            for s in range(S):
                msg[s] /= c
            # later steps
            for t in range(1, N):
                for mp in range(M):
                    for mn in range(M):
                        dmat[mp, mn] = _step_dens(yv[i, t], yv[i, t - 1], lev[mp], lev[mn], csa2, csb2, ca1, ca2, &ghe[0], &ghw[0], nq)
                c = 0.0
                for s2 in range(S):
                    acc = 0.0
                    for s in range(S):
                        acc += msg[s] * tr[s, s2] * dmat[lastv[s], lastv[s2]]
                    nxt[s2] = acc
                    c += acc
                if c <= 0.0:
                    bad[i] = t
                    ll[i] = -INFINITY
                    break
                ll[i] += log(c)
                for s2 in range(S):
                    msg[s2] = nxt[s2] / c
    return ll_arr, bad_arr


def sample_lattice_paths(init_cdf, trans_cdf, unif):
    """Map uniform draws to lattice state paths by inverse-CDF steps."""
    cdef const double[::1] ic = np.ascontiguousarray(init_cdf, dtype=np.float64)
    cdef const double[:, ::1] tc = np.ascontiguousarray(trans_cdf, dtype=np.float64)
    cdef const double[:, ::1] uv = np.ascontiguousarray(unif, dtype=np.float64)
    cdef Py_ssize_t B = uv.shape[0], N = uv.shape[1], S = ic.shape[0]
    out = np.empty((B, N), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] states = out
    cdef Py_ssize_t i, t, j
    cdef double uval
    cdef Py_ssize_t prev
    with nogil:
        for i in range(B):
            uval = uv[i, 0]
            j = 0
            while j < S - 1 and uval > ic[j]:
                j += 1
            states[i, 0] = j
            for t in range(1, N):
                prev = states[i, t - 1]
                uval = uv[i, t]
                j = 0
                while j < S - 1 and uval > tc[prev, j]:
                    j += 1
                states[i, t] = j
    return out
