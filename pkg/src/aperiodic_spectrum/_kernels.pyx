# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: Fibonacci trace recursion over energy grids and
log-scaled products of 2x2 transfer matrices along words.

Both functions mirror :mod:`aperiodic_spectrum._kernels_py` exactly; the
pure-Python module is the reference and fallback.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log, exp, log1p, INFINITY

cnp.import_array()

cdef double LOG_SWITCH = 1e100
cdef double LOG2 = 0.6931471805599453


cdef inline void _slog_add(double s1, double l1, double s2, double l2,
                           double* s, double* l) noexcept nogil:
    # signed-log addition: (s1 e^l1) + (s2 e^l2)
    cdef double d
    if s1 == 0.0 or l1 == -INFINITY:
        s[0] = s2
        l[0] = l2
        return
    if s2 == 0.0 or l2 == -INFINITY:
        s[0] = s1
        l[0] = l1
        return
    if l2 > l1:
        s1, s2 = s2, s1
        l1, l2 = l2, l1
    d = exp(l2 - l1)
    if s1 == s2:
        s[0] = s1
        l[0] = l1 + log1p(d)
    else:
        if d >= 1.0:
            s[0] = 0.0
            l[0] = -INFINITY
        else:
            s[0] = s1
            l[0] = l1 + log1p(-d)


cdef inline void _to_slog(double x, double* s, double* l) noexcept nogil:
    if x > 0:
        s[0] = 1.0
        l[0] = log(x)
    elif x < 0:
        s[0] = -1.0
        l[0] = log(-x)
    else:
        s[0] = 0.0
        l[0] = -INFINITY


cdef inline int _crit(double la, double lb, double lc, double g) noexcept nogil:
    # escape test on log-magnitudes with threshold offset g (log domain)
    return la > g and lb > g and la + lb > lc + g


def trace_final(double[::1] x1, double[::1] x0, double[::1] xm1, int n,
                double guard=1e-12):
    """Return ``(x_n, log|x_n|, escape_index, ambiguous)`` for every energy."""
    cdef Py_ssize_t N = x1.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_x = np.empty(N)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_l = np.empty(N)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_e = np.full(N, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out_a = np.zeros(N, dtype=np.uint8)
    cdef double[::1] vx = out_x
    cdef double[::1] vl = out_l
    cdef cnp.int64_t[::1] ve = out_e
    cdef cnp.uint8_t[::1] va = out_a
    cdef Py_ssize_t i
    cdef int m, logmode, esc, amb
    cdef double a, b, c, t
    cdef double sa, la, sb, lb, sc, lc, s1, l1
    cdef double gpos = log1p(guard), gneg = log1p(-guard)
    with nogil:
        for i in range(N):
            a = x1[i]
            b = x0[i]
            c = xm1[i]
            esc = -1
            amb = 0
            logmode = 0
            sa = sb = sc = 0.0
            la = lb = lc = 0.0
            if n <= 1:
                if n == 1:
                    t = a
                elif n == 0:
                    t = b
                else:
                    t = c
                vx[i] = t
                vl[i] = log(fabs(t)) if t != 0.0 else -INFINITY
                continue
            m = 0
            while True:
                if not logmode:
                    if fabs(a) > 1.0 + guard and fabs(b) > 1.0 + guard and fabs(a * b) > fabs(c) + guard:
                        if esc < 0:
                            esc = m
                    elif fabs(a) > 1.0 + guard and fabs(b) > 1.0 + guard and fabs(a * b) > fabs(c) - guard:
                        amb = 1
                else:
                    if _crit(la, lb, lc, gpos):
                        if esc < 0:
                            esc = m
                    elif la > gpos and lb > gpos and la + lb > lc + gneg:
                        amb = 1
                if m + 1 >= n:
                    break
                if not logmode:
                    t = 2.0 * a * b - c
                    if not (fabs(t) <= LOG_SWITCH and fabs(a) <= LOG_SWITCH
                            and fabs(b) <= LOG_SWITCH and fabs(c) <= LOG_SWITCH):
                        logmode = 1
                        _to_slog(a, &sa, &la)
                        _to_slog(b, &sb, &lb)
                        _to_slog(c, &sc, &lc)
                    else:
                        c = b
                        b = a
                        a = t
                        m += 1
                        continue
                _slog_add(sa * sb, LOG2 + la + lb, -sc, lc, &s1, &l1)
                sc = sb
                lc = lb
                sb = sa
                lb = la
                sa = s1
                la = l1
                m += 1
            if logmode:
                vl[i] = la
                if la < 709.0:
                    vx[i] = sa * exp(la)
                else:
                    vx[i] = sa * INFINITY
            else:
                vx[i] = a
                vl[i] = log(fabs(a)) if a != 0.0 else -INFINITY
            ve[i] = esc
            va[i] = amb if esc < 0 else 0
    return out_x, out_l, out_e, out_a.astype(bool)


def word_product(double[:, :, :, ::1] mats, cnp.intp_t[::1] codes):
    """Log-scaled product ``M[w_{k-1}] ... M[w_0]`` for each energy.

    ``mats`` has shape ``(n_energies, n_letters, 2, 2)``. Returns the scaled
    product (largest entry magnitude at most 1e100) and the log scale.
    """
    cdef Py_ssize_t N = mats.shape[0]
    cdef Py_ssize_t K = codes.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((N, 2, 2))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] outlog = np.zeros(N)
    cdef double[:, :, ::1] vo = out
    cdef double[::1] vlog = outlog
    cdef Py_ssize_t i, j
    cdef cnp.intp_t q
    cdef double p11, p12, p21, p22, r11, r12, r21, r22, m11, m12, m21, m22, s, acc
    with nogil:
        for i in range(N):
            p11 = 1.0
            p12 = 0.0
            p21 = 0.0
            p22 = 1.0
            acc = 0.0
            for j in range(K):
                q = codes[j]
                m11 = mats[i, q, 0, 0]
                m12 = mats[i, q, 0, 1]
                m21 = mats[i, q, 1, 0]
                m22 = mats[i, q, 1, 1]
                r11 = m11 * p11 + m12 * p21
                r12 = m11 * p12 + m12 * p22
                r21 = m21 * p11 + m22 * p21
                r22 = m21 * p12 + m22 * p22
                s = fabs(r11)
                if fabs(r12) > s:
                    s = fabs(r12)
                if fabs(r21) > s:
                    s = fabs(r21)
                if fabs(r22) > s:
                    s = fabs(r22)
                if s > LOG_SWITCH:
                    r11 /= s
                    r12 /= s
                    r21 /= s
                    r22 /= s
                    acc += log(s)
                p11 = r11
                p12 = r12
                p21 = r21
                p22 = r22
            vo[i, 0, 0] = p11
            vo[i, 0, 1] = p12
            vo[i, 1, 0] = p21
            vo[i, 1, 1] = p22
            vlog[i] = acc
    return out, outlog
