# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hypergeometric series summation (hot path of every Jost evaluation)."""
import numpy as np
from libc.math cimport hypot


cdef inline double cabs_(double complex z) nogil:
    return hypot(z.real, z.imag)


def hyp_series(double complex a, double complex b, double complex c,
               const double complex[::1] zeta, const double complex[::1] head,
               double eps, long nmin, long cap):
    """Sum sum_n coef_n zeta^n and its zeta-derivative, elementwise.

    ``head`` holds coef_0..coef_s; later coefficients follow the ratio
    (a+n)(b+n)/((n+1)(c+n)).  Returns (value, derivative, nterms); nterms is
    -1 for entries that hit ``cap`` without meeting the stopping rule.
    """
    cdef Py_ssize_t m = zeta.shape[0]
    cdef long nh = head.shape[0]
    out = np.empty(m, dtype=np.complex128)
    dout = np.empty(m, dtype=np.complex128)
    nt = np.empty(m, dtype=np.int64)
    cdef double complex[::1] o = out
    cdef double complex[::1] do = dout
    cdef long long[::1] ntv = nt
    cdef Py_ssize_t k
    cdef long n, good
    cdef double complex z, zn, zn1, coef, term, dterm, s, ds
    with nogil:
        for k in range(m):
            z = zeta[k]
            zn = 1.0
            zn1 = 0.0
            s = 0.0
            ds = 0.0
            good = 0
            n = 0
            coef = head[0]
            while True:
                if n < nh:
                    coef = head[n]
                else:
                    coef = coef * (a + (n - 1)) * (b + (n - 1)) / (n * (c + (n - 1)))
                term = coef * zn
                dterm = n * coef * zn1
                s = s + term
                ds = ds + dterm
                if n >= nmin and cabs_(term) <= eps * cabs_(s) and cabs_(dterm) <= eps * cabs_(ds):
                    good = good + 1
                else:
                    good = 0
                if good >= 3:
                    ntv[k] = n + 1
                    break
                n = n + 1
                if n > cap:
                    ntv[k] = -1
                    break
                zn1 = zn
                zn = zn * z
            o[k] = s
            do[k] = ds
    return out, dout, nt
