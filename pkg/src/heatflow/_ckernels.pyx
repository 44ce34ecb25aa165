# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Same signatures and semantics as _pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sqrt, log, exp, fabs, INFINITY

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)

cnp.import_array()

NAME = "cython"


def dirichlet_sum(s, nterms):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] sv = np.ascontiguousarray(np.ravel(s), dtype=np.complex128)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nv = np.ascontiguousarray(np.ravel(nterms), dtype=np.int64)
    cdef Py_ssize_t m = sv.shape[0], i
    cdef long n
    cdef double complex acc, si
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(m, dtype=np.complex128)
    with nogil:
        for i in range(m):
            acc = 0
            si = sv[i]
            for n in range(1, nv[i] + 1):
                acc = acc + cexp(-si * log(<double>n))
            out[i] = acc
    return out.reshape(np.shape(s))


def rs_main_sum(t, theta, nterms):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tv = np.ascontiguousarray(np.ravel(t), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] th = np.ascontiguousarray(np.ravel(theta), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nv = np.ascontiguousarray(np.ravel(nterms), dtype=np.int64)
    cdef Py_ssize_t m = tv.shape[0], i
    cdef long n
    cdef double acc
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    with nogil:
        for i in range(m):
            acc = 0.0
            for n in range(1, nv[i] + 1):
                acc += cos(th[i] - tv[i] * log(<double>n)) / sqrt(<double>n)
            out[i] = acc
    return out.reshape(np.shape(t))


def phi_series(w, double cutoff, long max_terms, bint compensated=False):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] wv = np.ascontiguousarray(np.ravel(w), dtype=np.complex128)
    cdef Py_ssize_t m = wv.shape[0], i
    cdef long n
    cdef double n2, pi = np.pi
    cdef double complex e4, e5, e9, term, acc, tot
    cdef double cr, ci
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(m, dtype=np.complex128)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] used = np.empty(m, dtype=np.int64)
    with nogil:
        for i in range(m):
            e4 = cexp(4.0 * wv[i])
            e5 = cexp(5.0 * wv[i])
            e9 = cexp(9.0 * wv[i])
            acc = 0
            cr = 0.0
            ci = 0.0
            used[i] = -1
            for n in range(1, max_terms + 1):
                n2 = <double>(n * n)
                term = (2.0 * pi * pi * n2 * n2 * e9 - 3.0 * pi * n2 * e5) * cexp(-pi * n2 * e4)
                if compensated:
                    tot = acc + term
                    if fabs(creal(acc)) >= fabs(creal(term)):
                        cr += (creal(acc) - creal(tot)) + creal(term)
                    else:
                        cr += (creal(term) - creal(tot)) + creal(acc)
                    if fabs(cimag(acc)) >= fabs(cimag(term)):
                        ci += (cimag(acc) - cimag(tot)) + cimag(term)
                    else:
                        ci += (cimag(term) - cimag(tot)) + cimag(acc)
                    acc = tot
                else:
                    acc = acc + term
                if n >= 2 and cabs(term) < cutoff:
                    used[i] = n
                    break
            out[i] = acc + (cr + 1j * ci)
    return out.reshape(np.shape(w)), used.reshape(np.shape(w))


def coulomb_sum(targets, sources, skip):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tv = np.ascontiguousarray(targets, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sv = np.ascontiguousarray(sources, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] kv = np.ascontiguousarray(skip, dtype=np.int64)
    cdef Py_ssize_t m = tv.shape[0], p = sv.shape[0], i, j
    cdef double acc, xi
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    with nogil:
        for i in range(m):
            acc = 0.0
            xi = tv[i]
            for j in range(p):
                if j != kv[i]:
                    acc += 1.0 / (xi - sv[j])
            out[i] = acc
    return out
