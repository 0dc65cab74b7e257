# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot kernels (see _kernels_py for docs)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, exp, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


def sample_channels(double phi_re, double phi_im, int n_max, double k_laser, x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t npts = xv.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((n_max + 1, npts), dtype=np.complex128)
    cdef double c, c2, mag, ang, re0, im0, step, inv
    cdef double complex base
    cdef Py_ssize_t j
    cdef int n
    for j in range(npts):
        c = cos(k_laser * xv[j])
        c2 = c * c
        mag = exp(-2.0 * phi_im * c2)
        ang = 2.0 * phi_re * c2
        re0 = mag * cos(ang)
        im0 = mag * sin(ang)
        base = re0 + 1j * im0
        out[0, j] = base
        step = 2.0 * sqrt(phi_im) * c
        for n in range(1, n_max + 1):
            inv = step / sqrt(<double> n)
            base = base * inv
            out[n, j] = base
    return out


def accumulate_weighted_abs2(fields, double weight, out):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] fv = np.ascontiguousarray(fields, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ov = out
    cdef Py_ssize_t nch = fv.shape[0]
    cdef Py_ssize_t npts = fv.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, re, im
    for j in range(npts):
        acc = 0.0
        for i in range(nch):
            re = fv[i, j].real
            im = fv[i, j].imag
            acc += re * re + im * im
        ov[j] += weight * acc
    return None


def direct_fresnel_sum(field, x_in, weights, x_out, double kfac):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] fv = np.ascontiguousarray(field, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xi = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xo = np.ascontiguousarray(x_out, dtype=np.float64)
    cdef Py_ssize_t nin = xi.shape[0]
    cdef Py_ssize_t nout = xo.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(nout, dtype=np.complex128)
    cdef Py_ssize_t i, p
    cdef double d, ph, cp, sp, wre, wim, accre, accim
    for i in range(nout):
        accre = 0.0
        accim = 0.0
        for p in range(nin):
            d = xo[i] - xi[p]
            ph = kfac * d * d
            cp = cos(ph)
            sp = sin(ph)
            wre = wv[p] * fv[p].real
            wim = wv[p] * fv[p].imag
            accre += wre * cp - wim * sp
            accim += wre * sp + wim * cp
        out[i] = accre + 1j * accim
    return out
