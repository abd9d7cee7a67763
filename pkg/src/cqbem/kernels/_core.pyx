# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled reduction sweep over precomputed pair geometry.

Same contract as kernels.reference.reduce_pairs, written as a serial
scalar loop with no temporaries. Releases the GIL so independent
frequencies can run on separate threads against the shared cache.
"""

import numpy as np

from libc.math cimport cos, exp, sin


def reduce_pairs(const double[::1] r, const double[::1] a_v,
                 const double[::1] a_ky, const double[::1] a_kx,
                 const double[:, ::1] hat_x, const double[:, ::1] hat_y,
                 double complex s, Py_ssize_t n_pairs, bint with_k):
    cdef Py_ssize_t nnz = r.shape[0] // n_pairs if n_pairs > 0 else 0
    v = np.zeros(n_pairs, dtype=np.complex128)
    ky = np.zeros((n_pairs, 3), dtype=np.complex128)
    kx = np.zeros((n_pairs, 3), dtype=np.complex128)
    if n_pairs == 0 or nnz == 0:
        return v, ky, kx

    cdef double complex[::1] v_m = v
    cdef double complex[:, ::1] ky_m = ky
    cdef double complex[:, ::1] kx_m = kx
    cdef double sig = s.real
    cdef double om = s.imag
    cdef Py_ssize_t p, z, c, base
    cdef double rr, mag, e_re, e_im, p_re, p_im, w, h
    cdef double v_re, v_im
    cdef double ky_re[3]
    cdef double ky_im[3]
    cdef double kx_re[3]
    cdef double kx_im[3]

    with nogil:
        for p in range(n_pairs):
            base = p * nnz
            v_re = 0.0
            v_im = 0.0
            for c in range(3):
                ky_re[c] = 0.0
                ky_im[c] = 0.0
                kx_re[c] = 0.0
                kx_im[c] = 0.0
            for z in range(nnz):
                rr = r[base + z]
                mag = exp(-sig * rr)
                e_re = mag * cos(om * rr)
                e_im = -mag * sin(om * rr)
                v_re += a_v[base + z] * e_re
                v_im += a_v[base + z] * e_im
                if with_k:
                    # (1 + s r) * exp(-s r)
                    p_re = (1.0 + sig * rr) * e_re - om * rr * e_im
                    p_im = (1.0 + sig * rr) * e_im + om * rr * e_re
                    w = a_ky[base + z]
                    for c in range(3):
                        h = hat_y[z, c]
                        ky_re[c] += w * p_re * h
                        ky_im[c] += w * p_im * h
                    w = a_kx[base + z]
                    for c in range(3):
                        h = hat_x[z, c]
                        kx_re[c] += w * p_re * h
                        kx_im[c] += w * p_im * h
            v_m[p] = v_re + 1j * v_im
            if with_k:
                for c in range(3):
                    ky_m[p, c] = ky_re[c] + 1j * ky_im[c]
                    kx_m[p, c] = kx_re[c] + 1j * kx_im[c]
    return v, ky, kx
