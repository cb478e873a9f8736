# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SU(2) propagation kernel.

Mirrors :func:`cprobust._fallback.propagate_batch`; see there for the
quaternion convention.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()


def propagate_batch(const double[::1] amplitude, const double[::1] phase,
                    const double[::1] dt, const double[:, ::1] beta_a,
                    const double[:, ::1] beta_d):
    cdef Py_ssize_t n_real = beta_a.shape[0]
    cdef Py_ssize_t n_steps = amplitude.shape[0]
    if beta_a.shape[1] != n_steps or beta_d.shape[1] != n_steps or beta_d.shape[0] != n_real:
        raise ValueError("noise arrays do not match the control grid")
    if phase.shape[0] != n_steps or dt.shape[0] != n_steps:
        raise ValueError("control arrays have inconsistent lengths")

    out = np.empty((n_real, 4), dtype=np.float64)
    cdef double[:, ::1] q = out
    cdef double[::1] cphi = np.cos(np.asarray(phase))
    cdef double[::1] sphi = np.sin(np.asarray(phase))
    cdef Py_ssize_t i, s
    cdef double r0, r1, r2, r3, p0, p1, p2, p3, n0, n1, n2, n3
    cdef double hx, hy, hz, drive, norm, half, c, k

    with nogil:
        for i in range(n_real):
            r0 = 1.0
            r1 = 0.0
            r2 = 0.0
            r3 = 0.0
            for s in range(n_steps):
                drive = (amplitude[s] + beta_a[i, s]) * dt[s]
                hx = drive * cphi[s]
                hy = drive * sphi[s]
                hz = beta_d[i, s] * dt[s]
                norm = sqrt(hx * hx + hy * hy + hz * hz)
                half = 0.5 * norm
                c = cos(half)
                if norm > 1e-300:
                    k = sin(half) / norm
                else:
                    k = 0.5
                p0 = c
                p1 = k * hx
                p2 = k * hy
                p3 = k * hz
                # step applied after the accumulated product
                n0 = p0 * r0 - p1 * r1 - p2 * r2 - p3 * r3
                n1 = p0 * r1 + r0 * p1 + p2 * r3 - p3 * r2
                n2 = p0 * r2 + r0 * p2 + p3 * r1 - p1 * r3
                n3 = p0 * r3 + r0 * p3 + p1 * r2 - p2 * r1
                r0 = n0
                r1 = n1
                r2 = n2
                r3 = n3
            q[i, 0] = r0
            q[i, 1] = r1
            q[i, 2] = r2
            q[i, 3] = r3
    return out
