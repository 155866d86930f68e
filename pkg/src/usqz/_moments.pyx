# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled sliding-window moment sums for speckle feature maps.

Semantics must match usqz._moments_py exactly: wrap-around padding along
theta (axis 1), clamped padding along r (axis 0).  Per-window sums are
accumulated in a fixed raster order so results are reproducible.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def window_moment_sums(double[:, ::1] amp, int window):
    """Return (s1, s2, s4): per-pixel window sums of x, x^2 and x^4."""
    cdef Py_ssize_t n_r = amp.shape[0]
    cdef Py_ssize_t n_t = amp.shape[1]
    cdef int half = window // 2
    cdef Py_ssize_t i, j, di, dj, ri, tj
    cdef double x, a1, a2, a4

    s1_arr = np.empty((n_r, n_t), dtype=np.float64)
    s2_arr = np.empty((n_r, n_t), dtype=np.float64)
    s4_arr = np.empty((n_r, n_t), dtype=np.float64)
    cdef double[:, ::1] s1 = s1_arr
    cdef double[:, ::1] s2 = s2_arr
    cdef double[:, ::1] s4 = s4_arr

    for i in range(n_r):
        for j in range(n_t):
            a1 = 0.0
            a2 = 0.0
            a4 = 0.0
            for di in range(-half, half + 1):
                ri = i + di
                if ri < 0:
                    ri = 0
                elif ri >= n_r:
                    ri = n_r - 1
                for dj in range(-half, half + 1):
                    # C-style % keeps the sign of the dividend
                    tj = (j + dj) % n_t
                    if tj < 0:
                        tj += n_t
                    x = amp[ri, tj]
                    a1 += x
                    a2 += x * x
                    a4 += (x * x) * (x * x)
            s1[i, j] = a1
            s2[i, j] = a2
            s4[i, j] = a4
    return s1_arr, s2_arr, s4_arr
