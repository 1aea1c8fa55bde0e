# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coordinate-descent kernel.

Minimizes  theta^T A theta - 2 <linear, theta> + alpha ||theta||_1  by cyclic
exact coordinate minimization.  Mirrors ``hdpareto._ext._kernels_py`` line for
line; the two must return identical iterates.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def cd_quadratic_l1(const double[:, ::1] A, const double[::1] linear, double alpha,
                    const double[::1] theta0, double tol, long max_iter):
    cdef Py_ssize_t d = A.shape[0]
    cdef Py_ssize_t i, j
    cdef long cycle = 0
    cdef double half_alpha = 0.5 * alpha
    cdef double ajj, c, new, delta, max_delta
    cdef bint converged = False
    cdef long skipped = 0

    theta_arr = np.array(theta0, dtype=np.float64, copy=True)
    cdef double[::1] theta = theta_arr
    # grad_half = A theta, maintained incrementally
    grad_arr = np.asarray(A) @ theta_arr
    cdef double[::1] ah = grad_arr

    for j in range(d):
        if A[j, j] <= 0.0:
            skipped += 1

    with nogil:
        while cycle < max_iter:
            cycle += 1
            max_delta = 0.0
            for j in range(d):
                ajj = A[j, j]
                if ajj <= 0.0:
                    continue
                c = linear[j] - ah[j] + ajj * theta[j]
                if c > half_alpha:
                    new = (c - half_alpha) / ajj
                elif c < -half_alpha:
                    new = (c + half_alpha) / ajj
                else:
                    new = 0.0
                delta = new - theta[j]
                if delta != 0.0:
                    theta[j] = new
                    for i in range(d):
                        ah[i] += A[j, i] * delta  # row j equals column j
                    if fabs(delta) > max_delta:
                        max_delta = fabs(delta)
            if max_delta <= tol:
                converged = True
                break

    return theta_arr, cycle, bool(converged), skipped
