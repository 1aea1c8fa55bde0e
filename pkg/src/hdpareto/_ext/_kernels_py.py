"""Pure-Python coordinate-descent kernel (fallback for ``_kernels.pyx``)."""

import numpy as np


def cd_quadratic_l1(A, linear, alpha, theta0, tol, max_iter):
    A = np.ascontiguousarray(A, dtype=np.float64)
    linear = np.asarray(linear, dtype=np.float64)
    d = A.shape[0]
    half_alpha = 0.5 * alpha
    theta = np.array(theta0, dtype=np.float64, copy=True)
    ah = A @ theta
    diag = A.diagonal().copy()
    skipped = int(np.sum(diag <= 0.0))
    # column views are rows of A by symmetry
    cols = [A[:, j].copy() for j in range(d)]

    cycle = 0
    converged = False
    while cycle < max_iter:
        cycle += 1
        max_delta = 0.0
        for j in range(d):
            ajj = diag[j]
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
                ah += cols[j] * delta
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta <= tol:
            converged = True
            break
    return theta, cycle, converged, skipped
