"""numba versions of the hot loops in ``_numpy``."""
import numpy as np
from numba import njit


@njit(cache=True)
def apply_operator(x, diag, hr, ht, out):
    n, nt = x.shape
    ir2 = 1.0 / (hr * hr)
    it2 = 1.0 / (ht * ht)
    for i in range(n):
        for k in range(nt):
            km = k - 1 if k > 0 else nt - 1
            kp = k + 1 if k < nt - 1 else 0
            xc = x[i, k]
            acc = (2.0 * ir2 + 2.0 * it2 + diag[i, k]) * xc
            acc -= (x[i, km] + x[i, kp]) * it2
            if i > 0:
                acc -= x[i - 1, k] * ir2
            if i < n - 1:
                acc -= x[i + 1, k] * ir2
            elif n > 1:
                acc -= x[i - 1, k] * ir2
                acc *= 0.5
            else:
                acc *= 0.5
            out[i, k] = acc
    return out


@njit(cache=True)
def laplacian5(f, hr, ht, out):
    n, nt = f.shape
    ir2 = 1.0 / (hr * hr)
    it2 = 1.0 / (ht * ht)
    for k in range(nt):
        out[0, k] = 0.0
        out[n - 1, k] = 0.0
    for i in range(1, n - 1):
        for k in range(nt):
            km = k - 1 if k > 0 else nt - 1
            kp = k + 1 if k < nt - 1 else 0
            out[i, k] = (f[i - 1, k] - 2.0 * f[i, k] + f[i + 1, k]) * ir2 + (
                f[i, km] - 2.0 * f[i, k] + f[i, kp]
            ) * it2
    return out


@njit(cache=True)
def tridiag_modes(sub, diag, sup, shift, rhs):
    n, m = rhs.shape
    y = np.empty_like(rhs)
    cp = np.empty(n)
    dp = np.empty(n, dtype=rhs.dtype)
    for j in range(m):
        b = diag[0] + shift[j]
        cp[0] = sup[0] / b
        dp[0] = rhs[0, j] / b
        for i in range(1, n):
            b = diag[i] + shift[j] - sub[i] * cp[i - 1]
            cp[i] = sup[i] / b
            dp[i] = (rhs[i, j] - sub[i] * dp[i - 1]) / b
        y[n - 1, j] = dp[n - 1]
        for i in range(n - 2, -1, -1):
            y[i, j] = dp[i] - cp[i] * y[i + 1, j]
    return y
