"""Reference kernels in plain numpy.

Every function here has a twin in ``_numba`` with the same signature; the
outputs agree to rounding. These are the ones used when numba is missing or
``HYPCALORON_BACKEND=numpy`` is set.
"""
import numpy as np


def apply_operator(x, diag, hr, ht, out):
    """out = W (-Lap_h x + diag * x) on the unknown rows i = 1..Nr.

    Row 0 of ``x`` is the first node off the axis (the axis value 0 is a
    ghost). The last row carries the mirror-ghost Neumann closure and weight
    1/2, which makes the operator symmetric.
    """
    n = x.shape[0]
    ir2 = 1.0 / (hr * hr)
    it2 = 1.0 / (ht * ht)
    lap_t = (np.roll(x, 1, axis=1) - 2.0 * x + np.roll(x, -1, axis=1)) * it2
    out[...] = (2.0 * ir2) * x - lap_t + diag * x
    if n > 1:
        out[1:] -= x[:-1] * ir2
        out[:-1] -= x[1:] * ir2
        out[-1] -= x[-2] * ir2
    out[-1] *= 0.5
    return out


def laplacian5(f, hr, ht, out):
    """Five-point Laplacian of a full-grid field on interior rows 1..Nr-1."""
    out[...] = 0.0
    out[1:-1] = (f[:-2] - 2.0 * f[1:-1] + f[2:]) / (hr * hr) + (
        np.roll(f[1:-1], 1, axis=1) - 2.0 * f[1:-1] + np.roll(f[1:-1], -1, axis=1)
    ) / (ht * ht)
    return out


def tridiag_modes(sub, diag, sup, shift, rhs):
    """Solve (T + shift[m] I) y[:, m] = rhs[:, m] for every column m.

    ``T`` is tridiagonal with sub-diagonal ``sub[1:]``, diagonal ``diag`` and
    super-diagonal ``sup[:-1]``; row i couples to i-1 via ``sub[i]`` and to
    i+1 via ``sup[i]``. Thomas elimination vectorised over the columns.
    """
    n = rhs.shape[0]
    cp = np.empty((n, rhs.shape[1]))
    dp = np.empty_like(rhs)
    b = diag[0] + shift
    cp[0] = sup[0] / b
    dp[0] = rhs[0] / b
    for i in range(1, n):
        b = diag[i] + shift - sub[i] * cp[i - 1]
        cp[i] = sup[i] / b
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / b
    y = np.empty_like(rhs)
    y[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        y[i] = dp[i] - cp[i] * y[i + 1]
    return y
