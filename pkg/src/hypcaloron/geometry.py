"""Geometry of the reduced strip.

The hyperbolic ball radius ``R in [0, S)`` is traded for the strip radius
``r = (S/2) atanh(R/S)``; in these coordinates the reduced metric on the strip
is ``(dt^2 + dr^2) / Xi(r)^2`` with conformal factor ``Xi = (S/2) sinh(2r/S)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularPointError, ValidationError

# below this value of 2r/S the sinh is replaced by its Taylor series
_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class PhysicalParams:
    """Curvature scale ``S`` of H^3 and temporal period ``beta``."""

    S: float = 2.0
    beta: float = 2.0

    def __post_init__(self):
        for name in ("S", "beta"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ValidationError(f"{name} must be a finite positive number, got {val!r}")


def _check_nonneg(r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 0):
        raise DomainError("radial coordinate must be finite and >= 0")
    return r


def _sinhc_scaled(r, S):
    """Return Xi(r) = (S/2) sinh(2r/S), using the series near the axis."""
    x = 2.0 * r / S
    small = x < _SERIES_CUTOFF
    out = np.empty_like(x)
    xs = x[small]
    out[small] = r[small] * (1.0 + xs * xs / 6.0 + xs**4 / 120.0)
    out[~small] = 0.5 * S * np.sinh(x[~small])
    return out


def conformal_factor(params: PhysicalParams, r):
    """Conformal factor ``Xi(r)``; accepts scalars or arrays, ``r >= 0``."""
    r = _check_nonneg(r)
    out = _sinhc_scaled(np.atleast_1d(r), params.S)
    return out.reshape(r.shape) if r.shape else float(out[0])


def coordinate_map_R_to_r(params: PhysicalParams, R):
    """Map the hyperbolic radius ``R in [0, S)`` to the strip radius."""
    R = np.asarray(R, dtype=float)
    if np.any(~np.isfinite(R)) or np.any(R < 0) or np.any(R >= params.S):
        raise DomainError("hyperbolic radius must satisfy 0 <= R < S")
    out = 0.5 * params.S * np.arctanh(R / params.S)
    return out if out.shape else float(out)


def coordinate_map_r_to_R(params: PhysicalParams, r):
    r = _check_nonneg(r)
    out = params.S * np.tanh(2.0 * r / params.S)
    return out if out.shape else float(out)


def metric_weight(params: PhysicalParams, r):
    """Return ``(1/Xi^2, Xi^2)`` at ``r > 0``.

    The first entry is the area weight of the reduced metric, the second the
    factor multiplying the curvature in the Bogomol'nyi equation.
    """
    r = _check_nonneg(r)
    if np.any(r == 0):
        raise SingularPointError("metric weight is singular on the axis r = 0")
    xi = conformal_factor(params, r)
    xi2 = np.asarray(xi) ** 2
    inv = 1.0 / xi2
    if inv.shape:
        return inv, xi2
    return float(inv), float(xi2)


def decay_envelope(params: PhysicalParams, r, constant):
    """``constant * exp(-4 r / S)``, the shape of every far-field bound."""
    return constant * np.exp(-4.0 * np.asarray(r, dtype=float) / params.S)
