"""Uniform finite-difference mesh on ``[0, r_max] x S^1_beta``.

Rows index the radius (``i = 0..Nr``, row 0 on the axis), columns the
periodic time (``k = 0..Nt-1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError


@dataclass(frozen=True)
class StripGrid:
    Nr: int
    Nt: int
    r_max: float
    beta: float

    def __post_init__(self):
        if self.Nr < 4 or self.Nt < 8:
            raise ValidationError(f"grid too small: Nr={self.Nr} (>= 4), Nt={self.Nt} (>= 8)")
        if not (np.isfinite(self.r_max) and self.r_max > 0 and self.beta > 0):
            raise ValidationError("r_max and beta must be positive")

    @property
    def hr(self):
        return self.r_max / self.Nr

    @property
    def ht(self):
        return self.beta / self.Nt

    @property
    def r(self):
        return np.arange(self.Nr + 1) * self.hr

    @property
    def t(self):
        return np.arange(self.Nt) * self.ht

    @property
    def shape(self):
        return (self.Nr + 1, self.Nt)

    def mesh(self):
        return np.meshgrid(self.r, self.t, indexing="ij")

    def refine(self, factor=2):
        return StripGrid(self.Nr * factor, self.Nt * factor, self.r_max, self.beta)

    def check_truncation(self, r_hi):
        if self.r_max < 2.0 * r_hi:
            raise ValidationError(f"r_max={self.r_max} must be at least 2*r_hi={2 * r_hi}")

    def weights(self):
        """Trapezoid-in-r times rectangle-in-t quadrature weights."""
        wr = np.full(self.Nr + 1, self.hr)
        wr[0] *= 0.5
        wr[-1] *= 0.5
        return wr[:, None] * np.full(self.Nt, self.ht)[None, :]


class ScalarField:
    """Samples of a real field on every node of a grid.

    ``allow_neg_inf`` admits ``-inf`` samples (``u = ln|phi|^2`` at a vortex node).
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: StripGrid, values, allow_neg_inf=False):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValidationError(f"field shape {values.shape} does not match grid {grid.shape}")
        ok = np.isfinite(values)
        if allow_neg_inf:
            ok |= values == -np.inf
        if not np.all(ok):
            raise ValidationError("field contains non-finite values")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid, fn):
        R, T = grid.mesh()
        return cls(grid, fn(R, T))

    def roll_t(self, shift=1):
        return ScalarField(self.grid, np.roll(self.values, shift, axis=1))


def laplacian(field: ScalarField):
    """Five-point Laplacian; rows 0 and Nr (boundary) are set to zero."""
    g = field.grid
    out = np.empty(g.shape)
    kernels.laplacian5(np.ascontiguousarray(field.values), g.hr, g.ht, out)
    return ScalarField(g, out)


def gradient_arrays(values, hr, ht):
    """Central differences; second-order one-sided at the radial edges."""
    d_r = np.empty_like(values)
    d_r[1:-1] = (values[2:] - values[:-2]) / (2.0 * hr)
    d_r[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * hr)
    d_r[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * hr)
    d_t = (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1)) / (2.0 * ht)
    return d_r, d_t


def gradient(field: ScalarField):
    g = field.grid
    d_r, d_t = gradient_arrays(field.values, g.hr, g.ht)
    return ScalarField(g, d_r), ScalarField(g, d_t)


def integrate_array(values, grid: StripGrid):
    """Trapezoid in r, rectangle in t.

    The weighted samples are summed with ``math.fsum`` (correctly rounded), so
    the result does not depend on summation order.
    """
    wr = np.full(grid.Nr + 1, grid.hr)
    wr[0] *= 0.5
    wr[-1] *= 0.5
    weighted = np.asarray(values, dtype=float) * wr[:, None]
    return math.fsum(weighted.ravel()) * grid.ht


def integrate(field: ScalarField):
    return integrate_array(field.values, field.grid)


def write_field_csv(path, field: ScalarField):
    """Write ``r,t,value`` rows, radius-major, 17 significant digits, LF endings."""
    g = field.grid
    r, t = g.r, g.t
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("r,t,value\n")
        for i in range(g.Nr + 1):
            ri = f"{r[i]:.17g}"
            fh.write(
                "".join(f"{ri},{t[k]:.17g},{field.values[i, k]:.17g}\n" for k in range(g.Nt))
            )


def read_field_csv(path, grid: StripGrid):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.shape != ((grid.Nr + 1) * grid.Nt, 3):
        raise ValidationError("CSV does not match the grid")
    return ScalarField(grid, data[:, 2].reshape(grid.shape))
