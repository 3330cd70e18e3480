"""Background data built from the prescribed vortex positions.

Distances are measured with the cylinder chord

    D_j^2 = (4/k^2) (sinh^2(k (r - r_j) / 2) + sin^2(k (t - t_j) / 2)),  k = 2 pi / beta,

which is beta-periodic, equals the Euclidean distance to fourth order at
``p_j`` and has an exactly harmonic logarithm away from the vortices. From it

* ``U0 = -sum log(1 + D_j^-2)`` with singular part ``s = sum log D_j^2`` and
  remainder ``-sum log(1 + D_j^2)``,
* ``u0 = eta(r) U0`` with a radial cut-off ``eta``,
* ``g = -Lap u0 + 4 pi sum delta_pj``, smooth and supported where ``eta > 0``,
* the phase ``Theta = sum arg(exp(k z) - exp(k p_j))``, ``z = r + i t``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import SingularPointError, ValidationError
from .geometry import PhysicalParams

_DISTINCT_FRACTION = 1e-6


@dataclass(frozen=True)
class VortexConfig:
    """Vortex positions ``(r_j, t_j)``; multiplicity is expressed by repetition."""

    points: tuple = ()
    beta: float = 2.0

    def __post_init__(self):
        pts = tuple((float(r), float(t)) for r, t in self.points)
        object.__setattr__(self, "points", pts)
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise ValidationError("beta must be finite and positive")
        for r, t in pts:
            if not (np.isfinite(r) and r > 0):
                raise ValidationError(f"vortex radius must be > 0, got {r}")
            if not (np.isfinite(t) and 0 <= t < self.beta):
                raise ValidationError(f"vortex time must lie in [0, beta), got {t}")
        tol = _DISTINCT_FRACTION * self.beta
        for i, p in enumerate(pts):
            for q in pts[:i]:
                if p == q:
                    continue
                dt = abs(p[1] - q[1]) % self.beta
                dt = min(dt, self.beta - dt)
                if np.hypot(p[0] - q[0], dt) < tol:
                    raise ValidationError(
                        f"vortices {q} and {p} are distinct but closer than {tol:g}; "
                        "list a multiple zero by exact repetition"
                    )

    @classmethod
    def evenly_spaced(cls, n, params: PhysicalParams):
        """``n`` simple vortices on the circle ``r = max(1, S/2)``."""
        if n < 0:
            raise ValidationError("charge must be >= 0")
        r = max(1.0, params.S / 2)
        return cls(tuple((r, params.beta * j / n) for j in range(n)), params.beta)

    @property
    def N(self):
        return len(self.points)

    @property
    def array(self):
        return np.array(self.points, dtype=float).reshape(-1, 2)

    def distinct(self):
        """List of ``((r, t), multiplicity)`` in first-appearance order."""
        out = {}
        for p in self.points:
            out[p] = out.get(p, 0) + 1
        return list(out.items())


@dataclass(frozen=True)
class CutoffSpec:
    """Break points of the radial cut-off: 0 outside (r_lo, r_hi), 1 on [r1, r2].

    ``order`` is the number of derivatives that vanish at each break point.
    """

    r_lo: float
    r1: float
    r2: float
    r_hi: float
    order: int = 5

    def __post_init__(self):
        if not (0 < self.r_lo < self.r1 <= self.r2 < self.r_hi):
            raise ValidationError(
                "cut-off break points must satisfy 0 < r_lo < r1 <= r2 < r_hi, got "
                f"{(self.r_lo, self.r1, self.r2, self.r_hi)}"
            )
        if self.order < 2:
            raise ValidationError("cut-off must be at least C^2")

    @classmethod
    def default_for(cls, config: VortexConfig):
        if config.N == 0:
            return cls(0.25, 0.9, 2.0, 4.0)
        rs = config.array[:, 0]
        return cls(rs.min() / 4, 0.9 * rs.min(), 2.0 * rs.max(), 4.0 * rs.max())

    def check_contains(self, config: VortexConfig):
        for r, _ in config.points:
            if not (self.r1 <= r <= self.r2):
                raise ValidationError(f"vortex radius {r} is outside the plateau [{self.r1}, {self.r2}]")


@lru_cache(maxsize=None)
def _step_polys(order):
    coeffs = np.zeros(2 * order + 2)
    for k in range(order + 1):
        coeffs[order + 1 + k] = comb(order + k, k) * comb(2 * order + 1, order - k) * (-1) ** k
    p = np.polynomial.Polynomial(coeffs)
    return p, p.deriv(1), p.deriv(2)


def cutoff(spec: CutoffSpec, r):
    """Return ``(eta, eta', eta'')`` at radii ``r`` (any shape)."""
    r = np.asarray(r, dtype=float)
    p, dp, ddp = _step_polys(spec.order)
    eta = np.zeros_like(r)
    d1 = np.zeros_like(r)
    d2 = np.zeros_like(r)
    up = (r > spec.r_lo) & (r < spec.r1)
    w = spec.r1 - spec.r_lo
    x = (r[up] - spec.r_lo) / w
    eta[up], d1[up], d2[up] = p(x), dp(x) / w, ddp(x) / w**2
    eta[(r >= spec.r1) & (r <= spec.r2)] = 1.0
    down = (r > spec.r2) & (r < spec.r_hi)
    w = spec.r_hi - spec.r2
    x = (spec.r_hi - r[down]) / w
    eta[down], d1[down], d2[down] = p(x), -dp(x) / w, ddp(x) / w**2
    return eta, d1, d2


class SourceData:
    """Pointwise evaluators of the background fields.

    All methods take coordinate arrays ``r, t`` of a common broadcast shape.
    """

    def __init__(self, config: VortexConfig, cutoff_spec: CutoffSpec | None = None):
        self.config = config
        self.cutoff = cutoff_spec if cutoff_spec is not None else CutoffSpec.default_for(config)
        if config.N:
            self.cutoff.check_contains(config)
        self.beta = config.beta
        self.k = 2.0 * np.pi / config.beta
        pts = config.array
        self._rj = pts[:, 0]
        self._tj = pts[:, 1]

    @property
    def N(self):
        return self.config.N

    # -- per-vortex building blocks, trailing axis indexes the vortex --------
    def _deltas(self, r, t):
        r = np.asarray(r, dtype=float)[..., None]
        t = np.asarray(t, dtype=float)[..., None]
        return self.k * (r - self._rj), self.k * (t - self._tj)

    def chord2(self, r, t):
        """Squared chord distances ``D_j^2``, shape ``r.shape + (N,)``."""
        a, b = self._deltas(r, t)
        return (4.0 / self.k**2) * (np.sinh(0.5 * a) ** 2 + np.sin(0.5 * b) ** 2)

    def _chord_derivs(self, r, t):
        a, b = self._deltas(r, t)
        k = self.k
        q = (4.0 / k**2) * (np.sinh(0.5 * a) ** 2 + np.sin(0.5 * b) ** 2)
        q_r = (2.0 / k) * np.sinh(a)
        q_t = (2.0 / k) * np.sin(b)
        lap = 2.0 * (np.cosh(a) + np.cos(b))
        return q, q_r, q_t, lap

    # -- scalar fields --------------------------------------------------------
    def eta(self, r):
        return cutoff(self.cutoff, r)

    def U0(self, r, t):
        """``-sum log(1 + D_j^-2)``; ``-inf`` exactly at a vortex."""
        q = self.chord2(r, t)
        with np.errstate(divide="ignore"):
            return -np.log1p(1.0 / q).sum(axis=-1)

    def singular_split(self, r, t):
        """Return ``(s, remainder)`` with ``s = sum log D_j^2`` and ``s + remainder = U0``."""
        q = self.chord2(r, t)
        with np.errstate(divide="ignore"):
            s = np.log(q).sum(axis=-1)
        return s, -np.log1p(q).sum(axis=-1)

    def u0(self, r, t):
        eta = self.eta(np.broadcast_to(r, np.broadcast(r, t).shape))[0]
        out = np.zeros(eta.shape)
        inside = eta > 0
        out[inside] = eta[inside] * self.U0(r, t)[inside]
        return out

    def expu0(self, r, t):
        """``exp(u0)`` as ``prod (D^2/(1+D^2))^eta``: 0 at vortices, 1 off the support."""
        r_b = np.broadcast_to(r, np.broadcast(r, t).shape)
        eta = self.eta(r_b)[0]
        q = self.chord2(r, t)
        with np.errstate(divide="ignore"):
            logratio = (np.log(q) - np.log1p(q)).sum(axis=-1)
        inside = eta > 0
        out = np.ones(r_b.shape)
        out[inside] = np.exp(eta[inside] * logratio[inside])
        return out

    def g(self, r, t):
        """Compensating source ``eta sum Lap(log(1+D^2)) - 2 eta' dU0/dr - U0 eta''``."""
        r_b = np.broadcast_to(r, np.broadcast(r, t).shape)
        eta, d1, d2 = self.eta(r_b)
        if self.N == 0:
            return np.zeros(r_b.shape)
        q, q_r, _, lap = self._chord_derivs(r, t)
        out = np.array(eta * (lap / (1.0 + q) ** 2).sum(axis=-1), dtype=float)
        band = d1 != 0
        if np.any(band):
            qb = q[band]
            U0 = -np.log1p(1.0 / qb).sum(axis=-1)
            dU0 = (q_r[band] / (qb * (1.0 + qb))).sum(axis=-1)
            out[band] += -2.0 * d1[band] * dU0 - U0 * d2[band]
        return out

    def grad_u0(self, r, t):
        """Closed-form ``(du0/dr, du0/dt)``; infinite only at vortices."""
        r_b = np.broadcast_to(r, np.broadcast(r, t).shape)
        eta, d1, _ = self.eta(r_b)
        q, q_r, q_t, _ = self._chord_derivs(r, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = 1.0 / (q * (1.0 + q))
            U0_r = (q_r * w).sum(axis=-1)
            U0_t = (q_t * w).sum(axis=-1)
            U0 = -np.log1p(1.0 / q).sum(axis=-1)
        gr = np.where(d1 != 0, d1 * U0, 0.0) + np.where(eta > 0, eta * U0_r, 0.0)
        gt = np.where(eta > 0, eta * U0_t, 0.0)
        return gr, gt

    def rho0(self, r, t):
        """Regular field ``u0 - s = eta * remainder - (1 - eta) * s``, finite everywhere."""
        r_b = np.broadcast_to(r, np.broadcast(r, t).shape)
        eta = self.eta(r_b)[0]
        s, rem = self.singular_split(r, t)
        return eta * rem - np.where(eta < 1, (1.0 - eta) * s, 0.0)

    def grad_rho0(self, r, t):
        r_b = np.broadcast_to(r, np.broadcast(r, t).shape)
        eta, d1, _ = self.eta(r_b)
        q, q_r, q_t, _ = self._chord_derivs(r, t)
        rem_r = -(q_r / (1.0 + q)).sum(axis=-1)
        rem_t = -(q_t / (1.0 + q)).sum(axis=-1)
        off = eta < 1
        s = np.zeros(r_b.shape)
        s_r = np.zeros(r_b.shape)
        s_t = np.zeros(r_b.shape)
        if np.any(off):
            qo = q[off]
            s[off] = np.log(qo).sum(axis=-1)
            s_r[off] = (q_r[off] / qo).sum(axis=-1)
            s_t[off] = (q_t[off] / qo).sum(axis=-1)
        rem = -np.log1p(q).sum(axis=-1)
        gr = d1 * (rem + s) + eta * rem_r - (1.0 - eta) * s_r
        gt = eta * rem_t - (1.0 - eta) * s_t
        return gr, gt

    # -- phase and holomorphic factor ------------------------------------------
    def holomorphic_factor(self, r, t):
        """``prod_j (2/k) sinh(k (z - p_j) / 2) exp(i k (t + t_j) / 2)``.

        Its modulus is ``prod D_j`` and its argument is the vortex phase, so the
        Higgs field is ``exp(rho / 2)`` times this factor.
        """
        a, b = self._deltas(r, t)
        t_arr = np.asarray(t, dtype=float)[..., None]
        fac = (2.0 / self.k) * np.sinh(0.5 * (a + 1j * b)) * np.exp(0.5j * self.k * (t_arr + self._tj))
        return fac.prod(axis=-1)

    def phase(self, r, t):
        """Vortex phase in ``(-pi, pi]``; raises at a vortex."""
        P = self.holomorphic_factor(r, t)
        if np.any(P == 0):
            raise SingularPointError("phase is undefined at a vortex")
        return np.angle(P)

    def grad_phase(self, r, t):
        """Closed-form ``(dTheta/dr, dTheta/dt)`` away from the vortices."""
        a, b = self._deltas(r, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = 0.5 * self.k * (1.0 + 1.0 / np.tanh(0.5 * (a + 1j * b)))
        lp = lp.sum(axis=-1)
        return lp.imag, lp.real

    def modulus_gradient(self, r, t):
        """``prod_k D_k * grad(s)`` with its finite limit at simple vortices.

        ``s`` is the singular part of ``U0``; at a simple vortex the direction
        of the limit is arbitrary and is reported along ``r`` with magnitude
        ``2 prod_{k != j} D_k``. At a multiple zero the limit is 0.
        """
        q, q_r, q_t, lap = self._chord_derivs(r, t)
        d = np.sqrt(q)
        n = q.shape[-1]
        out_r = np.zeros(q.shape[:-1])
        out_t = np.zeros(q.shape[:-1])
        for j in range(n):
            others = np.prod(np.delete(d, j, axis=-1), axis=-1) if n > 1 else np.ones(q.shape[:-1])
            dj = d[..., j]
            zero = dj == 0
            safe = np.where(zero, 1.0, dj)
            cr = np.where(zero, np.sqrt(lap[..., j]), q_r[..., j] / safe)
            ct = np.where(zero, 0.0, q_t[..., j] / safe)
            out_r += cr * others
            out_t += ct * others
        return out_r, out_t


def winding_number(phases):
    """Number of turns of a closed sampled loop of phase values."""
    phases = np.asarray(phases, dtype=float)
    d = np.diff(np.concatenate([phases, phases[:1]]))
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    return d.sum() / (2.0 * np.pi)


def loop_winding(sources: SourceData, center, radius, n=64):
    """Winding of the phase along a counter-clockwise circle in the (r, t) chart."""
    ang = 2.0 * np.pi * np.arange(n) / n
    r = center[0] + radius * np.cos(ang)
    t = (center[1] + radius * np.sin(ang)) % sources.beta
    return winding_number(sources.phase(r, t))


# Functional spellings of the evaluators.

def eval_U0(config: VortexConfig, r, t):
    return SourceData(config, _loose_cutoff(config)).U0(r, t)


def eval_expu0(config: VortexConfig, cutoff_spec: CutoffSpec, r, t):
    return SourceData(config, cutoff_spec).expu0(r, t)


def eval_g(config: VortexConfig, cutoff_spec: CutoffSpec, r, t):
    return SourceData(config, cutoff_spec).g(r, t)


def vortex_phase(config: VortexConfig, params: PhysicalParams, r, t):
    if params.beta != config.beta:
        raise ValidationError("vortex configuration and parameters disagree on beta")
    return SourceData(config, _loose_cutoff(config)).phase(r, t)


def singular_split(config: VortexConfig, r, t):
    return SourceData(config, _loose_cutoff(config)).singular_split(r, t)


def _loose_cutoff(config):
    return CutoffSpec.default_for(config)
