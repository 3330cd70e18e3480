"""Physical fields and integrated observables of a solved configuration.

Conventions: ``z = r + i t`` with ``t`` increasing counter-clockwise, Higgs
field ``phi = exp(rho / 2) P`` where ``P`` is the holomorphic factor of the
prescribed zeros and ``rho = u - s`` is smooth, covariant derivative
``D phi = d phi + i a phi`` and gauge potential

    a_r = -1/2 d_t u - d_r Theta = -1/2 d_t rho,
    a_t =  1/2 d_r u - d_t Theta =  1/2 d_r rho - pi N / beta.

With these, ``F_tr = d_t a_r - d_r a_t = (1 - e^u) / Xi^2 >= 0`` and a
counter-clockwise loop around a zero of multiplicity ``m`` picks up ``-2 pi m``
from the phase and ``+2 pi m`` from the modulus, so the holonomy of the
smooth field ``a`` vanishes as the loop shrinks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, InternalConsistencyError
from .geometry import PhysicalParams, conformal_factor, metric_weight
from .grid import ScalarField, StripGrid, gradient_arrays, integrate_array
from .sources import SourceData, winding_number

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


# -- reconstruction -------------------------------------------------------------

def reconstruct_u(v: ScalarField, sources: SourceData):
    """``u = u0 + v`` (``-inf`` at vortex nodes) and ``|phi|^2 = e^{u0} e^v``."""
    R, T = v.grid.mesh()
    u = sources.u0(R, T) + v.values
    phi2 = sources.expu0(R, T) * np.exp(v.values)
    return ScalarField(v.grid, u, allow_neg_inf=True), ScalarField(v.grid, phi2)


def curvature(u: ScalarField, params: PhysicalParams):
    """``F_tr = (1 - e^u) / Xi^2``; the axis row is extrapolated linearly."""
    grid = u.grid
    F = np.empty(grid.shape)
    inv, _ = metric_weight(params, grid.r[1:])
    F[1:] = -np.expm1(u.values[1:]) * inv[:, None]
    F[0] = 2.0 * F[1] - F[2]
    return ScalarField(grid, F)


def flux(F: ScalarField):
    """``(Phi, Phi / 2 pi)``."""
    phi = integrate_array(F.values, F.grid)
    return phi, phi / (2.0 * np.pi)


def vortex_mask(sources: SourceData, grid: StripGrid, radius=None):
    """True at nodes within ``radius`` (default one cell) of a vortex."""
    radius = max(grid.hr, grid.ht) if radius is None else radius
    mask = np.zeros(grid.shape, dtype=bool)
    if sources.N == 0:
        return mask
    R, T = grid.mesh()
    for (rj, tj), _ in sources.config.distinct():
        dt = np.abs(T - tj)
        dt = np.minimum(dt, grid.beta - dt)
        mask |= np.hypot(R - rj, dt) <= radius * (1 + 1e-12)
    return mask


# -- gauge field ------------------------------------------------------------------

@dataclass
class GaugeFields:
    a_r: np.ndarray
    a_t: np.ndarray
    F_tr: np.ndarray
    theta: np.ndarray
    mask: np.ndarray
    rho: np.ndarray
    rho_r: np.ndarray
    rho_t: np.ndarray


def _rho_and_grad(v: ScalarField, sources: SourceData):
    grid = v.grid
    R, T = grid.mesh()
    v_r, v_t = gradient_arrays(v.values, grid.hr, grid.ht)
    g_r, g_t = sources.grad_rho0(R, T)
    return sources.rho0(R, T) + v.values, g_r + v_r, g_t + v_t


def gauge_potentials(v: ScalarField, sources: SourceData, params: PhysicalParams):
    """Potentials from the closed-form background plus discrete derivatives of ``v``.

    ``Theta`` is sampled for reference (NaN at a node that coincides with a
    vortex); it is never differentiated numerically.
    """
    grid = v.grid
    R, T = grid.mesh()
    rho, rho_r, rho_t = _rho_and_grad(v, sources)
    a_r = -0.5 * rho_t
    a_t = 0.5 * rho_r - np.pi * sources.N / grid.beta
    u, _ = reconstruct_u(v, sources)
    F = curvature(u, params).values
    P = sources.holomorphic_factor(R, T)
    theta = np.where(P == 0, np.nan, np.angle(P))
    return GaugeFields(a_r, a_t, F, theta, vortex_mask(sources, grid), rho, rho_r, rho_t)


def higgs_field(v: ScalarField, sources: SourceData, rho=None):
    R, T = v.grid.mesh()
    if rho is None:
        rho = sources.rho0(R, T) + v.values
    return np.exp(0.5 * rho) * sources.holomorphic_factor(R, T)


def _masked_l2(values, grid, mask):
    """Flat ``dr dt`` L2 norm over rows 1..Nr-1 minus the mask."""
    w = grid.weights()
    keep = ~mask.copy()
    keep[0] = False
    keep[-1] = False
    return float(np.sqrt(np.sum(w[keep] * np.abs(values[keep]) ** 2)))


def _covariant(phi, gauge: GaugeFields, grid):
    d_r = np.zeros_like(phi)
    d_r[1:-1] = (phi[2:] - phi[:-2]) / (2.0 * grid.hr)
    d_t = (np.roll(phi, -1, axis=1) - np.roll(phi, 1, axis=1)) / (2.0 * grid.ht)
    return d_r + 1j * gauge.a_r * phi, d_t + 1j * gauge.a_t * phi


def discrete_curl(gauge: GaugeFields, grid):
    """``d_t a_r - d_r a_t`` by central differences on interior rows."""
    out = np.zeros(grid.shape)
    dt_ar = (np.roll(gauge.a_r, -1, axis=1) - np.roll(gauge.a_r, 1, axis=1)) / (2.0 * grid.ht)
    out[1:-1] = dt_ar[1:-1] - (gauge.a_t[2:] - gauge.a_t[:-2]) / (2.0 * grid.hr)
    return out


def selfduality_residual(v: ScalarField, sources: SourceData, params: PhysicalParams,
                         gauge: GaugeFields | None = None, xi_region=None):
    """Masked L2 norms of both Bogomol'nyi equations.

    ``sd1``: ``D_r phi + i D_t phi``. ``sd2``: discrete curl of ``a`` minus
    ``F_tr``. ``sd2_xi2`` is the same equation multiplied through by ``Xi^2``,
    restricted to ``r <= xi_region`` (default: end of the cut-off support)
    because the weight grows like ``exp(4 r / S)`` and swamps rounding beyond
    it. ``sd2_definitional`` compares ``Xi^2 F_tr`` with ``1 - e^u`` directly
    and is zero to rounding by construction.
    """
    grid = v.grid
    gauge = gauge or gauge_potentials(v, sources, params)
    phi = higgs_field(v, sources, gauge.rho)
    Dr, Dt = _covariant(phi, gauge, grid)
    sd1 = _masked_l2(Dr + 1j * Dt, grid, gauge.mask)
    curl = discrete_curl(gauge, grid)
    sd2 = _masked_l2(curl - gauge.F_tr, grid, gauge.mask)
    xi2 = conformal_factor(params, grid.r) ** 2
    xi_region = sources.cutoff.r_hi if xi_region is None else xi_region
    far = np.broadcast_to((grid.r > xi_region)[:, None], grid.shape)
    sd2_xi2 = _masked_l2(xi2[:, None] * (curl - gauge.F_tr), grid, gauge.mask | far)
    u, phi2 = reconstruct_u(v, sources)
    sd2_def = _masked_l2(xi2[:, None] * gauge.F_tr + np.expm1(u.values), grid, gauge.mask)
    return {"sd1": sd1, "sd2": sd2, "sd2_xi2": sd2_xi2, "sd2_definitional": sd2_def}


def kinetic_density(v: ScalarField, sources: SourceData, gauge: GaugeFields | None = None):
    """``e^u |grad u|^2`` evaluated as ``e^rho |prod D (grad s + grad rho)|^2``."""
    grid = v.grid
    R, T = grid.mesh()
    if gauge is None:
        rho, rho_r, rho_t = _rho_and_grad(v, sources)
    else:
        rho, rho_r, rho_t = gauge.rho, gauge.rho_r, gauge.rho_t
    if sources.N == 0:
        return np.exp(rho) * (rho_r**2 + rho_t**2)
    m_r, m_t = sources.modulus_gradient(R, T)
    prodD = np.sqrt(np.prod(sources.chord2(R, T), axis=-1))
    val = np.exp(rho) * ((m_r + prodD * rho_r) ** 2 + (m_t + prodD * rho_t) ** 2)
    if not np.all(np.isfinite(val)):
        raise InternalConsistencyError("non-finite value in the stabilized action integrand")
    return val


def action(v: ScalarField, sources: SourceData, params: PhysicalParams, gauge: GaugeFields | None = None):
    """``(S_density, S_flux)``; each equals ``2 pi^2 N`` for an exact solution."""
    grid = v.grid
    u, _ = reconstruct_u(v, sources)
    pot = np.zeros(grid.shape)
    inv, _ = metric_weight(params, grid.r[1:])
    pot[1:] = 2.0 * np.expm1(u.values[1:]) ** 2 * inv[:, None]
    dens = 0.5 * np.pi * (pot + kinetic_density(v, sources, gauge))
    S_density = integrate_array(dens, grid)
    phi, _ = flux(curvature(u, params))
    return S_density, np.pi * phi


def energy_identity(v: ScalarField, sources: SourceData, params: PhysicalParams, gauge: GaugeFields | None = None):
    """Masked integral of ``| |D_r phi|^2 + |D_t phi|^2 - 1/2 e^u |grad u|^2 |``."""
    grid = v.grid
    gauge = gauge or gauge_potentials(v, sources, params)
    phi = higgs_field(v, sources, gauge.rho)
    Dr, Dt = _covariant(phi, gauge, grid)
    diff = np.abs(np.abs(Dr) ** 2 + np.abs(Dt) ** 2 - 0.5 * kinetic_density(v, sources, gauge))
    keep = ~gauge.mask
    keep[0] = False
    keep[-1] = False
    return float(np.sum(grid.weights()[keep] * diff[keep]))


# -- windings and loops -------------------------------------------------------------

def _loop_radius(sources: SourceData, center):
    """A radius that encloses exactly one distinct vortex."""
    rj, tj = center
    rad = 0.5 * rj
    for (rk, tk), _ in sources.config.distinct():
        if (rk, tk) == (rj, tj):
            continue
        dt = abs(tk - tj) % sources.beta
        dt = min(dt, sources.beta - dt)
        rad = min(rad, 0.5 * np.hypot(rk - rj, dt))
    return min(rad, 0.25 * sources.beta)


def vortex_windings(sources: SourceData, n=128):
    """Winding of ``Theta`` on a small circle around each distinct vortex."""
    out = []
    for (rj, tj), mult in sources.config.distinct():
        rad = _loop_radius(sources, (rj, tj))
        ang = 2.0 * np.pi * np.arange(n) / n
        theta = sources.phase(rj + rad * np.cos(ang), (tj + rad * np.sin(ang)) % sources.beta)
        out.append({"r": rj, "t": tj, "multiplicity": mult, "winding": int(round(winding_number(theta))),
                    "winding_raw": float(winding_number(theta))})
    return out


def grid_winding(sources: SourceData, grid: StripGrid, center, half=3):
    """Winding of nodal ``Theta`` around the node rectangle of half-width ``half`` cells."""
    i0 = int(round(center[0] / grid.hr))
    k0 = int(round(center[1] / grid.ht))
    if i0 - half < 0:
        raise DomainError("loop would cross the axis")
    ii = list(range(i0 - half, i0 + half)) + [i0 + half] * (2 * half) \
        + list(range(i0 + half, i0 - half, -1)) + [i0 - half] * (2 * half)
    kk = [k0 - half] * (2 * half) + list(range(k0 - half, k0 + half)) \
        + [k0 + half] * (2 * half) + list(range(k0 + half, k0 - half, -1))
    # bottom edge r increasing at t = t0 - half, then up, back and down: counter-clockwise
    r = grid.r[np.array(ii)]
    t = (np.array(kk) % grid.Nt) * grid.ht
    return winding_number(sources.phase(r, t))


class FieldSampler:
    """Pointwise ``(phi, a_r, a_t)`` at arbitrary strip points.

    Closed-form background pieces are exact; ``v`` and its discrete gradient
    are interpolated bilinearly (periodically in ``t``).
    """

    def __init__(self, v: ScalarField, sources: SourceData):
        grid = v.grid
        self.sources = sources
        self.grid = grid
        v_r, v_t = gradient_arrays(v.values, grid.hr, grid.ht)
        t_ext = np.append(grid.t, grid.beta)
        self._interp = [
            RegularGridInterpolator((grid.r, t_ext), np.concatenate([f, f[:, :1]], axis=1))
            for f in (v.values, v_r, v_t)
        ]

    def v(self, r, t):
        pts = np.stack(np.broadcast_arrays(np.asarray(r, float), np.asarray(t, float) % self.grid.beta), axis=-1)
        return [f(pts) for f in self._interp]

    def __call__(self, r, t):
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float) % self.grid.beta
        v, v_r, v_t = self.v(r, t)
        src = self.sources
        g_r, g_t = src.grad_rho0(r, t)
        rho = src.rho0(r, t) + v
        phi = np.exp(0.5 * rho) * src.holomorphic_factor(r, t)
        a_r = -0.5 * (g_t + v_t)
        a_t = 0.5 * (g_r + v_r) - np.pi * src.N / self.grid.beta
        return phi, a_r, a_t

    def phi2(self, r, t):
        """``e^{u0} e^v``: exactly 0 at a prescribed zero."""
        v = self.v(r, t)[0]
        return self.sources.expu0(np.asarray(r, float), np.asarray(t, float) % self.grid.beta) * np.exp(v)


def loop_holonomy(sampler: FieldSampler, center, radius, n=256):
    """Counter-clockwise ``oint a`` split into phase and modulus contributions.

    Returns ``(total, phase_part, modulus_part)``; around a zero of
    multiplicity ``m`` these tend to ``0``, ``-2 pi m`` and ``+2 pi m``.
    """
    src = sampler.sources
    ang = 2.0 * np.pi * np.arange(n) / n
    r = center[0] + radius * np.cos(ang)
    t = (center[1] + radius * np.sin(ang)) % src.beta
    dr = -radius * np.sin(ang)
    dt = radius * np.cos(ang)
    th_r, th_t = src.grad_phase(r, t)
    _, a_r, a_t = sampler(r, t)
    dtheta = 2.0 * np.pi / n
    phase_part = float(np.sum(-th_r * dr - th_t * dt) * dtheta)
    total = float(np.sum(a_r * dr + a_t * dt) * dtheta)
    return total, phase_part, total - phase_part


# -- four-dimensional ansatz ---------------------------------------------------------

def hedgehog(x):
    """Hermitian ``x^j sigma^j / R``; its square is the identity."""
    x = np.asarray(x, dtype=float)
    R = float(np.linalg.norm(x))
    if R == 0.0:
        raise DomainError("the hedgehog is undefined at the spatial origin")
    return np.einsum("j,jab->ab", x, PAULI) / R


def ansatz_evaluate(params: PhysicalParams, point, phi, a_r, a_t):
    """Components ``(A_t, A_1, A_2, A_3)`` of ``-1/2 (Q a + phi_1 dQ + (phi_2 + 1) Q dQ)``.

    ``point = (t, x1, x2, x3)`` with ``|x| = R < S``. ``Q = -i x^j sigma^j / R``
    is the anti-Hermitian (quaternion) unit, so each component is
    anti-Hermitian and traceless. ``phi = phi_1 + i phi_2`` and ``(a_r, a_t)``
    are the strip values at ``r(R)``.
    """
    x = np.asarray(point[1:], dtype=float)
    R = float(np.linalg.norm(x))
    if R == 0.0:
        raise DomainError("ansatz is singular at R = 0")
    if R >= params.S:
        raise DomainError("point lies outside the hyperbolic ball R < S")
    q = hedgehog(x)
    if not np.allclose(q @ q, np.eye(2), atol=1e-12):
        raise InternalConsistencyError("hedgehog does not square to the identity")
    Q = -1j * q
    # dQ/dx_j = -i (sigma^j / R - x_j (x.sigma) / R^3)
    dQ = -1j * (PAULI / R - np.einsum("j,ab->jab", x, q) / R**2)
    drdR = 0.5 / (1.0 - (R / params.S) ** 2)
    phi1, phi2 = float(np.real(phi)), float(np.imag(phi))
    A = np.empty((4, 2, 2), dtype=complex)
    A[0] = -0.5 * Q * a_t
    for j in range(3):
        a_j = a_r * drdR * x[j] / R
        A[j + 1] = -0.5 * (Q * a_j + phi1 * dQ[j] + (phi2 + 1.0) * Q @ dQ[j])
    return A


# -- report ---------------------------------------------------------------------------

@dataclass
class ObservableReport:
    flux: float
    charge: float
    action_density: float
    action_flux: float
    residual_sd1: float
    residual_sd2: float
    energy_identity: float
    windings: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        out = {
            "flux": self.flux,
            "charge": self.charge,
            "action_density": self.action_density,
            "action_flux": self.action_flux,
            "residual_sd1": self.residual_sd1,
            "residual_sd2": self.residual_sd2,
            "energy_identity": self.energy_identity,
            "windings": list(self.windings),
        }
        out.update(self.extras)
        return out


def observe(v: ScalarField, sources: SourceData, params: PhysicalParams):
    """Compute every observable of a converged ``v``."""
    gauge = gauge_potentials(v, sources, params)
    phi = integrate_array(gauge.F_tr, v.grid)
    charge = phi / (2.0 * np.pi)
    S_density, S_flux = action(v, sources, params, gauge)
    sd = selfduality_residual(v, sources, params, gauge)
    ei = energy_identity(v, sources, params, gauge)
    _, phi2 = reconstruct_u(v, sources)
    extras = {
        "residual_sd2_xi2": sd["sd2_xi2"],
        "residual_sd2_definitional": sd["sd2_definitional"],
        "phi2_max": float(np.max(phi2.values)),
        "F_tr_min": float(np.min(gauge.F_tr)),
        "a_t_outer_mean": float(np.mean(gauge.a_t[-1])),
    }
    return ObservableReport(phi, charge, S_density, S_flux, sd["sd1"], sd["sd2"], ei,
                            vortex_windings(sources) if sources.N else [], extras)
