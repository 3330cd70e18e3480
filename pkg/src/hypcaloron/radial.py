"""Radial sub-solution: truncated boundary-value problems and their limit.

For the majorant ``G(r) = max_t max(g, 0)`` each rung solves

    w'' = (2/Xi^2)(e^w - 1) + G   on [eps, K],   w(eps) = w(K) = 0,

on a uniform lattice. The discrete equations are the exact Euler-Lagrange
equations of the lumped functional

    I(w) = sum_cells h/2 ((w_{i+1}-w_i)/h)^2 + sum_nodes h_i [(2/Xi^2)(e^w-1-w) + G w],

so the discrete rungs inherit the exact ordering and energy monotonicity of
the continuous ladder when all rungs share one lattice.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from .errors import InternalConsistencyError, IterativeFailure, ValidationError
from .geometry import PhysicalParams, metric_weight
from .sources import SourceData

ORDER_TOL = 1e-9


@dataclass(frozen=True)
class MajorantG:
    """Samples ``G(r_i)``; ``support`` is the closed interval outside which G = 0."""

    r: np.ndarray
    values: np.ndarray
    support: tuple = (0.0, 0.0)

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValidationError("majorant must be non-negative")

    def __call__(self, r):
        """Piecewise-linear interpolant, 0 outside the sampled range."""
        return np.interp(r, self.r, self.values, left=0.0, right=0.0)

    @property
    def is_zero(self):
        return not np.any(self.values > 0)


def compute_majorant(source: SourceData, r, n_t=256):
    """``G`` at radii ``r`` from ``n_t`` equally spaced time samples."""
    if n_t < 64:
        raise ValidationError("majorant needs at least 64 time samples")
    r = np.asarray(r, dtype=float)
    spec = source.cutoff
    vals = np.zeros(r.shape)
    inside = (r > spec.r_lo) & (r < spec.r_hi)
    if source.N and np.any(inside):
        t = source.beta * np.arange(n_t) / n_t
        ri = r[inside]
        gmax = np.empty(ri.shape)
        chunk = max(1, 2**20 // (n_t * source.N))
        for s in range(0, ri.size, chunk):
            R, T = np.meshgrid(ri[s:s + chunk], t, indexing="ij")
            gmax[s:s + chunk] = np.max(source.g(R, T), axis=1)
        vals[inside] = np.maximum(gmax, 0.0)
    return MajorantG(r, vals, (spec.r_lo, spec.r_hi))


@dataclass
class RadialProfile:
    """Nodal values on ``[r[0], r[-1]]``; ``n`` is the rung index (-1 for the limit)."""

    r: np.ndarray
    w: np.ndarray
    n: int = 0
    boundary: str = "dirichlet"
    w_infinity: float = 0.0
    residual: float = 0.0
    iterations: int = 0

    @property
    def h(self):
        return float(self.r[1] - self.r[0])

    @property
    def eps(self):
        return float(self.r[0])

    @property
    def K(self):
        return float(self.r[-1])

    def __call__(self, r):
        """Linear interpolation; 0 below ``eps`` and constant beyond ``K``."""
        r = np.asarray(r, dtype=float)
        right = self.w[-1] if self.boundary == "neumann" else 0.0
        return np.interp(r, self.r, self.w, left=0.0, right=right)

    def write_csv(self, path):
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["r", "w"])
            for a, b in zip(self.r, self.w):
                out.writerow([f"{a:.17g}", f"{b:.17g}"])


def read_profile_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return RadialProfile(data[:, 0], data[:, 1])


def lattice(eps, K, h):
    """Nodes ``m h`` from ``eps`` to ``K``; both ends must be lattice points."""
    a, b = eps / h, K / h
    ia, ib = int(round(a)), int(round(b))
    if abs(a - ia) > 1e-9 * max(1.0, a) or abs(b - ib) > 1e-9 * max(1.0, b):
        raise ValidationError(f"interval [{eps}, {K}] is not aligned with spacing {h}")
    return np.arange(ia, ib + 1) * h


def _node_weights(n, h, neumann):
    wt = np.full(n, h)
    if neumann:
        wt[-1] = 0.5 * h
    return wt


def solve_truncated(params: PhysicalParams, G: MajorantG, eps, K, h, *, neumann_right=False,
                    initial=None, tol=1e-10, max_iter=60, n=0):
    """Damped Newton for one rung on the lattice of spacing ``h``.

    With ``neumann_right`` the condition at ``K`` becomes ``w'(K) = 0``,
    closed by a mirror ghost; this rung serves as the infinite-domain limit.
    Convergence is declared at max-norm residual ``tol`` or, when rounding
    dominates, when Newton stops reducing a residual already at that level.
    """
    if not (0 < eps < K):
        raise ValidationError("need 0 < eps < K")
    lo, hi = G.support
    if not G.is_zero and (eps >= lo or K <= hi):
        raise ValidationError(f"support {G.support} of G is not inside ({eps}, {K})")
    r = lattice(eps, K, h)
    ri = r[1:] if neumann_right else r[1:-1]
    m = ri.size
    c = 2.0 * metric_weight(params, ri)[0]
    Gi = G(ri)
    wt = _node_weights(m, 1.0, neumann_right)  # row scaling making the Jacobian symmetric
    x = np.zeros(m) if initial is None else np.asarray(initial, dtype=float)[1:1 + m].copy()

    ih2 = 1.0 / h**2

    def resid(y):
        d2 = np.empty(m)
        left = np.concatenate(([0.0], y[:-1]))
        if neumann_right:
            right = np.concatenate((y[1:], [y[-2]] if m > 1 else [0.0]))
        else:
            right = np.concatenate((y[1:], [0.0]))
        d2[:] = (left - 2.0 * y + right) * ih2
        with np.errstate(over="ignore", invalid="ignore"):
            return d2 - c * np.expm1(y) - Gi

    F = resid(x)
    res = float(np.max(np.abs(F))) if m else 0.0
    floor = lambda y: 16.0 * np.finfo(float).eps * (4.0 * ih2 * max(1.0, float(np.max(np.abs(y)))) + float(np.max(c)))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise IterativeFailure(f"radial Newton did not converge (residual {res:.3e})", res, it)
        # symmetric tridiagonal W(-D2 + c e^w) in upper banded storage
        ab = np.zeros((2, m))
        ab[1] = (2.0 * ih2 + c * np.exp(x)) * wt
        ab[0, 1:] = -ih2
        delta = solveh_banded(ab, F * wt)
        it += 1
        step, ok = 1.0, False
        for _ in range(31):
            trial = x + step * delta
            Ft = resid(trial)
            rt = float(np.max(np.abs(Ft)))
            if np.isfinite(rt) and rt < res:
                ok = True
                break
            step *= 0.5
        if not ok:
            if res <= floor(x):
                break
            raise IterativeFailure(f"radial line search failed (residual {res:.3e})", res, it)
        x, F, res = trial, Ft, rt
        if res <= floor(x) and np.max(np.abs(step * delta)) <= 1e3 * np.finfo(float).eps * max(1.0, np.max(np.abs(x))):
            break
    w = np.zeros(r.size)
    w[1:1 + m] = x
    return RadialProfile(r, w, n, "neumann" if neumann_right else "dirichlet", residual=res, iterations=it)


def energy_functional(params: PhysicalParams, G: MajorantG, profile: RadialProfile):
    """Lumped-trapezoid value of ``int 1/2 w_r^2 + (2/Xi^2)(e^w - 1 - w) + G w``.

    The end node ``eps`` never contributes (``w = 0`` there), which keeps the
    quadrature well defined for profiles that start at the axis.
    """
    r, w = profile.r, profile.w
    h = np.diff(r)
    kinetic = 0.5 * np.sum(np.diff(w) ** 2 / h)
    hn = np.empty(r.size)
    hn[1:-1] = 0.5 * (h[:-1] + h[1:])
    hn[0], hn[-1] = 0.5 * h[0], 0.5 * h[-1]
    rr, ww, hh = r[1:], w[1:], hn[1:]
    c = 2.0 * metric_weight(params, rr)[0]
    pot = c * (np.expm1(ww) - ww) + G(rr) * ww
    return float(kinetic + np.sum(hh * pot))


def default_schedule(r_lo, r_hi, n_rungs=4):
    return [(r_lo / 2**n, r_hi * 2**n) for n in range(1, n_rungs + 1)]


@dataclass
class Ladder:
    rungs: list
    limit: RadialProfile
    energies: list
    limit_energy: float
    h: float
    last_change: float
    limit_gap: float
    schedule: list = field(default_factory=list)

    @property
    def w_infinity(self):
        return self.limit.w_infinity

    def as_dict(self):
        return {
            "schedule": [list(p) for p in self.schedule],
            "h": self.h,
            "energies": list(self.energies),
            "limit_energy": self.limit_energy,
            "minima": [float(p.w.min()) for p in self.rungs],
            "last_change": self.last_change,
            "limit_gap": self.limit_gap,
            "w_infinity": self.w_infinity,
        }


def _common(a: RadialProfile, b: RadialProfile, h):
    """Index slices of ``a`` and ``b`` covering their common lattice nodes."""
    lo, hi = max(a.r[0], b.r[0]), min(a.r[-1], b.r[-1])
    ia = slice(int(round((lo - a.r[0]) / h)), int(round((hi - a.r[0]) / h)) + 1)
    ib = slice(int(round((lo - b.r[0]) / h)), int(round((hi - b.r[0]) / h)) + 1)
    return ia, ib


def monotone_ladder(params: PhysicalParams, source_or_G, schedule=None, h_target=2e-3, n_t=256, workers=1):
    """Solve the nested rungs on one shared lattice plus a Neumann limit rung.

    ``schedule`` lists ``(eps_n, K_n)`` with ``eps`` shrinking and ``K``
    growing; each pair is snapped onto the lattice. The spacing is
    ``eps_last / ceil(eps_last / h_target)`` so every ``eps_n = eps_last 2^j``
    is a lattice point. The limit profile solves the same equation on
    ``[h, K_last]`` with ``w'(K_last) = 0``. Starting it at the first lattice
    node keeps the Dirichlet boundary layer at its inner edge, where a rung
    sits well above the limit, inside ``(0, 2h)``. Its far end settles on the
    asymptote and ``w_infinity`` is the mean of its final 10%. With
    ``workers > 1`` the rungs are solved concurrently; the ordering check runs
    after all of them finish.
    """
    if isinstance(source_or_G, SourceData):
        spec = source_or_G.cutoff
        sched = schedule or default_schedule(spec.r_lo, spec.r_hi)
    else:
        sched = schedule
        if sched is None:
            raise ValidationError("a schedule is required when G is given directly")
    sched = [(float(e), float(k)) for e, k in sched]
    if len(sched) < 3:
        raise ValidationError("the ladder needs at least 3 rungs")
    for (e0, k0), (e1, k1) in zip(sched, sched[1:]):
        if not (e1 < e0 and k1 > k0):
            raise ValidationError("schedule must be strictly nested")
    eps_last = sched[-1][0]
    h = eps_last / math.ceil(eps_last / h_target)
    snapped = [(h * round(e / h), h * round(k / h)) for e, k in sched]
    r_all = lattice(h, snapped[-1][1], h)
    if isinstance(source_or_G, SourceData):
        G = compute_majorant(source_or_G, r_all, n_t)
    else:
        G = source_or_G

    jobs = [dict(eps=e, K=k, n=n) for n, (e, k) in enumerate(snapped, start=1)]
    jobs.append(dict(eps=h, K=snapped[-1][1], n=-1, neumann_right=True))
    run = lambda job: solve_truncated(params, G, h=h, **job)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(run, jobs))
    else:
        solved = [run(job) for job in jobs]
    rungs, limit = solved[:-1], solved[-1]
    energies = [energy_functional(params, G, prof) for prof in rungs]
    tail = limit.r >= limit.r[-1] - 0.1 * (limit.r[-1] - limit.r[0])
    limit.w_infinity = float(np.mean(limit.w[tail]))
    limit_energy = energy_functional(params, G, limit)
    for prof in rungs:
        prof.w_infinity = limit.w_infinity

    _check_order(rungs + [limit], h)
    ia, ib = _common(rungs[-2], rungs[-1], h)
    last_change = float(np.max(np.abs(rungs[-2].w[ia] - rungs[-1].w[ib])))
    ia, ib = _common(rungs[-1], limit, h)
    limit_gap = float(np.max(np.abs(rungs[-1].w[ia] - limit.w[ib])))
    return Ladder(rungs, limit, energies, limit_energy, h, last_change, limit_gap, snapped)


def _check_order(profiles, h):
    for a, b in zip(profiles, profiles[1:]):
        ia, ib = _common(a, b, h)
        worst = float(np.max(b.w[ib] - a.w[ia]))
        if worst > ORDER_TOL:
            raise InternalConsistencyError(f"ladder ordering violated by {worst:.3e} between rungs {a.n} and {b.n}")
    for p in profiles:
        if np.max(p.w) > ORDER_TOL:
            raise InternalConsistencyError(f"rung {p.n} is positive somewhere")


def check_decay_bounds(params: PhysicalParams, profile: RadialProfile, K0, r_lo=None):
    """Envelope checks for ``w_r`` and ``w_rr`` beyond ``K0`` and the axis slope.

    Derivatives are central differences; ``tol = 10 h^2``. The slope of
    ``log|w|`` against ``log r`` is fitted on ``[max(2h, 4 eps), r_lo/2]``
    (the factor 4 keeps the fit clear of the artificial zero at ``eps``).
    """
    S = params.S
    if K0 < max(0.0, 0.5 * S * math.log(2.0)):
        raise ValidationError("K0 must be at least (S/2) ln 2")
    r, w = profile.r, profile.w
    h = profile.h
    tol = 10.0 * h * h
    wr = (w[2:] - w[:-2]) / (2 * h)
    wrr = (w[2:] - 2 * w[1:-1] + w[:-2]) / h**2
    rm = r[1:-1]
    far = rm > K0
    env1 = (16.0 / S) * np.exp(-4.0 * rm[far] / S)
    env2 = (64.0 / S**2) * np.exp(-4.0 * rm[far] / S)
    ok_r = bool(np.all((wr[far] >= -tol) & (wr[far] <= env1 + tol)))
    ok_rr = bool(np.all(np.abs(wrr[far]) <= env2 + tol))
    slope = float("nan")
    if r_lo is not None:
        a = max(2 * h, 4 * profile.eps)
        sel = (r >= a) & (r <= 0.5 * r_lo) & (w != 0)
        if np.count_nonzero(sel) >= 3:
            slope = float(np.polyfit(np.log(r[sel]), np.log(np.abs(w[sel])), 1)[0])
    return {
        "wr_envelope": ok_r,
        "wrr_envelope": ok_rr,
        "axis_slope": slope,
        "max_wr_excess": float(np.max(wr[far] - env1)) if np.any(far) else 0.0,
        "max_wrr_excess": float(np.max(np.abs(wrr[far]) - env2)) if np.any(far) else 0.0,
        "tol": tol,
    }


def hardy_terms(r, f):
    """Both sides of the discrete Hardy inequality ``sum h f^2/r^2 <= 4 sum h (df/h)^2``.

    ``r`` must be a uniform lattice ``0, h, 2h, ...`` and ``f(0) = 0``; the
    node at the axis is excluded from the left sum.
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    h = float(r[1] - r[0])
    if r[0] != 0.0 or np.max(np.abs(r - h * np.arange(r.size))) > 1e-10 * h:
        raise ValidationError("Hardy sums need a uniform lattice starting at r = 0")
    if f[0] != 0.0:
        raise ValidationError("test profile must vanish at r = 0")
    lhs = math.fsum(h * f[1:] ** 2 / r[1:] ** 2)
    rhs = 4.0 * math.fsum(np.diff(f) ** 2 / h)
    return lhs, rhs


def lift(profile: RadialProfile, r, nt):
    """Broadcast a radial profile to a ``(len(r), nt)`` array."""
    return np.repeat(profile(np.asarray(r))[:, None], nt, axis=1)
