"""Damped Newton solver for the regularized vortex equation on the strip.

Unknowns are the nodal values of ``v`` on rows ``i = 1..Nr`` (``v = 0`` on the
axis row). The discrete equation is

    F(v) = Lap_h v - c (E e^v - 1) - g = 0,   c = 2 / Xi^2,  E = e^{u0},

with a mirror ghost row closing the homogeneous Neumann condition at
``r_max``. Each Newton step solves ``W (-Lap_h + c E e^v) delta = W F`` by
preconditioned conjugate gradients; the row weight ``W`` (1/2 on the Neumann
row, 1 elsewhere) makes that operator symmetric positive definite.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InternalConsistencyError, IterativeFailure, LinearSolverError, ValidationError
from .geometry import PhysicalParams, metric_weight
from .grid import ScalarField, StripGrid
from .sources import SourceData

_EPS = np.finfo(float).eps
BRACKET_TOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    ``tol`` is the max-norm target for the nonlinear residual. Because the
    five-point stencil amplifies rounding by ``~1/h^2``, the solver also
    estimates the floating-point floor of the residual and accepts
    ``max(tol, floor_factor * floor)``; the effective value is reported.
    """

    max_newton: int = 50
    tol: float = 1e-10
    max_halvings: int = 30
    cg_rtol: float = 1e-12
    cg_max_iter: int = 5000
    cg_stall: int = 400
    preconditioner: str = "fft"
    project: bool = False
    floor_factor: float = 4.0
    strict_bracket: bool = True

    def __post_init__(self):
        if not (self.tol > 0 and self.cg_rtol > 0 and self.floor_factor > 0):
            raise ValidationError("solver tolerances must be positive")
        if min(self.max_newton, self.max_halvings, self.cg_max_iter, self.cg_stall) < 1:
            raise ValidationError("iteration caps must be >= 1")
        if self.preconditioner not in ("fft", "jacobi", "none"):
            raise ValidationError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual: float
    bracket_violations: int
    wall_time: float
    effective_tol: float = 0.0
    cg_iterations: list = field(default_factory=list)
    history: list = field(default_factory=list)

    def as_dict(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
            "effective_tol": self.effective_tol,
            "bracket_violations": self.bracket_violations,
            "cg_iterations": list(self.cg_iterations),
            "wall_time": self.wall_time,
        }


@dataclass
class DiscreteProblem:
    """Frozen coefficient arrays on the unknown rows (shape ``(Nr, Nt)``)."""

    grid: StripGrid
    c: np.ndarray  # 2 / Xi^2, one value per row
    E: np.ndarray  # exp(u0)
    g: np.ndarray

    @classmethod
    def from_sources(cls, sources: SourceData, params: PhysicalParams, grid: StripGrid):
        if abs(params.beta - grid.beta) > 1e-14 * params.beta or abs(sources.beta - grid.beta) > 1e-14 * grid.beta:
            raise ValidationError("grid, parameters and vortex data must share beta")
        R, T = grid.mesh()
        inv, _ = metric_weight(params, grid.r[1:])
        return cls(grid, 2.0 * inv, sources.expu0(R[1:], T[1:]), sources.g(R[1:], T[1:]))

    def with_forcing(self, g):
        return DiscreteProblem(self.grid, self.c, self.E, np.asarray(g, dtype=float))

    def lap(self, v_full):
        """Five-point Laplacian on rows 1..Nr with the Neumann mirror at Nr."""
        grid = self.grid
        out = np.empty_like(v_full)
        kernels.laplacian5(v_full, grid.hr, grid.ht, out)
        last = v_full[-1]
        out[-1] = 2.0 * (v_full[-2] - last) / grid.hr**2 + (
            np.roll(last, 1) - 2.0 * last + np.roll(last, -1)
        ) / grid.ht**2
        return out[1:]

    def residual(self, v_full):
        with np.errstate(over="ignore", invalid="ignore"):
            F = self.lap(v_full) - self.c[:, None] * (self.E * np.exp(v_full[1:]) - 1.0) - self.g
        return F

    def floor(self, v_full):
        """Rough size of the rounding error committed when evaluating ``F``."""
        grid = self.grid
        stencil = 4.0 / grid.hr**2 + 4.0 / grid.ht**2
        vmax = float(np.max(np.abs(v_full)))
        return 8.0 * _EPS * (vmax * stencil + float(np.max(self.c)) + float(np.max(np.abs(self.g))))


def residual(v: ScalarField, sources: SourceData, params: PhysicalParams, grid: StripGrid | None = None):
    """Nodal residual ``Lap_h v - (2/Xi^2)(e^{u0+v} - 1) - g``; 0 on the axis row."""
    grid = grid or v.grid
    vals = _checked_values(v.values, grid)
    F = DiscreteProblem.from_sources(sources, params, grid).residual(vals)
    out = np.zeros(grid.shape)
    out[1:] = F
    return ScalarField(grid, out)


def _checked_values(values, grid):
    vals = np.asarray(values, dtype=float)
    if vals.shape != grid.shape:
        raise ValidationError(f"field shape {vals.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(vals)):
        raise ValidationError("field contains non-finite values")
    if np.any(vals[0] != 0.0):
        raise ValidationError("v must vanish on the axis row")
    return vals


# -- linear algebra -------------------------------------------------------------

class _Operator:
    def __init__(self, grid: StripGrid, diag):
        self.hr, self.ht = grid.hr, grid.ht
        self.diag = np.ascontiguousarray(diag)
        self.weight = np.ones(diag.shape[0])
        self.weight[-1] = 0.5
        self._out = np.empty_like(self.diag)

    def __call__(self, x):
        return kernels.apply_operator(x, self.diag, self.hr, self.ht, np.empty_like(x))


class _FFTPreconditioner:
    """Exact inverse of ``W (-Lap_h + cbar(r))`` with ``cbar`` the t-mean of the diagonal.

    A real FFT in ``t`` diagonalises the periodic direction; each mode leaves a
    tridiagonal radial system solved by Thomas elimination.
    """

    def __init__(self, grid: StripGrid, diag):
        n, nt = diag.shape
        ir2 = 1.0 / grid.hr**2
        cbar = diag.mean(axis=1)
        self.main = 2.0 * ir2 + cbar
        self.sub = np.full(n, -ir2)
        self.sub[-1] = -2.0 * ir2
        self.sup = np.full(n, -ir2)
        m = np.arange(nt // 2 + 1)
        self.shift = (4.0 / grid.ht**2) * np.sin(np.pi * m / nt) ** 2
        self.inv_w = np.ones(n)
        self.inv_w[-1] = 2.0
        self.nt = nt

    def __call__(self, z):
        zh = np.fft.rfft(z * self.inv_w[:, None], axis=1)
        yh = kernels.tridiag_modes(self.sub, self.main, self.sup, self.shift, zh)
        return np.fft.irfft(yh, n=self.nt, axis=1)


class _JacobiPreconditioner:
    def __init__(self, grid: StripGrid, diag):
        d = 2.0 / grid.hr**2 + 2.0 / grid.ht**2 + diag
        d[-1] *= 0.5
        self.inv = 1.0 / d

    def __call__(self, z):
        return z * self.inv


def _make_preconditioner(kind, grid, diag):
    if kind == "fft":
        return _FFTPreconditioner(grid, diag)
    if kind == "jacobi":
        return _JacobiPreconditioner(grid, diag)
    return lambda z: z.copy()


def conjugate_gradient(A, b, M, rtol, max_iter, stall):
    """Preconditioned CG with serial, deterministic reductions.

    Returns ``(x, iterations, trace)``; raises ``LinearSolverError`` when the
    residual fails to reach ``rtol * |b|`` or stops improving for ``stall``
    consecutive iterations.
    """
    bnorm = float(np.sqrt(np.vdot(b, b)))
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x, 0, [0.0]
    target = rtol * bnorm
    r = b.copy()
    z = M(r)
    p = z.copy()
    rz = float(np.vdot(r, z))
    trace = [bnorm]
    best, best_it = bnorm, 0
    for it in range(1, max_iter + 1):
        Ap = A(p)
        pAp = float(np.vdot(p, Ap))
        if not pAp > 0:
            raise LinearSolverError("operator is not positive definite along a search direction",
                                    trace[-1], it, trace)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rn = float(np.sqrt(np.vdot(r, r)))
        trace.append(rn)
        if rn <= target:
            return x, it, trace
        if rn < best:
            best, best_it = rn, it
        elif it - best_it >= stall:
            raise LinearSolverError(f"CG stagnated at relative residual {best / bnorm:.3e}", rn, it, trace)
        z = M(r)
        rz_new = float(np.vdot(r, z))
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise LinearSolverError(f"CG hit {max_iter} iterations at relative residual {trace[-1] / bnorm:.3e}",
                            trace[-1], max_iter, trace)


def operator_matrix_free(v_full, problem: DiscreteProblem):
    """The symmetric Newton operator at ``v`` as a callable on rows 1..Nr."""
    with np.errstate(over="ignore"):
        diag = problem.c[:, None] * problem.E * np.exp(v_full[1:])
    return _Operator(problem.grid, diag)


# -- Newton -------------------------------------------------------------------

def _bracket_arrays(bracket, grid):
    if bracket is None:
        return None, None
    lower, upper = bracket
    lo = np.broadcast_to(np.asarray(getattr(lower, "values", lower), dtype=float), grid.shape)
    hi = np.broadcast_to(np.asarray(getattr(upper, "values", upper), dtype=float), grid.shape)
    if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
        raise ValidationError("bracket contains NaN")
    if np.any(lo > hi):
        bad = int(np.count_nonzero(lo > hi))
        raise ValidationError(f"bracket ordering lower <= upper fails at {bad} nodes")
    return lo, hi


def _violations(v, lo, hi):
    if lo is None:
        return 0
    return int(np.count_nonzero((v < lo - BRACKET_TOL) | (v > hi + BRACKET_TOL)))


def solve_problem(problem: DiscreteProblem, initial=None, config: SolverConfig | None = None, bracket=None):
    """Newton iteration on a prepared :class:`DiscreteProblem`."""
    config = config or SolverConfig()
    grid = problem.grid
    start = time.perf_counter()
    v = np.zeros(grid.shape) if initial is None else _checked_values(getattr(initial, "values", initial), grid).copy()
    lo, hi = _bracket_arrays(bracket, grid)
    if lo is not None and _violations(v, lo, hi):
        raise ValidationError("initial guess lies outside the bracket")

    F = problem.residual(v)
    res = float(np.max(np.abs(F)))
    history = [res]
    cg_counts = []
    it = 0
    converged = False
    while True:
        eff_tol = max(config.tol, config.floor_factor * problem.floor(v))
        if res <= eff_tol:
            converged = True
            break
        if it >= config.max_newton:
            raise IterativeFailure(f"Newton did not converge in {it} iterations (residual {res:.3e})", res, it)
        op = operator_matrix_free(v, problem)
        M = _make_preconditioner(config.preconditioner, grid, op.diag)
        rhs = F * op.weight[:, None]
        delta, n_cg, _ = conjugate_gradient(op, rhs, M, config.cg_rtol, config.cg_max_iter, config.cg_stall)
        cg_counts.append(n_cg)
        it += 1
        step = 1.0
        accepted = False
        for _ in range(config.max_halvings + 1):
            trial = v.copy()
            trial[1:] += step * delta
            if config.project and lo is not None:
                np.clip(trial, lo, hi, out=trial)
                trial[0] = 0.0
            Ft = problem.residual(trial)
            rt = float(np.max(np.abs(Ft)))
            if np.isfinite(rt) and rt < res:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no decrease possible: acceptable only if already at rounding level
            floor = config.floor_factor * problem.floor(v)
            if res <= 16.0 * floor:
                converged = True
                eff_tol = max(eff_tol, res)
                break
            raise IterativeFailure(f"line search failed after {config.max_halvings} halvings "
                                   f"(residual {res:.3e})", res, it)
        v, F, res = trial, Ft, rt
        history.append(res)

    viol = _violations(v, lo, hi)
    report = SolveReport(converged, it, res, viol, time.perf_counter() - start, eff_tol, cg_counts, history)
    if viol and config.strict_bracket:
        raise InternalConsistencyError(f"converged solution leaves the bracket at {viol} nodes")
    return ScalarField(grid, v), report


def solve(initial, sources: SourceData, params: PhysicalParams, grid: StripGrid,
          config: SolverConfig | None = None, bracket=None):
    """Solve for ``v`` on ``grid``; ``bracket = (lower, upper)`` arrays or fields.

    ``initial=None`` starts from 0, which lies inside the bracket because the
    radial sub-solution is non-positive and ``-u0 >= 0``.
    """
    problem = DiscreteProblem.from_sources(sources, params, grid)
    return solve_problem(problem, initial, config, bracket)


def upper_solution(sources: SourceData, grid: StripGrid):
    """``-u0`` on the grid, ``+inf`` at nodes that coincide with a vortex."""
    R, T = grid.mesh()
    return -sources.u0(R, T)
