"""Solvers for the approximate Dirichlet problem and their far-field diagnostics.

Radial problems are solved through the discrete first integral of the
conservative form d/dr[r^{n-k} (u')^k] = k/C(n-1,k-1) r^{n-1} f_eps.
General star-shaped boundaries use damped Newton on the boundary-fitted
axisymmetric grid of ``core.grid``.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from math import comb, log2

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from core.barriers import ApproxProblem, barrier_value, f_eps
from core.errors import ConfigError, ConvergenceError, DomainError, PreconditionError
from core.geometry import RadialSurface, block_sigma_k
from core.grid import AnnulusGrid, SolutionField
from core.symfun import cone_margin

logger = logging.getLogger(__name__)

SPREAD_LIMIT = 0.10
EXPONENT_TOL = 0.1


@dataclass(frozen=True)
class SolverConfig:
    n_s: int = 192
    n_theta: int = 33
    grading: float = 2.0
    tol_res: float = 1e-8
    accept_margin: float = 1e-8
    guard_tol: float = 1e-6
    max_newton: int = 50
    min_step: float = 2.0 ** -40
    radial_points: int = 2048
    radial_theta: int = 33
    radial_tol: float = 1e-10
    sandwich_slack: float = 1e-6
    band_slack: float = 0.05

    def __post_init__(self):
        for name in ('tol_res', 'accept_margin', 'guard_tol', 'radial_tol', 'sandwich_slack', 'band_slack'):
            if not getattr(self, name) > 0:
                raise ConfigError(f'{name} must be positive', key=name, value=getattr(self, name))
        if not 0.0 < self.min_step < 1.0:
            raise ConfigError('min_step must lie in (0, 1)', key='min_step', value=self.min_step)
        if self.max_newton < 1:
            raise ConfigError('max_newton must be at least 1', key='max_newton', value=self.max_newton)
        if self.radial_points < 256:
            raise ConfigError('radial grids need at least 256 points', key='radial_points',
                              value=self.radial_points)

    @property
    def max_halvings(self) -> int:
        return max(1, int(round(log2(1.0 / self.min_step))))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AsymptoticsReport:
    gamma: float
    shift: float
    amplitude: float
    spread: float
    low_confidence: bool
    window: tuple
    exponents: dict
    exponents_ok: bool
    b0: float
    gamma_bounds: tuple
    within_barrier_bounds: bool
    ratio_extremes: dict

    def to_dict(self) -> dict:
        out = asdict(self)
        out['window'] = list(self.window)
        out['gamma_bounds'] = list(self.gamma_bounds)
        return out


@dataclass
class SolveReport:
    method: str
    problem: dict
    grid: dict
    iterations: int
    residual_history: list
    final_residual: float
    admissibility_margin: float
    sandwich_margin: float
    gradient_band: dict
    boundary_gradient: dict
    asymptotics: AsymptoticsReport | None = None
    retried: bool = False
    stages: list = field(default_factory=list)
    extrapolation: dict | None = None

    def to_dict(self) -> dict:
        return {
            'method': self.method,
            'problem': self.problem,
            'grid': self.grid,
            'iterations': self.iterations,
            'residual_history': list(self.residual_history),
            'final_residual': self.final_residual,
            'admissibility_margin': self.admissibility_margin,
            'sandwich_margin': self.sandwich_margin,
            'gradient_band': self.gradient_band,
            'boundary_gradient': self.boundary_gradient,
            'asymptotics': None if self.asymptotics is None else self.asymptotics.to_dict(),
            'retried': self.retried,
            'stages': list(self.stages),
            'extrapolation': self.extrapolation,
        }


def residual_scale(problem: ApproxProblem) -> float:
    """C(n,k) (alpha0 rho_min^{-alpha0})^k: size of S_k(r^2 D^2 u) near the boundary."""
    rho_min, _ = problem.surface.extent()
    return float(comb(problem.n, problem.k) * (problem.alpha0 * rho_min ** -problem.alpha0) ** problem.k)


# ---------- radial ----------

def _radial_closed_form(problem: ApproxProblem, r: np.ndarray) -> np.ndarray:
    a0 = problem.alpha0
    rho0 = float(problem.surface.coeffs[0])
    amp = (problem.b_R + 1.0) / (rho0 ** -a0 - problem.R ** -a0)
    return -1.0 + amp * (rho0 ** -a0 - r ** -a0)


def _flux_parts(problem: ApproxProblem, r: np.ndarray):
    n, k, a0, eps = problem.n, problem.k, problem.alpha0, problem.eps
    mid = 0.5 * (r[1:] + r[:-1])
    G = a0 ** k * (mid / (mid + eps)) ** (n - k)
    return mid, np.diff(r), G, mid ** (n - k)


def radial_flux_residual(problem: ApproxProblem, r, u) -> np.ndarray:
    """Interior residuals of r_{i+1/2}^{n-k} slope_i^k - G(r_{i+1/2}) = const, scaled by alpha0^k."""
    r, u = np.asarray(r, dtype=float), np.asarray(u, dtype=float)
    mid, dr, G, weight = _flux_parts(problem, r)
    slope = np.diff(u) / dr
    flux = weight * np.sign(slope) * np.abs(slope) ** problem.k - G
    return np.diff(flux) / problem.alpha0 ** problem.k


def _radial_profile(problem: ApproxProblem, r: np.ndarray):
    mid, dr, G, weight = _flux_parts(problem, r)
    k = problem.k
    target = problem.b_R + 1.0

    def slopes(c):
        return (np.maximum(G + c, 0.0) / weight) ** (1.0 / k)

    def mismatch(c):
        return float(dr @ slopes(c)) - target

    lo = -float(G.min())
    if mismatch(lo) >= 0.0:
        raise ConvergenceError('radial problem has no monotone solution on this grid',
                               R=problem.R, eps=problem.eps)
    hi = lo + problem.alpha0 ** k
    for _ in range(200):
        if mismatch(hi) > 0.0:
            break
        hi = lo + 2.0 * (hi - lo)
    else:
        raise ConvergenceError('could not bracket the radial flux constant', R=problem.R)
    c = brentq(mismatch, lo, hi, xtol=1e-15 * problem.alpha0 ** k, rtol=4 * np.finfo(float).eps, maxiter=500)
    u = np.concatenate([[-1.0], -1.0 + np.cumsum(dr * slopes(c))])
    u[-1] = problem.b_R
    return u, c


def _solve_radial_problem(problem: ApproxProblem, config: SolverConfig) -> SolutionField:
    if not problem.surface.is_ball:
        raise DomainError('radial solver needs a ball boundary', rho=list(problem.surface.coeffs))
    grid = AnnulusGrid(problem.surface, problem.R, config.radial_points, config.radial_theta, 0.0)
    r = grid.r[:, 0]
    if problem.eps == 0.0:
        u = _radial_closed_form(problem, r)
        u[0], u[-1] = -1.0, problem.b_R
        method, history = 'radial-closed-form', [0.0]
        margin = 0.0
    else:
        u, c = _radial_profile(problem, r)
        res = radial_flux_residual(problem, r, u)
        history = [float(np.max(np.abs(res)))]
        if history[-1] > config.radial_tol:
            raise ConvergenceError('radial residual above tolerance', trace=history, tol=config.radial_tol)
        method = 'radial-flux'
        mid, dr, G, weight = _flux_parts(problem, r)
        flux = weight * (np.diff(u) / dr) ** problem.k
        margin = float(np.min(np.diff(flux)) / problem.alpha0 ** problem.k)
        logger.debug('radial flux constant %.6e, residual %.3e', c, history[-1])
    values = np.repeat(u[:, None], grid.n_theta, axis=1)
    out = SolutionField(problem, grid, values)
    report = _build_report(out, method, 0, history, margin, config)
    return out.with_report(report)


def solve_radial(n: int, k: int, rho0: float, R: float, eps: float, points: int = 2048, *,
                 C0: float | None = None, C1: float | None = None,
                 config: SolverConfig | None = None) -> SolutionField:
    """Radial solve outside the ball of radius rho0; the report rides on ``field.report``."""
    if points < 256:
        raise DomainError('radial grids need at least 256 points', points=points)
    if not 0.0 < rho0 < R:
        raise DomainError('need 0 < rho0 < R', rho0=rho0, R=R)
    config = config or SolverConfig()
    if config.radial_points != points:
        config = SolverConfig(**{**config.to_dict(), 'radial_points': points})
    problem = ApproxProblem.build(RadialSurface.ball(n, rho0), k, eps=eps, R=R, C0=C0, C1=C1)
    return _solve_radial_problem(problem, config)


# ---------- axisymmetric ----------

def initial_guess(problem: ApproxProblem, grid: AnnulusGrid, C: float | None = None) -> np.ndarray:
    """Per-column blend from -1 to phi(R, C0) shaped by the barrier profile phi(., C)."""
    C = np.sqrt(problem.C0 * problem.C1) if C is None else C
    a0, eps = problem.alpha0, problem.eps
    r = grid.r
    rho = r[:1, :]
    psi = barrier_value(r, C, a0, eps)
    psi_in = barrier_value(rho, C, a0, eps)
    psi_out = barrier_value(problem.R, C, a0, eps)
    u = -1.0 + (problem.b_R + 1.0) * (psi - psi_in) / (psi_out - psi_in)
    u[0, :] = -1.0
    u[-1, :] = problem.b_R
    return u


class _Discretization:
    """Nodal residual F = (S_k(r^2 D^2 u) - r^{2k} f_eps)/scale with Dirichlet rows."""

    def __init__(self, problem: ApproxProblem, grid: AnnulusGrid):
        self.problem = problem
        self.grid = grid
        self.ops = grid.frame_operators
        r = grid.r.ravel()
        n, k = problem.n, problem.k
        self.rhs = r ** (2 * k) * f_eps(n, k, problem.eps, r)
        self.scale = residual_scale(problem)
        boundary = np.zeros(grid.shape, dtype=bool)
        boundary[0, :] = boundary[-1, :] = True
        self.boundary = boundary.ravel()
        bc = np.zeros(grid.shape)
        bc[0, :] = -1.0
        bc[-1, :] = problem.b_R
        self.bc = bc.ravel()

    def entries(self, u):
        return tuple(self.ops[name] @ u for name in ('a', 'b', 'c', 'm'))

    def residual(self, u) -> np.ndarray:
        S = block_sigma_k(*self.entries(u), self.problem.n, self.problem.k)
        F = (S - self.rhs) / self.scale
        F[self.boundary] = u[self.boundary] - self.bc[self.boundary]
        return F

    def jacobian(self, u) -> sp.csc_matrix:
        _, da, db, dc, dm = block_sigma_k(*self.entries(u), self.problem.n, self.problem.k,
                                          derivatives=True)
        interior = (~self.boundary).astype(float) / self.scale
        J = sum(sp.diags(d * interior) @ self.ops[name]
                for d, name in ((da, 'a'), (db, 'b'), (dc, 'c'), (dm, 'm')))
        return (J + sp.diags(self.boundary.astype(float))).tocsc()

    def margins(self, u) -> np.ndarray:
        a, b, c, m = self.entries(u)
        mean = 0.5 * (a + c)
        radius = np.hypot(0.5 * (a - c), b)
        n = self.problem.n
        spec = np.concatenate([np.stack([mean - radius, mean + radius], axis=-1),
                               np.repeat(m[:, None], n - 2, axis=1)], axis=1)
        return np.asarray(cone_margin(spec[~self.boundary], self.problem.k))

    def violation(self, u) -> float:
        return float(max(0.0, -np.min(self.margins(u))))


def nodal_residual(problem: ApproxProblem, grid: AnnulusGrid, values) -> np.ndarray:
    """Scaled residual of arbitrary nodal values, shaped like the grid."""
    values = np.asarray(values, dtype=float)
    return _Discretization(problem, grid).residual(values.ravel()).reshape(grid.shape)


def _newton(disc: _Discretization, u: np.ndarray, config: SolverConfig):
    tol = config.tol_res
    F = disc.residual(u)
    history = [float(np.max(np.abs(F)))]
    for it in range(config.max_newton + 1):
        if history[-1] <= tol and disc.violation(u) <= config.accept_margin:
            return u, history, it
        if it == config.max_newton:
            break
        du = spsolve(disc.jacobian(u), -F)
        if not np.all(np.isfinite(du)):
            raise ConvergenceError('Jacobian is singular; refine the grid', trace=history,
                                   n_s=disc.grid.n_s, n_theta=disc.grid.n_theta)
        norm = np.linalg.norm(F)
        v0 = disc.violation(u)
        step = 1.0
        for _ in range(config.max_halvings):
            trial = u + step * du
            F_trial = disc.residual(trial)
            if (np.all(np.isfinite(F_trial))
                    and disc.violation(trial) <= max(config.guard_tol, v0)
                    and np.linalg.norm(F_trial) <= (1.0 - 1e-4 * step) * norm):
                break
            step *= 0.5
        else:
            raise ConvergenceError('admissibility guard exhausted the step halvings',
                                   trace=history, halvings=config.max_halvings)
        u, F = trial, F_trial
        history.append(float(np.max(np.abs(F))))
        logger.debug('newton %d: step %.3g, max|F| %.3e', it + 1, step, history[-1])
    raise ConvergenceError('Newton did not converge', trace=history, max_newton=config.max_newton)


def solve_axisym(problem: ApproxProblem, grid: AnnulusGrid, config: SolverConfig | None = None,
                 initial=None) -> SolutionField:
    """Damped Newton on the boundary-fitted grid; raises ConvergenceError on failure."""
    config = config or SolverConfig()
    if grid.surface != problem.surface or not np.isclose(grid.R, problem.R):
        raise DomainError('grid does not match the problem', grid_R=grid.R, R=problem.R)
    disc = _Discretization(problem, grid)
    u0 = initial_guess(problem, grid) if initial is None else np.array(initial, dtype=float)
    if u0.shape != grid.shape:
        raise DomainError('initial field does not match the grid', shape=list(u0.shape))
    u0 = u0.ravel()
    u0[disc.boundary] = disc.bc[disc.boundary]
    retried = False
    try:
        u, history, iterations = _newton(disc, u0, config)
    except ConvergenceError as exc:
        if 'halvings' not in exc.details:
            raise
        logger.warning('admissibility guard tripped; retrying from a re-blended guess')
        u1 = 0.5 * (u0 + initial_guess(problem, grid, C=problem.C1).ravel())
        u, history, iterations = _newton(disc, u1, config)
        retried = True
    margin = float(np.min(disc.margins(u)))
    field_ = SolutionField(problem, grid, u.reshape(grid.shape))
    report = _build_report(field_, 'axisym-newton', iterations, history, margin, config)
    report.retried = retried
    logger.info('axisymmetric solve: %d iterations, max|F| %.3e, gamma %.6f', iterations,
                history[-1], report.asymptotics.gamma)
    return field_.with_report(report)


def check_gradient_band(field_: SolutionField, config: SolverConfig | None = None, trace=None) -> dict:
    """|Du| on |x| = R against alpha0 C_{0,1} (R + eps)^{-alpha0-1}; outside the band the solve is rejected."""
    config = config or SolverConfig()
    lo, hi = field_.problem.gradient_band()
    outer = field_.gradient_norm[-1]
    band = {
        'lower': lo, 'upper': hi, 'min': float(outer.min()), 'max': float(outer.max()),
        'ok': bool(outer.min() >= lo * (1.0 - config.band_slack) and outer.max() <= hi * (1.0 + config.band_slack)),
    }
    if not band['ok']:
        raise ConvergenceError('gradient on |x| = R leaves the barrier band', band=band,
                               slack=config.band_slack, trace=list(trace or []))
    return band


def _build_report(field_: SolutionField, method: str, iterations: int, history: list,
                  margin: float, config: SolverConfig) -> SolveReport:
    problem, grid = field_.problem, field_.grid
    if margin < -config.accept_margin:
        raise ConvergenceError('accepted iterate left the closure of Gamma_k', margin=margin, trace=history)
    lower, upper = problem.lower(grid.r), problem.upper(grid.r)
    sandwich = float(min(np.min(field_.values - lower), np.min(upper - field_.values)))
    if sandwich < -config.sandwich_slack:
        raise ConvergenceError('solution leaves the barrier sandwich', sandwich_margin=sandwich, trace=history)
    band = check_gradient_band(field_, config, trace=history)
    inner = field_.gradient_norm[0]
    boundary_gradient = {'min': float(inner.min()), 'max': float(inner.max())}
    report = SolveReport(
        method=method, problem=problem.to_dict(), grid=grid.to_dict(), iterations=iterations,
        residual_history=[float(h) for h in history], final_residual=float(history[-1]),
        admissibility_margin=margin, sandwich_margin=sandwich, gradient_band=band,
        boundary_gradient=boundary_gradient,
    )
    report.asymptotics = asymptotics_report(field_)
    return report


# ---------- far field ----------

WINDOW_RADII = 24


def _window_rows(grid: AnnulusGrid) -> np.ndarray:
    r_row = np.exp(np.mean(np.log(grid.r), axis=1))
    return np.flatnonzero((r_row >= grid.R / 4.0) & (r_row <= grid.R / 2.0))


def spherical_mean(field_: SolutionField, radii) -> np.ndarray:
    """Average of u over the sphere |x| = r for each radius, weighted by sin^{n-2}(theta).

    Zonal harmonics of degree >= 1 integrate to zero against this weight, so
    the non-radial part of the far field drops out of the average.
    """
    grid = field_.grid
    log_radii = np.log(np.asarray(radii, dtype=float))
    columns = np.empty((log_radii.size, grid.n_theta))
    for j in range(grid.n_theta):
        spline = CubicSpline(np.log(grid.r[:, j]), field_.values[:, j])
        columns[:, j] = spline(log_radii)
    weight = np.sin(grid.theta) ** (field_.n - 2)
    return trapezoid(columns * weight, grid.theta, axis=1) / trapezoid(weight, grid.theta)


def asymptotics_report(field_: SolutionField) -> AsymptoticsReport:
    """Fit u = a - Gamma r^{-alpha0} on R/4 <= r <= R/2 and measure the renormalised profile there.

    The fit runs on the spherical mean of u; gamma is the median of
    -m(r) r^{alpha0} for the renormalised mean m, the spread is measured node by node.
    """
    problem, grid = field_.problem, field_.grid
    a0 = problem.alpha0
    rows = _window_rows(grid)
    if rows.size < 3:
        raise PreconditionError('fit window R/4 <= r <= R/2 holds fewer than 3 grid rows', rows=int(rows.size))
    radii = np.geomspace(grid.R / 4.0, grid.R / 2.0, WINDOW_RADII)
    mean = spherical_mean(field_, radii)
    design = np.stack([np.ones_like(radii), -radii ** -a0], axis=1)
    (shift, amplitude), *_ = np.linalg.lstsq(design, mean, rcond=None)
    if field_.shift != 0.0:
        shift = 0.0
    scale = 1.0 + shift
    if scale <= 0:
        raise PreconditionError('far-field shift is not compatible with u = -1 on the boundary', shift=shift)
    gamma = float(np.median(-(mean - shift) / scale * radii ** a0))

    r = grid.r[rows]
    u = field_.values[rows]
    v = (u - shift) / scale
    ratio = -v * r ** a0
    spread = float((ratio.max() - ratio.min()) / abs(gamma)) if gamma else float('inf')
    low = spread > SPREAD_LIMIT
    if low:
        logger.warning('asymptotic fit spread %.3f exceeds %.2f', spread, SPREAD_LIMIT)

    grad = field_.gradient_norm[rows] / scale
    hess = np.max(np.abs(field_.hessian_eigs[rows]), axis=-1) / scale
    r_row = np.exp(np.mean(np.log(r), axis=1))
    log_r = np.log(r_row)
    exponents = {}
    for name, data in (('u', np.abs(v)), ('du', grad), ('d2u', hess)):
        slope, _ = np.polyfit(log_r, np.log(np.max(data, axis=1)), 1)
        exponents[name] = float(-slope)
    expected = {'u': a0, 'du': a0 + 1.0, 'd2u': a0 + 2.0}
    exponents_ok = all(abs(exponents[key] - expected[key]) <= EXPONENT_TOL for key in expected)
    b0 = float(np.min(grad / np.abs(v) ** ((a0 + 1.0) / a0)))

    full_v = (field_.values - shift) / scale
    full_ratio = -full_v * grid.r ** a0
    ratio_extremes = {
        'boundary': [float(full_ratio[0].min()), float(full_ratio[0].max())],
        'outer': [float(full_ratio[-1].min()), float(full_ratio[-1].max())],
        'interior': [float(full_ratio[1:-1].min()), float(full_ratio[1:-1].max())],
    }
    edge_lo = min(ratio_extremes['boundary'][0], ratio_extremes['outer'][0])
    edge_hi = max(ratio_extremes['boundary'][1], ratio_extremes['outer'][1])
    slack = 1e-6 * max(1.0, abs(edge_hi))
    ratio_extremes['interior_excursion'] = bool(ratio_extremes['interior'][0] < edge_lo - slack
                                                or ratio_extremes['interior'][1] > edge_hi + slack)
    return AsymptoticsReport(
        gamma=gamma, shift=float(shift), amplitude=float(amplitude), spread=spread, low_confidence=low,
        window=(float(grid.R / 4.0), float(grid.R / 2.0)), exponents=exponents, exponents_ok=exponents_ok,
        b0=b0, gamma_bounds=(problem.C0, problem.C1),
        within_barrier_bounds=bool(problem.C0 <= gamma <= problem.C1),
        ratio_extremes=ratio_extremes,
    )


# ---------- continuation ----------

def coupled_eps_schedule(R_schedule, n: int, k: int, c0: float = 1.0) -> list:
    """eps_i = c0 R_i^{-k(alpha0 + 3)}."""
    if c0 <= 0:
        raise ConfigError('c0 must be positive', key='c0', value=c0)
    alpha0 = n / k - 2.0
    return [float(c0 * R ** (-k * (alpha0 + 3.0))) for R in R_schedule]


def _check_schedules(eps_schedule, R_schedule):
    eps_schedule = [float(e) for e in eps_schedule]
    R_schedule = [float(R) for R in R_schedule]
    if not eps_schedule or not R_schedule:
        raise ConfigError('schedules must not be empty')
    if len(eps_schedule) == 1:
        eps_schedule = eps_schedule * len(R_schedule)
    if len(R_schedule) == 1:
        R_schedule = R_schedule * len(eps_schedule)
    if len(eps_schedule) != len(R_schedule):
        raise ConfigError('eps and R schedules differ in length', eps=len(eps_schedule), R=len(R_schedule))
    if len(eps_schedule) > 1:
        eps_steps = np.diff(eps_schedule)
        R_steps = np.diff(R_schedule)
        if np.any(eps_steps > 0) or np.any(R_steps < 0) or np.any((eps_steps == 0) & (R_steps == 0)):
            raise ConfigError('schedules must decrease eps and increase R', eps_schedule=eps_schedule,
                              R_schedule=R_schedule)
    return eps_schedule, R_schedule


def warm_start(previous: SolutionField, problem: ApproxProblem, grid: AnnulusGrid) -> np.ndarray:
    """Previous field carried to a new grid column by column in log r; barrier-shaped beyond its R."""
    old = previous.grid
    if old.n_theta != grid.n_theta:
        return initial_guess(problem, grid)
    log_old = np.log(old.r)
    log_new = np.log(grid.r)
    out = np.empty(grid.shape)
    a0, eps = problem.alpha0, problem.eps
    psi = barrier_value(grid.r, problem.C0, a0, eps)
    psi_old = barrier_value(old.R, problem.C0, a0, eps)
    psi_new = barrier_value(problem.R, problem.C0, a0, eps)
    b_old = previous.values[-1]
    for j in range(grid.n_theta):
        out[:, j] = np.interp(log_new[:, j], log_old[:, j], previous.values[:, j])
        beyond = grid.r[:, j] > old.R
        if np.any(beyond) and psi_new != psi_old:
            frac = (psi[beyond, j] - psi_old) / (psi_new - psi_old)
            out[beyond, j] = b_old[j] + (problem.b_R - b_old[j]) * frac
    out[0, :] = -1.0
    out[-1, :] = problem.b_R
    return out


def _richardson(stages: list) -> dict | None:
    if len(stages) < 3:
        return None
    (e1, g1), (e2, g2), (e3, g3) = ((s['eps'], s['gamma']) for s in stages[-3:])
    if e1 == e2 or e2 == e3:
        return None
    s1 = (g2 - g1) / (e2 - e1)
    s2 = (g3 - g2) / (e3 - e2)
    top = max(abs(s1), abs(s2))
    ratio = 1.0 if top == 0.0 else float(min(abs(s1), abs(s2)) / top) * (1.0 if s1 * s2 >= 0 else -1.0)
    linear = bool(top == 0.0 or ratio >= 0.9)
    out = {'linear': linear, 'trend_ratio': ratio, 'slope': float(s2)}
    if linear:
        out['gamma_extrapolated'] = float(g3 - s2 * e3)
    return out


def continuation_solve(problem: ApproxProblem, eps_schedule, R_schedule,
                       config: SolverConfig | None = None, method: str = 'auto') -> SolutionField:
    """Solve along (eps_i, R_i), each stage warm-started from the previous one."""
    config = config or SolverConfig()
    eps_schedule, R_schedule = _check_schedules(eps_schedule, R_schedule)
    if method not in ('auto', 'radial', 'axisym'):
        raise ConfigError('method must be auto, radial or axisym', key='method', value=method)
    radial = problem.surface.is_ball and method in ('auto', 'radial')
    if method == 'radial' and not problem.surface.is_ball:
        raise DomainError('radial method needs a ball boundary')
    current = None
    stages = []
    for index, (eps, R) in enumerate(zip(eps_schedule, R_schedule)):
        try:
            stage_problem = problem.replace(eps=eps, R=R)
            if radial:
                current = _solve_radial_problem(stage_problem, config)
            else:
                grid = AnnulusGrid(problem.surface, R, config.n_s, config.n_theta, config.grading)
                guess = None if current is None else warm_start(current, stage_problem, grid)
                current = solve_axisym(stage_problem, grid, config, initial=guess)
        except ConvergenceError as exc:
            exc.details['stage'] = index
            raise
        except (DomainError, PreconditionError) as exc:
            exc.details['stage'] = index
            raise
        rep = current.report
        stages.append({'stage': index, 'eps': eps, 'R': R, 'iterations': rep.iterations,
                       'final_residual': rep.final_residual, 'gamma': rep.asymptotics.gamma})
        logger.info('stage %d: eps=%.3e R=%.4g gamma=%.6f residual=%.3e', index, eps, R,
                    rep.asymptotics.gamma, rep.final_residual)
    report = current.report
    report.stages = stages
    report.extrapolation = _richardson(stages)
    return current.with_report(report)
