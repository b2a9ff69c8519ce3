"""Radial model solutions, the barrier family phi(x, C) and the data of the approximate problem."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from math import comb

import numpy as np

from core.errors import DomainError, PreconditionError
from core.geometry import RadialSurface
from core.symfun import FloatArray, elem_sym

logger = logging.getLogger(__name__)

EPS_MAX = 1e-2
BARRIER_DELTA = 0.05
R_FACTOR = 50.0
R_MARGIN = 10.0

LOG_OBSTRUCTION = ('k = n/2 is not solvable: u = C log|x| - 1 has S_{n/2}(D^2 u) = 0 '
                   'and u = -1 on the unit sphere for every C > 0, so no decaying '
                   'solution exists')


def check_dimensions(n: int, k: int) -> float:
    """Return alpha0 = n/k - 2, rejecting n <= 2k."""
    if k < 1:
        raise DomainError('k must be at least 1', n=n, k=k)
    if 2 * k == n:
        raise DomainError(LOG_OBSTRUCTION, n=n, k=k)
    if n < 2 * k:
        raise DomainError('n < 2k: the barrier exponent n/k - 2 is negative', n=n, k=k)
    return n / k - 2.0


def barrier_value(r, C: float, alpha0: float, eps: float = 0.0):
    return -C * (np.asarray(r, dtype=float) + eps) ** (-alpha0)


def barrier_slope(r, C: float, alpha0: float, eps: float = 0.0):
    return C * alpha0 * (np.asarray(r, dtype=float) + eps) ** (-alpha0 - 1.0)


def barrier_eigenvalues(r, n: int, k: int, C: float = 1.0, eps: float = 0.0) -> FloatArray:
    """Radial eigenvalue first, then the (n-1)-fold tangential one."""
    alpha0 = check_dimensions(n, k)
    r = np.asarray(r, dtype=float)
    base = C * alpha0 * (r + eps) ** (-n / k)
    radial = base * (1.0 - n / k)
    tangential = base * (1.0 + eps / r)
    return np.concatenate([radial[..., None], np.repeat(tangential[..., None], n - 1, axis=-1)], axis=-1)


@dataclass(frozen=True)
class BarrierFamily:
    n: int
    k: int
    eps: float = 0.0
    C: float = 1.0

    def __post_init__(self):
        check_dimensions(self.n, self.k)
        if self.eps < 0:
            raise DomainError('eps must be non-negative', eps=self.eps)
        if self.C <= 0:
            raise DomainError('barrier amplitude must be positive', C=self.C)

    @property
    def alpha0(self) -> float:
        return self.n / self.k - 2.0


@dataclass(frozen=True)
class BarrierValue:
    value: float
    gradient: FloatArray
    hessian_eigs: FloatArray


def phi_barrier(family: BarrierFamily, x) -> BarrierValue:
    """phi(x, C) = -C(|x| + eps)^{-alpha0} with gradient and Hessian eigenvalues."""
    x = np.asarray(x, dtype=float)
    if x.shape != (family.n,):
        raise DomainError(f'point must have {family.n} coordinates', shape=list(x.shape))
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise DomainError('barrier is singular at the origin')
    a0 = family.alpha0
    value = float(barrier_value(r, family.C, a0, family.eps))
    gradient = barrier_slope(r, family.C, a0, family.eps) * x / r
    eigs = barrier_eigenvalues(r, family.n, family.k, family.C, family.eps)
    return BarrierValue(value, gradient, eigs)


def f_eps(n: int, k: int, eps: float, r):
    """sigma_k(D^2 phi(x, 1)) in closed form; zero for eps = 0."""
    alpha0 = check_dimensions(n, k)
    if eps < 0:
        raise DomainError('eps must be non-negative', eps=eps)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError('f_eps needs r > 0')
    out = ((1.0 + eps / r) ** (k - 1) * comb(n - 1, k) * (eps / r)
           * (r + eps) ** (-n) * alpha0 ** k)
    return float(out) if out.ndim == 0 else out


def mu_exact(n: int, k: int, r):
    """(mu, mu_r) for mu = -r^{-alpha0}."""
    alpha0 = check_dimensions(n, k)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError('mu needs r > 0')
    value, slope = -r ** (-alpha0), alpha0 * r ** (-alpha0 - 1.0)
    if r.ndim == 0:
        return float(value), float(slope)
    return value, slope


def ball_gamma(n: int, k: int, rho0: float) -> float:
    return float(rho0 ** check_dimensions(n, k))


def radial_ball_solution(n: int, k: int, rho0: float, r):
    """-(rho0/r)^{alpha0}: the decaying solution outside the ball of radius rho0."""
    alpha0 = check_dimensions(n, k)
    if rho0 <= 0:
        raise DomainError('ball radius must be positive', rho0=rho0)
    r = np.asarray(r, dtype=float)
    if np.any(r < rho0 * (1.0 - 1e-12)):
        raise DomainError('radial ball solution is defined for r >= rho0', rho0=rho0)
    out = -(rho0 / r) ** alpha0
    return float(out) if out.ndim == 0 else out


def log_solution_check(n: int, C: float, r: float) -> float:
    """S_{n/2} of the Hessian of C log r - 1; identically zero."""
    if n % 2:
        raise DomainError('the logarithmic solution needs even n', n=n)
    if r <= 0:
        raise DomainError('log solution needs r > 0', r=r)
    eigs = np.full(n, C / r ** 2)
    eigs[0] = -C / r ** 2
    return float(elem_sym(eigs, n // 2))


@dataclass(frozen=True)
class ApproxProblem:
    """S_k(D^2 u) = f_eps in B_R minus Omega, u = -1 on the boundary, u = phi(x, C0) on |x| = R."""

    n: int
    k: int
    R: float
    eps: float
    surface: RadialSurface
    C0: float
    C1: float
    r_margin: float = R_MARGIN
    eps_max: float = EPS_MAX

    def __post_init__(self):
        alpha0 = check_dimensions(self.n, self.k)
        if self.surface.n != self.n:
            raise DomainError('surface dimension does not match n', n=self.n, surface_n=self.surface.n)
        if not 0.0 < self.C0 < 1.0 < self.C1:
            raise PreconditionError('barrier constants need 0 < C0 < 1 < C1', C0=self.C0, C1=self.C1)
        if not 0.0 <= self.eps < self.eps_max:
            raise PreconditionError(f'eps must lie in [0, {self.eps_max})', eps=self.eps)
        rho_min, rho_max = self.surface.extent()
        if self.R <= rho_max * self.r_margin:
            raise PreconditionError('outer radius too small for the boundary', R=self.R,
                                    required=rho_max * self.r_margin)
        if self.R <= (2.0 * self.C1) ** (1.0 / alpha0):
            raise PreconditionError('outer radius must exceed (2 C1)^(1/alpha0)', R=self.R)
        theta = np.linspace(0.0, np.pi, 512)
        rho = self.surface.rho(theta)
        if np.any(barrier_value(rho, self.C0, alpha0, self.eps) <= -1.0):
            raise PreconditionError('phi(x, C0) must exceed -1 on the boundary', C0=self.C0)
        if np.any(barrier_value(rho, self.C1, alpha0, self.eps) >= -1.0):
            raise PreconditionError('phi(x, C1) must stay below -1 on the boundary', C1=self.C1)
        if np.any(self.subsolution(rho) >= -1.0):
            raise PreconditionError('shifted subsolution must stay below -1 on the boundary', R=self.R)

    @classmethod
    def build(cls, surface: RadialSurface, k: int, eps: float = 1e-3, R: float | None = None,
              C0: float | None = None, C1: float | None = None, delta: float = BARRIER_DELTA,
              **kwargs) -> 'ApproxProblem':
        """Fill in R = 50 max(rho) and the tightest symmetric C0, C1 recipe."""
        alpha0 = check_dimensions(surface.n, k)
        rho_min, rho_max = surface.extent()
        if R is None:
            R = R_FACTOR * rho_max
        if C0 is None:
            C0 = min((1.0 - delta) * (rho_min + eps) ** alpha0, 1.0 - delta)
        if C1 is None:
            C1 = max((1.0 + delta) * (rho_max + eps) ** alpha0, 1.0 + delta)
        return cls(surface.n, k, float(R), float(eps), surface, float(C0), float(C1), **kwargs)

    def replace(self, **changes) -> 'ApproxProblem':
        return dataclasses.replace(self, **changes)

    @property
    def alpha0(self) -> float:
        return self.n / self.k - 2.0

    @property
    def b_R(self) -> float:
        return float(barrier_value(self.R, self.C0, self.alpha0, self.eps))

    def upper(self, r):
        return barrier_value(r, self.C0, self.alpha0, self.eps)

    def subsolution(self, r):
        shift = (self.C1 - self.C0) * (self.R + self.eps) ** (-self.alpha0)
        return barrier_value(r, self.C1, self.alpha0, self.eps) + shift

    def lower(self, r):
        return np.maximum(barrier_value(r, self.C1, self.alpha0, self.eps), self.subsolution(r))

    def gradient_band(self) -> tuple:
        """Bounds on |Du| along |x| = R."""
        base = self.alpha0 * (self.R + self.eps) ** (-self.alpha0 - 1.0)
        return self.C0 * base, self.C1 * base

    def to_dict(self) -> dict:
        return {'n': self.n, 'k': self.k, 'R': self.R, 'eps': self.eps,
                'C0': self.C0, 'C1': self.C1, 'b_R': self.b_R,
                'rho': list(self.surface.coeffs)}


def sandwich_radial(problem: ApproxProblem, r):
    """(lower, upper) envelopes as functions of |x| only."""
    return problem.lower(r), problem.upper(r)


def sandwich_bounds(problem: ApproxProblem, x) -> tuple:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise DomainError(f'point must have {problem.n} coordinates', shape=list(x.shape))
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise DomainError('origin lies inside the domain')
    theta = float(np.arccos(np.clip(x[0] / r, -1.0, 1.0)))
    rho = float(problem.surface.rho(theta))
    slack = 1e-12 * problem.R
    if r < rho - slack or r > problem.R + slack:
        raise DomainError('point lies outside the annulus', r=r, rho=rho, R=problem.R)
    lower, upper = sandwich_radial(problem, r)
    return float(lower), float(upper)


def barrier_table(n: int, k: int, eps_values, radii, C: float = 1.0) -> list[dict]:
    """Rows of phi, phi_r, eigenvalues and f_eps for the ``barriers-table`` command."""
    alpha0 = check_dimensions(n, k)
    rows = []
    for eps in eps_values:
        for r in radii:
            eigs = barrier_eigenvalues(r, n, k, C, eps)
            rows.append({
                'n': n, 'k': k, 'eps': float(eps), 'r': float(r), 'C': float(C),
                'phi': float(barrier_value(r, C, alpha0, eps)),
                'phi_r': float(barrier_slope(r, C, alpha0, eps)),
                'eig_radial': float(eigs[0]),
                'eig_tangential': float(eigs[1]),
                'sigma_k': float(elem_sym(eigs, k)),
                'f_eps': float(f_eps(n, k, eps, r) * C ** k),
            })
    return rows
