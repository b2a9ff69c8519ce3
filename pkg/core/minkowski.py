"""Level sets of a solved field, the monotone quantity Phi(tau) and the Minkowski-type inequality."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from math import comb, gamma as gamma_fn, pi

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.optimize import brentq

from core.barriers import check_dimensions
from core.errors import DomainError, PreconditionError
from core.geometry import (RadialSurface, axisym_frame_entries, boundary_curvatures, curvature_spectrum,
                           graph_curvatures)
from core.grid import SolutionField
from core.symfun import elem_sym, newton_tensor

logger = logging.getLogger(__name__)

REGULAR_RATIO = 1e-3
AGREEMENT_TOL = 0.01
EQUALITY_TOL = 0.015
DEFAULT_LEVELS = 20
LEVEL_CAP = -0.05
SPREAD_FLOOR = 1e-3


def sphere_area(dim: int) -> float:
    """|S^dim|."""
    return 2.0 * pi ** ((dim + 1) / 2.0) / gamma_fn((dim + 1) / 2.0)


def beta_threshold(n: int, k: int) -> float:
    return (n - 2 * k) / (n - k)


def check_beta(n: int, k: int, beta: float) -> float:
    check_dimensions(n, k)
    threshold = beta_threshold(n, k)
    if beta < threshold - 1e-12:
        raise PreconditionError(f'monotonicity needs beta >= (n-2k)/(n-k) = {threshold:.6g}',
                                beta=beta, threshold=threshold, hypothesis='beta >= (n-2k)/(n-k)')
    return threshold


def phi_infinity(n: int, k: int, beta: float, gamma: float) -> float:
    """|S^{n-1}| C(n-1,k-1) alpha0^{k+beta} gamma^{k - beta/alpha0}."""
    alpha0 = check_dimensions(n, k)
    if gamma <= 0:
        raise PreconditionError('gamma must be positive', gamma=gamma)
    return float(sphere_area(n - 1) * comb(n - 1, k - 1) * alpha0 ** (k + beta)
                 * gamma ** (k - beta / alpha0))


def _reflected_derivatives(values, theta):
    """d/dtheta and d2/dtheta2 of a column sampled on the uniform theta grid, even at both poles."""
    h = theta[1] - theta[0]
    padded = np.concatenate([values[2:0:-1], values, values[-2:-4:-1]])
    d1 = (padded[:-4] - 8.0 * padded[1:-3] + 8.0 * padded[3:-1] - padded[4:]) / (12.0 * h)
    d2 = (-padded[:-4] + 16.0 * padded[1:-3] - 30.0 * padded[2:-2] + 16.0 * padded[3:-1]
          - padded[4:]) / (12.0 * h ** 2)
    d1[0] = d1[-1] = 0.0
    return d1, d2


@dataclass(frozen=True, eq=False)
class LevelSet:
    level: float
    k: int
    theta: np.ndarray
    s: np.ndarray
    r: np.ndarray
    dr: np.ndarray
    grad_norm: np.ndarray
    normal: np.ndarray
    newton_form: np.ndarray
    kappa: tuple
    sigma_km1: np.ndarray
    weight: np.ndarray
    min_grad: float
    regular: bool

    @property
    def arclength(self) -> float:
        """Length of the meridian curve from axis to axis."""
        return float(trapezoid(np.hypot(self.r, self.dr), self.theta))

    def core(self, path: str = 'tensor') -> np.ndarray:
        """(1/|Du|) S_k^{ij} u_i u_j, either from the tensor or from |Du|^k sigma_{k-1}(kappa)."""
        if path == 'tensor':
            return self.newton_form / self.grad_norm
        if path == 'curvature':
            return self.grad_norm ** self.k * self.sigma_km1
        raise DomainError('path must be tensor or curvature', path=path)


def _crossing(column: np.ndarray, s: np.ndarray, level: float) -> float:
    diff = column - level
    if abs(diff[0]) <= 1e-14:
        return 0.0
    sign = np.sign(diff)
    changes = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    hits = np.flatnonzero(diff[1:] == 0.0)
    if changes.size + hits.size != 1:
        raise PreconditionError('level set is not a radial graph over this column', level=level,
                                crossings=int(changes.size + hits.size))
    if hits.size:
        return float(s[hits[0] + 1])
    i = int(changes[0])
    lo, hi = max(0, i - 2), min(s.size, i + 4)
    spline = CubicSpline(s[lo:hi], column[lo:hi])
    return float(brentq(lambda x: float(spline(x)) - level, s[i], s[i + 1], xtol=1e-14))


def extract_level_set(field_: SolutionField, level: float) -> LevelSet:
    """Contour {u = level} with per-point derivative data interpolated from the field."""
    if not -1.0 <= level < 0.0:
        raise DomainError('level must lie in [-1, 0)', level=level)
    grid = field_.grid
    values = field_.values
    n, k = field_.n, field_.k
    if level >= float(values[-1].min()):
        raise DomainError('level set reaches the artificial boundary |x| = R; choose a more negative level',
                          level=level, outer_min=float(values[-1].min()))
    theta = grid.theta
    s_star = np.array([_crossing(values[:, j], grid.s, level) for j in range(grid.n_theta)])

    derivs = field_.derivatives
    interp = {name: RectBivariateSpline(grid.s, theta, data, kx=3, ky=3)
              for name, data in derivs.items()}
    at = {name: spline.ev(s_star, theta) for name, spline in interp.items()}
    at['u_t'][0] = at['u_t'][-1] = 0.0

    r = grid.r_at(s_star, theta)
    dr, d2r = _reflected_derivatives(r, theta)
    grad = np.hypot(at['u_r'], at['u_t'] / r)
    # umbral relativo al propio contorno
    max_grad = float(grad.max())
    min_grad = float(grad.min())
    regular = max_grad > 0.0 and min_grad >= REGULAR_RATIO * max_grad
    if not regular:
        raise PreconditionError('irregular level: gradient nearly vanishes on the contour', level=level,
                                min_grad=min_grad, max_grad=max_grad)
    normal = np.stack([at['u_r'], at['u_t'] / r], axis=-1) / grad[:, None]

    a, b, c, m = axisym_frame_entries(at['u_r'], at['u_t'], at['u_rr'], at['u_rt'], at['u_tt'], r, theta)
    hess = np.zeros((theta.size, n, n))
    hess[:, 0, 0] = a
    hess[:, 0, 1] = hess[:, 1, 0] = b
    hess[:, 1, 1] = c
    for i in range(2, n):
        hess[:, i, i] = m
    du = np.zeros((theta.size, n))
    du[:, 0] = at['u_r']
    du[:, 1] = at['u_t'] / r
    tensor = newton_tensor(hess, k)
    newton_form = np.einsum('pi,pij,pj->p', du, tensor, du)

    meridian, azimuthal = graph_curvatures(r, dr, d2r, theta)
    sigma = np.asarray(elem_sym(curvature_spectrum(meridian, azimuthal, n), k - 1))
    weight = sphere_area(n - 2) * (r * np.sin(theta)) ** (n - 2) * np.hypot(r, dr)
    return LevelSet(level=float(level), k=k, theta=theta, s=s_star, r=r, dr=dr, grad_norm=grad,
                    normal=normal, newton_form=newton_form, kappa=(meridian, azimuthal), sigma_km1=sigma,
                    weight=weight, min_grad=min_grad, regular=regular)


def _quadrature(values: np.ndarray, theta: np.ndarray):
    total = float(trapezoid(values, theta))
    if (theta.size - 1) % 2 == 0 and theta.size >= 5:
        coarse = float(trapezoid(values[::2], theta[::2]))
        return total, abs(total - coarse)
    return total, None


@dataclass(frozen=True)
class PhiSample:
    tau: float
    level: float
    phi: float
    phi_curvature: float
    agreement: float
    quad_err: float | None
    min_grad: float
    flagged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_phi(field_: SolutionField, tau: float, beta: float) -> PhiSample:
    field_ = field_.renormalized()
    n, k = field_.n, field_.k
    check_beta(n, k, beta)
    if tau > -1.0:
        raise DomainError('tau must be <= -1', tau=tau)
    contour = extract_level_set(field_, 1.0 / tau)
    l_exp = (n - k) / (n - 2 * k)
    height = (-contour.level) ** l_exp
    factor = (contour.grad_norm / height) ** beta * contour.weight
    phi, err = _quadrature(contour.core('tensor') * factor, contour.theta)
    phi_b, _ = _quadrature(contour.core('curvature') * factor, contour.theta)
    agreement = abs(phi - phi_b) / abs(phi) if phi else float('inf')
    flagged = agreement > AGREEMENT_TOL
    if flagged:
        logger.warning('Phi(%.4g): tensor and curvature integrands disagree by %.2f%%', tau, 100 * agreement)
    return PhiSample(tau=float(tau), level=contour.level, phi=phi, phi_curvature=phi_b, agreement=agreement,
                     quad_err=err, min_grad=contour.min_grad, flagged=flagged)


def phi_of_tau(field_: SolutionField, tau: float, beta: float) -> float:
    """Phi(tau) over the level set {u = 1/tau}."""
    return evaluate_phi(field_, tau, beta).phi


@dataclass
class PhiSeries:
    beta: float
    l: float
    gamma: float
    phi_infinity: float
    samples: list
    tol_mono: float
    monotone: bool
    endpoint_ok: bool
    endpoint_gap: float | None
    boundary_margin: float | None = None
    fit_spread: float | None = None
    endpoint_within_spread: bool = False
    skipped: list = field(default_factory=list)

    def rows(self) -> list[dict]:
        """CSV rows; the first one is the tau = -inf entry."""
        out = [{'tau': '-inf', 'level': 0.0, 'phi': self.phi_infinity, 'quad_err': '',
                'regular_min_grad': ''}]
        for sample in self.samples:
            out.append({'tau': sample.tau, 'level': sample.level, 'phi': sample.phi,
                        'quad_err': '' if sample.quad_err is None else sample.quad_err,
                        'regular_min_grad': sample.min_grad})
        return out

    def to_dict(self) -> dict:
        return {
            'beta': self.beta, 'l': self.l, 'gamma': self.gamma, 'phi_infinity': self.phi_infinity,
            'samples': [s.to_dict() for s in self.samples], 'tol_mono': self.tol_mono,
            'monotone': self.monotone, 'endpoint_ok': self.endpoint_ok, 'endpoint_gap': self.endpoint_gap,
            'boundary_margin': self.boundary_margin, 'fit_spread': self.fit_spread,
            'endpoint_within_spread': self.endpoint_within_spread, 'skipped': list(self.skipped),
        }


def _require_gamma(field_: SolutionField) -> float:
    if field_.asymptotics is None:
        raise PreconditionError('gamma is missing: run asymptotics_report on the field first')
    return float(field_.asymptotics.gamma)


def level_cap(field_: SolutionField) -> float:
    """Largest admissible level: the contour must stay inside r <= R/2."""
    grid = field_.grid
    target = np.log(grid.R / 2.0)
    log_r = np.log(grid.r)
    at_half = [np.interp(target, log_r[:, j], field_.values[:, j]) for j in range(grid.n_theta)]
    return float(min(LEVEL_CAP, min(at_half)))


def default_taus(field_: SolutionField, count: int = DEFAULT_LEVELS) -> np.ndarray:
    top = level_cap(field_)
    levels = -np.geomspace(1.0, -top, count)
    return np.sort(1.0 / levels)


def phi_series(field_: SolutionField, beta: float, taus=None) -> PhiSeries:
    """Phi sampled on increasing tau, preceded by the closed-form value at tau = -inf."""
    field_ = field_.renormalized()
    n, k = field_.n, field_.k
    check_beta(n, k, beta)
    gamma = _require_gamma(field_)
    phi_inf = phi_infinity(n, k, beta, gamma)
    taus = default_taus(field_) if taus is None else np.sort(np.asarray(taus, dtype=float))
    if np.any(np.diff(taus) <= 0):
        raise DomainError('tau samples must be distinct')
    samples, skipped = [], []
    for tau in taus:
        try:
            samples.append(evaluate_phi(field_, float(tau), beta))
        except (PreconditionError, DomainError) as exc:
            if 'beta' in exc.details:
                raise
            skipped.append({'tau': float(tau), 'reason': exc.message})
            logger.info('skipping tau=%.4g: %s', tau, exc.message)
    values = np.array([s.phi for s in samples])
    tol = 1e-3 * float(np.median(np.abs(np.concatenate([values, [phi_inf]]))))
    monotone = bool(np.all(np.diff(values) >= -tol)) if values.size else False
    boundary_margin = None
    endpoint_ok = False
    if values.size and samples[-1].tau == -1.0:
        boundary_margin = float((values[-1] - phi_inf) / phi_inf)
        # solo el error de cuadratura, no tol_mono
        slack = max(samples[-1].quad_err or 0.0, 1e-9 * abs(phi_inf))
        endpoint_ok = bool(values[-1] >= phi_inf - slack)
        if not endpoint_ok:
            logger.warning('Phi(-1) = %.6g falls below Phi(-inf) = %.6g', values[-1], phi_inf)
    endpoint_gap = float((values[0] - phi_inf) / phi_inf) if values.size else None
    fit_spread = max(float(field_.asymptotics.spread), SPREAD_FLOOR)
    within_spread = bool(endpoint_gap is not None and abs(endpoint_gap) <= fit_spread)
    if endpoint_gap is not None and not within_spread:
        logger.warning('deepest level misses Phi(-inf) by %.3g, beyond the fit spread %.3g', endpoint_gap,
                       fit_spread)
    return PhiSeries(beta=float(beta), l=(n - k) / (n - 2 * k), gamma=gamma, phi_infinity=phi_inf,
                     samples=samples, tol_mono=tol, monotone=monotone, endpoint_ok=endpoint_ok,
                     endpoint_gap=endpoint_gap, boundary_margin=boundary_margin, fit_spread=fit_spread,
                     endpoint_within_spread=within_spread, skipped=skipped)


@dataclass(frozen=True)
class InequalityReport:
    n: int
    k: int
    beta: float
    gamma: float
    lhs: float
    rhs: float
    gap: float
    relative_gap: float
    tolerance: float
    within_tolerance: bool
    boundary_oscillation: float
    equality: bool
    gamma_free: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def boundary_integral(field_: SolutionField, surface: RadialSurface, power: float) -> float:
    """Integral over the boundary of |Du|^power sigma_{k-1}(boundary curvatures)."""
    n, k = field_.n, field_.k
    theta = field_.grid.theta
    rho, drho = surface.rho(theta), surface.drho(theta)
    grad = field_.gradient_norm[0]
    meridian, azimuthal = boundary_curvatures(surface, theta)
    sigma = np.asarray(elem_sym(curvature_spectrum(meridian, azimuthal, n), k - 1))
    weight = sphere_area(n - 2) * (rho * np.sin(theta)) ** (n - 2) * np.hypot(rho, drho)
    return float(trapezoid(grad ** power * sigma * weight, theta))


def boundary_oscillation(field_: SolutionField) -> float:
    """(max - min)/mean of |Du| on the boundary; zero when the boundary is a level sphere of a radial field."""
    grad = field_.gradient_norm[0]
    mean = float(np.mean(grad))
    return float((grad.max() - grad.min()) / mean) if mean > 0.0 else float('inf')


def minkowski_report(field_: SolutionField, surface: RadialSurface, beta: float,
                     tolerance: float = EQUALITY_TOL) -> InequalityReport:
    """Both sides of the inequality; equality needs the gap and the boundary gradient variation within tolerance."""
    field_ = field_.renormalized()
    n, k = field_.n, field_.k
    check_beta(n, k, beta)
    gamma = _require_gamma(field_)
    if surface != field_.grid.surface:
        raise DomainError('surface differs from the field boundary')
    lhs = boundary_integral(field_, surface, k + beta)
    rhs = phi_infinity(n, k, beta, gamma)
    gap = lhs - rhs
    rel = gap / rhs
    oscillation = boundary_oscillation(field_)
    within = bool(abs(rel) <= tolerance)
    equality = within and oscillation <= tolerance
    if within and not equality:
        logger.info('gap within %.3g but |Du| varies by %.3g on the boundary; not an equality case',
                    tolerance, oscillation)
    gamma_free = None
    if np.isclose(beta, n - 2 * k):
        alpha0 = n / k - 2.0
        free_rhs = sphere_area(n - 1) * comb(n - 1, k - 1) * alpha0 ** (n - k)
        free_lhs = boundary_integral(field_, surface, n - k)
        gamma_free = {'lhs': free_lhs, 'rhs': float(free_rhs), 'relative_gap': float((free_lhs - free_rhs) / free_rhs)}
    return InequalityReport(n=n, k=k, beta=float(beta), gamma=gamma, lhs=lhs, rhs=rhs, gap=gap,
                            relative_gap=float(rel), tolerance=tolerance, within_tolerance=within,
                            boundary_oscillation=oscillation, equality=equality, gamma_free=gamma_free)
