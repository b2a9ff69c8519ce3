"""Star-shaped axisymmetric boundaries, spherical Hessians and the g^N subsolution."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from math import comb

import numpy as np

from core.errors import AdmissibilityError, ConfigError, DomainError, PreconditionError, SubsolutionError
from core.symfun import FloatArray, SymMatrix, _esf_all, cone_margin, elem_sym

logger = logging.getLogger(__name__)

AXIS_ATOL = 1e-12
POSITIVITY_SAMPLES = 2048


def _on_axis(theta) -> np.ndarray:
    return np.isclose(np.sin(theta), 0.0, atol=AXIS_ATOL)


def _cot_times(theta, value, axis_limit):
    """cot(theta)*value with the L'Hopital limit on the symmetry axis."""
    theta = np.asarray(theta, dtype=float)
    axis = _on_axis(theta)
    sin = np.where(axis, 1.0, np.sin(theta))
    return np.where(axis, axis_limit, np.cos(theta) * value / sin)


@dataclass(frozen=True)
class RadialSurface:
    """rho(theta) = a0 + sum_m a_m cos(m theta), theta measured from the axis."""

    n: int
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, 'coeffs', coeffs)
        if self.n < 3:
            raise DomainError('axisymmetric surfaces need n >= 3', n=self.n)
        if not coeffs or not np.all(np.isfinite(coeffs)):
            raise DomainError('rho needs finite cosine coefficients')
        rho = self.rho(np.linspace(0.0, np.pi, POSITIVITY_SAMPLES))
        if np.min(rho) <= 0.0:
            raise DomainError('rho must stay positive', min_rho=float(np.min(rho)))

    @classmethod
    def ball(cls, n: int, radius: float = 1.0) -> 'RadialSurface':
        return cls(n, (radius,))

    @property
    def is_ball(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1:])

    def _modes(self):
        return np.arange(len(self.coeffs)), np.asarray(self.coeffs)

    def rho(self, theta):
        m, a = self._modes()
        return np.cos(np.multiply.outer(np.asarray(theta, dtype=float), m)) @ a

    def drho(self, theta):
        m, a = self._modes()
        return -np.sin(np.multiply.outer(np.asarray(theta, dtype=float), m)) @ (m * a)

    def d2rho(self, theta):
        m, a = self._modes()
        return -np.cos(np.multiply.outer(np.asarray(theta, dtype=float), m)) @ (m * m * a)

    def extent(self, samples: int = POSITIVITY_SAMPLES) -> tuple:
        rho = self.rho(np.linspace(0.0, np.pi, samples))
        return float(np.min(rho)), float(np.max(rho))

    def describe(self) -> str:
        terms = [repr(self.coeffs[0])]
        for m, a in enumerate(self.coeffs[1:], start=1):
            if a:
                terms.append(f"{'+' if a > 0 else '-'} {abs(a)!r}*cos({m}*theta)")
        return ' '.join(terms)


@dataclass(frozen=True)
class DomainSpec:
    n: int
    k: int
    surface: RadialSurface

    def describe(self) -> str:
        return f'n={self.n} k={self.k} rho = {self.surface.describe()}'


_NUM = r'(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?'
_TERM_RE = re.compile(
    rf'\s*([+-])?\s*(?:({_NUM})\s*(?:\*\s*)?)?(cos\s*\(\s*(?:(\d+)\s*\*?\s*)?theta\s*\))?\s*'
)
_HEAD_RE = re.compile(r'(\w+)\s*=\s*([^\s=]+)')


def parse_rho(expr: str) -> tuple:
    """Parse ``a0 + a1*cos(theta) + a2*cos(2*theta) ...`` into cosine coefficients."""
    coeffs: dict[int, float] = {}
    pos, first = 0, True
    expr = expr.strip()
    if not expr:
        raise ConfigError('empty rho expression', key='rho')
    while pos < len(expr):
        m = _TERM_RE.match(expr, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise ConfigError(f'cannot parse rho near {expr[pos:]!r}', key='rho')
        if m.group(1) is None and not first:
            raise ConfigError(f'missing sign before {expr[pos:]!r}', key='rho')
        sign = -1.0 if m.group(1) == '-' else 1.0
        value = float(m.group(2)) if m.group(2) is not None else 1.0
        mode = 0 if m.group(3) is None else int(m.group(4) or 1)
        coeffs[mode] = coeffs.get(mode, 0.0) + sign * value
        pos, first = m.end(), False
    top = max(coeffs)
    return tuple(coeffs.get(i, 0.0) for i in range(top + 1))


def parse_domain_spec(text: str) -> DomainSpec:
    """``n=<int> k=<int> rho = a0 [+ a_m*cos(m*theta)]...``"""
    head, sep, expr = text.partition('rho')
    if not sep:
        raise ConfigError("domain spec is missing key 'rho'", key='rho')
    expr = expr.strip()
    if not expr.startswith('='):
        raise ConfigError("domain spec needs 'rho = <expression>'", key='rho')
    values = {}
    for key, raw in _HEAD_RE.findall(head):
        if key not in ('n', 'k'):
            raise ConfigError(f'unknown key {key!r} in domain spec', key=key)
        try:
            values[key] = int(raw)
        except ValueError:
            raise ConfigError(f'key {key!r} must be an integer, got {raw!r}', key=key)
    for key in ('n', 'k'):
        if key not in values:
            raise ConfigError(f'domain spec is missing key {key!r}', key=key)
    if values['k'] < 1:
        raise ConfigError('k must be at least 1', key='k')
    try:
        surface = RadialSurface(values['n'], parse_rho(expr[1:]))
    except DomainError as exc:
        raise ConfigError(f'invalid rho: {exc.message}', key='rho', **exc.details)
    return DomainSpec(values['n'], values['k'], surface)


def graph_curvatures(r, r1, r2, theta):
    """Principal curvatures of the radial graph r(theta), axisymmetric.

    Returns (meridian, azimuthal); the azimuthal value has multiplicity n-2.
    """
    r, r1, r2 = (np.asarray(v, dtype=float) for v in (r, r1, r2))
    speed = np.sqrt(r * r + r1 * r1)
    meridian = (r * r + 2.0 * r1 * r1 - r * r2) / speed ** 3
    azimuthal = (r - _cot_times(theta, r1, r2)) / (r * speed)
    return meridian, azimuthal


@dataclass(frozen=True)
class BoundaryPointData:
    theta: float
    rho: float
    w: float
    g: SymMatrix
    gamma: SymMatrix
    h: SymMatrix
    a: SymMatrix
    kappa: FloatArray
    sigma_km1: float | None = None


def _frame_derivatives(surface: RadialSurface, theta: float):
    """rho, grad rho and covariant Hessian of rho in the frame with e_1 = e_theta."""
    m = surface.n - 1
    rho = float(surface.rho(theta))
    d1 = float(surface.drho(theta))
    d2 = float(surface.d2rho(theta))
    grad = np.zeros(m)
    grad[0] = d1
    hess = np.diag([d2] + [float(_cot_times(theta, d1, d2))] * (m - 1))
    return rho, grad, hess


def boundary_curvature(surface: RadialSurface, theta: float, k: int | None = None) -> BoundaryPointData:
    if not 0.0 <= theta <= np.pi:
        raise DomainError('theta must lie in [0, pi]', theta=float(theta))
    rho, grad, hess = _frame_derivatives(surface, theta)
    m = grad.size
    eye = np.eye(m)
    phi1 = grad / rho
    phi2 = hess / rho - np.outer(grad, grad) / rho ** 2
    pp = np.outer(phi1, phi1)
    w = float(np.sqrt(1.0 + phi1 @ phi1))
    g = rho ** 2 * (eye + pp)
    gamma = (eye - pp / (w * (1.0 + w))) / rho
    h = rho / w * (eye + pp - phi2)
    a = gamma @ h @ gamma
    a = 0.5 * (a + a.T)
    kappa = np.linalg.eigvalsh(a)
    sigma = None if k is None else float(elem_sym(kappa, k - 1))
    return BoundaryPointData(float(theta), rho, w, g, gamma, h, a, kappa, sigma)


def boundary_curvatures(surface: RadialSurface, theta):
    """Vectorised (meridian, azimuthal) principal curvatures of the boundary."""
    return graph_curvatures(surface.rho(theta), surface.drho(theta), surface.d2rho(theta), theta)


def curvature_spectrum(meridian, azimuthal, n: int) -> FloatArray:
    meridian = np.asarray(meridian, dtype=float)
    azimuthal = np.asarray(azimuthal, dtype=float)
    return np.concatenate([meridian[..., None],
                           np.repeat(azimuthal[..., None], n - 2, axis=-1)], axis=-1)


@dataclass(frozen=True)
class DomainCertificate:
    passed: bool
    k: int
    samples: int
    min_sums: tuple
    worst_theta: float
    worst_margin: float | None
    min_rho: float

    def to_dict(self) -> dict:
        return {
            'passed': self.passed,
            'k': self.k,
            'samples': self.samples,
            'min_sums': list(self.min_sums),
            'worst_theta': self.worst_theta,
            'worst_margin': self.worst_margin,
            'min_rho': self.min_rho,
        }

    def raise_if_failed(self):
        if not self.passed:
            raise AdmissibilityError('boundary is not (k-1)-convex at the sampled angles',
                                     certificate=self.to_dict())
        return self


def _certificate(surface: RadialSurface, k: int, samples: int) -> DomainCertificate:
    theta = np.linspace(0.0, np.pi, samples)
    min_rho = float(np.min(surface.rho(theta)))
    if k == 1:
        return DomainCertificate(min_rho > 0.0, k, samples, (), 0.0, None, min_rho)
    kappa = curvature_spectrum(*boundary_curvatures(surface, theta), surface.n)
    sums = _esf_all(kappa, k - 1)[:, 1:]
    margins = cone_margin(kappa, k - 1)
    worst = int(np.argmin(margins))
    passed = bool(np.all(sums > 0.0)) and min_rho > 0.0
    return DomainCertificate(passed, k, samples, tuple(float(v) for v in sums.min(axis=0)),
                             float(theta[worst]), float(margins[worst]), min_rho)


def check_admissible_domain(surface: RadialSurface, k: int, samples: int = 512,
                            raise_on_failure: bool = False, max_doublings: int = 4) -> DomainCertificate:
    """Certify kappa(theta) in Gamma_{k-1} at sampled angles, doubling until stable."""
    if samples < 64:
        raise DomainError('admissibility certificates need at least 64 samples', samples=samples)
    if not 1 <= k < surface.n:
        raise DomainError(f'k must satisfy 1 <= k < n, got k={k}', k=k, n=surface.n)
    cert = _certificate(surface, k, samples)
    for _ in range(max_doublings):
        finer = _certificate(surface, k, 2 * cert.samples)
        stable = finer.passed == cert.passed and np.allclose(
            finer.min_sums, cert.min_sums, rtol=1e-3, atol=1e-12)
        cert = finer
        if stable:
            break
    logger.debug('domain certificate k=%d passed=%s worst_theta=%.4f',
                 k, cert.passed, cert.worst_theta)
    if raise_on_failure:
        cert.raise_if_failed()
    return cert


@dataclass(frozen=True)
class SphereDerivatives:
    """Derivatives of f w.r.t. an orthonormal frame on S^{n-1} and the radius."""

    f: float
    f_a: FloatArray
    f_ab: FloatArray
    f_r: float
    f_ar: FloatArray
    f_rr: float


def spherical_hessian(d: SphereDerivatives, r: float) -> SymMatrix:
    """Euclidean Hessian in the frame (e_1..e_{n-1}, e_r), sphere block first."""
    if r <= 0:
        raise DomainError('spherical Hessian needs r > 0', r=float(r))
    f_a = np.asarray(d.f_a, dtype=float)
    m = f_a.size
    out = np.zeros((m + 1, m + 1))
    out[:m, :m] = np.asarray(d.f_ab, dtype=float) / r ** 2 + d.f_r / r * np.eye(m)
    mixed = np.asarray(d.f_ar, dtype=float) / r - f_a / r ** 2
    out[:m, m] = mixed
    out[m, :m] = mixed
    out[m, m] = d.f_rr
    return 0.5 * (out + out.T)


def hessian_of_g(surface: RadialSurface, theta: float, r: float) -> SymMatrix:
    """Hessian of g = r/rho(theta): w^3 a_11/r, w^2 a_1a/r, w a_ab/r, zero r-row."""
    if r <= 0:
        raise DomainError('hessian_of_g needs r > 0', r=float(r))
    data = boundary_curvature(surface, theta)
    a, w = data.a, data.w
    m = a.shape[0]
    # potencias de w: 3 en (1,1), 2 en (1,a), 1 en (a,b)
    exps = np.full(m, 0.5)
    exps[0] = 1.5
    block = a * w ** np.add.outer(exps, exps) / r
    out = np.zeros((m + 1, m + 1))
    out[:m, :m] = block
    return 0.5 * (out + out.T)


def _binom(p: int, j: int) -> int:
    return comb(p, j) if j >= 0 else 0


def _pow(x, e: int):
    x = np.asarray(x, dtype=float)
    return x ** e if e >= 0 else np.zeros_like(x)


def block_sigma_k(a, b, c, m, n: int, k: int, derivatives: bool = False):
    """S_k of [[a, b], [b, c]] (+) m*I_{n-2} from the block invariants.

    With ``derivatives`` also returns dS/da, dS/db, dS/dc, dS/dm.
    """
    p = n - 2
    a, b, c, m = (np.asarray(v, dtype=float) for v in (a, b, c, m))
    t = a + c
    d = a * c - b * b
    c0, c1, c2 = _binom(p, k), _binom(p, k - 1), _binom(p, k - 2)
    value = c0 * _pow(m, k) + t * c1 * _pow(m, k - 1) + d * c2 * _pow(m, k - 2)
    if not derivatives:
        return value
    d_t = c1 * _pow(m, k - 1)
    d_d = c2 * _pow(m, k - 2)
    d_m = (k * c0 * _pow(m, k - 1) + (k - 1) * t * c1 * _pow(m, k - 2)
           + (k - 2) * d * c2 * _pow(m, k - 3))
    return value, d_t + d_d * c, -2.0 * b * d_d, d_t + d_d * a, d_m


def axisym_frame_entries(u_r, u_t, u_rr, u_rt, u_tt, r, theta):
    """(rr, r-theta, theta-theta, azimuthal) Hessian entries of an axisymmetric field."""
    u_r, u_t, u_rr, u_rt, u_tt, r = (np.asarray(v, dtype=float) for v in (u_r, u_t, u_rr, u_rt, u_tt, r))
    if np.any(r <= 0):
        raise DomainError('axisymmetric Hessian needs r > 0')
    axis = _on_axis(theta)
    if np.any(axis & (np.abs(u_t) > 1e-8 * (1.0 + np.abs(u_r) * r))):
        raise DomainError('u_theta must vanish on the symmetry axis')
    tt = u_tt / r ** 2 + u_r / r
    az = u_r / r + _cot_times(theta, u_t, u_tt) / r ** 2
    return u_rr, u_rt / r - u_t / r ** 2, tt, az


def axisym_hessian_eigs(u_r, u_t, u_rr, u_rt, u_tt, r, theta, n: int) -> FloatArray:
    """Two eigenvalues of the (r, theta) block followed by the (n-2)-fold azimuthal one."""
    a, b, c, az = axisym_frame_entries(u_r, u_t, u_rr, u_rt, u_tt, r, theta)
    mean = 0.5 * (a + c)
    radius = np.hypot(0.5 * (a - c), b)
    block = np.stack([mean - radius, mean + radius], axis=-1)
    return np.concatenate([block, np.repeat(np.asarray(az)[..., None], n - 2, axis=-1)], axis=-1)


@dataclass(frozen=True)
class SubsolutionParams:
    N: int
    c1: float
    c0: float
    min_scaled_sigma: float = field(default=float('nan'))
    verified_samples: int = 0

    def to_dict(self) -> dict:
        return {'N': self.N, 'c1': self.c1, 'c0': self.c0,
                'min_scaled_sigma': self.min_scaled_sigma,
                'verified_samples': self.verified_samples}


def _g_frame(surface: RadialSurface, theta, r):
    """Diagonal of D^2 g and the two nonzero components of Dg."""
    rho = surface.rho(theta)
    d1 = surface.drho(theta)
    d2 = surface.d2rho(theta)
    phi1 = d1 / rho
    phi11 = d2 / rho - phi1 ** 2
    phi_aa = _cot_times(theta, d1, d2) / rho
    hess_11 = (1.0 + phi1 ** 2 - phi11) / (rho * r)
    hess_aa = (1.0 - phi_aa) / (rho * r)
    return rho, hess_11, hess_aa, -d1 / rho ** 2, 1.0 / rho


def _reduced_sigma(surface: RadialSurface, N: int, theta, r, k: int):
    """g, and S_k of g*D^2g + (N-1) Dg (x) Dg; D^2 phi is (N g^{N-2}) times this."""
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    rho, h11, haa, v1, vr = _g_frame(surface, theta, r)
    g = r / rho
    if np.any(g < 1.0 - 1e-12):
        raise PreconditionError('subsolution is evaluated outside the domain only (r >= rho)')
    c = N - 1.0
    sigma = block_sigma_k(g * h11 + c * v1 * v1, c * v1 * vr, c * vr * vr, g * haa, surface.n, k)
    return g, sigma


def subsolution_sigma_k(surface: RadialSurface, N: int, theta, r, k: int):
    """sigma_k of the Hessian of phi(g) = g^N with g = r/rho(theta)."""
    g, sigma = _reduced_sigma(surface, N, theta, r, k)
    out = (N * g ** (N - 2)) ** k * sigma
    return float(out) if np.ndim(out) == 0 else out


def _log_scaled_margin(surface: RadialSurface, N: int, theta, g, k: int) -> float:
    # log(sigma_k(D^2 phi) r^k) sin desbordes para N grande
    r = g * surface.rho(theta)
    _, sigma = _reduced_sigma(surface, N, theta, r, k)
    if np.min(sigma) <= 0.0:
        return float('-inf')
    logs = k * (np.log(N) + (N - 2) * np.log(g) + np.log(r)) + np.log(sigma)
    return float(np.min(logs))


def select_subsolution_N(surface: RadialSurface, k: int, cap: int = 2 ** 16,
                         n_theta: int = 512, n_g: int = 64) -> SubsolutionParams:
    """Smallest N = 2, 4, 8, ... with sigma_k(D^2 g^N) r^k >= 1 on {1 <= g <= 10}."""
    cert = check_admissible_domain(surface, k)
    if not cert.passed:
        raise SubsolutionError('no subsolution for an inadmissible boundary', certificate=cert.to_dict())
    theta = np.linspace(0.0, np.pi, n_theta)
    kappa = curvature_spectrum(*boundary_curvatures(surface, theta), surface.n)
    c1 = float(np.min(_esf_all(kappa, k - 1)[:, k - 1]))
    rho, h11, haa, _, _ = _g_frame(surface, theta, surface.rho(theta))
    # sigma_k(r D^2 g) en la frontera; su parte negativa es la constante c0 observada
    scaled = block_sigma_k(rho * h11, 0.0, 0.0, rho * haa, surface.n, k)
    c0 = float(max(0.0, -np.min(scaled)))

    coarse = np.meshgrid(theta, np.geomspace(1.0, 10.0, n_g), indexing='ij')
    dense = np.meshgrid(np.linspace(0.0, np.pi, 5 * n_theta),
                        np.geomspace(1.0, 10.0, 2 * n_g), indexing='ij')
    N = 2
    while N <= cap:
        margin = _log_scaled_margin(surface, N, coarse[0], coarse[1], k)
        if margin >= 0.0:
            verified = _log_scaled_margin(surface, N, dense[0], dense[1], k)
            if verified >= 0.0:
                logger.info('subsolution exponent N=%d certified (c1=%.4g, c0=%.4g)', N, c1, c0)
                return SubsolutionParams(N, c1, c0, float(np.exp(verified)), dense[0].size)
        N *= 2
    raise SubsolutionError('subsolution exponent exceeded the cap', cap=cap, c1=c1, c0=c0)
