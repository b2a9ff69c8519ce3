"""Randomized invariant suites behind ``verify-identities``.

Each suite draws from its own generator seeded by (seed, suite index), so a
suite's outcome does not depend on which other suites run.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from core.barriers import (LOG_OBSTRUCTION, BarrierFamily, barrier_eigenvalues, check_dimensions, f_eps,
                           log_solution_check, phi_barrier)
from core.errors import DomainError, PreconditionError
from core.geometry import RadialSurface, SphereDerivatives, select_subsolution_N, spherical_hessian, \
    subsolution_sigma_k
from core.symfun import (arrowhead, elem_sym, elem_sym_omit, frame_expansion, in_gamma_k, kato_gap_arrays,
                         maclaurin_gaps, newton_tensor, sample_cone, sigma_k_of_matrix, solve_unn)

logger = logging.getLogger(__name__)

KATO_PAIRS = ((5, 2), (6, 2), (7, 2), (3, 1))
BARRIER_PAIRS = ((5, 2), (6, 2), (7, 2), (3, 1), (7, 3))
MAX_FAILURES = 10


@dataclass
class SuiteResult:
    name: str
    passed: bool
    samples: int
    min_margin: float
    tolerance: float
    details: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {'suite': self.name, 'passed': self.passed, 'samples': self.samples,
                'min_margin': self.min_margin, 'tolerance': self.tolerance, 'details': self.details,
                'failure_count': len(self.failures)}


def _result(name, margins, tol, samples, failures_of, details=None):
    """Pass iff every margin >= -tol; ``failures_of(mask)`` serialises failing samples."""
    margins = np.asarray(margins, dtype=float)
    bad = ~(margins >= -tol)
    failures = failures_of(np.flatnonzero(bad)[:MAX_FAILURES]) if np.any(bad) else []
    return SuiteResult(name, not bool(np.any(bad)), int(samples), float(np.min(margins)), float(tol),
                       details or {}, failures)


# ---------- finite differences ----------

def fd_hessian(f, x, h: float = 1e-3) -> np.ndarray:
    """Central-difference Hessian with one Richardson step (error O(h^4))."""
    x = np.asarray(x, dtype=float)
    n = x.size
    eye = np.eye(n)

    def level(step):
        out = np.zeros((n, n))
        f0 = f(x)
        for i in range(n):
            ei = step * eye[i]
            out[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / step ** 2
            for j in range(i + 1, n):
                ej = step * eye[j]
                out[i, j] = out[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                                         + f(x - ei - ej)) / (4.0 * step ** 2)
        return out

    return (4.0 * level(h / 2.0) - level(h)) / 3.0


def fd_gradient(f, x, h: float = 1e-3) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.size)

    def level(step):
        return np.array([(f(x + step * e) - f(x - step * e)) / (2.0 * step) for e in eye])

    return (4.0 * level(h / 2.0) - level(h)) / 3.0


def _d1(g, h):
    def level(step):
        return (g(step) - g(-step)) / (2.0 * step)
    return (4.0 * level(h / 2.0) - level(h)) / 3.0


def _d2(g, h):
    def level(step):
        return (g(step) - 2.0 * g(0.0) + g(-step)) / step ** 2
    return (4.0 * level(h / 2.0) - level(h)) / 3.0


# ---------- symfun ----------

def suite_elem_sym(rng, samples=2000, tol=1e-12):
    worst = []
    fails = []
    for _ in range(samples):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(0, n + 1))
        lam = rng.uniform(-2.0, 2.0, n)
        brute = sum(np.prod(c) for c in combinations(lam, k)) if k else 1.0
        value = elem_sym(lam, k)
        scale = max(1.0, float(np.max(np.abs(lam)))) ** max(k, 1) * comb(n, k)
        err = abs(value - brute) / scale
        if k >= 1:
            omit = np.array([elem_sym_omit(lam, k - 1, i) for i in range(n)])
            rest = np.array([elem_sym_omit(lam, k, i) if k < n else 0.0 for i in range(n)])
            expansion = np.max(np.abs(lam * omit + rest - value)) / scale
            euler = abs(float(np.sum(lam * omit)) - k * value) / (k * scale)
            err = max(err, expansion, euler)
        worst.append(-err)
        if err > tol:
            fails.append({'lambda': lam.tolist(), 'k': k, 'error': err})
    return _result('elem_sym', worst, tol, samples, lambda idx: fails[:MAX_FAILURES])


def suite_frame(rng, samples=10000, tol=1e-10):
    n = 6
    k = 3
    lam = rng.uniform(-1.0, 1.0, (samples, n - 1))
    mixed = rng.normal(0.0, 0.5, (samples, n - 1))
    u_nn = rng.uniform(-1.0, 1.0, samples)
    direct = sigma_k_of_matrix(arrowhead(lam, mixed, u_nn), k)
    expanded = frame_expansion(lam, mixed, u_nn, k)
    err = np.abs(direct - expanded)
    return _result('frame', -err, tol, samples,
                   lambda idx: [{'lambda_prime': lam[i].tolist(), 'mixed': mixed[i].tolist(),
                                 'u_nn': float(u_nn[i]), 'k': k} for i in idx],
                   {'n': n, 'k': k, 'max_error': float(err.max())})


def suite_identity(rng, samples=10000, tol=1e-10):
    """S_k^{ij} a_im a_mj = S_1 S_k - (k+1) S_{k+1} on random symmetric matrices."""
    margins = []
    failures = []
    for n, k in ((4, 1), (5, 2), (6, 2), (6, 3)):
        a = rng.normal(0.0, 0.5, (samples, n, n))
        a = 0.5 * (a + np.swapaxes(a, -1, -2))
        lhs = np.einsum('pij,pjm,pmi->p', newton_tensor(a, k), a, a)
        rhs = (sigma_k_of_matrix(a, 1) * sigma_k_of_matrix(a, k) - (k + 1) * sigma_k_of_matrix(a, k + 1))
        scale = np.maximum(1.0, np.max(np.abs(np.linalg.eigvalsh(a)), axis=-1)) ** (k + 1)
        err = np.abs(lhs - rhs) / scale
        margins.append(-err)
        failures.extend({'n': n, 'k': k, 'matrix': a[i].tolist()} for i in np.flatnonzero(err > tol)[:MAX_FAILURES])
    return _result('identity', np.concatenate(margins), tol, 4 * samples, lambda idx: failures[:MAX_FAILURES])


def _tangential_samples(rng, m: int, order: int, size: int, margin: float):
    """Points of Gamma_order in R^m (all of R^m for order 0) on the unit shell."""
    if order == 0:
        z = rng.standard_normal((size, m))
        return z / np.linalg.norm(z, axis=1, keepdims=True)
    return sample_cone(rng, m, order, size, boundary_fraction=0.0, margin=margin)


def suite_kato(rng, samples=100000, tol=1e-10):
    margins = []
    details = {}
    failures = []
    for n, k in KATO_PAIRS:
        lam = _tangential_samples(rng, n - 1, k - 1, samples, 0.1)
        mixed = rng.normal(0.0, 0.25, (samples, n - 1))
        u_nn = np.asarray(solve_unn(lam, mixed, k))
        eigs = np.linalg.eigvalsh(arrowhead(lam, mixed, u_nn))
        admissible = np.asarray(in_gamma_k(eigs, k, strict=False, tol=1e-9))
        if not np.any(admissible):
            details[f'{n},{k}'] = {'admissible': 0}
            continue
        gap = np.atleast_1d(kato_gap_arrays(lam[admissible], mixed[admissible], u_nn[admissible], k))

        t = rng.uniform(0.1, 2.0, 64)
        radial_lam = np.repeat(t[:, None], n - 1, axis=1)
        radial_mixed = np.zeros_like(radial_lam)
        radial_unn = np.asarray(solve_unn(radial_lam, radial_mixed, k))
        radial_gap = np.abs(np.asarray(kato_gap_arrays(radial_lam, radial_mixed, radial_unn, k)))
        radial_scale = np.maximum(1.0, t) ** (k + 1)

        margins.append(gap)
        margins.append(-np.maximum(0.0, radial_gap / radial_scale - 1e-12))
        details[f'{n},{k}'] = {'admissible': int(admissible.sum()), 'min_gap': float(gap.min()),
                               'radial_max_gap': float(radial_gap.max())}
        adm_lam, adm_mixed = lam[admissible], mixed[admissible]
        failures.extend({'n': n, 'k': k, 'lambda_prime': adm_lam[i].tolist(), 'mixed': adm_mixed[i].tolist()}
                        for i in np.flatnonzero(gap < -tol)[:MAX_FAILURES])
    total = sum(v['admissible'] for v in details.values())
    if not margins:
        margins.append(-np.inf)
    return _result('kato', np.concatenate(margins), tol, total, lambda idx: failures[:MAX_FAILURES], details)


def suite_maclaurin(rng, samples=100000, tol=1e-12):
    margins = []
    details = {}
    failures = []
    for n, k in KATO_PAIRS:
        lam = _tangential_samples(rng, n - 1, k - 1, samples, 0.05)
        gap9, gap10 = maclaurin_gaps(lam, k)
        worst = np.minimum(np.asarray(gap9), np.min(gap10, axis=-1))
        margins.append(worst)
        details[f'{n},{k}'] = {'min_gap9': float(np.min(gap9)), 'min_gap10': float(np.min(gap10))}
        failures.extend({'n': n, 'k': k, 'lambda_prime': lam[i].tolist()}
                        for i in np.flatnonzero(worst < -tol)[:MAX_FAILURES])
    return _result('maclaurin', np.concatenate(margins), tol, samples * len(KATO_PAIRS),
                   lambda idx: failures[:MAX_FAILURES], details)


def _ridge_hessian(weights, amps, degree, x):
    proj = weights @ x
    coef = amps * degree * (degree - 1) * proj ** (degree - 2)
    return np.einsum('m,mi,mj->ij', coef, weights, weights)


def newton_divergence(weights, amps, degree, x, k, h):
    """Central-difference divergence of S_k^{ij}(D^2 u) for a ridge polynomial u."""
    n = x.size
    out = np.zeros(n)
    for j in range(n):
        step = np.zeros(n)
        step[j] = h
        plus = newton_tensor(_ridge_hessian(weights, amps, degree, x + step), k)
        minus = newton_tensor(_ridge_hessian(weights, amps, degree, x - step), k)
        out += (plus[:, j] - minus[:, j]) / (2.0 * h)
    return out


def suite_divergence(rng, samples=20, tol=0.2, h=0.05):
    ratios = []
    cases = []
    for _ in range(samples):
        n = int(rng.integers(3, 7))
        k = int(rng.integers(2, n + 1))
        weights = rng.normal(0.0, 1.0, (n + 2, n)) / np.sqrt(n)
        amps = rng.normal(0.0, 1.0, n + 2)
        x = rng.normal(0.0, 0.5, n)
        coarse = np.linalg.norm(newton_divergence(weights, amps, 5, x, k, h))
        fine = np.linalg.norm(newton_divergence(weights, amps, 5, x, k, h / 2.0))
        ratio = coarse / fine if fine > 0 else float('inf')
        ratios.append(ratio)
        cases.append({'n': n, 'k': k, 'x': x.tolist(), 'ratio': ratio})
    ratios = np.array(ratios)
    # orden 2: el error se divide por 4 al dividir h por 2
    median = float(np.median(ratios))
    return _result('divergence', [-abs(median / 4.0 - 1.0)], tol, samples,
                   lambda idx: sorted(cases, key=lambda c: abs(c['ratio'] / 4.0 - 1.0))[-MAX_FAILURES:],
                   {'median_ratio': median, 'min_ratio': float(ratios.min()),
                    'max_ratio': float(ratios.max())})


# ---------- geometry ----------

def _smooth_field(rng, n):
    c = rng.normal(0.0, 1.0, n) / np.sqrt(n)
    b = rng.normal(0.0, 1.0, n) / np.sqrt(n)
    d = rng.normal(0.0, 1.0, n) / np.sqrt(n)

    def f(x):
        return float(np.exp(0.3 * c @ x) + 0.5 * (b @ x) ** 2 + np.sin(d @ x))
    return f


def sphere_derivatives(f, omega, frame, r, h=1e-3) -> SphereDerivatives:
    """Frame derivatives of f(r * omega') on the unit sphere by geodesic finite differences."""
    def along(v, radius):
        def g(t):
            point = np.cos(t) * omega + np.sin(t) * v
            return f(radius * point)
        return g

    m = frame.shape[1]
    f_a = np.array([_d1(along(frame[:, a], r), h) for a in range(m)])
    f_ab = np.zeros((m, m))
    for a in range(m):
        f_ab[a, a] = _d2(along(frame[:, a], r), h)
        for b in range(a + 1, m):
            plus = (frame[:, a] + frame[:, b]) / np.sqrt(2.0)
            minus = (frame[:, a] - frame[:, b]) / np.sqrt(2.0)
            f_ab[a, b] = f_ab[b, a] = 0.5 * (_d2(along(plus, r), h) - _d2(along(minus, r), h))
    def radial(t):
        return f((r + t) * omega)

    f_ar = np.array([_d1(lambda t, a=a: _d1(along(frame[:, a], r + t), h), h) for a in range(m)])
    return SphereDerivatives(f(r * omega), f_a, f_ab, _d1(radial, h), f_ar, _d2(radial, h))


def suite_spherical(rng, samples=20, tol=1e-6):
    errors = []
    cases = []
    for _ in range(samples):
        n = int(rng.integers(3, 7))
        f = _smooth_field(rng, n)
        omega = rng.normal(0.0, 1.0, n)
        omega /= np.linalg.norm(omega)
        r = float(rng.uniform(0.5, 2.0))
        q, _ = np.linalg.qr(np.column_stack([omega, rng.normal(0.0, 1.0, (n, n - 1))]))
        frame = q[:, 1:]
        d = sphere_derivatives(f, omega, frame, r)
        assembled = spherical_hessian(d, r)
        basis = np.column_stack([frame, omega])
        cartesian = basis.T @ fd_hessian(f, r * omega) @ basis
        err = float(np.max(np.abs(assembled - cartesian)) / max(1.0, np.max(np.abs(cartesian))))
        errors.append(err)
        cases.append({'n': n, 'r': r, 'omega': omega.tolist(), 'error': err})
    errors = np.array(errors)
    return _result('spherical', -errors, tol, samples, lambda idx: [cases[i] for i in idx],
                   {'max_error': float(errors.max())})


def suite_subsolution(rng, samples=10000, tol=1e-9):
    margins = []
    details = {}
    for label, coeffs in (('ball', (1.0,)), ('cos2', (1.0, 0.0, 0.1))):
        surface = RadialSurface(5, coeffs)
        params = select_subsolution_N(surface, 2)
        theta = rng.uniform(0.0, np.pi, samples)
        g = rng.uniform(1.0, 10.0, samples)
        r = g * surface.rho(theta)
        scaled = np.asarray(subsolution_sigma_k(surface, params.N, theta, r, 2)) * r ** 2
        margins.append(np.log(np.maximum(scaled, np.finfo(float).tiny)))
        details[label] = {'N': params.N, 'min_scaled_sigma': float(scaled.min())}
    return _result('subsolution', np.concatenate(margins), tol, 2 * samples, lambda idx: [], details)


# ---------- barriers ----------

def suite_barriers(rng, samples=100, tol=1e-6):
    errors = []
    cases = []
    for _ in range(samples):
        n, k = BARRIER_PAIRS[int(rng.integers(len(BARRIER_PAIRS)))]
        C = float(rng.uniform(0.5, 2.0))
        eps = float(rng.uniform(0.1, 1.0))
        direction = rng.normal(0.0, 1.0, n)
        r = float(rng.uniform(0.5, 2.0))
        x = r * direction / np.linalg.norm(direction)
        family = BarrierFamily(n, k, eps, C)
        value = phi_barrier(family, x)

        def phi(y):
            return -C * (np.linalg.norm(y) + eps) ** (-family.alpha0)

        fd_eigs = np.sort(np.linalg.eigvalsh(fd_hessian(phi, x, h=2e-3)))
        exact = np.sort(barrier_eigenvalues(r, n, k, C, eps))
        eig_err = float(np.max(np.abs(fd_eigs - exact)) / np.max(np.abs(exact)))
        grad_err = float(np.max(np.abs(fd_gradient(phi, x) - value.gradient)) / np.linalg.norm(value.gradient))
        target = f_eps(n, k, eps, r) * C ** k
        f_err = abs(elem_sym(fd_eigs, k) - target) / abs(target)
        err = max(eig_err, grad_err, f_err)
        errors.append(err)
        cases.append({'n': n, 'k': k, 'C': C, 'eps': eps, 'x': x.tolist(), 'error': err})
    errors = np.array(errors)
    return _result('barriers', -errors, tol, samples, lambda idx: [cases[i] for i in idx],
                   {'max_error': float(errors.max())})


def suite_log_solution(rng, samples=10, tol=1e-12):
    margins = []
    rejections = {}
    for n in (4, 6):
        try:
            check_dimensions(n, n // 2)
        except DomainError as exc:
            rejections[str(n)] = exc.message == LOG_OBSTRUCTION
        else:
            rejections[str(n)] = False
        for _ in range(samples):
            C = float(rng.uniform(0.1, 5.0))
            r = float(rng.uniform(0.5, 3.0))
            margins.append(-abs(log_solution_check(n, C, r)) / max(1.0, (C / r ** 2) ** (n // 2)))
    if not all(rejections.values()):
        margins.append(-np.inf)
    return _result('log_solution', margins, tol, 2 * samples, lambda idx: [], {'rejected': rejections})


SUITE_FUNCS = {
    'elem_sym': suite_elem_sym,
    'frame': suite_frame,
    'identity': suite_identity,
    'kato': suite_kato,
    'maclaurin': suite_maclaurin,
    'divergence': suite_divergence,
    'spherical': suite_spherical,
    'barriers': suite_barriers,
    'log_solution': suite_log_solution,
    'subsolution': suite_subsolution,
}


def run_suite(name: str, seed: int, samples: int | None = None, tolerance: float | None = None) -> SuiteResult:
    if name not in SUITE_FUNCS:
        raise DomainError(f'unknown suite {name!r}', suite=name)
    rng = np.random.default_rng([seed, list(SUITE_FUNCS).index(name)])
    kwargs = {}
    if samples is not None:
        kwargs['samples'] = samples
    if tolerance is not None:
        kwargs['tol'] = tolerance
    try:
        result = SUITE_FUNCS[name](rng, **kwargs)
    except PreconditionError as exc:
        logger.error('suite %s aborted: %s', name, exc.message)
        return SuiteResult(name, False, 0, float('-inf'), float(tolerance or 0.0),
                           {'error': exc.message}, [exc.to_dict()])
    logger.info('suite %s: %s (min margin %.3e over %d samples)', name,
                'ok' if result.passed else 'FAILED', result.min_margin, result.samples)
    return result


def run_suites(names, seed: int, samples: int | None = None, tolerance: float | None = None) -> list:
    return [run_suite(name, seed, samples, tolerance) for name in names]
