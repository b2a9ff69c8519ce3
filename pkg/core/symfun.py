"""Elementary symmetric functions, Newton tensors and Garding cones.

Every routine accepts a single spectrum/matrix or a stack of them (leading
axes are batch axes), so the randomized suites can push 10^5 samples through
numpy without Python loops.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import numpy.typing as npt

from core.errors import DomainError, PreconditionError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
# Alias de documentación: vectores de autovalores y matrices simétricas.
Spectrum = FloatArray
SymMatrix = FloatArray

CLOSURE_TOL = 1e-12
KATO_TOL = 1e-10


def as_spectrum(values) -> Spectrum:
    """Validate eigenvalue vector(s); the last axis holds the n entries."""
    lam = np.asarray(values, dtype=float)
    if lam.ndim == 0 or lam.shape[-1] < 2:
        raise DomainError('a spectrum needs at least two entries', shape=list(lam.shape))
    if not np.all(np.isfinite(lam)):
        raise DomainError('spectrum has non-finite entries')
    return lam


def as_symmatrix(a) -> SymMatrix:
    """Validate square matrices and store them exactly symmetric."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise DomainError('matrix must be square', shape=list(arr.shape))
    if not np.all(np.isfinite(arr)):
        raise DomainError('matrix has non-finite entries')
    return 0.5 * (arr + np.swapaxes(arr, -1, -2))


def _esf_all(lam: FloatArray, kmax: int) -> FloatArray:
    """S_0..S_kmax along the last axis via the coefficients of prod(1 + t*lam_i)."""
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape[:-1] + (kmax + 1,))
    out[..., 0] = 1.0
    if kmax == 0:
        return out
    for i in range(lam.shape[-1]):
        out[..., 1:] = out[..., 1:] + lam[..., i, None] * out[..., :-1]
    return out


def _esf(lam: FloatArray, k: int) -> FloatArray:
    # convención interna: S_k = 0 fuera de 0 <= k <= n (cubre S_{-1} con k = 1)
    lam = np.asarray(lam, dtype=float)
    if k < 0 or k > lam.shape[-1]:
        return np.zeros(lam.shape[:-1])
    return _esf_all(lam, k)[..., k]


@lru_cache(maxsize=64)
def _deletion_index(n: int) -> np.ndarray:
    return np.array([[j for j in range(n) if j != i] for i in range(n)], dtype=int)


def _deleted(lam: FloatArray) -> FloatArray:
    """Row i of the result is lam with entry i removed, shape (..., n, n-1)."""
    n = lam.shape[-1]
    return lam[..., _deletion_index(n)]


def _scalar(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


def elem_sym(lam, k: int):
    """k-th elementary symmetric polynomial S_k(lam); k = 0 gives 1."""
    lam = as_spectrum(lam)
    n = lam.shape[-1]
    if not 0 <= k <= n:
        raise DomainError(f'S_k needs 0 <= k <= n, got k={k}, n={n}', k=k, n=n)
    return _scalar(_esf_all(lam, k)[..., k])


def elem_sym_omit(lam, k: int, omit):
    """S_k of the spectrum with one or two (0-based) entries removed."""
    lam = as_spectrum(lam)
    n = lam.shape[-1]
    idx = tuple(int(i) for i in np.atleast_1d(omit))
    if len(idx) not in (1, 2):
        raise DomainError('omit must list one or two indices', omit=list(idx))
    if len(set(idx)) != len(idx):
        raise DomainError('omit indices must be distinct', omit=list(idx))
    if any(i < 0 or i >= n for i in idx):
        raise DomainError('omit index out of range', omit=list(idx), n=n)
    if not 0 <= k <= n - len(idx):
        raise DomainError(f'S_k needs 0 <= k <= {n - len(idx)} after deletion', k=k)
    kept = [j for j in range(n) if j not in idx]
    return _scalar(_esf_all(lam[..., kept], k)[..., k])


def sigma_k_of_matrix(a, k: int):
    """S_k of the eigenvalues of a symmetric matrix (or a stack of them)."""
    a = as_symmatrix(a)
    return elem_sym(np.linalg.eigvalsh(a), k)


def newton_tensor(a, k: int) -> SymMatrix:
    """dS_k/dA_ij: diag(S_{k-1}(lam|i)) in the eigenbasis, rotated back."""
    a = as_symmatrix(a)
    n = a.shape[-1]
    if not 0 <= k <= n:
        raise DomainError(f'Newton tensor needs 0 <= k <= n, got k={k}', k=k, n=n)
    lam, vec = np.linalg.eigh(a)
    diag = _esf(_deleted(lam), k - 1)
    t = (vec * diag[..., None, :]) @ np.swapaxes(vec, -1, -2)
    return 0.5 * (t + np.swapaxes(t, -1, -2))


def cone_scales(lam: FloatArray, k: int) -> FloatArray:
    """max(1, max|lam_i|^m) for m = 1..k: the slack policy of the closure test."""
    top = np.max(np.abs(lam), axis=-1)[..., None]
    return np.maximum(1.0, top ** np.arange(1, k + 1))


def cone_margin(lam, k: int):
    """min over m <= k of S_m / scale_m; positive inside Gamma_k."""
    lam = as_spectrum(lam)
    sums = _esf_all(lam, k)[..., 1:]
    return _scalar(np.min(sums / cone_scales(lam, k), axis=-1))


def in_gamma_k(lam, k: int, strict: bool = True, tol: float = CLOSURE_TOL):
    """Membership in the Garding cone (strict) or its closure (within tol)."""
    lam = as_spectrum(lam)
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise DomainError(f'Gamma_k needs 1 <= k <= n, got k={k}', k=k, n=n)
    sums = _esf_all(lam, k)[..., 1:]
    if strict:
        ok = np.all(sums > 0.0, axis=-1)
    else:
        ok = np.all(sums >= -tol * cone_scales(lam, k), axis=-1)
    return bool(ok) if np.ndim(ok) == 0 else ok


def frame_expansion(lambda_prime, mixed, u_nn, k: int):
    """S_k of the arrowhead matrix [[diag(lam'), m], [m^T, u_nn]].

    S_{k-1}(lam') u_nn + S_k(lam') - sum_a S_{k-2}(lam'|a) m_a^2.
    """
    lam = np.asarray(lambda_prime, dtype=float)
    mixed = np.asarray(mixed, dtype=float)
    deleted = _esf(_deleted(lam), k - 2)
    return _scalar(_esf(lam, k - 1) * u_nn + _esf(lam, k)
                   - np.sum(deleted * mixed ** 2, axis=-1))


def arrowhead(lambda_prime, mixed, u_nn) -> SymMatrix:
    """Hessian in the adapted frame: e_n along Du, tangential block diagonal."""
    lam = np.asarray(lambda_prime, dtype=float)
    mixed = np.asarray(mixed, dtype=float)
    u_nn = np.asarray(u_nn, dtype=float)
    m = lam.shape[-1]
    out = np.zeros(lam.shape[:-1] + (m + 1, m + 1))
    diag = np.arange(m)
    out[..., diag, diag] = lam
    out[..., :m, m] = mixed
    out[..., m, :m] = mixed
    out[..., m, m] = u_nn
    return out


def maclaurin_gaps(lambda_prime, k: int):
    """Newton-Maclaurin gaps used in the Kato argument.

    Returns (gap9, gap10) with n = len(lambda_prime) + 1:
    gap9 = k(n-k-1)/(n-k) S_k^2/S_{k-1} - (k+1) S_{k+1} and
    gap10[a] = S_{k-1}(lam'|a) - S_k S_{k-2}(lam'|a)/S_{k-1}.
    """
    lam = as_spectrum(lambda_prime)
    n = lam.shape[-1] + 1
    if not 1 <= k < n:
        raise DomainError(f'maclaurin gaps need 1 <= k < n, got k={k}', k=k, n=n)
    s_km1 = _esf(lam, k - 1)
    if np.any(s_km1 <= 0.0):
        raise PreconditionError('S_{k-1}(lambda\') must be positive',
                                min_s_km1=float(np.min(s_km1)))
    s_k = _esf(lam, k)
    s_kp1 = _esf(lam, k + 1)
    gap9 = k * (n - k - 1) / (n - k) * s_k ** 2 / s_km1 - (k + 1) * s_kp1
    deleted = _deleted(lam)
    gap10 = _esf(deleted, k - 1) - (s_k / s_km1)[..., None] * _esf(deleted, k - 2)
    return _scalar(gap9), gap10


@dataclass(frozen=True)
class KatoConfig:
    """Adapted-frame data at a regular point: e_n along Du, tangential block diagonal."""

    n: int
    k: int
    lambda_prime: tuple
    mixed: tuple
    u_nn: float | None = None

    def __post_init__(self):
        object.__setattr__(self, 'lambda_prime', tuple(float(v) for v in self.lambda_prime))
        object.__setattr__(self, 'mixed', tuple(float(v) for v in self.mixed))
        if not (self.n > 2 * self.k and self.k >= 1):
            raise DomainError('Kato frame needs n > 2k >= 2', n=self.n, k=self.k)
        if len(self.lambda_prime) != self.n - 1 or len(self.mixed) != self.n - 1:
            raise DomainError('lambda_prime and mixed need n-1 entries', n=self.n)
        values = self.lambda_prime + self.mixed
        if self.u_nn is not None:
            values += (self.u_nn,)
        if not np.all(np.isfinite(values)):
            raise DomainError('Kato frame has non-finite entries')
        if self.k >= 2 and not in_gamma_k(self.lambda_prime, self.k - 1, strict=False):
            raise PreconditionError('lambda_prime must lie in the closure of Gamma_{k-1}',
                                    lambda_prime=list(self.lambda_prime))


def solve_unn(lambda_prime, mixed, k: int, tol: float = KATO_TOL):
    """u_nn from S_k = 0 in the adapted frame (vectorised over samples).

    Where S_{k-1}(lam') vanishes the equation does not fix u_nn; such inputs
    are accepted only if every S_{k-2}(lam'|a) u_an^2 and S_k(lam') vanish,
    and u_nn = 0 is used.
    """
    lam = np.asarray(lambda_prime, dtype=float)
    mixed = np.asarray(mixed, dtype=float)
    scale = np.asarray(np.maximum(1.0, np.max(np.abs(np.concatenate([lam, mixed], axis=-1)), axis=-1)) ** k)
    s_km1 = _esf(lam, k - 1)
    s_k = _esf(lam, k)
    weighted = _esf(_deleted(lam), k - 2) * mixed ** 2
    generic = np.abs(s_km1) > tol * scale
    safe = np.where(generic, s_km1, 1.0)
    u_nn = np.where(generic, (np.sum(weighted, axis=-1) - s_k) / safe, 0.0)
    degenerate = ~generic
    if np.any(degenerate):
        consistent = (np.abs(s_k) <= tol * scale) & np.all(np.abs(weighted) <= (tol * scale)[..., None], axis=-1)
        if np.any(degenerate & ~consistent):
            raise PreconditionError('S_{k-1}(lambda\') = 0 but the mixed terms do not solve S_k = 0')
        logger.debug('degenerate adapted frame, u_nn set to 0 at %d sample(s)', int(np.sum(degenerate)))
    return _scalar(u_nn)


def kato_gap_arrays(lambda_prime, mixed, u_nn, k: int):
    """Left side of the Kato inequality for arrays of adapted-frame data."""
    a = arrowhead(lambda_prime, mixed, u_nn)
    n = a.shape[-1]
    t = newton_tensor(a, k)
    first = np.einsum('...ij,...jm,...mi->...', t, a, a)
    column = a[..., :, -1]
    second = np.einsum('...i,...ij,...j->...', column, t, column)
    return _scalar(first - n / (n - k) * second)


def kato_gap(cfg: KatoConfig, tol: float = KATO_TOL) -> float:
    """sum_m S_k^{ij} u_im u_mj - n/(n-k) S_k^{ij} D_i|Du| D_j|Du| at one point."""
    if cfg.u_nn is None:
        u_nn = solve_unn(cfg.lambda_prime, cfg.mixed, cfg.k, tol=tol)
    else:
        u_nn = cfg.u_nn
        residual = frame_expansion(cfg.lambda_prime, cfg.mixed, u_nn, cfg.k)
        scale = max(1.0, max(abs(v) for v in cfg.lambda_prime + cfg.mixed + (u_nn,))) ** cfg.k
        if abs(residual) > 1e3 * tol * scale:
            raise PreconditionError('u_nn does not solve S_k = 0 in the adapted frame',
                                    residual=float(residual))
    return float(kato_gap_arrays(cfg.lambda_prime, cfg.mixed, u_nn, cfg.k))


def sample_cone(rng: np.random.Generator, n: int, k: int, size: int,
                boundary_fraction: float = 0.25, margin: float = 0.0) -> FloatArray:
    """Random points of Gamma_k on the unit shell.

    Interior points come from rejection sampling of normalised Gaussians
    tilted toward the diagonal. A ``boundary_fraction`` of them is pushed
    onto S_k = 0 by solving the affine relation
    S_k = lam_i S_{k-1}(lam|i) + S_k(lam|i) for one random entry.
    """
    if not 1 <= k <= n:
        raise DomainError(f'sample_cone needs 1 <= k <= n, got k={k}', k=k, n=n)
    chunks = []
    found = 0
    diagonal = np.ones(n) / np.sqrt(n)
    for _ in range(1000):
        if found >= size:
            break
        batch = max(4 * (size - found), 256)
        z = rng.standard_normal((batch, n))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        z += rng.uniform(0.0, 2.0, size=(batch, 1)) * diagonal
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        keep = cone_margin(z, k) > margin
        chunks.append(z[keep])
        found += int(np.sum(keep))
    else:
        raise PreconditionError('cone sampler could not reach the requested size', n=n, k=k)
    lam = np.concatenate(chunks)[:size]

    n_boundary = int(round(boundary_fraction * size))
    if n_boundary:
        rows = np.arange(n_boundary)
        pick = rng.integers(0, n, size=n_boundary)
        rest = _deleted(lam[rows])[rows, pick]
        lam[rows, pick] = -_esf(rest, k) / _esf(rest, k - 1)
    return lam
