"""Boundary-fitted (s, theta) grids on B_R minus Omega and discrete fields on them.

Coordinates: log r = ell(theta) + xi(s) * (log R - ell(theta)) with
ell = log rho, s in [0, 1] and xi a monotone grading map. Derivatives are
4th-order finite differences in (s, theta) composed with the chain rule;
theta uses even reflection across both poles.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp

from core.errors import DomainError
from core.geometry import RadialSurface, axisym_hessian_eigs

if TYPE_CHECKING:
    from core.barriers import ApproxProblem

logger = logging.getLogger(__name__)

FIRST_LAYER = 1e-2


def fd_weights(z: float, x, m: int) -> np.ndarray:
    """Finite-difference weights at z for derivatives 0..m on nodes x (Fornberg).

    Returns an array of shape (len(x), m + 1).
    """
    x = np.asarray(x, dtype=float)
    n = x.size - 1
    c = np.zeros((n + 1, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n + 1):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for d in range(mn, 0, -1):
                    c[i, d] = c1 * (d * c[i - 1, d - 1] - c5 * c[i - 1, d]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for d in range(mn, 0, -1):
                c[j, d] = (c4 * c[j, d] - d * c[j, d - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def _s_matrices(n_s: int):
    """d/ds and d2/ds2 on a uniform grid: centred 5-point, 6-point one-sided near the ends."""
    h = 1.0 / (n_s - 1)
    rows, cols, w1, w2 = [], [], [], []
    for i in range(n_s):
        if 2 <= i <= n_s - 3:
            nodes = np.arange(i - 2, i + 3)
        elif i < 2:
            nodes = np.arange(0, 6)
        else:
            nodes = np.arange(n_s - 6, n_s)
        w = fd_weights(float(i), nodes.astype(float), 2)
        rows.extend([i] * nodes.size)
        cols.extend(nodes)
        w1.extend(w[:, 1] / h)
        w2.extend(w[:, 2] / h ** 2)
    shape = (n_s, n_s)
    return (sp.csr_matrix((w1, (rows, cols)), shape=shape),
            sp.csr_matrix((w2, (rows, cols)), shape=shape))


def _theta_matrices(n_theta: int):
    """Centred 5-point stencils folded by even reflection at theta = 0 and pi."""
    h = np.pi / (n_theta - 1)
    w1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
    w2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h ** 2)
    last = n_theta - 1
    d1 = np.zeros((n_theta, n_theta))
    d2 = np.zeros((n_theta, n_theta))
    for j in range(n_theta):
        for offset, a, b in zip(range(-2, 3), w1, w2):
            jj = j + offset
            if jj < 0:
                jj = -jj
            elif jj > last:
                jj = 2 * last - jj
            d1[j, jj] += a
            d2[j, jj] += b
    return sp.csr_matrix(d1), sp.csr_matrix(d2)


def _diag(v) -> sp.dia_matrix:
    return sp.diags(np.ravel(v))


@dataclass(frozen=True)
class AnnulusGrid:
    surface: RadialSurface
    R: float
    n_s: int
    n_theta: int
    grading: float = 0.0

    def __post_init__(self):
        if self.n_s < 8 or self.n_theta < 5:
            raise DomainError('grid needs n_s >= 8 and n_theta >= 5', n_s=self.n_s, n_theta=self.n_theta)
        rho_min, rho_max = self.surface.extent()
        if self.R <= rho_max:
            raise DomainError('outer radius must exceed max rho', R=self.R, rho_max=rho_max)
        if self.grading < 0:
            raise DomainError('grading must be non-negative', grading=self.grading)
        first = float(np.max(self.r[1] - self.r[0]) / rho_min)
        if first > FIRST_LAYER:
            logger.warning('first grid layer %.3g rho exceeds %.0e rho; refine n_s', first, FIRST_LAYER)

    @property
    def shape(self) -> tuple:
        return self.n_s, self.n_theta

    @property
    def size(self) -> int:
        return self.n_s * self.n_theta

    @cached_property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_s)

    @cached_property
    def theta(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.n_theta)

    @cached_property
    def _xi(self):
        s, beta = self.s, self.grading
        if beta == 0.0:
            return s, np.ones_like(s), np.zeros_like(s)
        scale = np.expm1(beta)
        e = np.exp(beta * s)
        return np.expm1(beta * s) / scale, beta * e / scale, beta ** 2 * e / scale

    def xi_of(self, s):
        if self.grading == 0.0:
            return np.asarray(s, dtype=float)
        return np.expm1(self.grading * np.asarray(s, dtype=float)) / np.expm1(self.grading)

    @cached_property
    def _ell(self):
        t = self.theta
        rho = self.surface.rho(t)
        ell1 = self.surface.drho(t) / rho
        ell2 = self.surface.d2rho(t) / rho - ell1 ** 2
        return np.log(rho), ell1, ell2

    @cached_property
    def metrics(self) -> dict:
        """q = log r and its (s, theta) derivatives on the full grid."""
        xi, dxi, d2xi = (v[:, None] for v in self._xi)
        ell, ell1, ell2 = (v[None, :] for v in self._ell)
        span = np.log(self.R) - ell
        q = ell + xi * span
        return {
            'q': q,
            'q_s': dxi * span,
            'q_ss': d2xi * span,
            'q_t': ell1 * (1.0 - xi),
            'q_tt': ell2 * (1.0 - xi),
            'q_st': -dxi * ell1,
        }

    @cached_property
    def r(self) -> np.ndarray:
        return np.exp(self.metrics['q'])

    @cached_property
    def on_axis(self) -> np.ndarray:
        axis = np.zeros(self.shape, dtype=bool)
        axis[:, 0] = axis[:, -1] = True
        return axis

    def r_at(self, s, theta):
        """Physical radius of the point with grid coordinates (s, theta)."""
        rho = self.surface.rho(theta)
        return np.exp(np.log(rho) + self.xi_of(s) * (np.log(self.R) - np.log(rho)))

    @cached_property
    def operators(self) -> dict:
        """Sparse linear maps from nodal values to u_q, u_qq, u_t, u_qt, u_tt (q = log r)."""
        d1s, d2s = _s_matrices(self.n_s)
        d1t, d2t = _theta_matrices(self.n_theta)
        eye_s = sp.identity(self.n_s, format='csr')
        eye_t = sp.identity(self.n_theta, format='csr')
        ds = sp.kron(d1s, eye_t, format='csr')
        dss = sp.kron(d2s, eye_t, format='csr')
        dt = sp.kron(eye_s, d1t, format='csr')
        dtt = sp.kron(eye_s, d2t, format='csr')
        dst = sp.kron(d1s, d1t, format='csr')

        m = self.metrics
        q_s, q_ss, q_t, q_tt, q_st = (m[key].ravel() for key in ('q_s', 'q_ss', 'q_t', 'q_tt', 'q_st'))
        u_q = _diag(1.0 / q_s) @ ds
        u_qq = _diag(1.0 / q_s ** 2) @ (dss - _diag(q_ss) @ u_q)
        u_t = dt - _diag(q_t) @ u_q
        u_qt = _diag(1.0 / q_s) @ (dst - _diag(q_s * q_t) @ u_qq - _diag(q_st) @ u_q)
        u_tt = dtt - _diag(q_t ** 2) @ u_qq - _diag(2.0 * q_t) @ u_qt - _diag(q_tt) @ u_q
        return {name: op.tocsr() for name, op in
                (('u_q', u_q), ('u_qq', u_qq), ('u_t', u_t), ('u_qt', u_qt), ('u_tt', u_tt))}

    @cached_property
    def frame_operators(self) -> dict:
        """r^2-scaled Hessian entries (rr, r-theta, theta-theta, azimuthal) as sparse maps."""
        ops = self.operators
        axis = self.on_axis.ravel()
        theta = np.broadcast_to(self.theta, self.shape).ravel()
        cot = np.where(axis, 0.0, np.cos(theta) / np.where(axis, 1.0, np.sin(theta)))
        a = ops['u_qq'] - ops['u_q']
        b = ops['u_qt'] - ops['u_t']
        c = ops['u_tt'] + ops['u_q']
        m = ops['u_q'] + _diag(cot) @ ops['u_t']
        # en el eje el valor azimutal es el límite u_tt/r^2 + u_r/r
        m = _diag((~axis).astype(float)) @ m + _diag(axis.astype(float)) @ c
        return {name: op.tocsr() for name, op in (('a', a), ('b', b), ('c', c), ('m', m))}

    def to_dict(self) -> dict:
        return {'n_s': self.n_s, 'n_theta': self.n_theta, 'R': self.R, 'grading': self.grading,
                'rho': list(self.surface.coeffs)}


@dataclass(frozen=True, eq=False)
class SolutionField:
    """Nodal values u[i_s, j_theta] of a solve together with its problem data.

    ``shift`` is the far-field constant removed by renormalisation
    (0 for raw solver output).
    """

    problem: 'ApproxProblem'
    grid: AnnulusGrid
    values: np.ndarray
    shift: float = 0.0
    asymptotics: object | None = field(default=None)
    report: object | None = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise DomainError('field values do not match the grid', shape=list(values.shape),
                              grid=list(self.grid.shape))
        object.__setattr__(self, 'values', values)

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def k(self) -> int:
        return self.problem.k

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    @cached_property
    def derivatives(self) -> dict:
        """u_r, u_t, u_rr, u_rt, u_tt at every node."""
        ops = self.grid.operators
        u = self.values.ravel()
        shape = self.grid.shape
        r = self.grid.r
        u_q = (ops['u_q'] @ u).reshape(shape)
        u_qq = (ops['u_qq'] @ u).reshape(shape)
        u_t = (ops['u_t'] @ u).reshape(shape)
        u_t[:, 0] = u_t[:, -1] = 0.0
        return {
            'u_r': u_q / r,
            'u_t': u_t,
            'u_rr': (u_qq - u_q) / r ** 2,
            'u_rt': (ops['u_qt'] @ u).reshape(shape) / r,
            'u_tt': (ops['u_tt'] @ u).reshape(shape),
        }

    @cached_property
    def gradient_norm(self) -> np.ndarray:
        d = self.derivatives
        return np.hypot(d['u_r'], d['u_t'] / self.grid.r)

    @cached_property
    def hessian_eigs(self) -> np.ndarray:
        d = self.derivatives
        theta = np.broadcast_to(self.grid.theta, self.grid.shape)
        return axisym_hessian_eigs(d['u_r'], d['u_t'], d['u_rr'], d['u_rt'], d['u_tt'],
                                   self.grid.r, theta, self.n)

    def with_asymptotics(self, asymptotics) -> 'SolutionField':
        return replace(self, asymptotics=asymptotics)

    def with_report(self, report) -> 'SolutionField':
        return replace(self, report=report, asymptotics=getattr(report, 'asymptotics', self.asymptotics))

    def renormalized(self) -> 'SolutionField':
        """(u - a)/(1 + a) with a the fitted far-field shift; still -1 on the boundary."""
        if self.asymptotics is None or self.shift != 0.0 or self.asymptotics.shift == 0.0:
            return self
        a = self.asymptotics.shift
        return replace(self, values=(self.values - a) / (1.0 + a), shift=a)
