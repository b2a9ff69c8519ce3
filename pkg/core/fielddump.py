"""Self-describing field dumps.

Layout: one line of JSON header terminated by ``\\n``, then the nodal values
as little-endian float64 in row-major (i_s, j_theta) order.
"""
import json

import numpy as np

from core.barriers import ApproxProblem
from core.errors import ConfigError
from core.geometry import RadialSurface
from core.grid import AnnulusGrid, SolutionField

MAGIC = 'hessian-lab-field'
VERSION = 1


def field_header(field_: SolutionField) -> dict:
    problem, grid = field_.problem, field_.grid
    return {
        'magic': MAGIC,
        'version': VERSION,
        'n': problem.n,
        'k': problem.k,
        'R': problem.R,
        'eps': problem.eps,
        'C0': problem.C0,
        'C1': problem.C1,
        'rho': list(problem.surface.coeffs),
        'grading': grid.grading,
        'shape': [grid.n_s, grid.n_theta],
        'shift': field_.shift,
        'dtype': '<f8',
        'order': 'C',
    }


def dump_field(field_: SolutionField, path: str) -> str:
    header = json.dumps(field_header(field_), sort_keys=True, separators=(',', ':'))
    payload = np.ascontiguousarray(field_.values, dtype='<f8').tobytes(order='C')
    with open(path, 'wb') as fh:
        fh.write(header.encode('utf-8'))
        fh.write(b'\n')
        fh.write(payload)
    return path


def load_field(path: str) -> SolutionField:
    """Restore a dump; asymptotics are not stored and must be recomputed."""
    try:
        with open(path, 'rb') as fh:
            blob = fh.read()
    except OSError as exc:
        raise ConfigError(f'cannot read field dump {path!r}: {exc.strerror}', path=path) from None
    head, sep, payload = blob.partition(b'\n')
    try:
        header = json.loads(head.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ConfigError('field dump header is not JSON', path=path) from None
    if not sep or header.get('magic') != MAGIC:
        raise ConfigError('not a field dump', path=path)
    if header.get('version') != VERSION or header.get('dtype') != '<f8' or header.get('order') != 'C':
        raise ConfigError('unsupported field dump layout', path=path, version=header.get('version'))
    n_s, n_theta = header['shape']
    if len(payload) != 8 * n_s * n_theta:
        raise ConfigError('field dump payload is truncated', path=path, expected=8 * n_s * n_theta,
                          found=len(payload))
    surface = RadialSurface(header['n'], tuple(header['rho']))
    problem = ApproxProblem(header['n'], header['k'], header['R'], header['eps'], surface,
                            header['C0'], header['C1'])
    grid = AnnulusGrid(surface, header['R'], n_s, n_theta, header['grading'])
    values = np.frombuffer(payload, dtype='<f8').reshape(n_s, n_theta).astype(float)
    return SolutionField(problem, grid, values, shift=header.get('shift', 0.0))
