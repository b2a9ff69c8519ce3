"""Line-oriented ``key = value`` run configuration.

The first ``=`` splits key and value, so ``domain = n=5 k=2 rho = 1`` is a
single entry. ``solver_config = <path>`` pulls in a second file with the
solver keys. Unknown or repeated keys are rejected.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field

from core.errors import ConfigError, LabError
from core.geometry import DomainSpec, parse_domain_spec
from core.helpers import config_hash, parse_float_list
from core.solver import SolverConfig

SUITES = ('elem_sym', 'frame', 'identity', 'kato', 'maclaurin', 'divergence', 'spherical', 'barriers',
          'log_solution', 'subsolution')


def _int(key, value):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f'{key}: expected an integer, got {value!r}', key=key, value=value) from None


def _float(key, value):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f'{key}: expected a number, got {value!r}', key=key, value=value) from None
    if out != out:
        raise ConfigError(f'{key}: NaN is not allowed', key=key)
    return out


def _positive(conv):
    def check(key, value):
        out = conv(key, value)
        if out <= 0:
            raise ConfigError(f'{key} must be positive', key=key, value=out)
        return out
    return check


def _non_negative(conv):
    def check(key, value):
        out = conv(key, value)
        if out < 0:
            raise ConfigError(f'{key} must be non-negative', key=key, value=out)
        return out
    return check


def _floats(key, value):
    return tuple(parse_float_list(value, key))


def _text(key, value):
    value = str(value).strip()
    if not value:
        raise ConfigError(f'{key} must not be empty', key=key)
    return value


def _choice(*options):
    def check(key, value):
        value = _text(key, value)
        if value not in options:
            raise ConfigError(f'{key} must be one of {", ".join(options)}', key=key, value=value)
        return value
    return check


RUN_KEYS = {
    'command': _choice('verify-identities', 'solve', 'minkowski', 'barriers-table'),
    'domain': _text,
    'solver_config': _text,
    'out': _text,
    'seed': _non_negative(_int),
    'samples': _positive(_int),
    'tolerance': _positive(_float),
    'suite': _choice(*SUITES),
    'beta': _floats,
    'tau': _floats,
    'levels': _positive(_int),
    'field': _text,
    'eps_values': _floats,
    'radii': _floats,
    'C': _positive(_float),
}

SOLVER_KEYS = {
    'n_s': _positive(_int),
    'n_theta': _positive(_int),
    'grading': _non_negative(_float),
    'tol_res': _positive(_float),
    'max_newton': _positive(_int),
    'min_step': _positive(_float),
    'radial_points': _positive(_int),
    'eps': _non_negative(_float),
    'R': _positive(_float),
    'C0': _positive(_float),
    'C1': _positive(_float),
    'delta': _positive(_float),
    'eps_schedule': _floats,
    'R_schedule': _floats,
    'schedule_preset': _choice('coupled', 'none'),
    'c0': _positive(_float),
    'method': _choice('auto', 'radial', 'axisym'),
}

_SOLVER_FIELDS = ('n_s', 'n_theta', 'grading', 'tol_res', 'max_newton', 'min_step', 'radial_points')


def read_key_values(text: str, source: str = '<config>') -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'{source}:{lineno}: expected "key = value"', line=lineno, source=source)
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError(f'{source}:{lineno}: missing key', line=lineno, source=source)
        if key in out:
            raise ConfigError(f'{source}:{lineno}: duplicate key {key!r}', key=key, line=lineno, source=source)
        out[key] = value
    return out


def _read_file(path: str) -> str:
    try:
        with open(path, encoding='utf-8') as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f'cannot read config file {path!r}: {exc.strerror}', path=path) from None


@dataclass(frozen=True)
class ProblemSettings:
    eps: float = 1e-3
    R: float | None = None
    C0: float | None = None
    C1: float | None = None
    delta: float = 0.05
    eps_schedule: tuple = ()
    R_schedule: tuple = ()
    schedule_preset: str = 'none'
    c0: float = 1.0
    method: str = 'auto'


@dataclass(frozen=True)
class RunConfig:
    command: str | None = None
    domain_text: str | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    problem: ProblemSettings = field(default_factory=ProblemSettings)
    out_dir: str | None = None
    seed: int = 0
    samples: int | None = None
    tolerance: float | None = None
    suite: str | None = None
    betas: tuple = ()
    taus: tuple | None = None
    levels: int = 20
    field_path: str | None = None
    eps_values: tuple = (0.0, 1e-3)
    radii: tuple = (1.0, 2.0, 4.0, 8.0)
    C: float = 1.0

    @property
    def domain(self) -> DomainSpec | None:
        return None if self.domain_text is None else parse_domain_spec(self.domain_text)

    def require_domain(self) -> DomainSpec:
        if self.domain_text is None:
            raise ConfigError('missing key: domain', key='domain')
        return self.domain

    def to_dict(self) -> dict:
        out = asdict(self)
        out['betas'] = list(self.betas)
        out['taus'] = None if self.taus is None else list(self.taus)
        out['eps_values'] = list(self.eps_values)
        out['radii'] = list(self.radii)
        out['problem']['eps_schedule'] = list(self.problem.eps_schedule)
        out['problem']['R_schedule'] = list(self.problem.R_schedule)
        return out

    @property
    def hash(self) -> str:
        payload = self.to_dict()
        payload.pop('out_dir', None)
        return config_hash(payload)


def _convert(raw: dict, table: dict, source: str) -> dict:
    out = {}
    for key, value in raw.items():
        if key not in table:
            raise ConfigError(f'{source}: unknown key {key!r}', key=key, source=source)
        out[key] = table[key](key, value)
    return out


def load_run_config(path: str | None = None, overrides: dict | None = None, seed: int = 0) -> RunConfig:
    """Parse, merge and validate a run config; CLI ``overrides`` win over the file."""
    raw = read_key_values(_read_file(path), path) if path else {}
    solver_raw = {key: raw.pop(key) for key in list(raw) if key in SOLVER_KEYS}
    values = _convert(raw, RUN_KEYS, path or '<flags>')
    included = values.get('solver_config')
    if included:
        if path and not os.path.isabs(included):
            included = os.path.join(os.path.dirname(path), included)
        extra = read_key_values(_read_file(included), included)
        for key in extra:
            if key in solver_raw:
                raise ConfigError(f'duplicate key {key!r} in {included}', key=key, source=included)
        solver_raw.update(extra)
    solver_values = _convert(solver_raw, SOLVER_KEYS, included or path or '<flags>')

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in SOLVER_KEYS:
            solver_values[key] = SOLVER_KEYS[key](key, value)
        elif key in RUN_KEYS:
            values[key] = RUN_KEYS[key](key, value)
        else:
            raise ConfigError(f'unknown option {key!r}', key=key)

    try:
        solver = SolverConfig(**{k: solver_values[k] for k in _SOLVER_FIELDS if k in solver_values})
        problem = ProblemSettings(**{k: v if not isinstance(v, list) else tuple(v)
                                     for k, v in solver_values.items() if k not in _SOLVER_FIELDS})
        config = RunConfig(
            command=values.get('command'),
            domain_text=values.get('domain'),
            solver=solver,
            problem=problem,
            out_dir=values.get('out'),
            seed=values.get('seed', seed),
            samples=values.get('samples'),
            tolerance=values.get('tolerance'),
            suite=values.get('suite'),
            betas=values.get('beta', ()),
            taus=values.get('tau'),
            levels=values.get('levels', 20),
            field_path=values.get('field'),
            eps_values=values.get('eps_values', (0.0, 1e-3)),
            radii=values.get('radii', (1.0, 2.0, 4.0, 8.0)),
            C=values.get('C', 1.0),
        )
    except LabError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f'invalid configuration: {exc}') from None
    if config.domain_text is not None:
        config.require_domain()
    if config.taus is not None and any(t > -1.0 for t in config.taus):
        raise ConfigError('tau values must be <= -1', key='tau')
    return config
