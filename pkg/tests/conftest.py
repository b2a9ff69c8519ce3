import numpy as np
import pytest

from app import create_app
from core.barriers import ApproxProblem
from core.geometry import RadialSurface
from core.grid import AnnulusGrid, SolutionField
from core.solver import asymptotics_report


@pytest.fixture
def app(tmp_path):
    app = create_app({
        'TESTING': True,
        'SQLALCHEMY_DATABASE_URI': 'sqlite://',
        'LAB_OUT_DIR': str(tmp_path / 'out'),
        'LAB_LOG_LEVEL': 'WARNING',
    })
    yield app


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ball5():
    return RadialSurface.ball(5)


@pytest.fixture
def peanut5():
    # 1 + 0.1 cos(2 theta)
    return RadialSurface(5, (1.0, 0.0, 0.1))


def exact_field(rho0: float = 1.0, R: float = 100.0, n_s: int = 1024, n_theta: int = 33,
                n: int = 5, k: int = 2) -> SolutionField:
    """-(rho0/r)^alpha0 sampled on a graded-free annulus, with its asymptotics attached."""
    surface = RadialSurface.ball(n, rho0)
    problem = ApproxProblem.build(surface, k, eps=0.0, R=R)
    grid = AnnulusGrid(surface, R, n_s, n_theta, 0.0)
    values = -(rho0 / grid.r) ** problem.alpha0
    field_ = SolutionField(problem, grid, values)
    return field_.with_asymptotics(asymptotics_report(field_))


@pytest.fixture
def mu_field():
    return exact_field()


def write_config(path, text: str) -> str:
    path.write_text(text, encoding='utf-8')
    return str(path)
