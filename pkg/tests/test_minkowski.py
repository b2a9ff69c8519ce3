import dataclasses
from math import pi

import numpy as np
import pytest
from scipy.integrate import quad
from conftest import exact_field

from core.barriers import ApproxProblem
from core.errors import DomainError, PreconditionError
from core.geometry import RadialSurface
from core.grid import AnnulusGrid, SolutionField
from core.minkowski import (beta_threshold, check_beta, default_taus, evaluate_phi, extract_level_set,
                            minkowski_report, phi_infinity, phi_of_tau, phi_series, sphere_area)
from core.solver import asymptotics_report, continuation_solve, solve_radial

BALL_PHI = 4.0 * pi ** 2 / 3.0


@pytest.fixture(scope='module')
def far_mu_field():
    # nivel -0.05 en r = 400 < R/2
    return exact_field(R=1000.0)


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2 * pi)
    assert sphere_area(2) == pytest.approx(4 * pi)
    assert sphere_area(4) == pytest.approx(8 * pi ** 2 / 3)


def test_beta_threshold_and_rejection():
    assert beta_threshold(5, 2) == pytest.approx(1 / 3)
    assert check_beta(5, 2, 1 / 3) == pytest.approx(1 / 3)
    with pytest.raises(PreconditionError) as info:
        check_beta(5, 2, 0.2)
    assert info.value.details['hypothesis'] == 'beta >= (n-2k)/(n-k)'


def test_phi_infinity_closed_form():
    assert phi_infinity(5, 2, 1.0, 1.0) == pytest.approx(BALL_PHI)
    # con beta = 1 = k alpha0 el valor no depende de gamma
    assert phi_infinity(5, 2, 1.0, 2.0 ** 0.5) == pytest.approx(BALL_PHI)
    with pytest.raises(PreconditionError):
        phi_infinity(5, 2, 1.0, 0.0)


def test_level_set_of_the_exact_profile(mu_field):
    contour = extract_level_set(mu_field, -0.25)
    np.testing.assert_allclose(contour.r, 16.0, rtol=1e-8)
    np.testing.assert_allclose(contour.grad_norm, 0.5 * 16.0 ** -1.5, rtol=1e-6)
    np.testing.assert_allclose(contour.sigma_km1, 4.0 / 16.0, rtol=1e-6)
    np.testing.assert_allclose(contour.core('tensor'), contour.core('curvature'), rtol=1e-5)
    assert contour.arclength == pytest.approx(16.0 * pi, rel=1e-6)
    with pytest.raises(DomainError):
        contour.core('spectral')


def test_level_set_guards(mu_field):
    with pytest.raises(DomainError):
        extract_level_set(mu_field, 0.5)
    with pytest.raises(DomainError):
        extract_level_set(mu_field, -0.05)


def test_phi_is_constant_on_the_radial_solution(far_mu_field):
    series = phi_series(far_mu_field, 1.0, taus=np.linspace(-20.0, -1.0, 20))
    assert not series.skipped
    assert len(series.samples) == 20
    for sample in series.samples:
        assert sample.phi == pytest.approx(BALL_PHI, rel=0.005)
    assert series.phi_infinity == pytest.approx(BALL_PHI)
    assert series.monotone
    assert series.endpoint_ok


def test_phi_series_rows_start_at_minus_infinity(mu_field):
    series = phi_series(mu_field, 1.0, taus=[-4.0, -2.0, -1.0])
    rows = series.rows()
    assert rows[0]['tau'] == '-inf'
    assert [row['tau'] for row in rows[1:]] == [-4.0, -2.0, -1.0]
    assert series.to_dict()['l'] == pytest.approx(3.0)


def test_phi_series_rejects_bad_input(mu_field):
    with pytest.raises(PreconditionError):
        phi_series(mu_field, 0.2)
    with pytest.raises(DomainError):
        evaluate_phi(mu_field, -0.5, 1.0)
    with pytest.raises(DomainError):
        phi_series(mu_field, 1.0, taus=[-2.0, -2.0])


def test_phi_series_skips_levels_beyond_the_outer_sphere(mu_field):
    # R = 100: el nivel -0.05 estaría en r = 400
    series = phi_series(mu_field, 1.0, taus=[-20.0, -2.0])
    assert [s['tau'] for s in series.skipped] == [-20.0]
    assert len(series.samples) == 1


def test_default_taus_stay_inside_half_radius(mu_field):
    taus = default_taus(mu_field)
    assert taus.size == 20
    assert taus[-1] == pytest.approx(-1.0)
    assert np.all(np.diff(taus) > 0)
    assert 1.0 / taus[0] <= -50.0 ** -0.5 + 1e-9


@pytest.mark.parametrize('rho0', [1.0, 2.0])
def test_ball_gives_equality(rho0):
    field_ = exact_field(rho0=rho0, R=1000.0)
    report = minkowski_report(field_, field_.grid.surface, 1.0)
    assert report.gamma == pytest.approx(rho0 ** 0.5, rel=1e-6)
    assert report.lhs / report.rhs == pytest.approx(1.0, abs=0.015)
    assert report.equality
    assert report.gamma_free['relative_gap'] == pytest.approx(0.0, abs=0.015)


def test_report_needs_gamma(ball5, mu_field):
    bare = SolutionField(mu_field.problem, mu_field.grid, mu_field.values)
    with pytest.raises(PreconditionError):
        minkowski_report(bare, ball5, 1.0)
    with pytest.raises(DomainError):
        minkowski_report(mu_field, RadialSurface(5, (1.0, 0.0, 0.1)), 1.0)


@pytest.fixture(scope='module')
def solved_peanut():
    surface = RadialSurface(5, (1.0, 0.0, 0.1))
    problem = ApproxProblem.build(surface, 2, eps=1e-3, R=50.0)
    return continuation_solve(problem, [1e-3, 1e-4, 1e-5], [50.0, 75.0, 100.0])


@pytest.mark.slow
@pytest.mark.parametrize('beta', [1.0 / 3.0, 1.0])
def test_non_ball_is_strict_and_monotone(solved_peanut, beta):
    report = minkowski_report(solved_peanut, solved_peanut.grid.surface, beta)
    assert report.gap > 0.0
    assert not report.equality
    assert report.boundary_oscillation > report.tolerance
    series = phi_series(solved_peanut, beta)
    assert len(series.samples) >= 20
    assert series.monotone
    assert series.endpoint_ok
    assert series.boundary_margin == pytest.approx(report.relative_gap, abs=1e-3)


def test_phi_of_tau_on_the_exact_profile(mu_field):
    assert phi_of_tau(mu_field, -2.0, 1.0) == pytest.approx(BALL_PHI, rel=0.005)
    sample = evaluate_phi(mu_field, -2.0, 1.0)
    assert sample.level == pytest.approx(-0.5)
    assert not sample.flagged


def gauge_field(surface, n_s, n_theta, R=40.0):
    """-(r/rho(theta))^{-1/2}: -1 on the boundary, level sets are scaled copies of it."""
    problem = ApproxProblem.build(surface, 2, eps=0.0, R=R)
    grid = AnnulusGrid(surface, R, n_s, n_theta, 2.0)
    theta = np.broadcast_to(grid.theta, grid.shape)
    return SolutionField(problem, grid, -(grid.r / surface.rho(theta)) ** -0.5)


def test_level_set_arclength_converges_under_refinement(peanut5):
    scale = 0.9 ** -2
    exact = scale * quad(lambda t: np.hypot(peanut5.rho(t), peanut5.drho(t)), 0.0, pi, epsabs=1e-13)[0]
    errors = []
    for n_s, n_theta in ((128, 9), (256, 17), (512, 33)):
        contour = extract_level_set(gauge_field(peanut5, n_s, n_theta), -0.9)
        np.testing.assert_allclose(contour.r, scale * peanut5.rho(contour.theta), rtol=1e-6)
        errors.append(abs(contour.arclength - exact))
    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= max(coarse / 4.0, 1e-10 * exact)
    assert errors[-1] <= 1e-5 * exact


def test_near_ball_gap_is_not_equality(peanut5):
    field_ = gauge_field(peanut5, 512, 33, R=1000.0)
    field_ = field_.with_asymptotics(asymptotics_report(field_))
    report = minkowski_report(field_, peanut5, 1.0)
    assert report.boundary_oscillation > 0.1
    assert not report.equality
    assert report.to_dict()['within_tolerance'] == report.within_tolerance


def test_phi_at_minus_one_is_the_boundary_integral_on_a_solved_ball(ball5):
    field_ = solve_radial(5, 2, 1.0, 100.0, 1e-4)
    report = minkowski_report(field_, ball5, 1.0)
    assert phi_of_tau(field_, -1.0, 1.0) == pytest.approx(report.lhs, rel=1e-6)
    assert report.equality
    assert report.boundary_oscillation == pytest.approx(0.0, abs=1e-12)


def test_endpoint_checks_follow_gamma(far_mu_field):
    series = phi_series(far_mu_field, 1.0 / 3.0, taus=np.linspace(-20.0, -1.0, 20))
    assert series.endpoint_ok
    assert series.fit_spread == pytest.approx(1e-3)
    assert series.endpoint_within_spread
    assert series.boundary_margin == pytest.approx(0.0, abs=1e-4)

    # gamma 10% alto: Phi(-inf) sube un 13.5% y ambos controles fallan
    inflated = dataclasses.replace(far_mu_field.asymptotics, gamma=1.1 * far_mu_field.asymptotics.gamma)
    series = phi_series(far_mu_field.with_asymptotics(inflated), 1.0 / 3.0, taus=np.linspace(-20.0, -1.0, 20))
    assert not series.endpoint_ok
    assert series.boundary_margin < -0.1
    assert not series.endpoint_within_spread
    assert series.to_dict()['endpoint_within_spread'] is False
