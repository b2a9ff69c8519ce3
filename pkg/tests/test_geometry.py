import numpy as np
import pytest

from core.errors import AdmissibilityError, ConfigError, DomainError, PreconditionError
from core.geometry import (RadialSurface, SphereDerivatives, axisym_hessian_eigs, block_sigma_k, boundary_curvature,
                           boundary_curvatures, check_admissible_domain, hessian_of_g, parse_domain_spec,
                           select_subsolution_N, spherical_hessian, subsolution_sigma_k)
from core.suites import fd_gradient, fd_hessian
from core.symfun import sigma_k_of_matrix


def test_parse_domain_spec():
    spec = parse_domain_spec('n=5 k=2 rho = 1 + 0.1*cos(2*theta)')
    assert (spec.n, spec.k) == (5, 2)
    assert spec.surface.coeffs == (1.0, 0.0, 0.1)
    assert not spec.surface.is_ball
    assert parse_domain_spec('n=6 k=2 rho = 2').surface.is_ball


@pytest.mark.parametrize('text', [
    'n=5 rho = 1',
    'n=5 k=2',
    'n=5 k=two rho = 1',
    'n=5 k=2 m=3 rho = 1',
    'n=5 k=2 rho = 1 + banana',
    'n=5 k=2 rho = 0.5 + 1*cos(theta)',
])
def test_parse_domain_spec_errors(text):
    with pytest.raises(ConfigError):
        parse_domain_spec(text)


def test_surface_rejects_non_positive_rho():
    with pytest.raises(DomainError):
        RadialSurface(5, (0.2, 0.5))
    with pytest.raises(DomainError):
        RadialSurface(2, (1.0,))


def test_surface_derivatives(peanut5):
    theta = np.linspace(0.1, 3.0, 7)
    np.testing.assert_allclose(peanut5.rho(theta), 1.0 + 0.1 * np.cos(2 * theta))
    np.testing.assert_allclose(peanut5.drho(theta), -0.2 * np.sin(2 * theta))
    np.testing.assert_allclose(peanut5.d2rho(theta), -0.4 * np.cos(2 * theta))
    assert peanut5.extent() == pytest.approx((0.9, 1.1))


def test_spherical_hessian_of_r_squared():
    m = 4
    r = 1.7
    d = SphereDerivatives(r * r, np.zeros(m), np.zeros((m, m)), 2 * r, np.zeros(m), 2.0)
    np.testing.assert_allclose(spherical_hessian(d, r), 2.0 * np.eye(m + 1), atol=1e-14)


def test_spherical_hessian_of_r():
    m = 3
    r = 2.5
    d = SphereDerivatives(r, np.zeros(m), np.zeros((m, m)), 1.0, np.zeros(m), 0.0)
    np.testing.assert_allclose(spherical_hessian(d, r), np.diag([1 / r] * m + [0.0]), atol=1e-14)


def test_spherical_hessian_rejects_origin():
    with pytest.raises(DomainError):
        spherical_hessian(SphereDerivatives(0.0, np.zeros(2), np.zeros((2, 2)), 0.0, np.zeros(2), 0.0), 0.0)


def test_ball_curvatures():
    data = boundary_curvature(RadialSurface.ball(5, 2.0), 0.8, k=2)
    np.testing.assert_allclose(data.kappa, 0.5, atol=1e-14)
    assert data.sigma_km1 == pytest.approx(2.0)


@pytest.mark.parametrize('theta', [0.0, 0.3, 1.2, np.pi / 2, 2.9, np.pi])
def test_frame_curvatures_match_graph_formula(peanut5, theta):
    meridian, azimuthal = boundary_curvatures(peanut5, np.array([theta]))
    expected = np.sort([meridian[0]] + [azimuthal[0]] * 3)
    np.testing.assert_allclose(boundary_curvature(peanut5, theta).kappa, expected, rtol=1e-10, atol=1e-12)


def test_admissibility_certificate():
    assert check_admissible_domain(RadialSurface.ball(5), 2).passed
    assert check_admissible_domain(RadialSurface(5, (1.0, 0.0, 0.1)), 2).passed
    pinched = RadialSurface(5, (1.0, 0.0, 0.9))
    cert = check_admissible_domain(pinched, 2)
    assert not cert.passed
    # la cintura theta = pi/2 es donde falla la convexidad
    assert cert.worst_theta == pytest.approx(np.pi / 2, abs=0.05)
    with pytest.raises(AdmissibilityError) as info:
        check_admissible_domain(pinched, 2, raise_on_failure=True)
    assert info.value.details['certificate']['passed'] is False


def test_admissibility_argument_checks(ball5):
    with pytest.raises(DomainError):
        check_admissible_domain(ball5, 2, samples=10)
    with pytest.raises(DomainError):
        check_admissible_domain(ball5, 5)


def test_block_sigma_k_matches_eigenvalues(rng):
    for n, k in ((5, 2), (6, 3), (4, 1)):
        a, b, c, m = rng.normal(size=4)
        matrix = np.zeros((n, n))
        matrix[:2, :2] = [[a, b], [b, c]]
        matrix[2:, 2:] = m * np.eye(n - 2)
        assert block_sigma_k(a, b, c, m, n, k) == pytest.approx(sigma_k_of_matrix(matrix, k), rel=1e-10, abs=1e-12)


def test_block_sigma_k_derivatives():
    a, b, c, m = 0.7, -0.3, 1.1, 0.4
    h = 1e-6
    value, d_a, d_b, d_c, d_m = block_sigma_k(a, b, c, m, 6, 3, derivatives=True)
    fd = [(block_sigma_k(*(np.array([a, b, c, m]) + h * e), 6, 3)
           - block_sigma_k(*(np.array([a, b, c, m]) - h * e), 6, 3)) / (2 * h) for e in np.eye(4)]
    np.testing.assert_allclose([d_a, d_b, d_c, d_m], fd, rtol=1e-6, atol=1e-9)


def test_axisym_hessian_of_r_squared():
    r, theta = 1.5, 0.4
    eigs = axisym_hessian_eigs(2 * r, 0.0, 2.0, 0.0, 0.0, r, theta, 5)
    np.testing.assert_allclose(eigs, 2.0, atol=1e-14)


def test_axisym_hessian_rejects_angular_slope_on_axis():
    with pytest.raises(DomainError):
        axisym_hessian_eigs(1.0, 0.5, 0.0, 0.0, 0.0, 1.0, 0.0, 5)


def test_ball_subsolution_closed_form(ball5):
    # g = r: sigma_2(D^2 r^2) = 4 * (6 + 4) = 40 en n = 5
    assert subsolution_sigma_k(ball5, 2, 0.3, 1.0, 2) == pytest.approx(40.0)
    assert subsolution_sigma_k(ball5, 2, 1.3, 2.0, 2) == pytest.approx(40.0)
    params = select_subsolution_N(ball5, 2)
    assert params.N == 2
    assert params.min_scaled_sigma >= 1.0


def test_subsolution_on_perturbed_domain(peanut5):
    params = select_subsolution_N(peanut5, 2)
    assert params.N & (params.N - 1) == 0
    assert params.c1 > 0.0
    theta = np.linspace(0.05, 3.1, 17)
    r = 3.0 * peanut5.rho(theta)
    assert np.all(subsolution_sigma_k(peanut5, params.N, theta, r, 2) * r ** 2 >= 1.0)


def test_subsolution_is_only_defined_outside(peanut5):
    with pytest.raises(PreconditionError):
        subsolution_sigma_k(peanut5, 2, 0.0, 0.5, 2)


def test_unit_sphere_second_form_is_identity():
    np.testing.assert_allclose(boundary_curvature(RadialSurface.ball(6), 1.1).a, np.eye(5), atol=1e-14)


def test_hessian_of_g_on_ball():
    out = hessian_of_g(RadialSurface.ball(5, 2.0), 0.9, 3.0)
    expected = np.zeros((5, 5))
    expected[:4, :4] = np.eye(4) / 6.0
    np.testing.assert_allclose(out, expected, atol=1e-14)


def test_axisym_hessian_of_linear_function():
    r, theta = 2.0, 1.1
    eigs = axisym_hessian_eigs(np.cos(theta), -r * np.sin(theta), 0.0, -np.sin(theta), -r * np.cos(theta),
                               r, theta, 6)
    np.testing.assert_allclose(eigs, 0.0, atol=1e-14)


def polar_angle(x):
    return np.arctan2(np.linalg.norm(x[1:]), x[0])


def test_boundary_curvature_matches_the_embedded_surface(peanut5):
    # F(x) = |x| - rho(theta(x)) en R^5; segunda forma = D^2 F restringida / |DF|
    theta = np.pi / 4

    def F(x):
        return np.linalg.norm(x) - float(peanut5.rho(polar_angle(x)))

    rho = float(peanut5.rho(theta))
    x = rho * np.array([np.cos(theta), np.sin(theta), 0.0, 0.0, 0.0])
    grad = fd_gradient(F, x)
    normal = grad / np.linalg.norm(grad)
    tangent = np.linalg.svd(np.eye(5) - np.outer(normal, normal))[0][:, :4]
    shape = tangent.T @ fd_hessian(F, x) @ tangent / np.linalg.norm(grad)
    expected = np.sort(np.linalg.eigvalsh(0.5 * (shape + shape.T)))
    np.testing.assert_allclose(boundary_curvature(peanut5, theta).kappa, expected, rtol=1e-6, atol=1e-7)


def test_hessian_of_g_matches_finite_differences(peanut5):
    theta, r = np.pi / 3, 2.0

    def g(x):
        return np.linalg.norm(x) / float(peanut5.rho(polar_angle(x)))

    x = r * np.array([np.cos(theta), np.sin(theta), 0.0, 0.0, 0.0])
    e_theta = np.array([-np.sin(theta), np.cos(theta), 0.0, 0.0, 0.0])
    e_r = x / r
    frame = np.column_stack([e_theta, np.eye(5)[2], np.eye(5)[3], np.eye(5)[4], e_r])
    expected = frame.T @ fd_hessian(g, x) @ frame
    np.testing.assert_allclose(hessian_of_g(peanut5, theta, r), expected, atol=1e-7)


def test_axisym_hessian_of_axis_coordinate_squared(rng):
    # u = r^2 cos^2(theta) = x_1^2: autovalores {2, 0, 0, 0, 0}
    r = rng.uniform(0.5, 3.0, 100)
    theta = np.concatenate([[0.0, np.pi], rng.uniform(0.0, np.pi, 98)])
    eigs = axisym_hessian_eigs(2 * r * np.cos(theta) ** 2, -r ** 2 * np.sin(2 * theta), 2 * np.cos(theta) ** 2,
                               -2 * r * np.sin(2 * theta), -2 * r ** 2 * np.cos(2 * theta), r, theta, 5)
    expected = np.zeros((100, 5))
    expected[:, -1] = 2.0
    np.testing.assert_allclose(np.sort(eigs, axis=-1), expected, atol=1e-12)
