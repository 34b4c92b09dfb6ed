"""Fundamental measures and transfer coefficients against closed forms.

The constant-speed fixture mu_i(x) = lam_i - x makes phi*_i a truncated
Gaussian centered at lam_i with variance eps, so masses, minimizers, and the
leading behavior of J, F, J^psi all have pencil-and-paper oracles.
"""

import numpy as np
import pytest
from scipy.special import erf

from selfsim.color import ColorProfile
from selfsim.grid import uniform_grid
from selfsim.measures import (ClassLFunction, ClassLViolation, build_phi_star,
                              compute_F, compute_J, compute_J_psi,
                              constant_speed_fields, find_rho, phi_ratio,
                              verify_bounds)

M = 2.0
EPS = 0.05


def _measures(lams=(-1.2, 0.4), eps=EPS, n=3201):
    xi = uniform_grid(M, n)
    mu, lo, hi = constant_speed_fields(xi, lams)
    return build_phi_star(xi, mu, eps, lo, hi)


def test_class_l_container_validates_bounds():
    x = np.linspace(-2, 2, 101)
    ClassLFunction(x, 1.0, 0.5, 0.9, 1.1, 0.4, 0.6)
    with pytest.raises(ClassLViolation):
        ClassLFunction(x, 1.0, 0.5, 2.0, 3.0, 0.4, 0.6)  # d below d_min
    with pytest.raises(ClassLViolation):
        ClassLFunction(x, -1.0, 0.5, 0.9, 1.1, 0.4, 0.6)  # sign pattern


def test_find_rho_constant_speed():
    # for mu = lam - x the minimizer of g = -int mu is exactly x = lam
    x = np.linspace(-2, 2, 517)
    cl = ClassLFunction.from_callables(x, lambda t: np.ones_like(t),
                                       lambda t: np.full_like(t, 0.37))
    assert find_rho(cl) == pytest.approx(0.37, abs=1e-10)


def test_phi_star_is_truncated_gaussian():
    m = _measures()
    lam = -1.2
    xi = m.xi
    assert m.rho[0] == pytest.approx(lam, abs=xi[1] - xi[0])
    # g = (xi - lam)^2 / 2 up to quadrature error
    np.testing.assert_allclose(m.g[:, 0], (xi - lam) ** 2 / 2.0,
                               atol=1e-6, rtol=1e-6)
    # normalizing mass ~ sqrt(2 pi eps) for a band far from the window edge
    assert m.I[0] == pytest.approx(np.sqrt(2 * np.pi * EPS), rel=1e-3)
    # unit total mass
    assert np.trapezoid(m.phi[:, 0], xi) == pytest.approx(1.0, abs=1e-10)


def test_class_l_sign_pattern_enforced():
    xi = uniform_grid(M, 801)
    mu = np.abs(xi)[:, None]  # positive on both sides: not class L
    with pytest.raises(ClassLViolation):
        build_phi_star(xi, mu, EPS, np.array([-0.1]), np.array([0.1]))


def test_phi_ratio_is_log_weight():
    xi = np.linspace(-2, 2, 401)
    h = 1.0 - 0.0 * xi
    # int_0^1 1 = 1, so log ratio = 1/eps
    iy = np.argmin(np.abs(xi))
    ix = np.argmin(np.abs(xi - 1.0))
    assert phi_ratio(xi, h, iy, ix, 0.5) == pytest.approx(2.0, rel=1e-10)


def test_self_transfer_closed_form():
    """J_{i->i}(y) = phi_i(y) (y - c_i): the inner ratio is exactly 1."""
    m = _measures()
    for i in range(2):
        J = compute_J(m, i, i)
        assert J.crosscheck < 1e-8
        expected = m.phi[:, i] * (m.xi - m.c[i])
        keep = m.phi[:, i] > 1e-200
        np.testing.assert_allclose(J.values.values[keep], expected[keep],
                                   rtol=1e-6, atol=1e-12)


def test_self_transfer_pointwise_bound():
    m = _measures()
    for i in range(2):
        J = np.abs(compute_J(m, i, i).values.values)
        keep = m.phi[:, i] > 1e-250
        assert np.all(J[keep] <= 2 * M * m.phi[keep, i] * (1 + 1e-9))


def test_quadratic_self_transfer_closed_form():
    """F_{i,i->i}(y) = phi_i(y) int_{c_i}^y phi_i = phi_i (Phi(y) - Phi(c))."""
    m = _measures()
    i = 0
    F = compute_F(m, i, i, i)
    assert F.crosscheck < 1e-8
    from scipy.integrate import cumulative_trapezoid
    Phi = cumulative_trapezoid(m.phi[:, i], m.xi, initial=0.0)
    expected = m.phi[:, i] * (Phi - Phi[m.c_index[i]])
    keep = m.phi[:, i] > 1e-200
    np.testing.assert_allclose(F.values.values[keep], expected[keep],
                               rtol=1e-5, atol=1e-12)


def test_cross_transfer_scales_linearly_in_eps():
    sups = []
    for eps in (0.1, 0.05, 0.025):
        m = _measures(eps=eps, n=int(80 * M / eps))
        J = compute_J(m, 1, 0).values.values
        denom = m.phi[:, 0] + m.phi[:, 1]
        keep = denom > 1e-250
        sups.append(np.abs(J[keep] / denom[keep]).max())
    slopes = np.diff(np.log(sups)) / np.diff(np.log([0.1, 0.05, 0.025]))
    np.testing.assert_allclose(slopes, 1.0, atol=0.05)


def test_dual_organizations_agree_on_stiff_problem():
    m = _measures(eps=0.0125, n=12800)
    for (j, i) in ((0, 1), (1, 0), (0, 0), (1, 1)):
        assert compute_J(m, j, i).crosscheck < 1e-6
        assert compute_F(m, j, j, i).crosscheck < 1e-6


def test_color_weighted_transfer_with_gaussian_weight():
    m = _measures(lams=(-1.2, 0.0))
    psi = ColorProfile(EPS, 1.0, M).evaluate_psi(m.xi)
    Jp = compute_J_psi(m, psi, 1, 1)
    assert Jp.crosscheck < 1e-8
    norm1 = np.trapezoid(psi, m.xi)
    denom = norm1 * 2.0 * m.phi[:, 1]
    keep = m.phi[:, 1] > 1e-250
    ratio = np.abs(Jp.values.values[keep]) / denom[keep]
    # resonant band (0 inside band 2): the sup ratio is 1/4 exactly in the
    # eps -> 0 limit (product of two unit-mass Gaussians at the same center)
    assert ratio.max() == pytest.approx(0.25, rel=0.02)


def test_verify_bounds_two_band_fixture():
    ladder = [0.1, 0.05, 0.025, 0.0125]

    def measure_factory(eps):
        return _measures(lams=(-1.2, 0.0), eps=eps, n=int(80 * M / eps))

    def psi_factory(eps):
        n = int(80 * M / eps)
        return ColorProfile(eps, 1.0, M).evaluate_psi(uniform_grid(M, n))

    report = verify_bounds(measure_factory, ladder, psi_factory=psi_factory)
    names = [c["name"] for c in report["checks"]]
    assert "J^psi fitted constant stability" in names
    for check in report["checks"]:
        assert check["passed"], check
    # cross-family linear slopes are sharp (exactly eps for this fixture)
    for check in report["checks"]:
        if check["name"].startswith("|J_{2->1}"):
            assert check["fitted_slope"] == pytest.approx(1.0, abs=0.05)


def test_verify_bounds_single_family():
    ladder = [0.1, 0.05]

    def measure_factory(eps):
        return _measures(lams=(0.3,), eps=eps, n=int(80 * M / eps))

    report = verify_bounds(measure_factory, ladder)
    assert report["passed"], report
