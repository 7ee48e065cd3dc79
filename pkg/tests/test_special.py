import math

import numpy as np
import pytest
from scipy import special as sp_special

from src.errors import DomainError, NumericalError, PoleError
from src.grassmann import Supernumber, get_algebra
from src.special import (
    agm,
    brent_root,
    complete_elliptic_K,
    elliptic_F,
    elliptic_params,
    jacobi_branch_valid,
    jacobi_sncndn,
    quadrature,
    quartic_invariants,
    quartic_roots,
    quartic_value,
    rk4_ring,
    weierstrass_form_y,
    weierstrass_p,
)

from .conftest import GENERATORS

U = np.linspace(-3.0, 4.0, 29)
XI12 = Supernumber.generator(1, GENERATORS) * Supernumber.generator(2, GENERATORS)
XI34 = Supernumber.generator(3, GENERATORS) * Supernumber.generator(4, GENERATORS)


def test_agm_gauss_constant():
    assert agm(1.0, math.sqrt(2.0)) == pytest.approx(1.1981402347355922, rel=1e-14)


@pytest.mark.parametrize("k", [0.1, 0.5, 0.8, 0.99])
def test_jacobi_functions_match_scipy(k):
    sn, cn, dn = jacobi_sncndn(U, k)
    ref_sn, ref_cn, ref_dn, _ = sp_special.ellipj(U, k * k)
    np.testing.assert_allclose(sn, ref_sn, atol=1e-11)
    np.testing.assert_allclose(cn, ref_cn, atol=1e-11)
    np.testing.assert_allclose(dn, ref_dn, atol=1e-11)
    np.testing.assert_allclose(sn ** 2 + cn ** 2, 1.0, atol=1e-12)
    np.testing.assert_allclose(dn ** 2 + k * k * sn ** 2, 1.0, atol=1e-12)


def test_jacobi_limits():
    sn, cn, dn = jacobi_sncndn(U, 0.0)
    np.testing.assert_allclose(sn, np.sin(U))
    np.testing.assert_allclose(dn, 1.0)
    sn, cn, dn = jacobi_sncndn(U, 1.0)
    np.testing.assert_allclose(sn, np.tanh(U))
    np.testing.assert_allclose(cn, 1.0 / np.cosh(U))
    with pytest.raises(DomainError):
        jacobi_sncndn(U, 1.2)


@pytest.mark.parametrize("k", [0.0, 0.3, 0.9, 0.999])
def test_complete_integral_matches_scipy(k):
    assert complete_elliptic_K(k) == pytest.approx(float(sp_special.ellipk(k * k)), rel=1e-13)


def test_complete_integral_diverges_at_one():
    with pytest.raises(DomainError):
        complete_elliptic_K(1.0)


def test_incomplete_integral_conventions():
    k = 0.6
    assert elliptic_F(0.0, k) == 0.0
    assert elliptic_F(1.0, k) == pytest.approx(complete_elliptic_K(k), rel=1e-13)
    assert elliptic_F(0.4, k) == pytest.approx(float(sp_special.ellipkinc(math.asin(0.4), k * k)), rel=1e-13)
    for phi in (0.3, 2.5, 4.0, -5.5):
        expected = float(sp_special.ellipkinc(phi, k * k))
        assert elliptic_F(phi, k, convention="amplitude") == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        elliptic_F(1.5, k)
    with pytest.raises(DomainError):
        elliptic_F(0.5, k, convention="degrees")


def test_branch_validity():
    assert jacobi_branch_valid(1, 1.0)
    assert jacobi_branch_valid(1, 1.0, "sqrt")
    assert not jacobi_branch_valid(1, 0.0)
    assert jacobi_branch_valid(-1, 1.0)
    assert not jacobi_branch_valid(-1, 1.0, "sqrt")
    assert not jacobi_branch_valid(1, -0.25)
    with pytest.raises(DomainError):
        jacobi_branch_valid(1, 1.0, "parameter")


def test_elliptic_params():
    params = elliptic_params(0.0, 1.0)
    assert params.k == pytest.approx(0.4)
    assert set(params.to_dict()) == {"g2", "g3", "k", "coefficients"}
    assert params.coefficients[0].body == -1.0


@pytest.mark.parametrize("C1", [0.0, 1.0, 2.5])
def test_quoted_invariants_agree_without_c0(C1):
    inv = quartic_invariants(0.0, C1)
    assert inv.agree() == (True, True)


def test_g3_discrepancy_is_reported():
    C0, C1 = 0.5, 1.0
    inv = quartic_invariants(C0, C1)
    g2_ok, g3_ok = inv.agree()
    assert g2_ok and not g3_ok
    assert inv.g3_discrepancy.body == pytest.approx(C0 ** 2 * (-2 * C1 - 11) / 3)
    assert inv.to_dict()["g3_agrees"] is False


def test_nilpotent_c0_reaches_g3_through_its_square():
    C0 = XI12 + XI34
    inv = quartic_invariants(C0, 1.0)
    assert inv.g2_discrepancy.is_zero()
    assert inv.g3_discrepancy.allclose(2.0 * (XI12 * XI34) * (-13.0 / 3.0))
    # C0 enters g2 only through -4 C0^2
    assert (inv.g2 - quartic_invariants(0.0, 1.0).g2).allclose(-4.0 * (C0 * C0))


def test_quartic_roots_and_values():
    roots = quartic_roots(1.5)
    inner, outer = math.sqrt(2 - math.sqrt(3)), math.sqrt(2 + math.sqrt(3))
    np.testing.assert_allclose(roots, [-outer, -inner, inner, outer], atol=1e-12)
    np.testing.assert_allclose(quartic_value(roots, 1.5), 0.0, atol=1e-10)
    h = 1e-6
    y = 0.7
    fd = (quartic_value(y + h, 1.5, 0.2) - quartic_value(y - h, 1.5, 0.2)) / (2 * h)
    assert quartic_value(y, 1.5, 0.2, order=1) == pytest.approx(fd, rel=1e-7)
    with pytest.raises(DomainError):
        quartic_value(y, 1.5, order=3)


def test_weierstrass_degenerate_invariants():
    for z in (0.1, 0.5, 1.7):
        assert weierstrass_p(z, 0.0, 0.0).body == pytest.approx(z ** -2, rel=1e-12)


@pytest.mark.parametrize("z", [0.2, 0.5, 0.9])
def test_weierstrass_differential_equation(z):
    g2, g3 = 2.0, 0.5
    P, dP = weierstrass_p(z, g2, g3, derivative=True)
    p, dp = P.body, dP.body
    residual = dp * dp - (4 * p ** 3 - g2 * p - g3)
    assert abs(residual) < 1e-9 * max(1.0, abs(p) ** 3)


def test_weierstrass_pole():
    z = 1e-3
    assert weierstrass_p(z, 2.0, 0.5).body * z * z == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(PoleError):
        weierstrass_p(1e-9, 2.0, 0.5)


def test_weierstrass_soul_is_the_invariant_derivative():
    z, g2, g3, h = 0.6, 2.0, 0.5, 1e-5
    P = weierstrass_p(z, g2 + XI12, g3)
    fd = (weierstrass_p(z, g2 + h, g3).body - weierstrass_p(z, g2 - h, g3).body) / (2 * h)
    assert P.body == pytest.approx(weierstrass_p(z, g2, g3).body, rel=1e-14)
    assert P.soul.allclose(fd * XI12, atol=1e-7)


@pytest.mark.parametrize("sigma", [0.3, 0.6, 1.1])
def test_weierstrass_form_solves_the_quartic_ode(sigma):
    C1 = 1.5
    root = quartic_roots(C1)[2]
    y, dy = weierstrass_form_y(sigma, C1, root)
    assert root <= y <= quartic_roots(C1)[3] + 1e-12
    assert 4 * dy * dy == pytest.approx(float(quartic_value(y, C1)), abs=1e-8)


def test_rk4_ring_linear_growth():
    alg = get_algebra(GENERATORS)
    a = Supernumber.scalar(1.0, GENERATORS) + XI12
    grid = np.linspace(0.0, 1.0, 11)
    out = rk4_ring(lambda s, y: y, [a], grid, substeps=4)
    expected = Supernumber.from_array(math.e * a.coeffs, alg)
    assert Supernumber.from_array(out[-1][0], alg).allclose(expected, atol=1e-7)


def test_rk4_ring_propagates_the_variational_equation():
    # y' = y^2 with y(0) = a gives y(1) = a / (1 - a), dy/da = 1 / (1 - a)^2
    alg = get_algebra(GENERATORS)
    a = Supernumber.scalar(0.5, GENERATORS) + XI12
    out = rk4_ring(lambda s, y: alg.mul(y, y), [a], np.linspace(0.0, 1.0, 21), substeps=4)
    y1 = Supernumber.from_array(out[-1][0], alg)
    assert y1.body == pytest.approx(1.0, rel=1e-7)
    assert y1.soul.allclose(4.0 * XI12, atol=1e-6)


def test_rk4_ring_rejects_non_finite_states():
    with pytest.raises(NumericalError):
        rk4_ring(lambda s, y: np.full_like(y, np.nan), np.ones((1, 4)), [0.0, 0.5, 1.0])


def test_quadrature_methods():
    assert quadrature(lambda s: s * s, 0.0, 1.0) == pytest.approx(1.0 / 3.0)
    assert quadrature(lambda s: 1.0 / math.sqrt(s), 0.0, 1.0, method="tanh-sinh") == pytest.approx(2.0)
    a = Supernumber.scalar(2.0, GENERATORS) + XI34
    value = quadrature(lambda s: a * s, 0.0, 1.0)
    assert value.allclose(0.5 * a, atol=1e-10)
    with pytest.raises(DomainError):
        quadrature(lambda s: s, 0.0, 1.0, method="simpson")


def test_brent_root():
    assert brent_root(math.cos, (0.0, 2.0)) == pytest.approx(math.pi / 2, abs=1e-12)
    with pytest.raises(DomainError):
        brent_root(math.cos, (0.0, 1.0))
