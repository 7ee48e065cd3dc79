import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import ConfigurationError, DomainError, NotInvertible, ParityError
from src.grassmann import (
    Parity,
    Supernumber,
    gadd,
    get_algebra,
    gfunc,
    ginv,
    gmul,
    monomial_sign,
    parity_of,
    random_supernumber,
    set_body_tolerance,
)

from .conftest import GENERATORS, supernumbers

ATOL = 1e-12


def xi(*indices, coeff=1.0):
    value = Supernumber.scalar(coeff, GENERATORS)
    for i in indices:
        value = value * Supernumber.generator(i, GENERATORS)
    return value


ONE = Supernumber.scalar(1.0, GENERATORS)


def test_addition_cancels_souls():
    assert gadd(ONE + xi(1), 2.0 - xi(1)) == Supernumber.scalar(3.0, GENERATORS)
    assert gadd(xi(1, 2), xi(1, 2)) == xi(1, 2, coeff=2.0)
    a = xi(1) + xi(2, 3)
    assert a + 0 == a


def test_product_is_ordered_and_anticommuting():
    assert gmul(xi(1), xi(2)).terms == {0b11: 1.0}
    assert gmul(xi(2), xi(1)).terms == {0b11: -1.0}
    assert gmul(xi(1), xi(1)).is_zero()
    assert (ONE + xi(1, 2)) * (ONE - xi(1, 2)) == ONE


@pytest.mark.parametrize("left,right,expected", [
    (0b0001, 0b0010, 1),
    (0b0010, 0b0001, -1),
    (0b0011, 0b0100, 1),
    (0b0100, 0b0011, 1),
    (0b0101, 0b0010, -1),
    (0b0001, 0b0001, 0),
])
def test_monomial_sign(left, right, expected):
    assert monomial_sign(left, right) == expected


def test_parity():
    assert parity_of(3.0 + xi(1, 2)) is Parity.EVEN
    assert parity_of(xi(1) + xi(1, 2, 3)) is Parity.ODD
    assert parity_of(ONE + xi(1)) is Parity.MIXED
    assert parity_of(Supernumber({}, GENERATORS)) is Parity.EVEN


def test_inverse_examples():
    assert ginv(Supernumber.scalar(2.0, GENERATORS)) == Supernumber.scalar(0.5, GENERATORS)
    assert ginv(ONE + xi(1, 2)).allclose(ONE - xi(1, 2))
    with pytest.raises(NotInvertible):
        ginv(xi(1, 2))
    with pytest.raises(ZeroDivisionError):
        ginv(xi(1))


def test_body_tolerance_setting():
    small = Supernumber.scalar(1e-8, GENERATORS) + xi(1, 2)
    assert (small * ginv(small)).allclose(ONE, atol=1e-6)
    previous = set_body_tolerance(1e-6)
    try:
        with pytest.raises(NotInvertible):
            ginv(small)
        assert ginv(small, tolerance=1e-10).body == pytest.approx(1e8)
    finally:
        set_body_tolerance(previous)
    with pytest.raises(ConfigurationError):
        set_body_tolerance(0.0)


def test_functions_of_nilpotent_arguments():
    assert gfunc("sinh", xi(1, 2)).allclose(xi(1, 2))
    assert gfunc("cosh", xi(1, 2)).allclose(ONE)
    e = math.e
    assert gfunc("exp", ONE + xi(1, 2)).allclose(e * ONE + e * xi(1, 2))
    with pytest.raises(ParityError):
        gfunc("sinh", xi(1))
    with pytest.raises(DomainError):
        gfunc("sqrt", -1.0 * ONE + xi(1, 2))
    with pytest.raises(DomainError):
        gfunc("log", xi(1, 2))


def test_functions_on_full_soul_terminate_exactly():
    # soul = xi1 xi2 + xi3 xi4 has square 2 xi1 xi2 xi3 xi4 and vanishing cube
    soul = xi(1, 2) + xi(3, 4)
    a = 0.4 * ONE + soul
    expected = (math.sinh(0.4) * ONE + math.cosh(0.4) * soul
                + 0.5 * math.sinh(0.4) * (soul * soul))
    assert gfunc("sinh", a).allclose(expected, atol=ATOL)


@settings(deadline=None, max_examples=30)
@given(a=supernumbers(), b=supernumbers(), c=supernumbers())
def test_ring_axioms(a, b, c):
    assert ((a * b) * c).allclose(a * (b * c), atol=1e-10)
    assert (a * (b + c)).allclose(a * b + a * c, atol=1e-10)


@settings(deadline=None, max_examples=30)
@given(a=supernumbers(Parity.ODD), b=supernumbers(Parity.ODD), e=supernumbers(Parity.EVEN))
def test_graded_commutativity(a, b, e):
    assert (a * b).allclose(-(b * a), atol=ATOL)
    assert (a * e).allclose(e * a, atol=ATOL)
    assert (a * a).allclose(Supernumber({}, GENERATORS), atol=ATOL)


@settings(deadline=None, max_examples=30)
@given(a=supernumbers(Parity.EVEN), body=st.floats(min_value=0.2, max_value=3.0))
def test_inverse_and_function_identities(a, body):
    a = a - a.body + body
    assert (a * ginv(a)).allclose(ONE, atol=1e-10)
    assert (gfunc("cosh", a) ** 2 - gfunc("sinh", a) ** 2).allclose(ONE, atol=1e-9)
    assert gfunc("log", gfunc("exp", a)).allclose(a, atol=1e-9)
    root = gfunc("sqrt", a)
    assert (root * root).allclose(a, atol=1e-9)
    assert gfunc("tanh", a).allclose(gfunc("sinh", a) * ginv(gfunc("cosh", a)), atol=1e-10)


def test_vectorized_kernels_match_scalar_product(rng):
    algebra = get_algebra(GENERATORS)
    values = [random_supernumber(rng, Parity.MIXED) for _ in range(6)]
    a = np.stack([v.coeffs for v in values[:3]])
    b = np.stack([v.coeffs for v in values[3:]])
    products = algebra.mul(a, b)
    for row, (x, y) in zip(products, zip(values[:3], values[3:])):
        np.testing.assert_allclose(row, (x * y).coeffs, atol=ATOL)


def test_literals_and_rings():
    value = Supernumber.from_literal([[12, 0.5], [0, 2]], GENERATORS)
    assert value.body == 2.0
    assert value.to_literal() == [[0, 2.0], [12, 0.5]]
    assert Supernumber.from_literal(None, GENERATORS).is_zero()
    with pytest.raises(ConfigurationError):
        Supernumber.from_literal([[1]], GENERATORS)
    with pytest.raises(ConfigurationError):
        Supernumber.generator(5, GENERATORS)
    with pytest.raises(ConfigurationError):
        gmul(Supernumber.generator(1, 2), xi(1))


def test_supernumbers_are_immutable():
    value = xi(1)
    with pytest.raises(AttributeError):
        value.body = 3.0
    with pytest.raises(ValueError):
        value.coeffs[0] = 1.0
