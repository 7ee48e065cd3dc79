from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import ConfigurationError, DomainError, ParityError
from src.grassmann import Parity, Supernumber
from src.superspace import (
    Monomial,
    SuperPolynomial,
    random_polynomial,
    sp_deriv,
    sp_deriv_sequence,
    sp_substitute,
)

from .conftest import GENERATORS

x = SuperPolynomial.variable("x", GENERATORS)
t = SuperPolynomial.variable("t", GENERATORS)
th1 = SuperPolynomial.variable("theta1", GENERATORS)
th2 = SuperPolynomial.variable("theta2", GENERATORS)
XI1 = Supernumber.generator(1, GENERATORS)


def const(value):
    return SuperPolynomial.constant(value, GENERATORS)


def test_theta_products():
    assert th2 * th1 == -(th1 * th2)
    assert th1 * th1 == SuperPolynomial.zero(GENERATORS)
    assert (x + th1) * (x - th1) == x * x
    assert (const(XI1) * th1) * (const(XI1) * th2) == SuperPolynomial.zero(GENERATORS)


def test_odd_coefficient_anticommutes_past_theta():
    # theta1 xi1 = -xi1 theta1
    assert th1 * const(XI1) == -(const(XI1) * th1)


def test_derivative_examples():
    assert sp_deriv(th1 * th2, "theta1") == th2
    assert sp_deriv(th1 * th2, "theta2") == -th1
    assert sp_deriv(x ** 2 * th1, "x") == 2.0 * x * th1
    assert sp_deriv_sequence(th1 * th2, ["theta1", "theta2"]) == const(1.0)
    with pytest.raises(ConfigurationError):
        sp_deriv(x, "y")


def test_rational_exponents():
    p = SuperPolynomial.monomial(1.0, t=Fraction(1, 2), theta=1, generators=GENERATORS)
    assert sp_deriv(p, "t") == SuperPolynomial.monomial(0.5, t=Fraction(-1, 2), theta=1,
                                                        generators=GENERATORS)
    values = p.evaluate(np.array([1.0]), np.array([4.0]))
    assert values[1][0, 0] == pytest.approx(2.0)
    with pytest.raises(DomainError):
        p.evaluate(np.array([1.0]), np.array([-1.0]))


def test_substitution_of_a_supersymmetry_flow():
    p = x * th1
    image = sp_substitute(p, {"x": x - const(XI1) * th1, "theta1": th1 + const(XI1)})
    # (x - xi1 theta1)(theta1 + xi1) = x theta1 + xi1 x
    expected = x * th1 + const(XI1) * x
    assert image.allclose(expected)


def test_substitution_inverse_and_fixed_points():
    forward = sp_substitute(th1, {"theta1": th1 + const(XI1)})
    back = sp_substitute(forward, {"theta1": th1 - const(XI1)})
    assert back == th1
    assert sp_substitute(t, {"x": x + 1.0}) == t


def test_substitution_checks_parity():
    with pytest.raises(ParityError):
        sp_substitute(x, {"x": th1})
    with pytest.raises(ConfigurationError):
        sp_substitute(x, {"y": x})


def test_parity_and_components():
    p = x * th1 + const(XI1) * t
    assert p.parity is Parity.ODD
    assert (x + th1).parity is Parity.MIXED
    parts = p.theta_components()
    assert set(parts) == {0, 1}
    assert parts[1] == x
    assert p.depends_on("theta1") and not p.depends_on("theta2")


@settings(deadline=None, max_examples=25)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1),
       p_odd=st.booleans(), var=st.sampled_from(["theta1", "theta2"]))
def test_graded_leibniz_rule(seed, p_odd, var):
    rng = np.random.default_rng(seed)
    p = random_polynomial(rng, Parity.ODD if p_odd else Parity.EVEN, degree=2)
    q = random_polynomial(rng, Parity.EVEN, degree=2)
    sign = -1.0 if p_odd else 1.0
    lhs = sp_deriv(p * q, var)
    rhs = sp_deriv(p, var) * q + sign * (p * sp_deriv(q, var))
    assert lhs.allclose(rhs, atol=1e-10)


@settings(deadline=None, max_examples=25)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_odd_derivatives_anticommute(seed):
    p = random_polynomial(np.random.default_rng(seed), Parity.EVEN, degree=2)
    a = sp_deriv_sequence(p, ["theta1", "theta2"])
    b = sp_deriv_sequence(p, ["theta2", "theta1"])
    assert a.allclose(-b, atol=1e-12)


def test_monomials_normalise_exponents():
    p = SuperPolynomial({(1, 0.5, 2): 1.0}, GENERATORS)
    assert list(p.terms) == [Monomial(Fraction(1), Fraction(1, 2), 2, 0)]
    with pytest.raises(ConfigurationError):
        SuperPolynomial({(0, 0, 4): 1.0}, GENERATORS)
