"""Polynomials on superspace with Grassmann-valued coefficients.

A term is ``c * x^a * t^b * Phi^p * theta^m`` with the coefficient ``c`` on the
left and the theta monomial ordered theta1 before theta2.  Exponents of x and t
are rationals so dilation invariants such as ``t^(1/2) theta1`` stay exact;
the even variable Phi only appears in KdV generators and invariants.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DomainError, ParityError
from .grassmann import (DEFAULT_GENERATORS, Parity, Supernumber, get_algebra, gfunc, random_supernumber,
                        monomial_sign, parity_of)

VARIABLES = ("x", "t", "theta1", "theta2", "phi")
EVEN_VARIABLES = ("x", "t", "phi")
ODD_VARIABLES = ("theta1", "theta2")
THETA_BITS = {"theta1": 1, "theta2": 2}


class Monomial(NamedTuple):
    x: Fraction = Fraction(0)
    t: Fraction = Fraction(0)
    theta: int = 0
    phi: int = 0

    @property
    def theta_grade(self) -> int:
        return bin(self.theta).count("1")

    def render(self) -> str:
        parts = []
        for name, power in (("x", self.x), ("t", self.t), ("Phi", self.phi)):
            if power == 1:
                parts.append(name)
            elif power != 0:
                parts.append(f"{name}^{power}")
        if self.theta & 1:
            parts.append("θ1")
        if self.theta & 2:
            parts.append("θ2")
        return " ".join(parts)


Coefficient = Union[Supernumber, int, float]


def _as_fraction(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value).limit_denominator(10**6)


def theta_derivative_sign(mask: int, bit: int) -> int:
    """Sign of the left derivative d/dtheta_bit acting on the ordered theta monomial."""
    if not mask & bit:
        return 0
    below = mask & (bit - 1)
    return -1 if bin(below).count("1") % 2 else 1


class SuperPolynomial:
    """Immutable sparse polynomial in x, t, Phi, theta1, theta2."""

    __slots__ = ("generators", "_terms")

    def __init__(self, terms: Optional[Mapping[Monomial, Coefficient]] = None,
                 generators: int = DEFAULT_GENERATORS):
        object.__setattr__(self, "generators", generators)
        clean: Dict[Monomial, Supernumber] = {}
        for mono, coeff in (terms or {}).items():
            mono = Monomial(_as_fraction(mono[0]), _as_fraction(mono[1]), int(mono[2]),
                            int(mono[3]) if len(mono) > 3 else 0)
            if not 0 <= mono.theta < 4:
                raise ConfigurationError(f"Theta mask {mono.theta} out of range")
            coeff = self._coerce_coeff(coeff)
            total = clean.get(mono)
            coeff = coeff if total is None else total + coeff
            clean[mono] = coeff
        object.__setattr__(self, "_terms", {m: c for m, c in clean.items() if not c.is_zero()})

    def __setattr__(self, name, value):
        raise AttributeError("SuperPolynomial is immutable")

    def _coerce_coeff(self, coeff: Coefficient) -> Supernumber:
        if isinstance(coeff, Supernumber):
            if coeff.generators != self.generators:
                raise ConfigurationError(
                    f"Coefficient ring has {coeff.generators} generators, polynomial {self.generators}")
            return coeff
        return Supernumber.scalar(float(coeff), self.generators)

    # -- constructors --------------------------------------------------

    @classmethod
    def constant(cls, value: Coefficient, generators: int = DEFAULT_GENERATORS) -> "SuperPolynomial":
        return cls({Monomial(): value}, generators)

    @classmethod
    def zero(cls, generators: int = DEFAULT_GENERATORS) -> "SuperPolynomial":
        return cls({}, generators)

    @classmethod
    def variable(cls, name: str, generators: int = DEFAULT_GENERATORS,
                 power: Union[int, Fraction] = 1) -> "SuperPolynomial":
        """The coordinate ``name`` (x, t, theta1, theta2 or phi), optionally raised to ``power``."""
        if name == "x":
            mono = Monomial(x=_as_fraction(power))
        elif name == "t":
            mono = Monomial(t=_as_fraction(power))
        elif name == "phi":
            mono = Monomial(phi=int(power))
        elif name in THETA_BITS:
            if power not in (0, 1):
                return cls.zero(generators)
            mono = Monomial(theta=THETA_BITS[name] if power else 0)
        else:
            raise ConfigurationError(f"Unknown superspace variable '{name}'")
        return cls({mono: 1.0}, generators)

    @classmethod
    def monomial(cls, coeff: Coefficient = 1.0, x=0, t=0, theta: int = 0, phi: int = 0,
                 generators: int = DEFAULT_GENERATORS) -> "SuperPolynomial":
        return cls({Monomial(_as_fraction(x), _as_fraction(t), theta, phi): coeff}, generators)

    # -- views ---------------------------------------------------------

    @property
    def terms(self) -> Dict[Monomial, Supernumber]:
        return dict(self._terms)

    def is_zero(self, atol: float = 0.0) -> bool:
        if atol == 0.0:
            return not self._terms
        return all(c.max_abs() <= atol for c in self._terms.values())

    @property
    def parity(self) -> Parity:
        """Total parity: coefficient parity plus theta grade."""
        found = set()
        for mono, coeff in self._terms.items():
            p = parity_of(coeff)
            if p is Parity.MIXED:
                return Parity.MIXED
            odd = (p is Parity.ODD) ^ (mono.theta_grade % 2 == 1)
            found.add(Parity.ODD if odd else Parity.EVEN)
        if len(found) > 1:
            return Parity.MIXED
        return found.pop() if found else Parity.EVEN

    def depends_on(self, name: str) -> bool:
        """Whether any term carries the variable ``name``."""
        for mono in self._terms:
            if name == "x" and mono.x != 0:
                return True
            if name == "t" and mono.t != 0:
                return True
            if name == "phi" and mono.phi != 0:
                return True
            if name in THETA_BITS and mono.theta & THETA_BITS[name]:
                return True
        return False

    def theta_components(self) -> Dict[int, "SuperPolynomial"]:
        """Split ``p = sum_m p_m theta^m`` into theta-free coefficient polynomials."""
        parts: Dict[int, Dict[Monomial, Supernumber]] = {}
        for mono, coeff in self._terms.items():
            parts.setdefault(mono.theta, {})[mono._replace(theta=0)] = coeff
        return {m: SuperPolynomial(t, self.generators) for m, t in parts.items()}

    def evaluate(self, x, t, phi=None) -> Dict[int, np.ndarray]:
        """Coefficient arrays of shape ``(..., 2**N)`` per theta mask at points (x, t)."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast(x, t).shape
        algebra = get_algebra(self.generators)
        out: Dict[int, np.ndarray] = {}
        for mono, coeff in self._terms.items():
            if mono.phi and phi is None:
                raise ConfigurationError("Polynomial depends on Phi; supply a value to evaluate")
            weight = _power(x, mono.x, "x") * _power(t, mono.t, "t")
            if mono.phi:
                weight = weight * np.asarray(phi, dtype=float) ** mono.phi
            value = np.broadcast_to(weight, shape)[..., None] * coeff.coeffs
            out[mono.theta] = out.get(mono.theta, algebra.zeros(shape)) + value
        return out

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other) -> "SuperPolynomial":
        if isinstance(other, SuperPolynomial):
            if other.generators != self.generators:
                raise ConfigurationError("Mismatched coefficient rings")
            return other
        if isinstance(other, (Supernumber, int, float, np.floating, np.integer)):
            return SuperPolynomial.constant(other, self.generators)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        merged = dict(self._terms)
        for mono, coeff in other._terms.items():
            merged[mono] = merged[mono] + coeff if mono in merged else coeff
        return SuperPolynomial(merged, self.generators)

    __radd__ = __add__

    def __neg__(self):
        return SuperPolynomial({m: -c for m, c in self._terms.items()}, self.generators)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return sp_mul(self, other)

    def __rmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return sp_mul(other, self)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise DomainError("SuperPolynomial powers must be non-negative integers")
        result = SuperPolynomial.constant(1.0, self.generators)
        for _ in range(exponent):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, SuperPolynomial):
            return NotImplemented
        return self._terms.keys() == other._terms.keys() and all(
            self._terms[m] == other._terms[m] for m in self._terms)

    def __hash__(self):
        return hash(tuple(sorted((m, c) for m, c in self._terms.items())))

    def allclose(self, other: "SuperPolynomial", atol: float = 1e-12) -> bool:
        return (self - other).is_zero(atol)

    def __repr__(self) -> str:
        return f"SuperPolynomial({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, coeff in sorted(self._terms.items()):
            rendered = mono.render()
            parts.append(f"{coeff.to_literal()}·{rendered}" if rendered else f"{coeff.to_literal()}")
        return " + ".join(parts)


def _power(base: np.ndarray, exponent: Fraction, name: str) -> np.ndarray:
    if exponent == 0:
        return np.ones_like(base)
    if exponent.denominator != 1 and np.any(base <= 0):
        raise DomainError(f"{name}^{exponent} requires {name} > 0")
    if exponent < 0 and np.any(base == 0):
        raise DomainError(f"{name}^{exponent} undefined at {name} = 0")
    return np.power(base, float(exponent))


def _mul_term(m1: Monomial, c1: Supernumber, m2: Monomial, c2: Supernumber):
    sign = monomial_sign(m1.theta, m2.theta)
    if sign == 0:
        return None, None
    # moving c2 left across theta^m1
    if m1.theta_grade % 2:
        c2 = c2.grade_involution()
    coeff = c1 * c2
    if sign < 0:
        coeff = -coeff
    return Monomial(m1.x + m2.x, m1.t + m2.t, m1.theta | m2.theta, m1.phi + m2.phi), coeff


def sp_mul(p: SuperPolynomial, q: SuperPolynomial) -> SuperPolynomial:
    """Graded product with theta reordering and odd coefficients anticommuting past thetas."""
    if p.generators != q.generators:
        raise ConfigurationError("Mismatched coefficient rings")
    out: Dict[Monomial, Supernumber] = {}
    for m1, c1 in p._terms.items():
        for m2, c2 in q._terms.items():
            mono, coeff = _mul_term(m1, c1, m2, c2)
            if mono is None:
                continue
            out[mono] = out[mono] + coeff if mono in out else coeff
    return SuperPolynomial(out, p.generators)


def sp_deriv(p: SuperPolynomial, var: str) -> SuperPolynomial:
    """Partial derivative; odd derivatives act from the left with the graded sign rule."""
    out: Dict[Monomial, Supernumber] = {}
    if var in ("x", "t", "phi"):
        for mono, coeff in p._terms.items():
            power = getattr(mono, var)
            if power == 0:
                continue
            lowered = mono._replace(**{var: power - 1})
            out[lowered] = coeff * float(power)
    elif var in THETA_BITS:
        bit = THETA_BITS[var]
        for mono, coeff in p._terms.items():
            sign = theta_derivative_sign(mono.theta, bit)
            if sign == 0:
                continue
            # d/dtheta passes the coefficient first
            moved = coeff.grade_involution() * float(sign)
            out[mono._replace(theta=mono.theta ^ bit)] = moved
    else:
        raise ConfigurationError(f"Unknown superspace variable '{var}'")
    return SuperPolynomial(out, p.generators)


def sp_deriv_sequence(p: SuperPolynomial, variables: Iterable[str]) -> SuperPolynomial:
    """Apply derivatives in order, so ``['theta1', 'theta2']`` gives f_{theta1 theta2}."""
    for var in variables:
        p = sp_deriv(p, var)
    return p


def _real_power(image: SuperPolynomial, exponent: Fraction, name: str) -> SuperPolynomial:
    """Non-integer power of a single theta-free term with positive even coefficient."""
    terms = image.terms
    if len(terms) != 1:
        raise DomainError(f"Cannot raise a multi-term image of {name} to power {exponent}")
    (mono, coeff), = terms.items()
    if mono.theta or mono.phi:
        raise DomainError(f"Cannot raise a theta- or Phi-dependent image of {name} to power {exponent}")
    if parity_of(coeff) is not Parity.EVEN or coeff.body <= 0:
        raise DomainError(f"Image coefficient of {name} needs a positive even body for power {exponent}")
    scaled = gfunc("power", coeff, float(exponent))
    return SuperPolynomial({Monomial(mono.x * exponent, mono.t * exponent, 0, 0): scaled}, image.generators)


def _raise(image: SuperPolynomial, exponent, name: str) -> SuperPolynomial:
    exponent = _as_fraction(exponent)
    if exponent.denominator == 1 and exponent >= 0:
        return image ** int(exponent)
    return _real_power(image, exponent, name)


def sp_substitute(p: SuperPolynomial, mapping: Mapping[str, SuperPolynomial]) -> SuperPolynomial:
    """Simultaneous substitution of coordinates by polynomials of matching parity."""
    images: Dict[str, SuperPolynomial] = {}
    for name in VARIABLES:
        if name in mapping:
            image = mapping[name]
            if not isinstance(image, SuperPolynomial):
                image = SuperPolynomial.constant(image, p.generators)
            wanted = Parity.ODD if name in ODD_VARIABLES else Parity.EVEN
            got = image.parity
            if not image.is_zero() and got is not wanted:
                raise ParityError(f"Image of {name} must be {wanted}, got {got}")
            images[name] = image
        else:
            images[name] = SuperPolynomial.variable(name, p.generators)
    for name in mapping:
        if name not in VARIABLES:
            raise ConfigurationError(f"Unknown superspace variable '{name}'")

    result = SuperPolynomial.zero(p.generators)
    for mono, coeff in p._terms.items():
        term = SuperPolynomial.constant(coeff, p.generators)
        term = term * _raise(images["x"], mono.x, "x") * _raise(images["t"], mono.t, "t")
        term = term * images["phi"] ** mono.phi
        if mono.theta & 1:
            term = term * images["theta1"]
        if mono.theta & 2:
            term = term * images["theta2"]
        result = result + term
    return result


def random_polynomial(rng: np.random.Generator, parity: Parity = Parity.EVEN, degree: int = 3,
                      generators: int = DEFAULT_GENERATORS, scale: float = 1.0,
                      theta_masks: Iterable[int] = range(4), phi_degree: int = 0) -> SuperPolynomial:
    """Dense random polynomial of total x/t degree <= ``degree`` with homogeneous ``parity``."""
    terms: Dict[Monomial, Supernumber] = {}
    for mask in theta_masks:
        odd_theta = bin(mask).count("1") % 2 == 1
        flip = (parity is Parity.ODD) ^ odd_theta
        coeff_parity = Parity.ODD if flip else Parity.EVEN
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                for p in range(phi_degree + 1):
                    coeff = random_supernumber(rng, coeff_parity, generators, scale)
                    terms[Monomial(Fraction(a), Fraction(b), mask, p)] = coeff
    return SuperPolynomial(terms, generators)
