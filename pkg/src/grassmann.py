"""Finite real Grassmann ring with N anticommuting generators.

Elements are stored densely as coefficient vectors of length 2**N indexed by
a bitmask over the generators (bit i set <=> xi_{i+1} present).  The monomial
for a mask is the ordered product of its generators in ascending order.

``GrassmannAlgebra`` holds the multiplication tables and works on arrays of
shape ``(..., 2**N)`` so whole grids can be processed at once;
``Supernumber`` is the immutable scalar type built on top of it.
"""
from __future__ import annotations

import math
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DomainError, NotInvertible, ParityError

DEFAULT_GENERATORS = 4
BODY_TOLERANCE = 1e-12
_body_tolerance = BODY_TOLERANCE

FUNCTIONS = ("sinh", "cosh", "tanh", "exp", "sqrt", "power", "log")


class Parity(Enum):
    """Grade parity of a ring element."""

    EVEN = "Even"
    ODD = "Odd"
    MIXED = "Mixed"

    def __str__(self) -> str:
        return self.value


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def monomial_sign(left: int, right: int) -> int:
    """Sign of ``xi^left * xi^right`` after sorting generators; 0 if a generator repeats."""
    if left & right:
        return 0
    inversions = 0
    for p in range(left.bit_length()):
        if left >> p & 1:
            # generators of ``right`` below p must move past xi_p
            inversions += _popcount(right & ((1 << p) - 1))
    return -1 if inversions % 2 else 1


class GrassmannAlgebra:
    """Multiplication tables and array kernels for the ring with ``generators`` generators."""

    def __init__(self, generators: int = DEFAULT_GENERATORS):
        if generators < 0 or generators > 12:
            raise ConfigurationError(f"Unsupported generator count: {generators}")
        self.generators = generators
        self.dim = 1 << generators
        self.grades = np.array([_popcount(m) for m in range(self.dim)], dtype=int)
        self.odd_mask = self.grades % 2 == 1
        self.even_mask = ~self.odd_mask

        left, right, sign, out = [], [], [], []
        for i in range(self.dim):
            for j in range(self.dim):
                s = monomial_sign(i, j)
                if s:
                    left.append(i)
                    right.append(j)
                    sign.append(float(s))
                    out.append(i | j)
        self._left = np.array(left, dtype=int)
        self._right = np.array(right, dtype=int)
        self._sign = np.array(sign)
        scatter = np.zeros((len(out), self.dim))
        scatter[np.arange(len(out)), out] = 1.0
        self._scatter = scatter

    def __repr__(self) -> str:
        return f"GrassmannAlgebra(generators={self.generators})"

    # -- array kernels -------------------------------------------------

    def zeros(self, shape: Tuple[int, ...] = ()) -> np.ndarray:
        return np.zeros(tuple(shape) + (self.dim,))

    def scalar(self, values) -> np.ndarray:
        """Embed real values (any shape) as bodies."""
        values = np.asarray(values, dtype=float)
        out = self.zeros(values.shape)
        out[..., 0] = values
        return out

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Ring product of coefficient arrays, broadcasting over leading axes."""
        terms = a[..., self._left] * b[..., self._right] * self._sign
        return terms @ self._scatter

    def involution(self, a: np.ndarray) -> np.ndarray:
        """Grade involution: negate odd-grade coefficients."""
        return np.where(self.odd_mask, -a, a)

    def even_part(self, a: np.ndarray) -> np.ndarray:
        return np.where(self.even_mask, a, 0.0)

    def odd_part(self, a: np.ndarray) -> np.ndarray:
        return np.where(self.odd_mask, a, 0.0)

    def soul(self, a: np.ndarray) -> np.ndarray:
        s = np.array(a, dtype=float, copy=True)
        s[..., 0] = 0.0
        return s

    def inv(self, a: np.ndarray, tolerance: Optional[float] = None) -> np.ndarray:
        """Inverse via the terminating geometric series in soul/body."""
        tolerance = _body_tolerance if tolerance is None else tolerance
        body = a[..., 0]
        if np.any(np.abs(body) <= tolerance):
            raise NotInvertible("Element with vanishing body has no inverse")
        x = -self.soul(a) / body[..., None]
        total = self.scalar(np.ones_like(body))
        power = total
        for _ in range(self.generators):
            power = self.mul(power, x)
            if not np.any(power):
                break
            total = total + power
        return total / body[..., None]

    def func(self, name: str, a: np.ndarray, exponent: Optional[float] = None) -> np.ndarray:
        """Taylor extension of an analytic function to even elements."""
        if name not in FUNCTIONS:
            raise ConfigurationError(f"Unknown function '{name}'")
        if np.any(a[..., self.odd_mask] != 0.0):
            raise ParityError(f"{name} requires an even argument")
        if name == "tanh":
            return self.mul(self.func("sinh", a), self.inv(self.func("cosh", a)))
        if name == "sqrt":
            name, exponent = "power", 0.5
        body = a[..., 0]
        derivatives = _derivative_sequence(name, body, self.generators, exponent)
        soul = self.soul(a)
        result = self.scalar(derivatives[0])
        power = self.scalar(np.ones_like(body))
        for k in range(1, self.generators + 1):
            power = self.mul(power, soul)
            if not np.any(power):
                break
            result = result + power * (derivatives[k] / math.factorial(k))[..., None]
        return result

    def max_abs(self, a: np.ndarray) -> float:
        return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _derivative_sequence(name: str, body: np.ndarray, order: int,
                         exponent: Optional[float]) -> List[np.ndarray]:
    """Values f(body), f'(body), ..., f^(order)(body)."""
    if name == "exp":
        value = np.exp(body)
        return [value] * (order + 1)
    if name in ("sinh", "cosh"):
        s, c = np.sinh(body), np.cosh(body)
        first = [s, c] if name == "sinh" else [c, s]
        return [first[k % 2] for k in range(order + 1)]
    if name == "log":
        if np.any(body <= 0):
            raise DomainError("log requires a positive body")
        seq = [np.log(body)]
        for k in range(1, order + 1):
            seq.append((-1) ** (k - 1) * math.factorial(k - 1) / body ** k)
        return seq
    # power
    p = float(exponent if exponent is not None else 1.0)
    integral = float(p).is_integer()
    if not integral and np.any(body <= 0):
        raise DomainError(f"power {p} requires a positive body")
    if integral and p < 0 and np.any(body == 0):
        raise DomainError(f"power {p} undefined at zero body")
    seq = []
    falling = 1.0
    for k in range(order + 1):
        if k:
            falling *= p - (k - 1)
        if falling == 0.0:
            seq.append(np.zeros_like(body))
        else:
            seq.append(falling * np.power(body, p - k))
    return seq


@lru_cache(maxsize=None)
def get_algebra(generators: int = DEFAULT_GENERATORS) -> GrassmannAlgebra:
    """Shared algebra instance per generator count."""
    return GrassmannAlgebra(generators)


def set_body_tolerance(value: float) -> float:
    """Set the invertibility threshold used when no explicit tolerance is given; returns the old one."""
    global _body_tolerance
    if not value > 0:
        raise ConfigurationError(f"body tolerance must be positive, got {value}")
    previous, _body_tolerance = _body_tolerance, float(value)
    return previous


Number = Union[int, float]
Literal = Sequence[Sequence[Number]]


class Supernumber:
    """Immutable element of the Grassmann ring."""

    __slots__ = ("algebra", "_coeffs")

    def __init__(self, terms: Optional[Mapping[int, float]] = None,
                 generators: int = DEFAULT_GENERATORS):
        algebra = get_algebra(generators)
        coeffs = algebra.zeros()
        for mask, value in (terms or {}).items():
            if not 0 <= int(mask) < algebra.dim:
                raise ConfigurationError(f"Mask {mask} outside ring with {generators} generators")
            coeffs[int(mask)] += float(value)
        self._set(algebra, coeffs)

    def _set(self, algebra: GrassmannAlgebra, coeffs: np.ndarray) -> None:
        coeffs = np.array(coeffs, dtype=float, copy=True)
        coeffs.setflags(write=False)
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "_coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("Supernumber is immutable")

    # -- constructors --------------------------------------------------

    @classmethod
    def from_array(cls, coeffs: np.ndarray, algebra: Optional[GrassmannAlgebra] = None) -> "Supernumber":
        coeffs = np.asarray(coeffs, dtype=float)
        if algebra is None:
            generators = int(round(math.log2(coeffs.shape[-1])))
            algebra = get_algebra(generators)
        if coeffs.shape != (algebra.dim,):
            raise ConfigurationError(f"Coefficient vector of shape {coeffs.shape} does not fit {algebra}")
        obj = cls.__new__(cls)
        obj._set(algebra, coeffs)
        return obj

    @classmethod
    def scalar(cls, value: Number, generators: int = DEFAULT_GENERATORS) -> "Supernumber":
        return cls({0: value}, generators)

    @classmethod
    def generator(cls, index: int, generators: int = DEFAULT_GENERATORS) -> "Supernumber":
        """The generator xi_index (1-based)."""
        if not 1 <= index <= generators:
            raise ConfigurationError(f"Generator xi_{index} not in ring with {generators} generators")
        return cls({1 << (index - 1): 1.0}, generators)

    @classmethod
    def from_literal(cls, literal: Union[Literal, Number, None],
                     generators: int = DEFAULT_GENERATORS) -> "Supernumber":
        """Parse ``[[mask, coeff], ...]`` (or a bare number)."""
        if literal is None:
            return cls({}, generators)
        if isinstance(literal, (int, float)):
            return cls.scalar(literal, generators)
        terms: Dict[int, float] = {}
        try:
            for mask, value in literal:
                terms[int(mask)] = terms.get(int(mask), 0.0) + float(value)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Malformed Supernumber literal {literal!r}: {e}")
        return cls(terms, generators)

    # -- views ---------------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def generators(self) -> int:
        return self.algebra.generators

    @property
    def terms(self) -> Dict[int, float]:
        """Canonical sparse form: nonzero coefficients only."""
        return {int(m): float(c) for m, c in enumerate(self._coeffs) if c != 0.0}

    @property
    def body(self) -> float:
        return float(self._coeffs[0])

    @property
    def soul(self) -> "Supernumber":
        return self._new(self.algebra.soul(self._coeffs))

    @property
    def parity(self) -> Parity:
        return parity_of(self)

    def even_part(self) -> "Supernumber":
        return self._new(self.algebra.even_part(self._coeffs))

    def odd_part(self) -> "Supernumber":
        return self._new(self.algebra.odd_part(self._coeffs))

    def grade_involution(self) -> "Supernumber":
        return self._new(self.algebra.involution(self._coeffs))

    def is_zero(self) -> bool:
        return not np.any(self._coeffs)

    def max_abs(self) -> float:
        return self.algebra.max_abs(self._coeffs)

    def allclose(self, other: Union["Supernumber", Number], atol: float = 1e-12) -> bool:
        other = self._coerce(other)
        return bool(np.allclose(self._coeffs, other._coeffs, rtol=0.0, atol=atol))

    def to_literal(self) -> List[List[Number]]:
        return [[mask, value] for mask, value in sorted(self.terms.items())]

    # -- arithmetic ----------------------------------------------------

    def _new(self, coeffs: np.ndarray) -> "Supernumber":
        return Supernumber.from_array(coeffs, self.algebra)

    def _coerce(self, other) -> "Supernumber":
        if isinstance(other, Supernumber):
            if other.algebra is not self.algebra:
                raise ConfigurationError(
                    f"Mismatched rings: {self.generators} vs {other.generators} generators")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Supernumber.scalar(float(other), self.generators)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._new(self._coeffs + other._coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._new(self._coeffs - other._coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return self._new(-self._coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self._new(self._coeffs * float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._new(self.algebra.mul(self._coeffs, other._coeffs))

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self._new(self._coeffs * float(other))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            if other == 0:
                raise NotInvertible("Division by zero")
            return self._new(self._coeffs / float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * ginv(other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * ginv(self)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise DomainError("Supernumber powers must be non-negative integers; use gfunc('power')")
        result = Supernumber.scalar(1.0, self.generators)
        for _ in range(exponent):
            result = result * self
        return result

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = Supernumber.scalar(other, self.generators)
        if not isinstance(other, Supernumber):
            return NotImplemented
        return other.algebra is self.algebra and bool(np.array_equal(self._coeffs, other._coeffs))

    def __hash__(self):
        return hash((self.generators, self._coeffs.tobytes()))

    def __repr__(self) -> str:
        return f"Supernumber({self.to_literal()})"

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for mask, value in sorted(self.terms.items()):
            mono = "".join(f"ξ{i + 1}" for i in range(self.generators) if mask >> i & 1)
            if not mono:
                parts.append(f"{value:g}")
            elif value == 1.0:
                parts.append(mono)
            elif value == -1.0:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{value:g}{mono}")
        return " + ".join(parts).replace("+ -", "- ")


# -- module-level operations ------------------------------------------


def gadd(a: Supernumber, b: Supernumber) -> Supernumber:
    """Coefficient-wise sum; rings must agree."""
    if a.generators != b.generators:
        raise ConfigurationError(f"Mismatched rings: {a.generators} vs {b.generators} generators")
    return a + b


def gmul(a: Supernumber, b: Supernumber) -> Supernumber:
    """Graded ring product."""
    if a.generators != b.generators:
        raise ConfigurationError(f"Mismatched rings: {a.generators} vs {b.generators} generators")
    return a * b


def parity_of(a: Supernumber) -> Parity:
    """Even/Odd for homogeneous elements (zero counts as Even), Mixed otherwise."""
    coeffs = a.coeffs
    has_even = bool(np.any(coeffs[a.algebra.even_mask]))
    has_odd = bool(np.any(coeffs[a.algebra.odd_mask]))
    if has_even and has_odd:
        return Parity.MIXED
    return Parity.ODD if has_odd else Parity.EVEN


def ginv(a: Supernumber, tolerance: Optional[float] = None) -> Supernumber:
    """Multiplicative inverse; the body must be nonzero."""
    return a._new(a.algebra.inv(a.coeffs, tolerance))


def gfunc(name: str, a: Supernumber, exponent: Optional[float] = None) -> Supernumber:
    """Apply sinh, cosh, tanh, exp, sqrt, power or log to an even element."""
    parity = parity_of(a)
    if parity is not Parity.EVEN:
        raise ParityError(f"{name} requires an Even argument, got {parity}")
    return a._new(a.algebra.func(name, a.coeffs, exponent))


def random_supernumber(rng: np.random.Generator, parity: Parity = Parity.EVEN,
                       generators: int = DEFAULT_GENERATORS, scale: float = 1.0,
                       body: Optional[float] = None) -> Supernumber:
    """Random element with the requested parity, used by tests and sentinels."""
    algebra = get_algebra(generators)
    coeffs = rng.uniform(-scale, scale, algebra.dim)
    if parity is Parity.EVEN:
        coeffs = algebra.even_part(coeffs)
    elif parity is Parity.ODD:
        coeffs = algebra.odd_part(coeffs)
    if body is not None and parity is not Parity.ODD:
        coeffs[0] = body
    return Supernumber.from_array(coeffs, algebra)


def as_supernumbers(coeffs: np.ndarray, algebra: GrassmannAlgebra) -> List[Supernumber]:
    """Split an array of shape (n, dim) into Supernumbers."""
    return [Supernumber.from_array(row, algebra) for row in np.asarray(coeffs)]


def stack(values: Iterable[Supernumber]) -> np.ndarray:
    """Stack Supernumbers into an array of shape (n, dim)."""
    return np.array([v.coeffs for v in values])
