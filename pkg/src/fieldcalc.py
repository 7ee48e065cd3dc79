"""Superfield component calculus.

A superfield is stored theta-left: ``Phi = a0 + theta1 a1 + theta2 a2 + theta1 theta2 a12``
with component functions of (x, t) returning coefficient arrays of shape
``(..., 2**N)``.  Index ``i`` of a component tuple equals its theta mask.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalError, ParityError
from .grassmann import (DEFAULT_GENERATORS, GrassmannAlgebra, Parity, Supernumber,
                        get_algebra, parity_of)
from .superspace import SuperPolynomial, random_polynomial, sp_deriv

FD_STEP = 1e-5

ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FieldPoint:
    x: float
    t: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.t)):
            raise DomainError(f"Non-finite field point ({self.x}, {self.t})")


# -- theta expansions ---------------------------------------------------


class ThetaExpansion:
    """Pointwise element of Lambda[theta1, theta2] in theta-left components."""

    __slots__ = ("algebra", "c")

    def __init__(self, c: Sequence[np.ndarray], algebra: GrassmannAlgebra):
        if len(c) != 4:
            raise ConfigurationError("A theta expansion has exactly four components")
        self.algebra = algebra
        self.c = tuple(np.asarray(ci, dtype=float) for ci in c)

    @classmethod
    def zeros(cls, shape, algebra: GrassmannAlgebra) -> "ThetaExpansion":
        z = algebra.zeros(shape)
        return cls((z, z, z, z), algebra)

    @classmethod
    def scalar(cls, values: np.ndarray, algebra: GrassmannAlgebra) -> "ThetaExpansion":
        """Theta-free expansion with the given coefficient arrays (or real values)."""
        values = np.asarray(values, dtype=float)
        if values.shape[-1:] != (algebra.dim,):
            values = algebra.scalar(values)
        z = np.zeros_like(values)
        return cls((values, z, z, z), algebra)

    @classmethod
    def from_polynomial(cls, poly: SuperPolynomial, x, t, nx: int = 0, nt: int = 0) -> "ThetaExpansion":
        """Evaluate a polynomial (or its x/t derivatives) as a theta-left expansion."""
        algebra = get_algebra(poly.generators)
        for _ in range(nx):
            poly = sp_deriv(poly, "x")
        for _ in range(nt):
            poly = sp_deriv(poly, "t")
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape
        values = poly.evaluate(x, t)
        comps = []
        for mask in range(4):
            arr = values.get(mask, algebra.zeros(shape))
            # c theta^m = theta^m c' with c' involuted once per theta crossed
            if bin(mask).count("1") % 2:
                arr = algebra.involution(arr)
            comps.append(arr)
        return cls(comps, algebra)

    @property
    def shape(self):
        return self.c[0].shape[:-1]

    def _check(self, other: "ThetaExpansion") -> None:
        if other.algebra is not self.algebra:
            raise ConfigurationError("Mismatched coefficient rings")

    def __add__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        self._check(other)
        return ThetaExpansion([a + b for a, b in zip(self.c, other.c)], self.algebra)

    __radd__ = __add__

    def __sub__(self, other):
        self._check(other)
        return ThetaExpansion([a - b for a, b in zip(self.c, other.c)], self.algebra)

    def __neg__(self):
        return ThetaExpansion([-a for a in self.c], self.algebra)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return ThetaExpansion([a * float(other) for a in self.c], self.algebra)
        if isinstance(other, Supernumber):
            return self * ThetaExpansion.scalar(np.broadcast_to(other.coeffs, self.c[0].shape), self.algebra)
        self._check(other)
        mul, inv = self.algebra.mul, self.algebra.involution
        a0, a1, a2, a12 = self.c
        b0, b1, b2, b12 = other.c
        a0h = inv(a0)
        return ThetaExpansion((
            mul(a0, b0),
            mul(a0h, b1) + mul(a1, b0),
            mul(a0h, b2) + mul(a2, b0),
            mul(a0, b12) + mul(inv(a1), b2) - mul(inv(a2), b1) + mul(a12, b0),
        ), self.algebra)

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return self * other
        if isinstance(other, Supernumber):
            return ThetaExpansion.scalar(np.broadcast_to(other.coeffs, self.c[0].shape), self.algebra) * self
        return NotImplemented

    def scale(self, weights: np.ndarray) -> "ThetaExpansion":
        """Multiply by a real-valued array (broadcast over points)."""
        w = np.asarray(weights, dtype=float)[..., None]
        return ThetaExpansion([a * w for a in self.c], self.algebra)

    def d_theta(self, which: int) -> "ThetaExpansion":
        """Left derivative with respect to theta1 or theta2."""
        a0, a1, a2, a12 = self.c
        z = np.zeros_like(a0)
        if which == 1:
            return ThetaExpansion((a1, z, a12, z), self.algebra)
        if which == 2:
            return ThetaExpansion((a2, -a12, z, z), self.algebra)
        raise ConfigurationError(f"No theta{which}")

    def theta_mul(self, which: int) -> "ThetaExpansion":
        """Left multiplication by theta1 or theta2."""
        a0, a1, a2, a12 = self.c
        z = np.zeros_like(a0)
        if which == 1:
            return ThetaExpansion((z, a0, z, a2), self.algebra)
        if which == 2:
            return ThetaExpansion((z, z, a0, -a1), self.algebra)
        raise ConfigurationError(f"No theta{which}")

    def sinh(self) -> "ThetaExpansion":
        return ThetaExpansion(_sinh_arrays(self.algebra, *self.c), self.algebra)

    def component(self, mask: int) -> np.ndarray:
        return self.c[mask]

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in self.c)

    def at(self, index) -> Tuple[Supernumber, ...]:
        """Components at one point as Supernumbers."""
        return tuple(Supernumber.from_array(a[index], self.algebra) for a in self.c)


def _sinh_arrays(algebra: GrassmannAlgebra, a0, a1, a2, a12):
    sh = algebra.func("sinh", a0)
    ch = algebra.func("cosh", a0)
    mul = algebra.mul
    return (sh, mul(a1, ch), mul(a2, ch), mul(a12, ch) - mul(mul(a1, a2), sh))


def sinh_superfield(components: Sequence[Supernumber]) -> Tuple[Supernumber, ...]:
    """sinh of ``alpha + theta1 c1 + theta2 c2 + theta1 theta2 c12`` in components."""
    alpha, c1, c2, c12 = components
    expected = (Parity.EVEN, Parity.ODD, Parity.ODD, Parity.EVEN)
    for name, value, parity in zip(("alpha", "c1", "c2", "c12"), components, expected):
        if not value.is_zero() and parity_of(value) is not parity:
            raise ParityError(f"{name} must be {parity}, got {parity_of(value)}")
    algebra = alpha.algebra
    out = _sinh_arrays(algebra, alpha.coeffs, c1.coeffs, c2.coeffs, c12.coeffs)
    return tuple(Supernumber.from_array(o, algebra) for o in out)


# -- components ---------------------------------------------------------


class Component:
    """One theta-component of a superfield with analytic derivatives where known."""

    def __init__(self, algebra: GrassmannAlgebra, fd_step: float = FD_STEP):
        self.algebra = algebra
        self.fd_step = fd_step

    def has_analytic(self, nx: int, nt: int) -> bool:
        raise NotImplementedError

    def _analytic(self, nx: int, nt: int, x, t) -> np.ndarray:
        raise NotImplementedError

    def _base_order(self, nx: int, nt: int) -> Tuple[int, int]:
        """Highest registered order below (nx, nt)."""
        best = (0, 0)
        for a in range(nx + 1):
            for b in range(nt + 1):
                if self.has_analytic(a, b) and a + b > sum(best):
                    best = (a, b)
        return best

    def derivative(self, nx: int, nt: int, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.has_analytic(nx, nt):
            out = self._analytic(nx, nt, x, t)
        else:
            a, b = self._base_order(nx, nt)
            fn: ArrayFn = lambda xx, tt, a=a, b=b: self._analytic(a, b, xx, tt)
            for _ in range(nx - a):
                fn = _richardson(fn, "x", self.fd_step)
            for _ in range(nt - b):
                fn = _richardson(fn, "t", self.fd_step)
            out = fn(x, t)
        shape = np.broadcast(x, t).shape + (self.algebra.dim,)
        out = np.broadcast_to(out, shape)
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"Non-finite derivative of order ({nx}, {nt})")
        return out


def _richardson(fn: ArrayFn, axis: str, h: float) -> ArrayFn:
    """Central difference along ``axis`` with one Richardson extrapolation."""

    def central(x, t, step):
        if axis == "x":
            return (fn(x + step, t) - fn(x - step, t)) / (2 * step)
        return (fn(x, t + step) - fn(x, t - step)) / (2 * step)

    def derivative(x, t):
        return (4 * central(x, t, h / 2) - central(x, t, h)) / 3

    return derivative


class FunctionComponent(Component):
    """Component given by a callable plus an optional registry of analytic derivatives."""

    def __init__(self, func: ArrayFn, algebra: GrassmannAlgebra,
                 derivatives: Optional[Dict[Tuple[int, int], ArrayFn]] = None,
                 factory: Optional[Callable[[int, int], ArrayFn]] = None,
                 fd_step: float = FD_STEP):
        super().__init__(algebra, fd_step)
        self._registry: Dict[Tuple[int, int], ArrayFn] = {(0, 0): func}
        self._registry.update(derivatives or {})
        self._factory = factory

    def has_analytic(self, nx: int, nt: int) -> bool:
        return self._factory is not None or (nx, nt) in self._registry

    def _analytic(self, nx, nt, x, t):
        fn = self._registry.get((nx, nt))
        if fn is None:
            fn = self._factory(nx, nt)
            self._registry[(nx, nt)] = fn
        return np.asarray(fn(x, t), dtype=float)


class LinearComponent(Component):
    """Sum of ``factor * parent^(dx, dt)`` with constant left factors."""

    def __init__(self, terms: Sequence[Tuple[Union[float, Supernumber], Component, int, int]],
                 algebra: GrassmannAlgebra):
        self.terms = list(terms)
        super().__init__(algebra, min((parent.fd_step for _, parent, _, _ in self.terms), default=FD_STEP))

    def has_analytic(self, nx, nt):
        return all(parent.has_analytic(nx + dx, nt + dt) for _, parent, dx, dt in self.terms)

    def derivative(self, nx, nt, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        total = self.algebra.zeros(np.broadcast(x, t).shape)
        for factor, parent, dx, dt in self.terms:
            value = parent.derivative(nx + dx, nt + dt, x, t)
            if isinstance(factor, Supernumber):
                total = total + self.algebra.mul(factor.coeffs, value)
            else:
                total = total + float(factor) * value
        return total


class AffineComponent(Component):
    """``factor * parent(ax*x + bx, at*t + bt)`` with chain-rule derivatives."""

    def __init__(self, parent: Component, factor: float, ax: float, bx: float, at: float, bt: float):
        super().__init__(parent.algebra, parent.fd_step)
        self.parent = parent
        self.factor, self.ax, self.bx, self.at, self.bt = factor, ax, bx, at, bt

    def has_analytic(self, nx, nt):
        return self.parent.has_analytic(nx, nt)

    def derivative(self, nx, nt, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        inner = self.parent.derivative(nx, nt, self.ax * x + self.bx, self.at * t + self.bt)
        return inner * (self.factor * self.ax ** nx * self.at ** nt)


class ZeroComponent(Component):
    def has_analytic(self, nx, nt):
        return True

    def _analytic(self, nx, nt, x, t):
        return self.algebra.zeros(np.broadcast(x, t).shape)


class ConstantComponent(Component):
    def __init__(self, value: Supernumber):
        super().__init__(value.algebra)
        self.value = value

    def has_analytic(self, nx, nt):
        return True

    def _analytic(self, nx, nt, x, t):
        shape = np.broadcast(x, t).shape
        if nx or nt:
            return self.algebra.zeros(shape)
        return np.broadcast_to(self.value.coeffs, shape + (self.algebra.dim,)).copy()


# -- superfields ----------------------------------------------------------

COMPONENT_PARITY = {Parity.EVEN: (Parity.EVEN, Parity.ODD, Parity.ODD, Parity.EVEN),
                    Parity.ODD: (Parity.ODD, Parity.EVEN, Parity.EVEN, Parity.ODD)}


class Superfield:
    """Four theta-left components with a declared overall parity."""

    def __init__(self, components: Sequence[Component], parity: Parity = Parity.EVEN,
                 algebra: Optional[GrassmannAlgebra] = None):
        if len(components) != 4:
            raise ConfigurationError("A superfield has exactly four components")
        if parity is Parity.MIXED:
            raise ParityError("Superfields must be homogeneous")
        self.components = tuple(components)
        self.parity = parity
        self.algebra = algebra or components[0].algebra

    @property
    def generators(self) -> int:
        return self.algebra.generators

    # constructors

    @classmethod
    def from_functions(cls, funcs: Sequence[ArrayFn], generators: int = DEFAULT_GENERATORS,
                       derivatives: Optional[Sequence[Dict[Tuple[int, int], ArrayFn]]] = None,
                       parity: Parity = Parity.EVEN) -> "Superfield":
        algebra = get_algebra(generators)
        derivatives = derivatives or [None] * 4
        comps = [FunctionComponent(f, algebra, d) for f, d in zip(funcs, derivatives)]
        return cls(comps, parity, algebra)

    @classmethod
    def from_polynomial(cls, poly: SuperPolynomial) -> "Superfield":
        """Exact field from a theta-polynomial; analytic derivatives of every order."""
        if poly.depends_on("phi"):
            raise ConfigurationError("A superfield polynomial cannot depend on Phi")
        parity = poly.parity
        if parity is Parity.MIXED:
            raise ParityError("Superfield polynomial must be homogeneous")
        algebra = get_algebra(poly.generators)

        def factory_for(mask):
            def factory(nx, nt):
                return lambda x, t: ThetaExpansion.from_polynomial(poly, x, t, nx, nt).c[mask]
            return factory

        comps = [FunctionComponent(factory_for(m)(0, 0), algebra, factory=factory_for(m)) for m in range(4)]
        return cls(comps, parity, algebra)

    @classmethod
    def constant(cls, values: Sequence[Supernumber], parity: Parity = Parity.EVEN) -> "Superfield":
        return cls([ConstantComponent(v) for v in values], parity, values[0].algebra)

    @classmethod
    def zero(cls, generators: int = DEFAULT_GENERATORS) -> "Superfield":
        algebra = get_algebra(generators)
        return cls([ZeroComponent(algebra) for _ in range(4)], Parity.EVEN, algebra)

    # evaluation

    def expansion(self, x, t, nx: int = 0, nt: int = 0) -> ThetaExpansion:
        return ThetaExpansion([c.derivative(nx, nt, x, t) for c in self.components], self.algebra)

    def evaluate(self, x, t) -> ThetaExpansion:
        """Values at (x, t) with component parities enforced."""
        values = self.expansion(x, t)
        for mask, (arr, parity) in enumerate(zip(values.c, COMPONENT_PARITY[self.parity])):
            wrong = self.algebra.odd_mask if parity is Parity.EVEN else self.algebra.even_mask
            if np.any(arr[..., wrong] != 0.0):
                raise ParityError(f"Component {mask} of a {self.parity} superfield is not {parity}")
        return values

    def is_analytic(self, orders: Sequence[Tuple[int, int]]) -> bool:
        return all(c.has_analytic(nx, nt) for c in self.components for nx, nt in orders)

    def scheme(self, orders: Sequence[Tuple[int, int]]) -> str:
        if self.is_analytic(orders):
            return "analytic"
        return f"central-difference+richardson(h={self.components[0].fd_step:g})"

    # transformations

    def pullback(self, flow) -> "Superfield":
        """Field composed with a finite flow (``flow.name`` in Px, Pt, L, Qx, Qt)."""
        name, param = flow.name, flow.param
        a0, a1, a2, a12 = self.components
        if name in ("Qx", "Qt"):
            if not isinstance(param, Supernumber) or (not param.is_zero() and param.parity is not Parity.ODD):
                raise ParityError(f"{name} flow needs an odd parameter")
            eta = param
            if name == "Qx":
                comps = (LinearComponent([(1.0, a0, 0, 0), (eta, a1, 0, 0)], self.algebra),
                         LinearComponent([(1.0, a1, 0, 0), (eta, a0, 1, 0)], self.algebra),
                         LinearComponent([(1.0, a2, 0, 0), (-eta, a12, 0, 0)], self.algebra),
                         LinearComponent([(1.0, a12, 0, 0), (-eta, a2, 1, 0)], self.algebra))
            else:
                comps = (LinearComponent([(1.0, a0, 0, 0), (eta, a2, 0, 0)], self.algebra),
                         LinearComponent([(1.0, a1, 0, 0), (eta, a12, 0, 0)], self.algebra),
                         LinearComponent([(1.0, a2, 0, 0), (-eta, a0, 0, 1)], self.algebra),
                         LinearComponent([(1.0, a12, 0, 0), (-eta, a1, 0, 1)], self.algebra))
            return Superfield(comps, self.parity, self.algebra)

        s = _real_parameter(param, name)
        if name == "Px":
            comps = [AffineComponent(c, 1.0, 1.0, s, 1.0, 0.0) for c in self.components]
        elif name == "Pt":
            comps = [AffineComponent(c, 1.0, 1.0, 0.0, 1.0, s) for c in self.components]
        elif name == "L":
            ex, et = np.exp(-2 * s), np.exp(2 * s)
            factors = (1.0, np.exp(-s), np.exp(s), 1.0)
            comps = [AffineComponent(c, f, ex, 0.0, et, 0.0) for c, f in zip(self.components, factors)]
        else:
            raise ConfigurationError(f"Unknown flow generator '{name}'")
        return Superfield(comps, self.parity, self.algebra)


def _real_parameter(param, name: str) -> float:
    if isinstance(param, Supernumber):
        if not param.soul.is_zero():
            raise DomainError(f"{name} pullback takes a real parameter")
        return param.body
    return float(param)


# -- operators -----------------------------------------------------------

# new component i = sum of factor * component[j] differentiated (dx, dt)
OPERATORS: Dict[str, Tuple[Tuple[Tuple[float, int, int, int], ...], ...]] = {
    "Dx": (((1, 1, 0, 0),), ((1, 0, 1, 0),), ((1, 3, 0, 0),), ((1, 2, 1, 0),)),
    "Dt": (((1, 2, 0, 0),), ((-1, 3, 0, 0),), ((-1, 0, 0, 1),), ((1, 1, 0, 1),)),
    "Qx": (((1, 1, 0, 0),), ((-1, 0, 1, 0),), ((1, 3, 0, 0),), ((-1, 2, 1, 0),)),
    "Qt": (((1, 2, 0, 0),), ((-1, 3, 0, 0),), ((1, 0, 0, 1),), ((-1, 1, 0, 1),)),
    "dx": tuple(((1, i, 1, 0),) for i in range(4)),
    "dt": tuple(((1, i, 0, 1),) for i in range(4)),
}
ODD_OPERATORS = ("Dx", "Dt", "Qx", "Qt")


def apply_operator(phi: Superfield, which: str) -> Superfield:
    if which not in OPERATORS:
        raise ConfigurationError(f"Unknown operator '{which}'")
    comps = [LinearComponent([(f, phi.components[j], dx, dt) for f, j, dx, dt in row], phi.algebra)
             for row in OPERATORS[which]]
    parity = phi.parity
    if which in ODD_OPERATORS:
        parity = Parity.ODD if parity is Parity.EVEN else Parity.EVEN
    return Superfield(comps, parity, phi.algebra)


def apply_D(phi: Superfield, which: str) -> Superfield:
    """Covariant derivative Dx = d/dtheta1 + theta1 d/dx or Dt = d/dtheta2 - theta2 d/dt."""
    if which not in ("Dx", "Dt"):
        raise ConfigurationError(f"Covariant derivative must be Dx or Dt, got '{which}'")
    return apply_operator(phi, which)


def apply_Q(phi: Superfield, which: str) -> Superfield:
    """Supersymmetry generator Qx = d/dtheta1 - theta1 d/dx or Qt = d/dtheta2 + theta2 d/dt."""
    if which not in ("Qx", "Qt"):
        raise ConfigurationError(f"Supersymmetry operator must be Qx or Qt, got '{which}'")
    return apply_operator(phi, which)


def anticommutator(phi: Superfield, first: str, second: str) -> Superfield:
    """{A, B} Phi = A(B Phi) + B(A Phi) for odd operators."""
    ab = apply_operator(apply_operator(phi, second), first)
    ba = apply_operator(apply_operator(phi, first), second)
    comps = [LinearComponent([(1.0, p, 0, 0), (1.0, q, 0, 0)], phi.algebra)
             for p, q in zip(ab.components, ba.components)]
    return Superfield(comps, phi.parity, phi.algebra)


# {first, second} = factor * op; zero when op is None
ANTICOMMUTATORS: Dict[Tuple[str, str], Tuple[float, Optional[str]]] = {
    ("Dx", "Dx"): (2.0, "dx"),
    ("Dt", "Dt"): (-2.0, "dt"),
    ("Qx", "Qx"): (-2.0, "dx"),
    ("Qt", "Qt"): (2.0, "dt"),
    ("Dx", "Dt"): (0.0, None),
    ("Qx", "Qt"): (0.0, None),
    ("Dx", "Qx"): (0.0, None),
    ("Dx", "Qt"): (0.0, None),
    ("Dt", "Qx"): (0.0, None),
    ("Dt", "Qt"): (0.0, None),
}


@dataclass
class OperatorCheck:
    first: str
    second: str
    expected: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def to_dict(self) -> Dict:
        return {"pair": f"{{{self.first},{self.second}}}", "expected": self.expected,
                "max_error": self.max_error, "pass": self.passed}


def verify_operator_algebra(rng: np.random.Generator, samples: int = 3,
                            generators: int = DEFAULT_GENERATORS,
                            tolerance: float = 1e-9) -> List[OperatorCheck]:
    """Anticommutators of Dx, Dt, Qx, Qt on random polynomial superfields."""
    x = rng.uniform(-1.0, 1.0, 8)
    t = rng.uniform(-1.0, 1.0, 8)
    fields = [Superfield.from_polynomial(random_polynomial(rng, Parity.EVEN, 3, generators))
              for _ in range(samples)]
    checks = []
    for (first, second), (factor, op) in ANTICOMMUTATORS.items():
        worst = 0.0
        for phi in fields:
            got = anticommutator(phi, first, second).expansion(x, t)
            if op is not None:
                got = got - apply_operator(phi, op).expansion(x, t) * factor
            worst = max(worst, got.max_abs())
        expected = f"{factor:g}{op}" if op else "0"
        checks.append(OperatorCheck(first, second, expected, worst, tolerance))
    return checks


# -- residuals -------------------------------------------------------------

SHG_ORDERS = ((0, 0), (0, 1), (1, 0), (1, 1))
SKDV_ORDERS = ((0, 0), (1, 0), (2, 0), (3, 0), (0, 1))


def shg_components(phi: Superfield, x, t) -> ThetaExpansion:
    """Theta components of -theta1 theta2 Phi_xt + theta2 Phi_t,theta1 + theta1 Phi_x,theta2 - Phi_theta1theta2 - sinh Phi."""
    algebra = phi.algebra
    a0, a1, a2, a12 = phi.evaluate(x, t).c
    c1, c2 = phi.components[1], phi.components[2]
    a0_xt = phi.components[0].derivative(1, 1, x, t)
    a1_t = c1.derivative(0, 1, x, t)
    a2_x = c2.derivative(1, 0, x, t)
    sh, ch = algebra.func("sinh", a0), algebra.func("cosh", a0)
    mul = algebra.mul
    return ThetaExpansion((
        -a12 - sh,
        a2_x - mul(a1, ch),
        a1_t - mul(a2, ch),
        -a0_xt - mul(a12, ch) + mul(mul(a1, a2), sh),
    ), algebra)


def shg_components_literal(phi: Superfield, x, t) -> ThetaExpansion:
    """Same left side assembled term by term from theta expansions."""
    value = phi.evaluate(x, t)
    phi_xt = phi.expansion(x, t, 1, 1)
    phi_t = phi.expansion(x, t, 0, 1)
    phi_x = phi.expansion(x, t, 1, 0)
    return (-(phi_xt.theta_mul(2).theta_mul(1))
            + phi_t.d_theta(1).theta_mul(2)
            + phi_x.d_theta(2).theta_mul(1)
            - value.d_theta(1).d_theta(2)
            - value.sinh())


def shg_residual(phi: Superfield, pt: FieldPoint) -> Tuple[Supernumber, ...]:
    """Four theta-components of the sinh-Gordon left side at one point."""
    return shg_components(phi, np.asarray(pt.x), np.asarray(pt.t)).at(())


def skdv_components(A: Superfield, x, t, a: float) -> ThetaExpansion:
    """Theta components of the N=2 super-KdV left side."""
    A0 = A.evaluate(x, t)
    Ax = A.expansion(x, t, 1, 0)
    Axx = A.expansion(x, t, 2, 0)
    Axxx = A.expansion(x, t, 3, 0)
    At = A.expansion(x, t, 0, 1)

    def th(e, which):
        return e.theta_mul(which)

    def d(e, *which):
        for w in which:
            e = e.d_theta(w)
        return e

    out = At + Axxx
    out = out - th(th(Ax * Axx, 2), 1) * (3 * a)
    out = out - th(A0 * d(Axx, 2), 1) * (a + 2)
    out = out - (th(th(A0 * Axxx, 2), 1) - th(A0 * d(Axx, 1), 2)) * (a + 2)
    out = out + th(Ax * d(Ax, 1), 2) * (2 * a + 1)
    out = out + (Ax * d(A0, 1, 2) + A0 * d(Ax, 1, 2)) * (a + 2)
    out = out - th(Ax * d(Ax, 2), 1) * (2 * a + 1)
    out = out - (th(d(A0, 2) * Axx, 1) - th(d(A0, 1) * Axx, 2)
                 + d(A0, 1) * d(Ax, 2) - d(A0, 2) * d(Ax, 1)) * (a - 1)
    out = out - A0 * A0 * Ax * (3 * a)
    return out


def skdv_residual(A: Superfield, pt: FieldPoint, a: float) -> Tuple[Supernumber, ...]:
    """Four theta-components of the super-KdV left side at one point."""
    return skdv_components(A, np.asarray(pt.x), np.asarray(pt.t), float(a)).at(())


# -- grid reports ----------------------------------------------------------


@dataclass
class ComponentResidual:
    theta_mask: int
    max_abs: float
    argmax_point: Tuple[float, float]
    per_grassmann_monomial: Dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "theta_mask": self.theta_mask,
            "max_abs": self.max_abs,
            "argmax_point": list(self.argmax_point),
            "per_grassmann_monomial": {str(m): v for m, v in self.per_grassmann_monomial.items()},
        }


@dataclass
class ResidualReport:
    grid: Dict
    scheme: str
    components: List[ComponentResidual]
    tolerance: Optional[float] = None

    @property
    def max_abs(self) -> float:
        return max((c.max_abs for c in self.components), default=0.0)

    @property
    def passed(self) -> bool:
        return self.tolerance is not None and self.max_abs < self.tolerance

    def failures(self) -> List[ComponentResidual]:
        if self.tolerance is None:
            return []
        return [c for c in self.components if c.max_abs >= self.tolerance]

    def to_dict(self) -> Dict:
        out = {"grid": self.grid, "scheme": self.scheme,
               "components": [c.to_dict() for c in self.components],
               "max_abs": self.max_abs}
        if self.tolerance is not None:
            out["tolerance"] = self.tolerance
            out["passed"] = self.passed
        return out


def build_report(residual: ThetaExpansion, x: np.ndarray, t: np.ndarray, grid: Dict,
                 scheme: str, tolerance: Optional[float] = None) -> ResidualReport:
    """Reduce a residual expansion over a grid to per-component maxima."""
    comps = []
    for mask, arr in enumerate(residual.c):
        mags = np.abs(arr)
        flat = mags.reshape(-1, mags.shape[-1])
        pointwise = flat.max(axis=1) if flat.size else np.zeros(0)
        idx = int(np.argmax(pointwise)) if pointwise.size else 0
        xs, ts = np.broadcast_arrays(x, t)
        point = (float(xs.reshape(-1)[idx]), float(ts.reshape(-1)[idx])) if xs.size else (0.0, 0.0)
        per = {int(m): float(v) for m, v in enumerate(flat.max(axis=0)) if v > 0.0} if flat.size else {}
        comps.append(ComponentResidual(mask, float(pointwise.max()) if pointwise.size else 0.0, point, per))
    return ResidualReport(grid, scheme, comps, tolerance)


def residual_on_grid(phi: Superfield, window, equation: str = "shg", a: float = 1.0,
                     threads: int = 1, tolerance: Optional[float] = None) -> ResidualReport:
    """Evaluate a residual over ``window`` (a config.Window), row blocks split across threads."""
    X, T = window.mesh()
    if equation == "shg":
        fn, orders = (lambda xx, tt: shg_components(phi, xx, tt)), SHG_ORDERS
    elif equation == "skdv":
        fn, orders = (lambda xx, tt: skdv_components(phi, xx, tt, a)), SKDV_ORDERS
    else:
        raise ConfigurationError(f"Unknown equation '{equation}'")

    blocks = np.array_split(np.arange(X.shape[0]), max(1, min(threads, X.shape[0])))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda rows: fn(X[rows], T[rows]), blocks))
    else:
        parts = [fn(X[rows], T[rows]) for rows in blocks]
    residual = ThetaExpansion([np.concatenate([p.c[m] for p in parts], axis=0) for m in range(4)],
                              phi.algebra)
    return build_report(residual, X, T, window.to_dict(), phi.scheme(orders), tolerance)
