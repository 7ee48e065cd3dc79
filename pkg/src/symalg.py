"""Super Lie algebra of point symmetries.

Vector fields ``v = X d/dx + T d/dt + R1 d/dtheta1 + R2 d/dtheta2 + F d/dPhi``
carry SuperPolynomial coefficients and act on polynomials as graded
derivations (coefficients on the left).  Brackets are computed on coordinate
functions: ``[X, Y]^z = X(Y^z) - (-1)^{|X||Y|} Y(X^z)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, NotReducible, ParityError
from .grassmann import DEFAULT_GENERATORS, Parity, Supernumber, parity_of
from .superspace import (EVEN_VARIABLES, VARIABLES, Monomial, SuperPolynomial, sp_deriv,
                         sp_substitute)

ANNIHILATION_ATOL = 1e-12

Scalar = Union[int, float, Supernumber]


def _flip(parity: Parity) -> Parity:
    return Parity.ODD if parity is Parity.EVEN else Parity.EVEN


class SuperVectorField:
    """Homogeneous vector field on (x, t, theta1, theta2, Phi)."""

    __slots__ = ("coeffs", "parity", "name", "generators")

    def __init__(self, coeffs: Mapping[str, SuperPolynomial], parity: Parity = Parity.EVEN,
                 name: str = "", generators: int = DEFAULT_GENERATORS):
        if parity is Parity.MIXED:
            raise ParityError("Vector fields must have a homogeneous parity")
        unknown = set(coeffs) - set(VARIABLES)
        if unknown:
            raise ConfigurationError(f"Unknown coordinates {sorted(unknown)}")
        clean = {}
        for var in VARIABLES:
            poly = coeffs.get(var)
            if poly is None:
                poly = SuperPolynomial.zero(generators)
            if poly.generators != generators:
                raise ConfigurationError("Mismatched coefficient rings")
            if not poly.is_zero():
                wanted = parity if var in EVEN_VARIABLES else _flip(parity)
                if poly.parity is not wanted:
                    raise ParityError(
                        f"{parity} field needs a {wanted} coefficient on d/d{var}, got {poly.parity}")
            clean[var] = poly
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "parity", parity)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "generators", generators)

    def __setattr__(self, name, value):
        raise AttributeError("SuperVectorField is immutable")

    def coeff(self, var: str) -> SuperPolynomial:
        return self.coeffs[var]

    def apply(self, p: SuperPolynomial) -> SuperPolynomial:
        """Action on a polynomial as a derivation."""
        out = SuperPolynomial.zero(self.generators)
        for var, coeff in self.coeffs.items():
            if coeff.is_zero():
                continue
            out = out + coeff * sp_deriv(p, var)
        return out

    def is_zero(self, atol: float = 0.0) -> bool:
        return all(c.is_zero(atol) for c in self.coeffs.values())

    def allclose(self, other: "SuperVectorField", atol: float = 1e-12) -> bool:
        return all(self.coeffs[v].allclose(other.coeffs[v], atol) for v in VARIABLES)

    def renamed(self, name: str) -> "SuperVectorField":
        return SuperVectorField(self.coeffs, self.parity, name, self.generators)

    # linear combinations

    def __add__(self, other: "SuperVectorField") -> "SuperVectorField":
        if not isinstance(other, SuperVectorField):
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if other.parity is not self.parity:
            raise ParityError(f"Cannot add {self.parity} and {other.parity} vector fields")
        coeffs = {v: self.coeffs[v] + other.coeffs[v] for v in VARIABLES}
        return SuperVectorField(coeffs, self.parity, "", self.generators)

    def __neg__(self) -> "SuperVectorField":
        return SuperVectorField({v: -c for v, c in self.coeffs.items()}, self.parity,
                                f"-{self.name}" if self.name else "", self.generators)

    def __sub__(self, other: "SuperVectorField") -> "SuperVectorField":
        return self + (-other)

    def __rmul__(self, scalar: Scalar) -> "SuperVectorField":
        if isinstance(scalar, Supernumber):
            parity = parity_of(scalar)
            if parity is Parity.MIXED:
                raise ParityError("Vector fields scale by homogeneous constants only")
            new_parity = _flip(self.parity) if parity is Parity.ODD else self.parity
            const = SuperPolynomial.constant(scalar, self.generators)
            coeffs = {v: const * c for v, c in self.coeffs.items()}
            return SuperVectorField(coeffs, new_parity, "", self.generators)
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            coeffs = {v: c * float(scalar) for v, c in self.coeffs.items()}
            return SuperVectorField(coeffs, self.parity, "", self.generators)
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            return self.__rmul__(scalar)
        return NotImplemented

    def __repr__(self) -> str:
        parts = [f"({c})∂{v}" for v, c in self.coeffs.items() if not c.is_zero()]
        label = f"{self.name}: " if self.name else ""
        return f"SuperVectorField({label}{' + '.join(parts) or '0'}, {self.parity})"


def superbracket(X: SuperVectorField, Y: SuperVectorField) -> SuperVectorField:
    """Graded commutator [X, Y] = XY - (-1)^{|X||Y|} YX."""
    if X.generators != Y.generators:
        raise ConfigurationError("Mismatched coefficient rings")
    sign = -1.0 if (X.parity is Parity.ODD and Y.parity is Parity.ODD) else 1.0
    coeffs = {var: X.apply(Y.coeffs[var]) - Y.apply(X.coeffs[var]) * sign for var in VARIABLES}
    parity = Parity.EVEN if X.parity is Y.parity else Parity.ODD
    return SuperVectorField(coeffs, parity, "", X.generators)


def linear_combination(terms: Mapping[str, float], basis: Mapping[str, SuperVectorField],
                       parity: Optional[Parity] = None) -> SuperVectorField:
    """Real combination of named basis fields; the empty combination is zero."""
    generators = next(iter(basis.values())).generators
    out = SuperVectorField({}, parity or Parity.EVEN, "", generators)
    for name, c in terms.items():
        out = out + float(c) * basis[name]
    return out


def _coefficient_vector(field_: SuperVectorField, keys: Sequence[Tuple[str, Monomial]]) -> np.ndarray:
    rows = []
    for var, mono in keys:
        coeff = field_.coeffs[var].terms.get(mono)
        rows.append(coeff.coeffs if coeff is not None else np.zeros(2 ** field_.generators))
    return np.concatenate(rows) if rows else np.zeros(0)


def decompose(field_: SuperVectorField, basis: Mapping[str, SuperVectorField]) -> Tuple[Dict[str, float], float]:
    """Least-squares real coordinates of ``field_`` in ``basis`` and the residual norm."""
    keys = sorted({(var, mono) for f in [field_, *basis.values()]
                   for var in VARIABLES for mono in f.coeffs[var].terms})
    target = _coefficient_vector(field_, keys)
    if target.size == 0:
        return {name: 0.0 for name in basis}, 0.0
    matrix = np.column_stack([_coefficient_vector(b, keys) for b in basis.values()])
    solution, *_ = np.linalg.lstsq(matrix, target, rcond=None)
    residual = float(np.max(np.abs(matrix @ solution - target)))
    coords = {name: float(c) for name, c in zip(basis, solution)}
    return coords, residual


def format_combination(terms: Mapping[str, float], atol: float = 1e-12) -> str:
    """Render ``{'Px': 2.0}`` as ``2Px``; the empty combination renders as ``0``."""
    parts = []
    for name, c in terms.items():
        if abs(c) <= atol:
            continue
        if abs(c - 1) <= atol:
            coef = ""
        elif abs(c + 1) <= atol:
            coef = "-"
        else:
            coef = f"{Fraction(c).limit_denominator(1000)}"
        parts.append(f"{coef}{name}")
    return " + ".join(parts).replace("+ -", "- ") if parts else "0"


# -- generators ------------------------------------------------------------


def _var(name: str, generators: int) -> SuperPolynomial:
    return SuperPolynomial.variable(name, generators)


def _one(generators: int) -> SuperPolynomial:
    return SuperPolynomial.constant(1.0, generators)


def standard_generators(generators: int = DEFAULT_GENERATORS,
                        sentinel: bool = False) -> Dict[str, SuperVectorField]:
    """L, Px, Pt, Qx, Qt of the supersymmetric sinh-Gordon equation.

    ``sentinel`` flips the sign of the d/dt coefficient of Qt for fault injection.
    """
    x, t = _var("x", generators), _var("t", generators)
    th1, th2 = _var("theta1", generators), _var("theta2", generators)
    one = _one(generators)
    qt_sign = -1.0 if sentinel else 1.0
    return {
        "L": SuperVectorField({"x": x * -2.0, "t": t * 2.0, "theta1": -th1, "theta2": th2},
                              Parity.EVEN, "L", generators),
        "Px": SuperVectorField({"x": one}, Parity.EVEN, "Px", generators),
        "Pt": SuperVectorField({"t": one}, Parity.EVEN, "Pt", generators),
        "Qx": SuperVectorField({"x": -th1, "theta1": one}, Parity.ODD, "Qx", generators),
        "Qt": SuperVectorField({"t": th2 * qt_sign, "theta2": one}, Parity.ODD, "Qt", generators),
    }


def kdv_generators(generators: int = DEFAULT_GENERATORS) -> Dict[str, SuperVectorField]:
    """C1, C2, C3, A1, A2 of the N=2 supersymmetric KdV equation."""
    x, t, phi = _var("x", generators), _var("t", generators), _var("phi", generators)
    th1, th2 = _var("theta1", generators), _var("theta2", generators)
    one = _one(generators)
    return {
        "C1": SuperVectorField({"x": one}, Parity.EVEN, "C1", generators),
        "C2": SuperVectorField({"t": one}, Parity.EVEN, "C2", generators),
        "C3": SuperVectorField({"x": x, "t": t * 3.0, "theta1": th1 * 0.5, "theta2": th2 * 0.5,
                                "phi": -phi}, Parity.EVEN, "C3", generators),
        "A1": SuperVectorField({"x": th1, "theta1": -one}, Parity.ODD, "A1", generators),
        "A2": SuperVectorField({"x": th2, "theta2": -one}, Parity.ODD, "A2", generators),
    }


STANDARD_ORDER = ("L", "Px", "Pt", "Qx", "Qt")
KDV_ORDER = ("C1", "C2", "C3", "A1", "A2")

# (row, column) -> [row, column]; absent cells vanish
SUPERCOMMUTATORS: Dict[Tuple[str, str], Dict[str, float]] = {
    ("L", "Px"): {"Px": 2.0},
    ("L", "Pt"): {"Pt": -2.0},
    ("L", "Qx"): {"Qx": 1.0},
    ("L", "Qt"): {"Qt": -1.0},
    ("Px", "L"): {"Px": -2.0},
    ("Pt", "L"): {"Pt": 2.0},
    ("Qx", "L"): {"Qx": -1.0},
    ("Qx", "Qx"): {"Px": -2.0},
    ("Qt", "L"): {"Qt": 1.0},
    ("Qt", "Qt"): {"Pt": 2.0},
}

KDV_BRACKETS: Dict[Tuple[str, str], Dict[str, float]] = {
    ("C1", "C3"): {"C1": 1.0},
    ("C2", "C3"): {"C2": 3.0},
    ("C3", "C1"): {"C1": -1.0},
    ("C3", "C2"): {"C2": -3.0},
    ("C3", "A1"): {"A1": -0.5},
    ("C3", "A2"): {"A2": -0.5},
    ("A1", "C3"): {"A1": 0.5},
    ("A2", "C3"): {"A2": 0.5},
    ("A1", "A1"): {"C1": -2.0},
    ("A2", "A2"): {"C1": -2.0},
}


@dataclass
class BracketCell:
    pair: Tuple[str, str]
    expected: str
    computed: str
    passed: bool

    def to_dict(self) -> Dict:
        return {"expected": self.expected, "computed": self.computed, "pass": self.passed}


@dataclass
class BracketReport:
    cells: List[BracketCell]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cells)

    @property
    def failures(self) -> List[BracketCell]:
        return [c for c in self.cells if not c.passed]

    def cell(self, row: str, column: str) -> BracketCell:
        for c in self.cells:
            if c.pair == (row, column):
                return c
        raise KeyError((row, column))

    def to_dict(self) -> Dict:
        return {f"{a},{b}": c.to_dict() for c in self.cells for a, b in [c.pair]}


def _bracket_table(basis: Dict[str, SuperVectorField], order: Sequence[str],
                   expected: Mapping[Tuple[str, str], Mapping[str, float]],
                   atol: float = 1e-12) -> BracketReport:
    cells = []
    for row, col in itertools.product(order, order):
        computed = superbracket(basis[row], basis[col])
        want = expected.get((row, col), {})
        target = linear_combination(want, basis, computed.parity)
        coords, _ = decompose(computed, basis)
        cells.append(BracketCell((row, col), format_combination(want), format_combination(coords),
                                 computed.allclose(target, atol)))
    return BracketReport(cells)


def verify_supercommutators(generators: int = DEFAULT_GENERATORS, sentinel: bool = False) -> BracketReport:
    """All 25 brackets of the standard generators against the supercommutation table."""
    return _bracket_table(standard_generators(generators, sentinel), STANDARD_ORDER, SUPERCOMMUTATORS)


def kdv_bracket_table(generators: int = DEFAULT_GENERATORS) -> BracketReport:
    """All 25 brackets of the KdV generators against the frozen fixture."""
    return _bracket_table(kdv_generators(generators), KDV_ORDER, KDV_BRACKETS)


def verify_jacobi(fields: Mapping[str, SuperVectorField], atol: float = 1e-12) -> Tuple[bool, float]:
    """Graded Jacobi identity over all ordered triples; returns (ok, max deviation)."""
    worst = 0.0

    def sgn(a, b):
        return -1.0 if a.parity is Parity.ODD and b.parity is Parity.ODD else 1.0

    for X, Y, Z in itertools.product(fields.values(), repeat=3):
        total = (sgn(X, Z) * superbracket(X, superbracket(Y, Z))
                 + sgn(Y, X) * superbracket(Y, superbracket(Z, X))
                 + sgn(Z, Y) * superbracket(Z, superbracket(X, Y)))
        for poly in total.coeffs.values():
            for coeff in poly.terms.values():
                worst = max(worst, coeff.max_abs())
    return worst <= atol, worst


def semidirect_check(generators: int = DEFAULT_GENERATORS, atol: float = 1e-12) -> Tuple[bool, float]:
    """Brackets of L with the ideal {Px, Pt, Qx, Qt} (and inside it) stay in the ideal."""
    gens = standard_generators(generators)
    ideal = {k: gens[k] for k in ("Px", "Pt", "Qx", "Qt")}
    worst = 0.0
    for a, b in itertools.product(gens, ideal):
        _, residual = decompose(superbracket(gens[a], ideal[b]), ideal)
        worst = max(worst, residual)
    return worst <= atol, worst


# -- subalgebras ------------------------------------------------------------

STANDARD_IDS = ("S1", "S2", "S3", "S4", "S6", "S7", "S8", "S10", "S11", "S12")
NONSTANDARD_IDS = ("S5", "S9", "S13", "S14", "S15", "S16")
EPSILON_IDS = ("S4", "S8", "S12", "S16")
MU_IDS = ("S5", "S6", "S7", "S8", "S13", "S14", "S15", "S16")
NU_IDS = ("S9", "S10", "S11", "S12", "S13", "S14", "S15", "S16")

CONJUGACY = {
    "S5": "mu ~ k mu for invertible even k",
    "S6": "mu ~ e^k mu",
    "S7": "mu ~ e^k mu",
    "S9": "nu ~ k nu for invertible even k",
    "S10": "nu ~ e^k nu",
    "S11": "nu ~ e^k nu",
    "S13": "(mu, nu) ~ (e^k mu, e^k nu)",
    "S14": "(mu, nu) ~ (e^k mu, e^3k nu)",
    "S15": "(mu, nu) ~ (e^3k mu, e^k nu)",
}

SUPERFIELD_FORMS = {
    "S1": "alpha(s) + t^(1/2) theta1 eta(s) + t^(-1/2) theta2 lambda(s) + theta1 theta2 beta(s), s = xt",
    "S2": "alpha(t) + theta1 eta(t) + theta2 lambda(t) + theta1 theta2 beta(t)",
    "S3": "alpha(x) + theta1 eta(x) + theta2 lambda(x) + theta1 theta2 beta(x)",
    "S4": "alpha(s) + theta1 eta(s) + theta2 lambda(s) + theta1 theta2 beta(s), s = x - eps t",
    "S6": "alpha(t) + (theta1 - mu x) eta(t) + theta2 lambda(t) + (theta1 - mu x) theta2 beta(t)",
    "S7": "alpha(s) + (theta1 - mu t) eta(s) + theta2 lambda(s) + (theta1 - mu t) theta2 beta(s), s = x + mu theta1 t",
    "S8": "alpha(s) + (theta1 - eps mu t) eta(s) + theta2 lambda(s) + (theta1 - eps mu t) theta2 beta(s), s = eps x - t + mu t theta1",
    "S10": "alpha(s) + theta1 eta(s) + (theta2 - nu x) lambda(s) + theta1 (theta2 - nu x) beta(s), s = t - nu theta2 x",
    "S11": "alpha(x) + theta1 eta(x) + (theta2 - nu t) lambda(x) + theta1 (theta2 - nu t) beta(x)",
    "S12": "alpha(s) + theta1 eta(s) + (theta2 - nu x) lambda(s) + theta1 (theta2 - nu x) beta(s), s = t - eps x - nu x theta2",
}


@dataclass
class SubalgebraRep:
    """One-dimensional subalgebra with its generator and invariants."""

    id: str
    epsilon: int
    mu: Supernumber
    nu: Supernumber
    generator: SuperVectorField
    invariants: Dict[str, SuperPolynomial]
    nonstandard: bool = False
    # odd prefactor of the nonstandard invariants (f arbitrary)
    odd_factor: Optional[Supernumber] = None
    # coordinates the arbitrary f may depend on; (x - eps t) appears as "x-et"
    free_arguments: Tuple[str, ...] = ()
    conjugacy: str = ""
    superfield_form: str = ""
    sample_invariant: Optional[SuperPolynomial] = None

    @property
    def sigma(self) -> SuperPolynomial:
        return self.invariants["sigma"]

    @property
    def tau1(self) -> SuperPolynomial:
        return self.invariants["tau1"]

    @property
    def tau2(self) -> SuperPolynomial:
        return self.invariants["tau2"]


def _check_params(epsilon: int, mu: Supernumber, nu: Supernumber) -> None:
    if epsilon not in (1, -1):
        raise ConfigurationError(f"epsilon must be +1 or -1, got {epsilon}")
    for name, value in (("mu", mu), ("nu", nu)):
        if not value.is_zero() and parity_of(value) is not Parity.ODD:
            raise ParityError(f"{name} must be Odd, got {parity_of(value)}")


def subalgebra(sid: str, epsilon: int = 1, mu: Optional[Supernumber] = None,
               nu: Optional[Supernumber] = None, generators: int = DEFAULT_GENERATORS) -> SubalgebraRep:
    """Representative of a conjugacy class of one-dimensional subalgebras."""
    if sid not in STANDARD_IDS + NONSTANDARD_IDS:
        raise ConfigurationError(f"Unknown subalgebra '{sid}'")
    mu = mu if mu is not None else Supernumber({}, generators)
    nu = nu if nu is not None else Supernumber({}, generators)
    _check_params(epsilon, mu, nu)
    g = standard_generators(generators)
    x, t = _var("x", generators), _var("t", generators)
    th1, th2 = _var("theta1", generators), _var("theta2", generators)
    phi = _var("phi", generators)
    eps = float(epsilon)
    M = SuperPolynomial.constant(mu, generators)
    N = SuperPolynomial.constant(nu, generators)

    generator = {
        "S1": g["L"],
        "S2": g["Px"],
        "S3": g["Pt"],
        "S4": g["Px"] + eps * g["Pt"],
        "S5": mu * g["Qx"],
        "S6": g["Px"] + mu * g["Qx"],
        "S7": g["Pt"] + mu * g["Qx"],
        "S8": g["Px"] + eps * g["Pt"] + mu * g["Qx"],
        "S9": nu * g["Qt"],
        "S10": g["Px"] + nu * g["Qt"],
        "S11": g["Pt"] + nu * g["Qt"],
        "S12": g["Px"] + eps * g["Pt"] + nu * g["Qt"],
        "S13": mu * g["Qx"] + nu * g["Qt"],
        "S14": g["Px"] + mu * g["Qx"] + nu * g["Qt"],
        "S15": g["Pt"] + mu * g["Qx"] + nu * g["Qt"],
        "S16": g["Px"] + eps * g["Pt"] + mu * g["Qx"] + nu * g["Qt"],
    }[sid].renamed(sid)

    standard = {
        "S1": (x * t, SuperPolynomial.monomial(1.0, t=Fraction(1, 2), theta=1, generators=generators),
               SuperPolynomial.monomial(1.0, t=Fraction(-1, 2), theta=2, generators=generators)),
        "S2": (t, th1, th2),
        "S3": (x, th1, th2),
        "S4": (x - t * eps, th1, th2),
        "S6": (t, th1 - M * x, th2),
        "S7": (x + M * th1 * t, th1 - M * t, th2),
        "S8": (x * eps - t + M * t * th1, th1 - M * t * eps, th2),
        "S10": (t - N * th2 * x, th1, th2 - N * x),
        "S11": (x, th1, th2 - N * t),
        "S12": (t - x * eps - N * x * th2, th1, th2 - N * x),
    }
    if sid in standard:
        sigma, tau1, tau2 = standard[sid]
        return SubalgebraRep(sid, epsilon, mu, nu, generator,
                             {"sigma": sigma, "tau1": tau1, "tau2": tau2, "phi": phi},
                             conjugacy=CONJUGACY.get(sid, ""), superfield_form=SUPERFIELD_FORMS[sid])

    nonstandard = {
        "S5": ({"t": t, "theta2": th2, "phi": phi}, mu, ("x", "t", "theta1", "theta2", "phi")),
        "S9": ({"x": x, "theta1": th1, "phi": phi}, nu, ("x", "t", "theta1", "theta2", "phi")),
        "S13": ({"phi": phi}, mu * nu, ("x", "t", "theta1", "theta2", "phi")),
        "S14": ({"phi": phi}, mu * nu, ("t", "theta1", "theta2", "phi")),
        "S15": ({"phi": phi}, mu * nu, ("x", "theta1", "theta2", "phi")),
        "S16": ({"phi": phi}, mu * nu, ("x-et", "theta1", "theta2", "phi")),
    }
    invariants, factor, free = nonstandard[sid]
    sample = None
    if sid == "S5":
        sample = M * x * th1
    return SubalgebraRep(sid, epsilon, mu, nu, generator, invariants, nonstandard=True,
                         odd_factor=factor, free_arguments=free, conjugacy=CONJUGACY.get(sid, ""),
                         sample_invariant=sample)


def kdv_nonstandard_cases(mu: Supernumber, nu: Supernumber,
                          generators: int = DEFAULT_GENERATORS) -> List[SubalgebraRep]:
    """KdV subalgebras muA1, muA1 + nuA2 and C1 - muA1 - nuA2 with their invariants."""
    k = kdv_generators(generators)
    t, th2, phi = _var("t", generators), _var("theta2", generators), _var("phi", generators)
    every = ("x", "t", "theta1", "theta2", "phi")
    return [
        SubalgebraRep("muA1", 1, mu, nu, (mu * k["A1"]).renamed("muA1"),
                      {"t": t, "theta2": th2, "phi": phi}, True, mu, every),
        SubalgebraRep("muA1+nuA2", 1, mu, nu, (mu * k["A1"] + nu * k["A2"]).renamed("muA1+nuA2"),
                      {"phi": phi}, True, mu * nu, every),
        SubalgebraRep("C1-muA1-nuA2", 1, mu, nu,
                      (k["C1"] - mu * k["A1"] - nu * k["A2"]).renamed("C1-muA1-nuA2"),
                      {"phi": phi}, True, mu * nu, ("t", "theta1", "theta2", "phi")),
    ]


def annihilates(X: SuperVectorField, invariant: SuperPolynomial,
                atol: float = ANNIHILATION_ATOL) -> Tuple[bool, SuperPolynomial]:
    """Whether X(invariant) vanishes; the residual polynomial is returned either way."""
    residual = X.apply(invariant)
    return residual.is_zero(atol), residual


def monomial_basis(free_arguments: Iterable[str], epsilon: int = 1, degree: int = 3,
                   generators: int = DEFAULT_GENERATORS) -> List[SuperPolynomial]:
    """Monomials of the arguments the arbitrary function f may depend on, degree <= ``degree``."""
    free = set(free_arguments)
    one = _one(generators)
    if "x-et" in free:
        s = _var("x", generators) - _var("t", generators) * float(epsilon)
        powers = [s ** k for k in range(degree + 1)]
    else:
        powers = []
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                if (a and "x" not in free) or (b and "t" not in free):
                    continue
                powers.append(SuperPolynomial.monomial(1.0, x=a, t=b, generators=generators))
    masks = [m for m in range(4)
             if (not m & 1 or "theta1" in free) and (not m & 2 or "theta2" in free)]
    phis = range(2) if "phi" in free else range(1)
    basis = []
    for base in powers:
        for mask in masks:
            for p in phis:
                theta = SuperPolynomial.monomial(1.0, theta=mask, phi=p, generators=generators)
                basis.append(base * theta * one)
    return basis


@dataclass
class InvariantCheck:
    subalgebra: str
    invariant: str
    passed: bool
    residual: float

    def to_dict(self) -> Dict:
        return {"invariant": self.invariant, "pass": self.passed, "residual": self.residual}


def check_invariants(rep: SubalgebraRep, degree: int = 3) -> List[InvariantCheck]:
    """Annihilation of every listed invariant, plus the odd-factor basis for nonstandard reps."""
    checks = []
    for name, inv in rep.invariants.items():
        ok, residual = annihilates(rep.generator, inv)
        checks.append(InvariantCheck(rep.id, name, ok, _poly_max(residual)))
    if rep.nonstandard:
        factor = SuperPolynomial.constant(rep.odd_factor, rep.generator.generators)
        basis = monomial_basis(rep.free_arguments, rep.epsilon, degree, rep.generator.generators)
        worst, ok = 0.0, True
        for f in basis:
            good, residual = annihilates(rep.generator, factor * f)
            ok = ok and good
            worst = max(worst, _poly_max(residual))
        checks.append(InvariantCheck(rep.id, f"odd-factor basis ({len(basis)} monomials)", ok, worst))
        if rep.sample_invariant is not None:
            good, residual = annihilates(rep.generator, rep.sample_invariant)
            checks.append(InvariantCheck(rep.id, str(rep.sample_invariant), good, _poly_max(residual)))
    return checks


def _poly_max(p: SuperPolynomial) -> float:
    return max((c.max_abs() for c in p.terms.values()), default=0.0)


# -- nonstandard reduction demonstrations -------------------------------------


@dataclass
class S5Demo:
    """Equation obtained from Phi = A(t, theta2, tau) with tau = mu x theta1."""

    tau: SuperPolynomial
    annihilated: bool
    # coefficient polynomials of the derivative terms of A
    terms: Dict[str, SuperPolynomial] = field(default_factory=dict)

    @property
    def explicit_x_dependence(self) -> bool:
        return any(p.depends_on("x") for p in self.terms.values())

    @property
    def reducible(self) -> bool:
        return not self.explicit_x_dependence

    def require_reducible(self) -> None:
        if not self.reducible:
            raise NotReducible("S5: the transformed equation depends explicitly on x")

    def to_dict(self) -> Dict:
        return {"tau": str(self.tau), "annihilated": self.annihilated,
                "terms": {k: str(v) for k, v in self.terms.items()},
                "explicit_x_dependence": self.explicit_x_dependence,
                "reducible": self.reducible}


def s5_transformed_equation_demo(mu: Optional[Supernumber] = None,
                                 generators: int = DEFAULT_GENERATORS) -> S5Demo:
    """Chain-rule transform of the superspace equation under the S5 invariant tau = mu x theta1."""
    mu = mu if mu is not None else Supernumber.generator(1, generators)
    rep = subalgebra("S5", mu=mu, generators=generators)
    x = _var("x", generators)
    th1, th2 = _var("theta1", generators), _var("theta2", generators)
    tau = SuperPolynomial.constant(mu, generators) * x * th1
    ok, _ = annihilates(rep.generator, tau)
    tau_x = sp_deriv(tau, "x")
    tau_th1 = sp_deriv(tau, "theta1")
    # d/dtheta2 (c F) = c^ F_theta2 for the theta-free c
    tau_th1_hat = SuperPolynomial({m: c.grade_involution() for m, c in tau_th1.terms.items()}, generators)
    terms = {
        "A_t_tau": th2 * tau_th1,
        "A_tau_theta2": -tau_th1_hat,
        "A_x_t_tau": -(th1 * th2 * tau_x),
        "A_tau_theta2_from_x": th1 * tau_x,
        "sinh A": SuperPolynomial.constant(-1.0, generators),
    }
    terms = {k: v for k, v in terms.items() if not v.is_zero()}
    return S5Demo(tau, ok, terms)


@dataclass
class PlanarReduction:
    """Reduction by the two-dimensional subalgebra {Px, Qx}."""

    invariants: Dict[str, SuperPolynomial]
    closed: bool
    annihilated: bool
    reduced_equations: Tuple[str, ...] = ("sinh alpha = 0", "lambda cosh alpha = 0")

    @property
    def null_only(self) -> bool:
        return self.closed and self.annihilated

    def to_dict(self) -> Dict:
        return {"invariants": {k: str(v) for k, v in self.invariants.items()},
                "closed": self.closed, "annihilated": self.annihilated,
                "reduced_equations": list(self.reduced_equations), "null_only": self.null_only}


def planar_qx_px_reduction(generators: int = DEFAULT_GENERATORS) -> PlanarReduction:
    """Invariants t, theta2, Phi of {Px, Qx}; the ansatz alpha(t) + theta2 lambda(t) forces Phi = 0."""
    g = standard_generators(generators)
    qq = superbracket(g["Qx"], g["Qx"])
    closed = qq.allclose(-2.0 * g["Px"]) and superbracket(g["Px"], g["Qx"]).is_zero()
    invariants = {"t": _var("t", generators), "theta2": _var("theta2", generators),
                  "phi": _var("phi", generators)}
    annihilated = all(annihilates(g[k], inv)[0] for k in ("Px", "Qx") for inv in invariants.values())
    return PlanarReduction(invariants, closed, annihilated)


# -- finite flows --------------------------------------------------------------


@dataclass(frozen=True)
class FlowTransform:
    """Finite flow of a generator as a coordinate substitution."""

    name: str
    param: Union[float, Supernumber]
    mapping: Dict[str, SuperPolynomial]

    def inverse(self) -> "FlowTransform":
        return flow_transform(self.name, -self.param, self._generators)

    @property
    def _generators(self) -> int:
        return next(iter(self.mapping.values())).generators

    def apply(self, p: SuperPolynomial) -> SuperPolynomial:
        return sp_substitute(p, self.mapping)

    def pullback(self, phi):
        """Superfield composed with this flow."""
        return phi.pullback(self)


def flow_transform(name: str, param: Union[float, Supernumber],
                   generators: int = DEFAULT_GENERATORS) -> FlowTransform:
    """Exact finite flow of Px, Pt, L (real parameter) or Qx, Qt (odd parameter)."""
    x, t = _var("x", generators), _var("t", generators)
    th1, th2 = _var("theta1", generators), _var("theta2", generators)
    if name in ("Qx", "Qt"):
        if not isinstance(param, Supernumber) or (not param.is_zero() and parity_of(param) is not Parity.ODD):
            raise ParityError(f"{name} flow needs an Odd parameter")
        eta = SuperPolynomial.constant(param, generators)
        if name == "Qx":
            mapping = {"x": x - eta * th1, "theta1": th1 + eta}
        else:
            mapping = {"t": t + eta * th2, "theta2": th2 + eta}
        return FlowTransform(name, param, mapping)

    if isinstance(param, Supernumber):
        if parity_of(param) is not Parity.EVEN or not param.soul.is_zero():
            raise ParityError(f"{name} flow needs a real parameter")
        s = param.body
    else:
        s = float(param)
    if name == "Px":
        mapping = {"x": x + s}
    elif name == "Pt":
        mapping = {"t": t + s}
    elif name == "L":
        mapping = {"x": x * float(np.exp(-2 * s)), "t": t * float(np.exp(2 * s)),
                   "theta1": th1 * float(np.exp(-s)), "theta2": th2 * float(np.exp(s))}
    else:
        raise ConfigurationError(f"No finite flow for generator '{name}'")
    return FlowTransform(name, s, mapping)
