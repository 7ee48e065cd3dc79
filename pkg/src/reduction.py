"""Symmetry reduction for the standard subalgebras.

A reduced solution stores the four slot functions alpha, eta, lambda, beta on
a uniform sigma grid as (value, first, second derivative) samples.
``reconstruct`` composes quintic Hermite interpolants with the invariants of
the subalgebra and returns a Superfield on the (x, t) plane.
"""
from __future__ import annotations

import json
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import interpolate

from .config import parse_grid
from .errors import (ConfigurationError, ConstraintError, DomainError, ExtrapolationError,
                     NotReducible, ParityError)
from .fieldcalc import (FD_STEP, FunctionComponent, ResidualReport, Superfield, ThetaExpansion,
                        residual_on_grid)
from .grassmann import (DEFAULT_GENERATORS, GrassmannAlgebra, Parity, Supernumber, get_algebra,
                        gfunc, parity_of)
from .special import quadrature, quartic_roots, quartic_value, rk4_ring
from .superspace import SuperPolynomial, sp_deriv
from .symalg import NONSTANDARD_IDS, STANDARD_IDS, SubalgebraRep, subalgebra

SLOT_NAMES = ("alpha", "eta", "lambda", "beta")
SLOT_PARITY = {"alpha": Parity.EVEN, "eta": Parity.ODD, "lambda": Parity.ODD, "beta": Parity.EVEN}
SOLVABLE_IDS = ("S1", "S4", "S8", "S12")
TURNING_SLOPE = 1e-8
EDGE_TOLERANCE = 1e-12

REDUCED_EQUATIONS = {
    "S1": ("beta + sinh(alpha)", "lambda' - eta cosh(alpha)",
           "sigma eta' + eta/2 - lambda cosh(alpha)",
           "alpha' + sigma alpha'' + beta cosh(alpha) - eta lambda sinh(alpha)"),
    "S2": ("beta + sinh(alpha)", "eta cosh(alpha)", "eta' - lambda cosh(alpha)",
           "beta cosh(alpha) - eta lambda sinh(alpha)"),
    "S3": ("beta + sinh(alpha)", "lambda' - eta cosh(alpha)", "lambda cosh(alpha)",
           "beta cosh(alpha) - eta lambda sinh(alpha)"),
    "S4": ("beta + sinh(alpha)", "lambda' - eta cosh(alpha)", "eps eta' + lambda cosh(alpha)",
           "eps alpha'' - beta cosh(alpha) + eta lambda sinh(alpha)"),
    "S6": ("beta + sinh(alpha)", "mu beta - eta cosh(alpha)", "eta' - lambda cosh(alpha)",
           "mu eta' - beta cosh(alpha) + eta lambda sinh(alpha)"),
    "S7": ("beta + sinh(alpha)", "lambda' - eta cosh(alpha)", "mu alpha' + lambda cosh(alpha)",
           "mu eta' - beta cosh(alpha) + eta lambda sinh(alpha)"),
    "S8": ("beta + sinh(alpha)", "eps lambda' - eta cosh(alpha)",
           "eta' + mu alpha' + lambda cosh(alpha)",
           "eps alpha'' + mu eta' - beta cosh(alpha) + eta lambda sinh(alpha)"),
    "S10": ("beta + sinh(alpha)", "nu alpha' - eta cosh(alpha)", "eta' - lambda cosh(alpha)",
            "nu lambda' - beta cosh(alpha) + eta lambda sinh(alpha)"),
    "S11": ("beta + sinh(alpha)", "lambda' - eta cosh(alpha)", "nu beta + lambda cosh(alpha)",
            "nu lambda' - beta cosh(alpha) + eta lambda sinh(alpha)"),
    "S12": ("beta + sinh(alpha)", "nu alpha' - eps lambda' - eta cosh(alpha)",
            "eta' - lambda cosh(alpha)",
            "eps alpha'' + nu lambda' - beta cosh(alpha) + eta lambda sinh(alpha)"),
}

# full residual = s0 r0(sigma) + tau1 s1 r1(sigma) + tau2 s2 r2(sigma) + tau1 tau2 s3 r3(sigma)
SIGN_MAPS = {
    "S1": (-1, 1, 1, -1),
    "S2": (-1, -1, 1, -1),
    "S3": (-1, 1, -1, -1),
    "S4": (-1, 1, -1, 1),
    "S6": (-1, 1, 1, 1),
    "S7": (-1, 1, -1, 1),
    "S8": (-1, 1, -1, 1),
    "S10": (-1, 1, 1, 1),
    "S11": (-1, 1, -1, 1),
    "S12": (-1, 1, 1, 1),
}


def reduced_sign_map(sid: str) -> Tuple[int, int, int, int]:
    """Signs relating the reduced equations to the invariant-frame residual components."""
    _require_standard(sid)
    return SIGN_MAPS[sid]


def _require_standard(sid: str) -> None:
    if sid in NONSTANDARD_IDS:
        raise NotReducible(f"{sid} is nonstandard; its invariants do not reduce the equation")
    if sid not in STANDARD_IDS:
        raise ConfigurationError(f"Unknown subalgebra '{sid}'")


# -- slot functions ---------------------------------------------------------


class SlotInterpolant:
    """Quintic Hermite interpolant of (g, g', g'') samples on a sigma grid."""

    def __init__(self, sigma: np.ndarray, samples: np.ndarray):
        sigma = np.asarray(sigma, dtype=float)
        self.lo, self.hi = float(sigma[0]), float(sigma[-1])
        self._poly = interpolate.BPoly.from_derivatives(sigma, np.asarray(samples, dtype=float),
                                                        extrapolate=False)

    def derivative(self, s, order: int = 0) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        span = EDGE_TOLERANCE * max(1.0, abs(self.lo), abs(self.hi))
        if np.any(s < self.lo - span) or np.any(s > self.hi + span):
            raise ExtrapolationError(
                f"sigma in [{np.min(s):g}, {np.max(s):g}] leaves the grid [{self.lo:g}, {self.hi:g}]")
        s = np.clip(s, self.lo, self.hi)
        return self._poly(s, nu=order) if order else self._poly(s)


class AnalyticSlot:
    """Constant plus ring-valued sinusoids; derivatives of every order in closed form."""

    def __init__(self, constant: np.ndarray, waves: Sequence[Tuple[np.ndarray, float, float]] = ()):
        self.constant = np.asarray(constant, dtype=float)
        self.waves = [(np.asarray(c, dtype=float), float(w), float(p)) for c, w, p in waves]

    @classmethod
    def of(cls, constant: Supernumber, waves: Sequence[Tuple[Supernumber, float, float]] = ()) -> "AnalyticSlot":
        return cls(constant.coeffs, [(c.coeffs, w, p) for c, w, p in waves])

    def derivative(self, s, order: int = 0) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape + self.constant.shape)
        if order == 0:
            out = out + self.constant
        for coeff, omega, phase in self.waves:
            shape = omega ** order * np.sin(omega * s + phase + order * math.pi / 2)
            out = out + shape[..., None] * coeff
        return out


# -- reduced equations --------------------------------------------------------


@dataclass
class SlotValues:
    """Slot values and the derivatives the reduced equations use, as (..., dim) arrays."""

    alpha: np.ndarray
    d_alpha: np.ndarray
    dd_alpha: np.ndarray
    eta: np.ndarray
    d_eta: np.ndarray
    lam: np.ndarray
    d_lam: np.ndarray
    beta: np.ndarray

    @classmethod
    def from_slots(cls, slots: Mapping[str, object], s) -> "SlotValues":
        a, e, l, b = (slots[name] for name in SLOT_NAMES)
        return cls(a.derivative(s, 0), a.derivative(s, 1), a.derivative(s, 2),
                   e.derivative(s, 0), e.derivative(s, 1),
                   l.derivative(s, 0), l.derivative(s, 1), b.derivative(s, 0))


def reduced_equation_residuals(sid: str, v: SlotValues, sigma, epsilon: int = 1,
                               mu: Optional[Supernumber] = None, nu: Optional[Supernumber] = None,
                               algebra: Optional[GrassmannAlgebra] = None) -> Tuple[np.ndarray, ...]:
    """The four reduced equations of ``sid`` evaluated on slot values."""
    _require_standard(sid)
    algebra = algebra or get_algebra(int(round(math.log2(v.alpha.shape[-1]))))
    mul = algebra.mul
    mu = np.zeros(algebra.dim) if mu is None else mu.coeffs
    nu = np.zeros(algebra.dim) if nu is None else nu.coeffs
    eps = float(epsilon)
    sh = algebra.func("sinh", v.alpha)
    ch = algebra.func("cosh", v.alpha)
    e_ch, l_ch, b_ch = mul(v.eta, ch), mul(v.lam, ch), mul(v.beta, ch)
    el_sh = mul(mul(v.eta, v.lam), sh)
    t1 = v.beta + sh

    if sid == "S1":
        s = np.asarray(sigma, dtype=float)[..., None]
        return (t1, v.d_lam - e_ch, s * v.d_eta + 0.5 * v.eta - l_ch,
                v.d_alpha + s * v.dd_alpha + b_ch - el_sh)
    if sid == "S2":
        return t1, e_ch, v.d_eta - l_ch, b_ch - el_sh
    if sid == "S3":
        return t1, v.d_lam - e_ch, l_ch, b_ch - el_sh
    if sid == "S4":
        return t1, v.d_lam - e_ch, eps * v.d_eta + l_ch, eps * v.dd_alpha - b_ch + el_sh
    if sid == "S6":
        return t1, mul(mu, v.beta) - e_ch, v.d_eta - l_ch, mul(mu, v.d_eta) - b_ch + el_sh
    if sid == "S7":
        return t1, v.d_lam - e_ch, mul(mu, v.d_alpha) + l_ch, mul(mu, v.d_eta) - b_ch + el_sh
    if sid == "S8":
        return (t1, eps * v.d_lam - e_ch, v.d_eta + mul(mu, v.d_alpha) + l_ch,
                eps * v.dd_alpha + mul(mu, v.d_eta) - b_ch + el_sh)
    if sid == "S10":
        return t1, mul(nu, v.d_alpha) - e_ch, v.d_eta - l_ch, mul(nu, v.d_lam) - b_ch + el_sh
    if sid == "S11":
        return t1, v.d_lam - e_ch, mul(nu, v.beta) + l_ch, mul(nu, v.d_lam) - b_ch + el_sh
    # S12
    return (t1, mul(nu, v.d_alpha) - eps * v.d_lam - e_ch, v.d_eta - l_ch,
            eps * v.dd_alpha + mul(nu, v.d_lam) - b_ch + el_sh)


class ReducedEquationSlot:
    """One signed reduced equation of a slot set, seen as a function of sigma.

    First derivatives are taken by central differences with one Richardson step.
    """

    def __init__(self, rep: SubalgebraRep, slots: Mapping[str, object], index: int,
                 step: float = 1e-3):
        self.rep, self.slots, self.index, self.step = rep, slots, index, step
        self.sign = SIGN_MAPS[rep.id][index]

    def _value(self, s) -> np.ndarray:
        values = SlotValues.from_slots(self.slots, s)
        rows = reduced_equation_residuals(self.rep.id, values, s, self.rep.epsilon,
                                          self.rep.mu, self.rep.nu)
        return self.sign * rows[self.index]

    def derivative(self, s, order: int = 0) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if order == 0:
            return self._value(s)
        if order == 1:
            h = self.step
            central = lambda w: (self._value(s + w) - self._value(s - w)) / (2 * w)
            return (4 * central(h / 2) - central(h)) / 3
        raise ConfigurationError("Reduced equation slots provide derivatives up to order 1")


# -- jets and the invariant map --------------------------------------------------


class Jet:
    """A theta expansion with its x, t and mixed xt derivatives (depth 1) or value only (depth 0)."""

    __slots__ = ("v", "x", "t", "xt")

    def __init__(self, v: ThetaExpansion, x: Optional[ThetaExpansion] = None,
                 t: Optional[ThetaExpansion] = None, xt: Optional[ThetaExpansion] = None):
        self.v, self.x, self.t, self.xt = v, x, t, xt

    @property
    def depth(self) -> int:
        return 0 if self.x is None else 1

    @classmethod
    def from_polynomial(cls, poly: SuperPolynomial, x, t, depth: int = 1) -> "Jet":
        v = ThetaExpansion.from_polynomial(poly, x, t)
        if not depth:
            return cls(v)
        return cls(v, ThetaExpansion.from_polynomial(poly, x, t, 1, 0),
                   ThetaExpansion.from_polynomial(poly, x, t, 0, 1),
                   ThetaExpansion.from_polynomial(poly, x, t, 1, 1))

    @classmethod
    def compose(cls, g: Sequence[ThetaExpansion], s: Tuple[np.ndarray, ...], depth: int = 1) -> "Jet":
        """g(s(x, t)) from g, g', g'' at s and the real jet (s, s_x, s_t, s_xt)."""
        if not depth:
            return cls(g[0])
        _, sx, st, sxt = s
        return cls(g[0], g[1].scale(sx), g[1].scale(st), g[2].scale(sx * st) + g[1].scale(sxt))

    def __add__(self, other: "Jet") -> "Jet":
        if self.depth and other.depth:
            return Jet(self.v + other.v, self.x + other.x, self.t + other.t, self.xt + other.xt)
        return Jet(self.v + other.v)

    def __mul__(self, other: Union["Jet", float]) -> "Jet":
        if isinstance(other, (int, float)):
            if not self.depth:
                return Jet(self.v * other)
            return Jet(self.v * other, self.x * other, self.t * other, self.xt * other)
        v = self.v * other.v
        if not (self.depth and other.depth):
            return Jet(v)
        return Jet(v,
                   self.x * other.v + self.v * other.x,
                   self.t * other.v + self.v * other.t,
                   self.xt * other.v + self.x * other.t + self.t * other.x + self.v * other.xt)


class _InvariantMap:
    """sigma split as s + delta (s real, delta nilpotent) together with tau1 and tau2."""

    def __init__(self, rep: SubalgebraRep):
        _require_standard(rep.id)
        sigma = rep.sigma
        n = sigma.generators
        body = {m: Supernumber.scalar(c.body, n) for m, c in sigma.terms.items()
                if m.theta == 0 and c.body != 0.0}
        self.rep = rep
        self.algebra = get_algebra(n)
        self.s = SuperPolynomial(body, n)
        self.delta = sigma - self.s
        if self.delta.is_zero():
            self.delta_order = 0
        elif (self.delta * self.delta).is_zero():
            self.delta_order = 1
        else:
            self.delta_order = 2

    def real_jet(self, x, t, depth: int) -> Tuple[np.ndarray, ...]:
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape

        def body(poly):
            values = poly.evaluate(x, t).get(0)
            return np.zeros(shape) if values is None else np.broadcast_to(values[..., 0], shape)

        s = body(self.s)
        if not depth:
            return s, None, None, None
        sx, st = sp_deriv(self.s, "x"), sp_deriv(self.s, "t")
        return s, body(sx), body(st), body(sp_deriv(sx, "t"))

    def slot_jet(self, slot, s_jet, delta_jet: Optional[Jet], depth: int) -> Jet:
        """g(s + delta) = sum_k g^(k)(s) delta^k / k!, delta nilpotent."""
        needed = self.delta_order + (2 if depth else 0)
        g = [ThetaExpansion.scalar(slot.derivative(s_jet[0], k), self.algebra) for k in range(needed + 1)]
        jet = Jet.compose(g[0:3], s_jet, depth)
        power = None
        for k in range(1, self.delta_order + 1):
            power = delta_jet if power is None else power * delta_jet
            jet = jet + Jet.compose(g[k:k + 3], s_jet, depth) * power * (1.0 / math.factorial(k))
        return jet


def ansatz_expansion(rep: SubalgebraRep, slots: Mapping[str, object], x, t, depth: int = 1) -> Jet:
    """alpha + tau1 eta + tau2 lambda + tau1 tau2 beta, each slot composed with sigma."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if rep.id == "S1" and np.any(t <= 0):
        raise DomainError("S1 invariants carry t^(1/2) and t^(-1/2); the window needs t > 0")
    geometry = _InvariantMap(rep)
    s_jet = geometry.real_jet(x, t, depth)
    delta = Jet.from_polynomial(geometry.delta, x, t, depth) if geometry.delta_order else None
    a, e, l, b = (geometry.slot_jet(slots[name], s_jet, delta, depth) for name in SLOT_NAMES)
    tau1 = Jet.from_polynomial(rep.tau1, x, t, depth)
    tau2 = Jet.from_polynomial(rep.tau2, x, t, depth)
    return a + tau1 * e + tau2 * l + tau1 * tau2 * b


def ansatz_superfield(rep: SubalgebraRep, slots: Mapping[str, object], cache_size: int = 8,
                      fd_step: float = FD_STEP) -> Superfield:
    """Superfield of the ansatz with analytic derivatives up to order (1, 1)."""
    algebra = get_algebra(rep.sigma.generators)
    cache: "OrderedDict[tuple, Jet]" = OrderedDict()
    lock = threading.Lock()

    def jet_at(x, t) -> Jet:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        key = (x.shape, t.shape, x.tobytes(), t.tobytes())
        with lock:
            jet = cache.get(key)
        if jet is None:
            jet = ansatz_expansion(rep, slots, x, t, depth=1)
            with lock:
                cache[key] = jet
                while len(cache) > cache_size:
                    cache.popitem(last=False)
        return jet

    def part(mask: int, name: str):
        return lambda x, t: getattr(jet_at(x, t), name).c[mask]

    comps = [FunctionComponent(part(m, "v"), algebra,
                               {(1, 0): part(m, "x"), (0, 1): part(m, "t"), (1, 1): part(m, "xt")},
                               fd_step=fd_step)
             for m in range(4)]
    return Superfield(comps, Parity.EVEN, algebra)


def expected_residual(rep: SubalgebraRep, slots: Mapping[str, object], x, t) -> ThetaExpansion:
    """Signed reduced equations carried back through the invariants (values only)."""
    residual_slots = {name: ReducedEquationSlot(rep, slots, i) for i, name in enumerate(SLOT_NAMES)}
    return ansatz_expansion(rep, residual_slots, x, t, depth=0).v


# -- reduced solutions ---------------------------------------------------------


def _zero(generators: int) -> Supernumber:
    return Supernumber({}, generators)


@dataclass
class ReducedSolution:
    """Slot samples ``(n, 3, dim)`` (value, first, second derivative) on a sigma grid."""

    subalgebra: str
    epsilon: int
    sigma: np.ndarray
    slots: Dict[str, np.ndarray]
    generators: int = DEFAULT_GENERATORS
    c0: Optional[Supernumber] = None
    mu: Optional[Supernumber] = None
    nu: Optional[Supernumber] = None
    k: Optional[Supernumber] = None
    c1: Optional[float] = None
    c2: float = 0.0
    aux: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: Dict = field(default_factory=dict)
    _interpolants: Dict[str, SlotInterpolant] = field(default_factory=dict, init=False,
                                                      repr=False, compare=False)

    def __post_init__(self):
        _require_standard(self.subalgebra)
        for name in ("c0", "mu", "nu", "k"):
            if getattr(self, name) is None:
                setattr(self, name, _zero(self.generators))
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.sigma.ndim != 1 or len(self.sigma) < 2 or np.any(np.diff(self.sigma) <= 0):
            raise ConfigurationError("sigma grid must be strictly increasing with at least 2 points")
        dim = 1 << self.generators
        algebra = get_algebra(self.generators)
        for name in SLOT_NAMES:
            if name not in self.slots:
                raise ConfigurationError(f"Missing slot '{name}'")
            arr = np.asarray(self.slots[name], dtype=float)
            if arr.shape != (len(self.sigma), 3, dim):
                raise ConfigurationError(f"Slot '{name}' has shape {arr.shape}")
            wrong = algebra.odd_mask if SLOT_PARITY[name] is Parity.EVEN else algebra.even_mask
            if np.any(arr[..., wrong] != 0.0):
                raise ParityError(f"Slot '{name}' must be {SLOT_PARITY[name]}")
            self.slots[name] = arr

    @property
    def algebra(self) -> GrassmannAlgebra:
        return get_algebra(self.generators)

    def value(self, name: str, order: int = 0) -> np.ndarray:
        return self.slots[name][:, order, :]

    def sample(self, name: str, index: int, order: int = 0) -> Supernumber:
        return Supernumber.from_array(self.slots[name][index, order], self.algebra)

    def rep(self) -> SubalgebraRep:
        return subalgebra(self.subalgebra, self.epsilon, self.mu, self.nu, self.generators)

    def interpolant(self, name: str) -> SlotInterpolant:
        if name not in self._interpolants:
            self._interpolants[name] = SlotInterpolant(self.sigma, self.slots[name])
        return self._interpolants[name]

    def interpolants(self) -> Dict[str, SlotInterpolant]:
        return {name: self.interpolant(name) for name in SLOT_NAMES}

    def with_slot(self, name: str, samples: np.ndarray) -> "ReducedSolution":
        slots = dict(self.slots)
        slots[name] = np.asarray(samples, dtype=float)
        return replace(self, slots=slots)

    # serialization

    def to_dict(self) -> Dict:
        algebra = self.algebra

        def literal(row):
            return Supernumber.from_array(row, algebra).to_literal()

        def samples(arr):
            return [[literal(arr[i, j]) for j in range(arr.shape[1])] for i in range(arr.shape[0])]

        return {
            "subalgebra": self.subalgebra,
            "epsilon": self.epsilon,
            "generators": self.generators,
            "c0": self.c0.to_literal(), "mu": self.mu.to_literal(),
            "nu": self.nu.to_literal(), "k": self.k.to_literal(),
            "c1": self.c1, "c2": self.c2,
            "sigma": self.sigma.tolist(),
            "slots": {name: samples(self.slots[name]) for name in SLOT_NAMES},
            "aux": {name: samples(arr) for name, arr in self.aux.items()},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ReducedSolution":
        try:
            n = int(data.get("generators", DEFAULT_GENERATORS))
            algebra = get_algebra(n)

            def arrays(block):
                return np.array([[Supernumber.from_literal(lit, n).coeffs for lit in row] for row in block])

            return cls(
                subalgebra=data["subalgebra"], epsilon=int(data["epsilon"]),
                sigma=np.asarray(data["sigma"], dtype=float),
                slots={name: arrays(data["slots"][name]) for name in SLOT_NAMES},
                generators=algebra.generators,
                c0=Supernumber.from_literal(data.get("c0"), n), mu=Supernumber.from_literal(data.get("mu"), n),
                nu=Supernumber.from_literal(data.get("nu"), n), k=Supernumber.from_literal(data.get("k"), n),
                c1=data.get("c1"), c2=float(data.get("c2", 0.0)),
                aux={name: arrays(block) for name, block in data.get("aux", {}).items()},
                meta=dict(data.get("meta", {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Malformed reduced solution: {e}")

    def save_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f)
        return path

    @classmethod
    def load_json(cls, path: Union[str, Path]) -> "ReducedSolution":
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Could not read solution {path}: {e}")
        return cls.from_dict(data)

    def to_frame(self) -> pd.DataFrame:
        """One row per sigma; one column per slot and Grassmann monomial."""
        columns = {"sigma": self.sigma}
        for name in SLOT_NAMES:
            values = self.value(name)
            for mask in range(values.shape[1]):
                columns[f"{name}_m{mask}"] = values[:, mask]
        return pd.DataFrame(columns)

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path


# -- reduced residual reports ------------------------------------------------------


@dataclass
class EquationResidual:
    index: int
    expression: str
    max_abs: float
    argmax_sigma: float
    per_grassmann_monomial: Dict[int, float]

    def to_dict(self) -> Dict:
        return {"index": self.index, "expression": self.expression, "max_abs": self.max_abs,
                "argmax_sigma": self.argmax_sigma,
                "per_grassmann_monomial": {str(m): v for m, v in self.per_grassmann_monomial.items()}}


@dataclass
class ReducedReport:
    subalgebra: str
    equations: List[EquationResidual]
    tolerance: Optional[float] = None

    @property
    def max_abs(self) -> float:
        return max((e.max_abs for e in self.equations), default=0.0)

    @property
    def passed(self) -> bool:
        return self.tolerance is not None and self.max_abs < self.tolerance

    def to_dict(self) -> Dict:
        out = {"subalgebra": self.subalgebra, "max_abs": self.max_abs,
               "equations": [e.to_dict() for e in self.equations]}
        if self.tolerance is not None:
            out["tolerance"] = self.tolerance
            out["passed"] = self.passed
        return out


def _slot_values(r: ReducedSolution) -> SlotValues:
    a, e, l, b = (r.slots[name] for name in SLOT_NAMES)
    return SlotValues(a[:, 0], a[:, 1], a[:, 2], e[:, 0], e[:, 1], l[:, 0], l[:, 1], b[:, 0])


def reduced_residuals(r: ReducedSolution, tolerance: Optional[float] = None) -> ReducedReport:
    """Reduced equations of ``r.subalgebra`` on the stored samples."""
    rows = reduced_equation_residuals(r.subalgebra, _slot_values(r), r.sigma, r.epsilon,
                                      r.mu, r.nu, r.algebra)
    equations = []
    for i, (row, expression) in enumerate(zip(rows, REDUCED_EQUATIONS[r.subalgebra])):
        mags = np.abs(row)
        pointwise = mags.max(axis=1)
        idx = int(np.argmax(pointwise))
        per = {int(m): float(v) for m, v in enumerate(mags.max(axis=0)) if v > 0.0}
        equations.append(EquationResidual(i + 1, expression, float(pointwise[idx]), float(r.sigma[idx]), per))
    return ReducedReport(r.subalgebra, equations, tolerance)


def reconstruct(r: ReducedSolution, fd_step: float = FD_STEP) -> Superfield:
    return ansatz_superfield(r.rep(), r.interpolants(), fd_step=fd_step)


def certify(r: ReducedSolution, window, tolerance: float, threads: int = 1,
            fd_step: float = FD_STEP) -> ResidualReport:
    """Full-equation residual of the reconstructed field over ``window``."""
    return residual_on_grid(reconstruct(r, fd_step), window, "shg", threads=threads, tolerance=tolerance)


def null_solution(sid: str, grid, epsilon: int = 1, generators: int = DEFAULT_GENERATORS,
                  mu: Optional[Supernumber] = None, nu: Optional[Supernumber] = None) -> ReducedSolution:
    """Phi = 0 sampled on ``grid``."""
    sigma = _grid(grid)
    zeros = np.zeros((len(sigma), 3, 1 << generators))
    return ReducedSolution(sid, epsilon, sigma, {name: zeros.copy() for name in SLOT_NAMES},
                           generators, mu=mu, nu=nu, meta={"solver": "null"})


# -- solvers --------------------------------------------------------------------


def split_bilinear(c0: Supernumber) -> Tuple[Supernumber, Supernumber]:
    """Odd (eta, lambda) with eta lambda = c0 for a single term c xi_i xi_j."""
    n = c0.generators
    terms = c0.terms
    if not terms:
        return _zero(n), _zero(n)
    if len(terms) != 1:
        raise ConfigurationError("C0 with several terms needs explicit ic eta and lambda")
    (mask, c), = terms.items()
    bits = [b for b in range(n) if mask >> b & 1]
    if len(bits) != 2:
        raise ConfigurationError("C0 must be c xi_i xi_j to split automatically; give ic eta and lambda")
    return Supernumber({1 << bits[0]: c}, n), Supernumber({1 << bits[1]: 1.0}, n)


def _odd_pair(c0: Optional[Supernumber], eta0: Optional[Supernumber], lambda0: Optional[Supernumber],
              generators: int, tolerance: float, weight: float = 1.0) -> Tuple[Supernumber, Supernumber, Supernumber]:
    """Initial odd data with eta0 lambda0 = weight c0; returns (eta0, lambda0, c0)."""
    if eta0 is None and lambda0 is None:
        c0 = c0 if c0 is not None else _zero(generators)
        eta0, lambda0 = split_bilinear(c0)
        eta0 = eta0 * weight
    else:
        eta0 = eta0 if eta0 is not None else _zero(generators)
        lambda0 = lambda0 if lambda0 is not None else _zero(generators)
    for name, value in (("eta", eta0), ("lambda", lambda0)):
        if not value.is_zero() and parity_of(value) is not Parity.ODD:
            raise ParityError(f"Initial {name} must be Odd")
    product = eta0 * lambda0 * (1.0 / weight)
    if c0 is None:
        c0 = product
    elif (product - c0).max_abs() > tolerance:
        raise ConstraintError(f"eta lambda = {product} does not match C0 = {c0}")
    return eta0, lambda0, c0


def _energy_gap(epsilon: int, alpha0: Supernumber, c0: Supernumber, c1: float) -> Supernumber:
    sh = gfunc("sinh", alpha0)
    return float(epsilon) * (c1 - 1.0 - sh * sh - 2.0 * (c0 * gfunc("cosh", alpha0)))


def _initial_slope(epsilon: int, alpha0: Supernumber, c0: Supernumber, c1: Optional[float],
                   dalpha0: Optional[Supernumber], branch: int) -> Supernumber:
    """alpha'(sigma0): explicit value wins, otherwise the energy relation with C1."""
    if dalpha0 is not None:
        return dalpha0
    if c1 is None:
        return _zero(alpha0.generators)
    gap = _energy_gap(epsilon, alpha0, c0, c1)
    if gap.is_zero():
        return gap
    if gap.body <= 0.0:
        raise DomainError(f"C1 = {c1} gives a negative squared slope at sigma0")
    return float(branch) * gfunc("sqrt", gap)


def _first_integral(epsilon: int, alpha: Supernumber, dalpha: Supernumber, c0: Supernumber) -> Supernumber:
    """C1 = 1 + eps alpha'^2 + sinh^2 alpha + 2 C0 cosh alpha."""
    sh = gfunc("sinh", alpha)
    return 1.0 + float(epsilon) * (dalpha * dalpha) + sh * sh + 2.0 * (c0 * gfunc("cosh", alpha))


def _check_even(name: str, value: Supernumber) -> Supernumber:
    if not value.is_zero() and parity_of(value) is not Parity.EVEN:
        raise ParityError(f"{name} must be Even")
    return value


def _beta_samples(alg: GrassmannAlgebra, sh, ch, da, dda) -> np.ndarray:
    mul = alg.mul
    return np.stack([-sh, -mul(ch, da), -(mul(sh, mul(da, da)) + mul(ch, dda))], axis=1)


def _s4_rhs(alg: GrassmannAlgebra, eps: float):
    mul = alg.mul

    def rhs(_, y):
        a, da, e, l = y
        sh, ch = alg.func("sinh", a), alg.func("cosh", a)
        dda = -eps * (mul(sh, ch) + mul(mul(e, l), sh))
        return np.stack([da, dda, -eps * mul(l, ch), mul(e, ch)])

    return rhs


def _s4_slots(alg: GrassmannAlgebra, eps: float, a, da, e, l) -> Dict[str, np.ndarray]:
    mul = alg.mul
    sh, ch = alg.func("sinh", a), alg.func("cosh", a)
    dda = -eps * (mul(sh, ch) + mul(mul(e, l), sh))
    de = -eps * mul(l, ch)
    dl = mul(e, ch)
    dde = -eps * (mul(dl, ch) + mul(l, mul(sh, da)))
    ddl = mul(de, ch) + mul(e, mul(sh, da))
    return {"alpha": np.stack([a, da, dda], axis=1), "eta": np.stack([e, de, dde], axis=1),
            "lambda": np.stack([l, dl, ddl], axis=1), "beta": _beta_samples(alg, sh, ch, da, dda)}


def _grid(grid) -> np.ndarray:
    if isinstance(grid, str):
        grid = parse_grid(grid).points()
    return np.asarray(grid, dtype=float)


def solve_S4(epsilon: int, c0: Optional[Supernumber], c1: Optional[float], alpha0: Supernumber,
             grid, dalpha0: Optional[Supernumber] = None, eta0: Optional[Supernumber] = None,
             lambda0: Optional[Supernumber] = None, branch: int = 1, substeps: int = 4,
             constraint_tolerance: float = 1e-8) -> ReducedSolution:
    """Travelling wave sigma = x - eps t: bosonic equation with the coupled odd pair."""
    n = alpha0.generators
    alg = get_algebra(n)
    sigma = _grid(grid)
    _check_even("alpha0", alpha0)
    eta0, lambda0, c0 = _odd_pair(c0, eta0, lambda0, n, constraint_tolerance)
    _check_even("C0", c0)
    slope = _check_even("dalpha0", _initial_slope(epsilon, alpha0, c0, c1, dalpha0, branch))
    states = rk4_ring(_s4_rhs(alg, float(epsilon)), [alpha0, slope, eta0, lambda0], sigma, substeps)
    a, da, e, l = (states[:, i] for i in range(4))

    drift = alg.max_abs(alg.mul(e, l) - c0.coeffs)
    if drift > constraint_tolerance:
        raise ConstraintError(f"eta lambda drifted from C0 by {drift:.3g}")
    first = _first_integral(epsilon, alpha0, slope, c0)
    return ReducedSolution("S4", epsilon, sigma, _s4_slots(alg, float(epsilon), a, da, e, l), n,
                           c0=c0, c1=first.body if c1 is None or dalpha0 is not None else c1,
                           meta={"solver": "S4", "substeps": substeps, "c1_ring": first.to_literal()})


def solve_S4_sol4(epsilon: int, k: Supernumber, alpha0: Supernumber, grid,
                  dalpha0: Optional[Supernumber] = None, f0: float = 0.0, df0: float = 1.0,
                  c1: Optional[float] = None, branch: int = 1, substeps: int = 4) -> ReducedSolution:
    """C0 = 0 branch with lambda = K f and eta = K f'/cosh(alpha)."""
    n = alpha0.generators
    alg = get_algebra(n)
    mul = alg.mul
    eps = float(epsilon)
    sigma = _grid(grid)
    if not k.is_zero() and parity_of(k) is not Parity.ODD:
        raise ParityError("K must be Odd")
    _check_even("alpha0", alpha0)
    zero = _zero(n)
    slope = _check_even("dalpha0", _initial_slope(epsilon, alpha0, zero, c1, dalpha0, branch))

    def rhs(_, y):
        a, da, f, df = y
        sh, ch = alg.func("sinh", a), alg.func("cosh", a)
        th = mul(sh, alg.inv(ch))
        return np.stack([da, -eps * mul(sh, ch), df, mul(mul(th, da), df) - eps * mul(mul(ch, ch), f)])

    one = Supernumber.scalar(1.0, n)
    states = rk4_ring(rhs, [alpha0, slope, one * f0, one * df0], sigma, substeps)
    a, da, f, df = (states[:, i] for i in range(4))
    sech = alg.inv(alg.func("cosh", a))
    kk = np.broadcast_to(k.coeffs, f.shape)
    e = mul(kk, mul(df, sech))
    l = mul(kk, f)
    slots = _s4_slots(alg, eps, a, da, e, l)
    ddf = rhs(None, np.stack([a, da, f, df]))[3]
    first = _first_integral(epsilon, alpha0, slope, zero)
    return ReducedSolution("S4", epsilon, sigma, slots, n, c0=zero, k=k, c1=first.body,
                           aux={"f": np.stack([f, df, ddf], axis=1)},
                           meta={"solver": "S4-sol4", "substeps": substeps})


def solve_S1(alpha0: Supernumber, dalpha0: Supernumber, grid, c0: Optional[Supernumber] = None,
             lambda0: Optional[Supernumber] = None, dlambda0: Optional[Supernumber] = None,
             substeps: int = 4, constraint_tolerance: float = 1e-8) -> ReducedSolution:
    """Scaling reduction sigma = x t with eta lambda = C0 sigma^(-1/2)."""
    n = alpha0.generators
    alg = get_algebra(n)
    mul = alg.mul
    sigma = _grid(grid)
    if np.any(sigma <= 0):
        raise DomainError("S1 needs a sigma grid with sigma > 0")
    _check_even("alpha0", alpha0)
    _check_even("dalpha0", dalpha0)
    s0 = float(sigma[0])
    ch0 = gfunc("cosh", alpha0)
    if lambda0 is None and dlambda0 is None:
        eta0, lambda0, c0 = _odd_pair(c0, None, None, n, constraint_tolerance, weight=s0 ** -0.5)
        dlambda0 = eta0 * ch0
    else:
        lambda0 = lambda0 if lambda0 is not None else _zero(n)
        dlambda0 = dlambda0 if dlambda0 is not None else _zero(n)
        eta0 = dlambda0 * gfunc("power", ch0, -1.0)
        _, _, c0 = _odd_pair(c0, eta0, lambda0, n, constraint_tolerance, weight=s0 ** -0.5)

    def rhs(s, y):
        a, da, l, dl = y
        sh, ch = alg.func("sinh", a), alg.func("cosh", a)
        sech = alg.inv(ch)
        e = mul(dl, sech)
        dda = (-da + mul(sh, ch) + mul(mul(e, l), sh)) / s
        ddl = -dl / (2 * s) + mul(mul(mul(sh, sech), da), dl) + mul(mul(ch, ch), l) / s
        return np.stack([da, dda, dl, ddl])

    states = rk4_ring(rhs, [alpha0, dalpha0, lambda0, dlambda0], sigma, substeps)
    a, da, l, dl = (states[:, i] for i in range(4))
    derivs = np.stack([rhs(s, y) for s, y in zip(sigma, states)])
    dda, ddl = derivs[:, 1], derivs[:, 3]
    sh, ch = alg.func("sinh", a), alg.func("cosh", a)
    sech = alg.inv(ch)
    s = sigma[:, None]
    e = mul(dl, sech)
    de = (mul(l, ch) - 0.5 * e) / s
    dde = (mul(dl, ch) + mul(l, mul(sh, da)) - 0.5 * de) / s - (mul(l, ch) - 0.5 * e) / s ** 2

    constraint = mul(e, l) * np.sqrt(s) - c0.coeffs
    drift = alg.max_abs(constraint)
    if drift > constraint_tolerance:
        raise ConstraintError(f"eta lambda sigma^(1/2) drifted from C0 by {drift:.3g}")
    slots = {"alpha": np.stack([a, da, dda], axis=1), "eta": np.stack([e, de, dde], axis=1),
             "lambda": np.stack([l, dl, ddl], axis=1), "beta": _beta_samples(alg, sh, ch, da, dda)}
    return ReducedSolution("S1", 1, sigma, slots, n, c0=c0, meta={"solver": "S1", "substeps": substeps})


def _s8_slots(alg, eps, mu, a, da, dda, f, df, ddf) -> Dict[str, np.ndarray]:
    mul = alg.mul
    sh, ch = alg.func("sinh", a), alg.func("cosh", a)
    m = np.broadcast_to(mu.coeffs, a.shape)
    l, dl, ddl = mul(m, f), mul(m, df), mul(m, ddf)
    e = eps * mul(m, mul(df, alg.inv(ch)))
    de = -mul(m, da) - mul(l, ch)
    dde = -mul(m, dda) - mul(dl, ch) - mul(l, mul(sh, da))
    return {"alpha": np.stack([a, da, dda], axis=1), "eta": np.stack([e, de, dde], axis=1),
            "lambda": np.stack([l, dl, ddl], axis=1), "beta": _beta_samples(alg, sh, ch, da, dda)}


def _s12_slots(alg, eps, nu, a, da, dda, f, df, ddf) -> Dict[str, np.ndarray]:
    mul = alg.mul
    sh, ch = alg.func("sinh", a), alg.func("cosh", a)
    v = np.broadcast_to(nu.coeffs, a.shape)
    e, de, dde = mul(v, f), mul(v, df), mul(v, ddf)
    l = mul(v, mul(df, alg.inv(ch)))
    dl = eps * (mul(v, da) - mul(e, ch))
    ddl = eps * (mul(v, dda) - mul(de, ch) - mul(e, mul(sh, da)))
    return {"alpha": np.stack([a, da, dda], axis=1), "eta": np.stack([e, de, dde], axis=1),
            "lambda": np.stack([l, dl, ddl], axis=1), "beta": _beta_samples(alg, sh, ch, da, dda)}


def _f_rhs(alg: GrassmannAlgebra, eps: float, forcing: float):
    """alpha'' = -eps sinh cosh; f'' = tanh(alpha) alpha' f' - eps cosh^2 f + forcing eps cosh alpha'."""
    mul = alg.mul

    def rhs(_, y):
        a, da, f, df = y
        sh, ch = alg.func("sinh", a), alg.func("cosh", a)
        th = mul(sh, alg.inv(ch))
        ddf = mul(mul(th, da), df) - eps * mul(mul(ch, ch), f) + forcing * eps * mul(ch, da)
        return np.stack([da, -eps * mul(sh, ch), df, ddf])

    return rhs


def solve_S8_S12(sid: str, epsilon: int, coupling: Supernumber, alpha0: Supernumber, grid,
                 dalpha0: Optional[Supernumber] = None, f0: float = 0.0, df0: float = 0.0,
                 c1: Optional[float] = None, branch: int = 1, substeps: int = 4) -> ReducedSolution:
    """Odd-shifted travelling waves: lambda = mu f (S8) or eta = nu f (S12)."""
    if sid not in ("S8", "S12"):
        raise ConfigurationError(f"solve_S8_S12 handles S8 and S12, not {sid}")
    n = alpha0.generators
    alg = get_algebra(n)
    eps = float(epsilon)
    sigma = _grid(grid)
    if not coupling.is_zero() and parity_of(coupling) is not Parity.ODD:
        raise ParityError(f"{'mu' if sid == 'S8' else 'nu'} must be Odd")
    _check_even("alpha0", alpha0)
    zero = _zero(n)
    slope = _check_even("dalpha0", _initial_slope(epsilon, alpha0, zero, c1, dalpha0, branch))
    rhs = _f_rhs(alg, eps, -1.0 if sid == "S8" else 1.0)
    one = Supernumber.scalar(1.0, n)
    states = rk4_ring(rhs, [alpha0, slope, one * f0, one * df0], sigma, substeps)
    derivs = np.stack([rhs(s, y) for s, y in zip(sigma, states)])
    a, da, f, df = (states[:, i] for i in range(4))
    dda, ddf = derivs[:, 1], derivs[:, 3]
    build = _s8_slots if sid == "S8" else _s12_slots
    first = _first_integral(epsilon, alpha0, slope, zero)
    params = {"mu": coupling} if sid == "S8" else {"nu": coupling}
    return ReducedSolution(sid, epsilon, sigma, build(alg, eps, coupling, a, da, dda, f, df, ddf), n,
                           c0=zero, c1=first.body, aux={"f": np.stack([f, df, ddf], axis=1)},
                           meta={"solver": sid, "substeps": substeps}, **params)


def mirror_s8_to_s12(r8: ReducedSolution) -> ReducedSolution:
    """S12 solution from an S8 one: alpha12(s) = alpha8(eps s), f12(s) = -eps f8(eps s), nu = mu."""
    if r8.subalgebra != "S8" or "f" not in r8.aux:
        raise ConfigurationError("mirror_s8_to_s12 needs an S8 solution from solve_S8_S12")
    eps = float(r8.epsilon)
    alg = r8.algebra
    order = slice(None) if eps > 0 else slice(None, None, -1)
    sigma = (eps * r8.sigma)[order]
    alpha = r8.slots["alpha"][order]
    f8 = r8.aux["f"][order]
    a, da, dda = alpha[:, 0], eps * alpha[:, 1], alpha[:, 2]
    f, df, ddf = -eps * f8[:, 0], -f8[:, 1], -eps * f8[:, 2]
    slots = _s12_slots(alg, eps, r8.mu, a, da, dda, f, df, ddf)
    return ReducedSolution("S12", r8.epsilon, sigma, slots, r8.generators, c0=r8.c0, nu=r8.mu,
                           c1=r8.c1, aux={"f": np.stack([f, df, ddf], axis=1)},
                           meta={**r8.meta, "mirrored_from": "S8"})


# -- conserved quantities and constraints -------------------------------------------


def energy(r: ReducedSolution) -> Tuple[np.ndarray, float]:
    """E = (eps/2) alpha'^2 + sinh^2(alpha)/2 + C0 cosh(alpha) per grid point and its max drift."""
    alg = r.algebra
    mul = alg.mul
    a, da = r.value("alpha"), r.value("alpha", 1)
    sh, ch = alg.func("sinh", a), alg.func("cosh", a)
    c0 = np.broadcast_to(r.c0.coeffs, a.shape)
    e = 0.5 * r.epsilon * mul(da, da) + 0.5 * mul(sh, sh) + mul(c0, ch)
    return e, alg.max_abs(e - e[0])


def s4_constraint_residual(r: ReducedSolution) -> np.ndarray:
    """eta lambda - C0 (S4) or eta lambda sigma^(1/2) - C0 (S1)."""
    alg = r.algebra
    product = alg.mul(r.value("eta"), r.value("lambda"))
    if r.subalgebra == "S1":
        product = product * np.sqrt(r.sigma)[:, None]
    return product - r.c0.coeffs


def s8_constraint_residual(r: ReducedSolution) -> np.ndarray:
    """(eta lambda)' + alpha' mu lambda on the grid."""
    if r.subalgebra != "S8":
        raise ConfigurationError("The eta lambda constraint with mu applies to S8")
    alg = r.algebra
    mul = alg.mul
    e, de = r.value("eta"), r.value("eta", 1)
    l, dl = r.value("lambda"), r.value("lambda", 1)
    m = np.broadcast_to(r.mu.coeffs, e.shape)
    return mul(de, l) + mul(e, dl) + mul(r.value("alpha", 1), mul(m, l))


@dataclass
class ImplicitRelationCheck:
    """Travelling-wave relation 4 y'^2 = eps f(y), y = exp(alpha), on the body."""

    pointwise_max: float
    segments: List[Dict]
    max_relative_error: float

    def passed(self, tolerance: float = 1e-6) -> bool:
        return self.max_relative_error < tolerance and self.pointwise_max < tolerance

    def to_dict(self) -> Dict:
        return {"pointwise_max": self.pointwise_max, "segments": self.segments,
                "max_relative_error": self.max_relative_error}


def _monotone_runs(slope: np.ndarray) -> List[Tuple[int, int]]:
    """Index ranges on which alpha' keeps one sign (|alpha'| < TURNING_SLOPE splits)."""
    sign = np.where(np.abs(slope) < TURNING_SLOPE, 0, np.sign(slope))
    runs, start = [], None
    for i, s in enumerate(sign):
        if s == 0:
            if start is not None:
                runs.append((start, i - 1))
            start = None
        elif start is None:
            start = i
        elif s != sign[start]:
            runs.append((start, i - 1))
            start = i
    if start is not None:
        runs.append((start, len(sign) - 1))
    return [(a, b) for a, b in runs if b > a]


def implicit_relation_residual(r: ReducedSolution, method: str = "tanh-sinh",
                               max_segments: int = 16) -> ImplicitRelationCheck:
    """Compare the integrated trajectory with the quadrature of 2 dy / sqrt(eps f(y)).

    Inside a monotone run the integral between the end samples must equal the
    sigma span; across a turning point the integral to the nearest real root
    and back must equal the gap between the neighbouring samples.
    """
    if r.subalgebra not in ("S4", "S8", "S12"):
        raise ConfigurationError("The travelling-wave relation applies to S4, S8 and S12")
    eps = float(r.epsilon)
    c0 = r.c0.body
    a, da = r.value("alpha")[:, 0], r.value("alpha", 1)[:, 0]
    y, dy = np.exp(a), np.exp(a) * da
    c1 = r.c1 if r.c1 is not None else _first_integral(
        r.epsilon, Supernumber.scalar(a[0], r.generators), Supernumber.scalar(da[0], r.generators),
        Supernumber.scalar(c0, r.generators)).body

    scale = np.maximum(1.0, np.abs(4 * dy ** 2))
    pointwise = float(np.max(np.abs(4 * dy ** 2 - eps * quartic_value(y, c1, c0)) / scale))

    def integrand(u):
        value = eps * float(quartic_value(u, c1, c0))
        return 2.0 / math.sqrt(value) if value > 0 else 0.0

    def path_integral(lo, hi):
        if lo == hi:
            return 0.0
        sign = 1.0 if hi > lo else -1.0
        return sign * float(quadrature(integrand, min(lo, hi), max(lo, hi), method=method))

    segments, worst = [], 0.0
    runs = _monotone_runs(da)[:max_segments]
    for (i0, i1) in runs:
        expected = r.sigma[i1] - r.sigma[i0]
        got = abs(path_integral(y[i0], y[i1]))
        err = abs(got - expected) / max(1.0, abs(expected))
        segments.append({"kind": "monotone", "sigma": [float(r.sigma[i0]), float(r.sigma[i1])],
                         "integral": got, "expected": float(expected), "relative_error": err})
        worst = max(worst, err)
    roots = quartic_roots(c1, c0)
    for (_, prev_end), (next_start, _) in zip(runs, runs[1:]):
        if roots.size == 0 or next_start - prev_end > 2:
            continue
        turn = float(roots[np.argmin(np.abs(roots - y[prev_end]))])
        got = abs(path_integral(y[prev_end], turn)) + abs(path_integral(turn, y[next_start]))
        expected = r.sigma[next_start] - r.sigma[prev_end]
        err = abs(got - expected) / max(1.0, abs(expected))
        segments.append({"kind": "turning", "sigma": [float(r.sigma[prev_end]), float(r.sigma[next_start])],
                         "root": turn, "integral": got, "expected": float(expected),
                         "relative_error": err})
        worst = max(worst, err)
    return ImplicitRelationCheck(pointwise, segments, worst)


# -- dispatch from a run configuration -------------------------------------------------


def solve_run(run, substeps: int = 4) -> ReducedSolution:
    """Pick the solver for ``run.subalgebra`` and feed it the run's literals and ics."""
    sid = run.subalgebra
    _require_standard(sid)
    if sid not in SOLVABLE_IDS:
        raise NotReducible(f"{sid} reduces to the null solution only; nothing to integrate")
    n = run.n_generators
    zero = _zero(n)
    alpha0 = run.ic_value("alpha") or zero
    dalpha0 = run.ic_value("dalpha")
    tol = run.constraint_tolerance or 1e-8
    grid = run.grid

    def real_ic(name, default):
        value = run.ic_value(name)
        return default if value is None else value.body

    if sid == "S4":
        k = run.literal("k")
        if not k.is_zero():
            return solve_S4_sol4(run.epsilon, k, alpha0, grid, dalpha0, real_ic("f", 0.0),
                                 real_ic("df", 1.0), run.c1, run.branch, substeps)
        c0 = run.literal("c0") if run.c0 is not None else None
        return solve_S4(run.epsilon, c0, run.c1, alpha0, grid, dalpha0, run.ic_value("eta"),
                        run.ic_value("lambda"), run.branch, substeps, tol)
    if sid == "S1":
        c0 = run.literal("c0") if run.c0 is not None else None
        return solve_S1(alpha0, dalpha0 or zero, grid, c0, run.ic_value("lambda"),
                        run.ic_value("dlambda"), substeps, tol)
    coupling = run.literal("mu" if sid == "S8" else "nu")
    return solve_S8_S12(sid, run.epsilon, coupling, alpha0, grid, dalpha0, real_ic("f", 0.0),
                        real_ic("df", 0.0), run.c1, run.branch, substeps)
