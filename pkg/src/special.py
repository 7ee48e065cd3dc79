"""Elliptic functions, quartic invariants and ring-generic numerics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

import mpmath
import numpy as np
from scipy import integrate, optimize, special as sp_special

from .errors import DomainError, NotInvertible, NumericalError, ParityError, PoleError
from .grassmann import DEFAULT_GENERATORS, Parity, Supernumber, ginv, parity_of

AGM_TOLERANCE = 1e-15
POLE_THRESHOLD = 1e-8
# |z| after halving; the Laurent series is summed to LAURENT_TERMS coefficients
LAURENT_RADIUS = 0.05
LAURENT_TERMS = 14

RingScalar = Union[float, Supernumber]


# -- Jacobi elliptic functions ---------------------------------------------


def agm(a: float, b: float, tol: float = AGM_TOLERANCE) -> float:
    """Arithmetic-geometric mean."""
    for _ in range(64):
        if abs(a - b) <= tol * abs(a):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def _check_modulus(k: float) -> float:
    k = float(k)
    if not 0.0 <= k * k <= 1.0:
        raise DomainError(f"Modulus must satisfy 0 <= k^2 <= 1, got k = {k}")
    return abs(k)


def jacobi_sncndn(u, k: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """sn, cn, dn by the descending AGM scheme (https://dlmf.nist.gov/22.20#ii)."""
    k = _check_modulus(k)
    u = np.asarray(u, dtype=float)
    if k == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    if k == 1.0:
        sech = 1.0 / np.cosh(u)
        return np.tanh(u), sech, sech.copy()

    a, b, c = [1.0], [math.sqrt(1.0 - k * k)], [k]
    while len(a) < 2 or (abs(c[-1]) > AGM_TOLERANCE and len(a) < 64):
        a.append(0.5 * (a[-1] + b[-1]))
        b.append(math.sqrt(a[-2] * b[-1]))
        c.append(0.5 * (a[-2] - b[-2]))
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u
    previous = phi
    for i in range(n, 0, -1):
        previous = phi
        phi = 0.5 * (phi + np.arcsin(c[i] / a[i] * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = cn / np.cos(previous - phi)
    return sn, cn, dn


def complete_elliptic_K(k: float) -> float:
    """K(k) = pi / (2 agm(1, k'))."""
    k = _check_modulus(k)
    if k == 1.0:
        raise DomainError("K(k) diverges at k = 1")
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - k * k)))


def elliptic_F(x: float, k: float, convention: str = "argument") -> float:
    """Incomplete integral of the first kind via Carlson's R_F.

    ``argument``: F(x, k) = int_0^x dt / sqrt((1 - t^2)(1 - k^2 t^2)), |x| <= 1.
    ``amplitude``: F(phi, k) = int_0^phi dθ / sqrt(1 - k^2 sin^2 θ), any real phi.
    """
    k = _check_modulus(k)
    if convention == "argument":
        if abs(x) > 1.0:
            raise DomainError(f"Argument convention needs |x| <= 1, got {x}")
        phi = math.asin(x)
    elif convention == "amplitude":
        phi = float(x)
    else:
        raise DomainError(f"Unknown convention '{convention}'")

    periods = round(phi / math.pi)
    reduced = phi - periods * math.pi
    s, c = math.sin(reduced), math.cos(reduced)
    if k == 1.0 and abs(reduced) >= math.pi / 2:
        raise DomainError("F(pi/2, 1) diverges")
    value = s * float(sp_special.elliprf(c * c, 1.0 - k * k * s * s, 1.0))
    if periods:
        value += 2 * periods * complete_elliptic_K(k)
    return value


def jacobi_branch_valid(epsilon: int, C1: float, convention: str = "modulus") -> bool:
    """Whether the travelling-wave modulus lies in 0 < k^2 < 1.

    ``modulus`` uses k = 2 eps / (4 C1 + eps); ``sqrt`` uses k^2 = 2 eps / (4 C1 + eps).
    """
    if convention not in ("modulus", "sqrt"):
        raise DomainError(f"Unknown modulus convention '{convention}'")
    denominator = 4.0 * C1 + epsilon
    if denominator == 0.0:
        return False
    ratio = 2.0 * epsilon / denominator
    k2 = ratio * ratio if convention == "modulus" else ratio
    return 0.0 < k2 < 1.0


# -- quartic and Weierstrass ------------------------------------------------


def _as_ring(value: RingScalar, generators: int) -> Supernumber:
    if isinstance(value, Supernumber):
        if parity_of(value) is not Parity.EVEN:
            raise ParityError(f"Expected an Even element, got {parity_of(value)}")
        return value
    return Supernumber.scalar(float(value), generators)


def _generators_of(*values) -> int:
    for v in values:
        if isinstance(v, Supernumber):
            return v.generators
    return DEFAULT_GENERATORS


def quartic_coefficients(C0: RingScalar, C1: float, epsilon: int = 1) -> Tuple[Supernumber, ...]:
    """(a0, a1, a2, a3, a4) of eps*f with f = a0 y^4 + 4a1 y^3 + 6a2 y^2 + 4a3 y + a4."""
    n = _generators_of(C0)
    C0 = _as_ring(C0, n)
    e = float(epsilon)
    one = Supernumber.scalar(1.0, n)
    return (-e * one, -e * C0, e * (2.0 * C1 - 1.0) / 3.0 * one, -e * C0, -e * one)


@dataclass
class QuarticInvariants:
    """Weierstrass invariants of the travelling-wave quartic in two forms."""

    classical_g2: Supernumber
    classical_g3: Supernumber
    quoted_g2: Supernumber
    quoted_g3: Supernumber

    @property
    def g2(self) -> Supernumber:
        return self.classical_g2

    @property
    def g3(self) -> Supernumber:
        return self.classical_g3

    @property
    def g2_discrepancy(self) -> Supernumber:
        return self.quoted_g2 - self.classical_g2

    @property
    def g3_discrepancy(self) -> Supernumber:
        return self.quoted_g3 - self.classical_g3

    def agree(self, atol: float = 1e-12) -> Tuple[bool, bool]:
        return self.g2_discrepancy.max_abs() <= atol, self.g3_discrepancy.max_abs() <= atol

    def to_dict(self) -> dict:
        g2_ok, g3_ok = self.agree()
        return {
            "classical": {"g2": self.classical_g2.to_literal(), "g3": self.classical_g3.to_literal()},
            "quoted": {"g2": self.quoted_g2.to_literal(), "g3": self.quoted_g3.to_literal()},
            "g2_agrees": g2_ok,
            "g3_agrees": g3_ok,
            "g3_discrepancy": self.g3_discrepancy.to_literal(),
        }


def classical_invariants(a: Sequence[Supernumber]) -> Tuple[Supernumber, Supernumber]:
    a0, a1, a2, a3, a4 = a
    g2 = a0 * a4 - 4.0 * (a1 * a3) + 3.0 * (a2 * a2)
    g3 = a0 * a2 * a4 + 2.0 * (a1 * a2 * a3) - a2 * a2 * a2 - a0 * a3 * a3 - a1 * a1 * a4
    return g2, g3


def quartic_invariants(C0: RingScalar, C1: float) -> QuarticInvariants:
    """Classical invariants of f next to the closed forms quoted alongside the Weierstrass solution."""
    n = _generators_of(C0)
    C0 = _as_ring(C0, n)
    one = Supernumber.scalar(1.0, n)
    g2, g3 = classical_invariants(quartic_coefficients(C0, C1))
    C0sq = C0 * C0
    quoted_g2 = 4.0 / 3.0 * one - 4.0 * C0sq + 4.0 / 3.0 * C1 * (C1 - 1.0) * one
    quoted_g3 = ((4.0 / 9.0 * C1 - 8.0 / 27.0 - 8.0 / 27.0 * C1 ** 3 + 4.0 / 9.0 * C1 ** 2) * one
                 + (2.0 / 3.0 * C1 - 7.0 / 3.0) * C0sq)
    return QuarticInvariants(g2, g3, quoted_g2, quoted_g3)


def quartic_roots(C1: float, C0: float = 0.0) -> np.ndarray:
    """Real roots of f(y) = -y^4 - 4C0 y^3 + (4C1 - 2) y^2 - 4C0 y - 1, ascending."""
    roots = np.roots([-1.0, -4.0 * C0, 4.0 * C1 - 2.0, -4.0 * C0, -1.0])
    real = roots[np.abs(roots.imag) < 1e-10].real
    return np.sort(real)


def quartic_value(y, C1: float, C0: float = 0.0, order: int = 0):
    """f(y) and its first two derivatives for real C0."""
    y = np.asarray(y, dtype=float)
    if order == 0:
        return -y ** 4 - 4 * C0 * y ** 3 + (4 * C1 - 2) * y ** 2 - 4 * C0 * y - 1
    if order == 1:
        return -4 * y ** 3 - 12 * C0 * y ** 2 + 2 * (4 * C1 - 2) * y - 4 * C0
    if order == 2:
        return -12 * y ** 2 - 24 * C0 * y + 2 * (4 * C1 - 2)
    raise DomainError(f"Unsupported derivative order {order}")


def _laurent_coefficients(g2: Supernumber, g3: Supernumber, terms: int):
    c = {2: g2 / 20.0, 3: g3 / 28.0}
    for k in range(4, terms + 1):
        total = c[2] * 0.0
        for m in range(2, k - 1):
            total = total + c[m] * c[k - m]
        c[k] = total * (3.0 / ((2 * k + 1) * (k - 3)))
    return c


def weierstrass_p(z: float, g2: RingScalar, g3: RingScalar,
                  derivative: bool = False) -> Union[Supernumber, Tuple[Supernumber, Supernumber]]:
    """Weierstrass P(z; g2, g3) over the even ring, optionally with P'(z).

    Laurent series at a small argument, then repeated duplication; every step
    is a ring operation so a nilpotent part of (g2, g3) propagates exactly.
    """
    z = float(z)
    if abs(z) < POLE_THRESHOLD:
        raise PoleError(f"|z| = {abs(z):g} is within the pole threshold")
    n = _generators_of(g2, g3)
    g2, g3 = _as_ring(g2, n), _as_ring(g3, n)
    scale = 1.0 + abs(g2.body) ** 0.25 + abs(g3.body) ** (1.0 / 6.0)
    halvings = max(0, math.ceil(math.log2(abs(z) * scale / LAURENT_RADIUS)))
    w = z / 2.0 ** halvings

    c = _laurent_coefficients(g2, g3, LAURENT_TERMS)
    one = Supernumber.scalar(1.0, n)
    P = one * w ** -2
    dP = one * (-2.0 * w ** -3)
    for k, ck in c.items():
        P = P + ck * w ** (2 * k - 2)
        dP = dP + ck * ((2 * k - 2) * w ** (2 * k - 3))

    for _ in range(halvings):
        N = 6.0 * (P * P) - 0.5 * g2
        D = 4.0 * (P * P * P) - g2 * P - g3
        try:
            Dinv = ginv(D)
        except NotInvertible:
            raise NumericalError(f"Duplication hit a half-period near z = {z:g}")
        Rprime = 6.0 * (N * P * Dinv) - (N * N) * (12.0 * (P * P) - g2) * (Dinv * Dinv) * 0.25 - 2.0
        dP = Rprime * dP * 0.5
        P = (N * N) * Dinv * 0.25 - 2.0 * P
    if not (np.all(np.isfinite(P.coeffs)) and np.all(np.isfinite(dP.coeffs))):
        raise NumericalError(f"Non-finite Weierstrass value at z = {z:g}")
    return (P, dP) if derivative else P


def weierstrass_form_y(sigma: float, C1: float, root: float, epsilon: int = 1,
                       sigma0: float = 0.0) -> Tuple[float, float]:
    """y(sigma) and y'(sigma) from the rational Weierstrass form with y(sigma0) = root.

    Solves 4 y'^2 = eps f(y) (real C0 = 0): with z = (sigma - sigma0)/2 one has
    (dy/dz)^2 = eps f(y) and y = y0 + (f'(y0)/4) / (P(z) - f''(y0)/24).
    """
    e = float(epsilon)
    fp = e * float(quartic_value(root, C1, order=1))
    fpp = e * float(quartic_value(root, C1, order=2))
    g2, g3 = classical_invariants(quartic_coefficients(0.0, C1, epsilon))
    z = 0.5 * (sigma - sigma0)
    P, dP = weierstrass_p(z, g2.body, g3.body, derivative=True)
    denom = P.body - fpp / 24.0
    if denom == 0.0:
        raise PoleError(f"Weierstrass form is singular at sigma = {sigma:g}")
    y = root + 0.25 * fp / denom
    dy = -0.25 * fp * dP.body * 0.5 / denom ** 2
    return y, dy


@dataclass
class EllipticParams:
    g2: Supernumber
    g3: Supernumber
    k: float
    coefficients: Tuple[Supernumber, ...]

    def to_dict(self) -> dict:
        return {"g2": self.g2.to_literal(), "g3": self.g3.to_literal(), "k": self.k,
                "coefficients": [a.to_literal() for a in self.coefficients]}


def elliptic_params(C0: RingScalar, C1: float, epsilon: int = 1) -> EllipticParams:
    coefficients = quartic_coefficients(C0, C1, epsilon)
    g2, g3 = classical_invariants(coefficients)
    denominator = 4.0 * C1 + epsilon
    k = 2.0 * epsilon / denominator if denominator else math.inf
    return EllipticParams(g2, g3, k, coefficients)


# -- ring-generic integration and scalar numerics ------------------------------


def rk4_ring(f: Callable[[float, np.ndarray], np.ndarray], state0, grid: Sequence[float],
             substeps: int = 1) -> np.ndarray:
    """Classical RK4 on coefficient arrays; returns the state at every grid point.

    ``state0`` is an array of shape ``(m, 2**N)`` (or a sequence of Supernumbers);
    ``f`` must use ring products only, so the soul evolves by the variational equations.
    """
    if len(state0) and isinstance(state0[0], Supernumber):
        state0 = np.array([s.coeffs for s in state0])
    state = np.array(state0, dtype=float)
    grid = np.asarray(grid, dtype=float)
    out = np.empty((len(grid),) + state.shape)
    out[0] = state
    for i in range(len(grid) - 1):
        h = (grid[i + 1] - grid[i]) / substeps
        s = grid[i]
        for _ in range(substeps):
            state = _rk4_step(f, s, state, h)
            s += h
        if not np.all(np.isfinite(state[..., 0])):
            raise NumericalError(f"RK4 state became non-finite near sigma = {grid[i + 1]:g}")
        out[i + 1] = state
    return out


def _rk4_step(f, s, x, h):
    k1 = f(s, x)
    k2 = f(s + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(s + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(s + h, x + h * k3)
    return x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def quadrature(f: Callable, a: float, b: float, method: str = "adaptive",
               tol: float = 1e-10) -> Union[float, np.ndarray, Supernumber]:
    """Integral of a real, array or Supernumber valued function.

    ``adaptive`` uses scipy quad (quad_vec for non-scalars); ``tanh-sinh`` uses
    mpmath and tolerates integrable endpoint singularities.
    """
    if method == "tanh-sinh":
        with mpmath.workdps(30):
            value = mpmath.quad(lambda s: f(float(s)), [a, b], method="tanh-sinh")
        value = float(value)
    elif method == "adaptive":
        probe = f(0.5 * (a + b))
        if isinstance(probe, Supernumber):
            algebra = probe.algebra
            coeffs, _ = integrate.quad_vec(lambda s: f(s).coeffs, a, b, epsabs=tol, epsrel=tol)
            value = Supernumber.from_array(coeffs, algebra)
            if not np.all(np.isfinite(coeffs)):
                raise NumericalError("Non-finite quadrature result")
            return value
        if np.ndim(probe):
            value, _ = integrate.quad_vec(f, a, b, epsabs=tol, epsrel=tol)
        else:
            value, _ = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
    else:
        raise DomainError(f"Unknown quadrature method '{method}'")
    if not np.all(np.isfinite(value)):
        raise NumericalError("Non-finite quadrature result")
    return value


def brent_root(g: Callable[[float], float], bracket: Tuple[float, float], tol: float = 1e-12) -> float:
    """Root of g inside a sign-changing bracket."""
    lo, hi = bracket
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return float(lo)
    if ghi == 0.0:
        return float(hi)
    if np.sign(glo) == np.sign(ghi):
        raise DomainError(f"Bracket [{lo}, {hi}] does not change sign")
    try:
        return float(optimize.brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200))
    except RuntimeError as e:
        raise NumericalError(f"Root finding did not converge: {e}")
