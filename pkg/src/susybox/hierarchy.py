"""Supersymmetric partner hierarchy of the centered 1D box.

Order alpha = 1 is the infinite box of width L centered at the origin. Each
higher order removes the previous ground state while keeping the rest of
the spectrum: E_n(alpha) = (n + alpha - 1)^2 pi^2 hbar^2 / (2 m L^2).
Adjacent orders are connected by first-order ladder operators A, A^dagger
built from the superpotential W(x) = alpha hbar pi tan(pi x / L) / (sqrt(2m) L).

Everything is expressed on the scaled coordinate y = x / L in [-1/2, 1/2];
a physical wavefunction is phi(x / L) / sqrt(L). Eigenstates take the form
cos^alpha(pi y) C^(alpha)_{n-1}(sin pi y) with ultraspherical (Gegenbauer)
polynomials C, normalized numerically. The global sign convention keeps the
leading Gegenbauer coefficient positive, which makes the ladder relations
hold with a plus sign: A phi_n^(alpha) = sqrt(dE_n) phi_{n-1}^(alpha+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .numerics import QuadratureRule, gauss_legendre, inner_product

# Box length for which the base ground-state energy is exactly 1 in natural
# units; used as the default initial length throughout.
DEFAULT_BOX_LENGTH = math.pi / math.sqrt(2.0)


@dataclass(frozen=True)
class PhysicalUnits:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0.0 or self.mass <= 0.0:
            raise ValueError("hbar and mass must be strictly positive")


NATURAL_UNITS = PhysicalUnits()


@dataclass(frozen=True)
class HierarchySpec:
    """One member of the hierarchy: order alpha at base length L_i."""

    alpha: int
    L_i: float = DEFAULT_BOX_LENGTH
    units: PhysicalUnits = NATURAL_UNITS

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 1:
            raise ValueError("alpha must be an integer >= 1")
        if self.L_i <= 0.0:
            raise ValueError("L_i must be positive")


@dataclass(frozen=True)
class EigenIndex:
    """State label (alpha, n); the ground state is n = 1."""

    alpha: int
    n: int

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1 (ground state is n = 1)")


def _gegenbauer_table(alpha: float, kmax: int, z: np.ndarray) -> np.ndarray:
    """C_k^(alpha)(z) for k = 0..kmax via the standard three-term recurrence."""
    z = np.asarray(z, dtype=float)
    table = np.zeros((kmax + 1,) + z.shape)
    table[0] = 1.0
    if kmax >= 1:
        table[1] = 2.0 * alpha * z
    for k in range(2, kmax + 1):
        table[k] = (2.0 * (k + alpha - 1.0) * z * table[k - 1]
                    - (k + 2.0 * alpha - 2.0) * table[k - 2]) / k
    return table


def _norm_rule() -> QuadratureRule:
    return gauss_legendre(200)


class ScaledEigenstate:
    """Instantaneous eigenstate on the scaled coordinate, unit L2 norm.

    Immutable after construction and safe to share between threads. The
    derivative methods are analytic (recurrence-based), never finite
    differences.
    """

    def __init__(self, index: EigenIndex, norm_constant: float):
        self.index = index
        self.norm_constant = float(norm_constant)

    def __repr__(self):
        return f"ScaledEigenstate(alpha={self.index.alpha}, n={self.index.n})"

    def _pieces(self, y):
        y = np.asarray(y, dtype=float)
        a, n = self.index.alpha, self.index.n
        s = np.sin(np.pi * y)
        c = np.cos(np.pi * y)
        table = _gegenbauer_table(a, n - 1, s)
        return y, a, n, s, c, table

    def evaluate(self, y) -> np.ndarray:
        y, a, n, s, c, table = self._pieces(y)
        return self.norm_constant * c ** a * table[n - 1]

    def evaluate_dy(self, y) -> np.ndarray:
        y, a, n, s, c, table = self._pieces(y)
        if n >= 2:
            cd = 2.0 * a * _gegenbauer_table(a + 1, n - 2, s)[n - 2]
        else:
            cd = np.zeros_like(s)
        out = np.pi * c ** (a - 1) * (-a * s * table[n - 1] + c * c * cd)
        return self.norm_constant * out

    def evaluate_d2y(self, y) -> np.ndarray:
        y, a, n, s, c, table = self._pieces(y)
        if n >= 2:
            cd = 2.0 * a * _gegenbauer_table(a + 1, n - 2, s)[n - 2]
        else:
            cd = np.zeros_like(s)
        if n >= 3:
            cdd = 4.0 * a * (a + 1) * _gegenbauer_table(a + 2, n - 3, s)[n - 3]
        else:
            cdd = np.zeros_like(s)
        # The cos^(alpha-2) factor carries an (alpha - 1) prefactor, so the
        # wall behaviour is regular for every alpha >= 1.
        if a >= 2:
            first = (a - 1.0) * c ** (a - 2) * s * (a * s * table[n - 1] - c * c * cd)
        else:
            first = np.zeros_like(s)
        second = c ** a * (-a * table[n - 1] - (a + 2.0) * s * cd + c * c * cdd)
        return self.norm_constant * np.pi ** 2 * (first + second)


@lru_cache(maxsize=4096)
def _eigenstate_cached(alpha: int, n: int) -> ScaledEigenstate:
    rule = _norm_rule()
    raw = ScaledEigenstate(EigenIndex(alpha, n), 1.0)
    norm2 = inner_product(raw.evaluate, raw.evaluate, rule)
    return ScaledEigenstate(EigenIndex(alpha, n), 1.0 / math.sqrt(norm2))


def eigenstate(index: EigenIndex) -> ScaledEigenstate:
    """Normalized scaled eigenstate phi_n^(alpha)(y); cached per index."""
    return _eigenstate_cached(index.alpha, index.n)


def energy(index: EigenIndex, L: float, units: PhysicalUnits = NATURAL_UNITS) -> float:
    """Instantaneous eigenenergy (n + alpha - 1)^2 pi^2 hbar^2 / (2 m L^2)."""
    if L <= 0.0:
        raise ValueError("L must be positive")
    k = index.n + index.alpha - 1
    return (k * np.pi * units.hbar) ** 2 / (2.0 * units.mass * L ** 2)


def energy_gap(index: EigenIndex, L: float, units: PhysicalUnits = NATURAL_UNITS) -> float:
    """dE_n^(alpha) = E_n - E_1, the ladder normalization of order alpha."""
    return energy(index, L, units) - energy(EigenIndex(index.alpha, 1), L, units)


def superpotential(spec: HierarchySpec, x, L: float):
    """W^(alpha)(x) = alpha hbar pi tan(pi x / L) / (sqrt(2 m) L).

    Diverges at the walls; |x| >= L/2 is a domain error.
    """
    if L <= 0.0:
        raise ValueError("L must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= L / 2.0):
        raise ValueError("superpotential is only defined strictly inside the walls")
    u = spec.units
    w = spec.alpha * u.hbar * np.pi / (math.sqrt(2.0 * u.mass) * L) * np.tan(np.pi * x / L)
    return w if w.shape else float(w)


def potential(spec: HierarchySpec, x, L: float):
    """Partner potential of order alpha at box width L.

    alpha = 1 is the box itself: 0 inside, an infinity sentinel outside.
    alpha >= 2 follows from the pair construction W^2 + W' of the previous
    order, i.e. [(alpha-1)^2 tan^2 + (alpha-1) sec^2] in units of
    hbar^2 pi^2 / (2 m L^2); outside the walls the sentinel is returned.
    """
    if L <= 0.0:
        raise ValueError("L must be positive")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    inside = np.abs(x) < L / 2.0
    u = spec.units
    unit = (u.hbar * np.pi) ** 2 / (2.0 * u.mass * L ** 2)
    out = np.full(x.shape, np.inf)
    if spec.alpha == 1:
        out[inside] = 0.0
    else:
        a = spec.alpha
        t = np.tan(np.pi * x[inside] / L)
        sec2 = 1.0 / np.cos(np.pi * x[inside] / L) ** 2
        out[inside] = unit * ((a - 1) ** 2 * t ** 2 + (a - 1) * sec2)
    return float(out[0]) if scalar else out


def eigenstate_dt(state: ScaledEigenstate, L: float, Ldot: float) -> Callable:
    """Exact time derivative of psi(x,t) = phi(x/L)/sqrt(L) under wall motion.

    Scale invariance gives d/dt psi = (Ldot/L) L^{-1/2} [-phi/2 - y phi'](y)
    at y = x/L; this reproduces the closed forms for the lowest two states.
    """
    if L <= 0.0:
        raise ValueError("L must be positive")

    def rate(x):
        y = np.asarray(x, dtype=float) / L
        val = (Ldot / L) / math.sqrt(L) * (-state.evaluate(y) / 2.0 - y * state.evaluate_dy(y))
        return val if val.shape else float(val)

    return rate


def _as_value_and_derivative(f, dfdy):
    if isinstance(f, ScaledEigenstate):
        return f.evaluate, f.evaluate_dy
    if dfdy is None:
        raise ValueError("a plain callable needs its derivative dfdy")
    return f, dfdy


def apply_A(alpha: int, f, dfdy=None, *, L: float = DEFAULT_BOX_LENGTH,
            units: PhysicalUnits = NATURAL_UNITS) -> Callable:
    """Ladder operator A^(alpha) = (hbar/sqrt(2m)) d/dx + W^(alpha) on scaled functions.

    `f` is a ScaledEigenstate or a callable (then `dfdy` is required). The
    returned callable acts on y; the wall singularity of W is cancelled by
    the cos^alpha zero of admissible inputs, and evaluation exactly at
    y = +-1/2 returns the analytic limit 0.
    """
    fv, dv = _as_value_and_derivative(f, dfdy)
    scale = units.hbar / (math.sqrt(2.0 * units.mass) * L)

    def out(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        res = np.zeros_like(y)
        inside = np.abs(y) < 0.5
        yi = y[inside]
        res[inside] = scale * (np.asarray(dv(yi))
                               + alpha * np.pi * np.tan(np.pi * yi) * np.asarray(fv(yi)))
        return res if res.size > 1 else float(res[0])

    return out


def apply_A_dagger(alpha: int, f, dfdy=None, *, L: float = DEFAULT_BOX_LENGTH,
                   units: PhysicalUnits = NATURAL_UNITS) -> Callable:
    """Adjoint ladder operator A^(alpha)+ = -(hbar/sqrt(2m)) d/dx + W^(alpha)."""
    fv, dv = _as_value_and_derivative(f, dfdy)
    scale = units.hbar / (math.sqrt(2.0 * units.mass) * L)

    def out(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        res = np.zeros_like(y)
        inside = np.abs(y) < 0.5
        yi = y[inside]
        res[inside] = scale * (-np.asarray(dv(yi))
                               + alpha * np.pi * np.tan(np.pi * yi) * np.asarray(fv(yi)))
        return res if res.size > 1 else float(res[0])

    return out


@dataclass(frozen=True)
class FactorizationReport:
    """Residuals of the factorization and ladder identities up to n_max."""

    alpha: int
    n_max: int
    tolerance: float
    annihilation_norm: float
    factorization_residuals: tuple
    intertwining_residuals: tuple   # entries for n = 2..n_max

    @property
    def max_residual(self) -> float:
        vals = (self.annihilation_norm,) + self.factorization_residuals + self.intertwining_residuals
        return max(vals)

    @property
    def ok(self) -> bool:
        return self.max_residual < self.tolerance


def check_factorization(spec: HierarchySpec, n_max: int,
                        rule: Optional[QuadratureRule] = None,
                        tol: float = 1e-10,
                        superpotential_sign: float = 1.0) -> FactorizationReport:
    """Verify H = A+A + E_1 and the ladder mapping on the first n_max states.

    Reports (never raises on) residuals above `tol`. `superpotential_sign`
    is a fault-injection hook used by the verification suite: any value
    other than +1 breaks the algebra and must be detected.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    rule = rule or gauss_legendre(200)
    y, w = rule.nodes, rule.weights
    a, L, u = spec.alpha, spec.L_i, spec.units
    unit = (u.hbar * np.pi) ** 2 / (2.0 * u.mass * L ** 2)
    sgn = superpotential_sign

    tan = np.tan(np.pi * y)
    sec2 = 1.0 / np.cos(np.pi * y) ** 2
    # A+A phi = -(hbar^2/2mL^2) phi'' + (W^2 - (hbar/sqrt(2m)) W') phi
    v_minus = unit * (a ** 2 * sgn ** 2 * tan ** 2 - a * sgn * sec2)

    fact = []
    inter = []
    ann = 0.0
    for n in range(1, n_max + 1):
        idx = EigenIndex(a, n)
        state = eigenstate(idx)
        phi = state.evaluate(y)
        d2 = state.evaluate_d2y(y)
        gap = energy_gap(idx, L, u)
        resid_vec = (-(u.hbar ** 2 / (2.0 * u.mass * L ** 2)) * d2
                     + v_minus * phi - gap * phi)
        fact.append(math.sqrt(float(np.sum(w * resid_vec ** 2))))

        a_img = (u.hbar / (math.sqrt(2.0 * u.mass) * L)) * (
            state.evaluate_dy(y) + sgn * a * np.pi * tan * phi)
        if n == 1:
            ann = math.sqrt(float(np.sum(w * a_img ** 2)))
        else:
            target = eigenstate(EigenIndex(a + 1, n - 1)).evaluate(y)
            diff = a_img - math.sqrt(gap) * target
            inter.append(math.sqrt(float(np.sum(w * diff ** 2))))

    return FactorizationReport(alpha=a, n_max=n_max, tolerance=tol,
                               annihilation_norm=ann,
                               factorization_residuals=tuple(fact),
                               intertwining_residuals=tuple(inter))
