"""Quadrature, derivative-coupling matrices, and the ODE integration contract.

All inner products live on the scaled interval y in [-1/2, 1/2]. The
derivative-coupling matrix is time independent: wall motion enters the
equations of motion only through the scalar factor Ldot/L, so the matrix is
built once per (alpha, N) and cached.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights on (-1/2, 1/2); exact for polynomials up to `degree`."""

    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def size(self) -> int:
        return self.nodes.size


@lru_cache(maxsize=32)
def gauss_legendre(m: int) -> QuadratureRule:
    """Gauss-Legendre rule with m nodes mapped from [-1, 1] to [-1/2, 1/2]."""
    if m < 2:
        raise ValueError("need at least 2 quadrature nodes")
    x, w = leggauss(m)
    rule = QuadratureRule(nodes=x / 2.0, weights=w / 2.0, degree=2 * m - 1)
    rule.nodes.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def _values_on(f, rule: QuadratureRule) -> np.ndarray:
    if callable(f):
        return np.asarray(f(rule.nodes), dtype=float)
    arr = np.asarray(f, dtype=float)
    if arr.shape != rule.nodes.shape:
        raise ValueError("sampled values do not match the quadrature nodes")
    return arr


def inner_product(f, g, rule: QuadratureRule) -> float:
    """<f, g> = sum_i w_i f(y_i) g(y_i); f, g callables or node samples."""
    return float(np.sum(rule.weights * _values_on(f, rule) * _values_on(g, rule)))


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              rule: QuadratureRule) -> float:
    """Integral of f over [a, b] using the rule mapped onto that interval."""
    t = (a + b) / 2.0 + (b - a) * rule.nodes
    return float((b - a) * np.sum(rule.weights * np.asarray(f(t), dtype=float)))


@dataclass(frozen=True)
class CouplingMatrix:
    """Scale-invariant derivative couplings g_mn = <phi_m|(-1/2 - y d/dy)|phi_n>.

    <psi_m | d/dt psi_n> = (Ldot/L) g_mn for the instantaneous states of one
    hierarchy member; g is real, antisymmetric, and independent of t and L.
    """

    alpha: int
    dim: int
    g: np.ndarray


_coupling_cache: dict = {}
_coupling_lock = threading.Lock()


def coupling_matrix(alpha: int, n_states: int, rule: Optional[QuadratureRule] = None) -> CouplingMatrix:
    """Build (or fetch from cache) the N x N coupling matrix for order alpha."""
    from . import hierarchy

    if n_states < 2:
        raise ValueError("need at least 2 basis states")
    rule = rule or gauss_legendre(200)
    key = (alpha, n_states, rule.size)
    cached = _coupling_cache.get(key)
    if cached is not None:
        return cached

    y, w = rule.nodes, rule.weights
    phi = np.empty((n_states, y.size))
    gen = np.empty((n_states, y.size))
    for k in range(1, n_states + 1):
        state = hierarchy.eigenstate(hierarchy.EigenIndex(alpha, k))
        phi[k - 1] = state.evaluate(y)
        gen[k - 1] = -phi[k - 1] / 2.0 - y * state.evaluate_dy(y)
    g = (phi * w) @ gen.T

    mat = CouplingMatrix(alpha=alpha, dim=n_states, g=g)
    with _coupling_lock:
        _coupling_cache.setdefault(key, mat)
    return _coupling_cache[key]


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive embedded Runge-Kutta settings for the time propagation."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step_fraction: Optional[float] = None
    dense_samples: int = 401

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dense_samples < 2:
            raise ValueError("dense_samples must be at least 2")


DEFAULT_INTEGRATOR = IntegratorConfig()


class IntegrationError(RuntimeError):
    """Raised when the adaptive integrator fails (e.g. step-size underflow)."""


@dataclass(frozen=True)
class DenseTrajectory:
    """Result of ode_solve: sampled states plus the dense interpolant."""

    times: np.ndarray
    states: np.ndarray          # shape (len(times), dim)
    sol: Callable[[float], np.ndarray]
    nfev: int

    def __call__(self, t):
        return self.sol(t)


def ode_solve(rhs: Callable, y0: np.ndarray, t_span: tuple,
              config: Optional[IntegratorConfig] = None,
              t_eval: Optional[Sequence[float]] = None) -> DenseTrajectory:
    """Integrate dy/dt = rhs(t, y) with local error control and dense output.

    Uses an 8th-order Dormand-Prince pair (adaptive, embedded error
    estimate). Complex-valued systems are supported. Failure to reach the
    end of the span raises IntegrationError with the solver diagnostic.
    """
    config = config or DEFAULT_INTEGRATOR
    t0, t1 = t_span
    if t_eval is None:
        t_eval = np.linspace(t0, t1, config.dense_samples)
    kwargs = {}
    if config.max_step_fraction is not None:
        kwargs["max_step"] = config.max_step_fraction * abs(t1 - t0)
    result = solve_ivp(rhs, t_span, np.asarray(y0), method="DOP853",
                       rtol=config.rel_tol, atol=config.abs_tol,
                       dense_output=True, t_eval=np.asarray(t_eval), **kwargs)
    if not result.success:
        raise IntegrationError(f"integration failed: {result.message}")
    return DenseTrajectory(times=result.t, states=result.y.T, sol=result.sol,
                           nfev=result.nfev)
