"""Time evolution through the expansion in the instantaneous eigenbasis.

The evolving state is expanded over the instantaneous eigenstates of the
chosen hierarchy member, which turns the moving-wall problem into coupled
coefficient ODEs:

    i hbar dc_m/dt = E_m(t) c_m - i hbar (Ldot/L) sum_n g_mn c_n

with the time-independent coupling matrix g. Counterdiabatic driving adds
the single-column term +(Ldot/L) g_mn c_n that cancels transitions out of
the driven state n, so the driven state follows the instantaneous
eigenstate exactly for any stroke duration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hierarchy, ramp as ramp_mod
from .hierarchy import EigenIndex, HierarchySpec, eigenstate
from .numerics import (DEFAULT_INTEGRATOR, IntegratorConfig, QuadratureRule,
                       coupling_matrix, gauss_legendre, ode_solve)

TRUNCATION_TAIL_STATES = 4
TRUNCATION_THRESHOLD = 1e-8


@dataclass(frozen=True)
class BasisState:
    """Complex coefficients over the instantaneous eigenbasis at time t."""

    alpha: int
    coeffs: np.ndarray
    t: float

    @property
    def dim(self) -> int:
        return self.coeffs.size

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    @property
    def norm_error(self) -> float:
        return abs(float(self.populations.sum()) - 1.0)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One evolution run: sampled coefficients plus derived energies."""

    spec: HierarchySpec
    ramp: ramp_mod.RampSpec
    index: EigenIndex
    mode: str                      # "bare" or "cd"
    times: np.ndarray
    lengths: np.ndarray
    coeffs: np.ndarray             # (samples, N) complex
    energies: np.ndarray           # per-sample <H>
    dense: Optional[object] = None
    truncation_warning: bool = False
    max_norm_error: float = 0.0

    @property
    def n_basis(self) -> int:
        return self.coeffs.shape[1]

    @property
    def samples(self):
        return list(zip(self.times, self.lengths, self.coeffs))

    def state_at_sample(self, k: int) -> BasisState:
        return BasisState(alpha=self.index.alpha, coeffs=self.coeffs[k],
                          t=float(self.times[k]))

    def final_state(self) -> BasisState:
        return self.state_at_sample(len(self.times) - 1)

    def fidelity_series(self) -> np.ndarray:
        """|c_n(t)|^2 against the instantaneous target state, per sample."""
        return np.abs(self.coeffs[:, self.index.n - 1]) ** 2

    def energy_at(self, t) -> np.ndarray:
        """<H>(t) from the dense interpolant (falls back to samples)."""
        if self.dense is None:
            return np.interp(np.asarray(t, float), self.times, self.energies)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        c = self.dense.sol(t)                       # (N, len(t))
        kappa = self._kappa()
        L = ramp_mod.gamma(self.ramp, t) * self.ramp.L_i
        return (kappa[:, None] * np.abs(c) ** 2).sum(axis=0) / L ** 2

    def _kappa(self) -> np.ndarray:
        u = self.spec.units
        k = np.arange(1, self.n_basis + 1) + self.index.alpha - 1
        return (k * np.pi * u.hbar) ** 2 / (2.0 * u.mass)


def _evolve(spec: HierarchySpec, index: EigenIndex, ramp: ramp_mod.RampSpec,
            n_basis: int, config: IntegratorConfig, rule: QuadratureRule,
            counterdiabatic: bool) -> TrajectoryRecord:
    if index.alpha != spec.alpha:
        raise ValueError("state index and hierarchy spec disagree on alpha")
    if index.n > n_basis:
        raise ValueError("initial state lies outside the basis (n > N)")
    if abs(ramp.L_i - spec.L_i) > 1e-12 * spec.L_i:
        raise ValueError("ramp and hierarchy spec disagree on the initial length")

    u = spec.units
    a = spec.alpha
    k = np.arange(1, n_basis + 1) + a - 1
    e0 = (k * np.pi * u.hbar) ** 2 / (2.0 * u.mass * spec.L_i ** 2)  # energies at t=0
    gmat = coupling_matrix(a, n_basis, rule).g.astype(np.complex128)
    n0 = index.n - 1
    gcol = gmat[:, n0].copy()

    sched_f = ramp.schedule.f
    sched_df = ramp.schedule.df
    ratio_m1 = ramp.ratio - 1.0
    tau = ramp.tau
    inv_hbar = 1.0 / u.hbar

    if counterdiabatic:
        def rhs(t, c):
            s = min(max(t / tau, 0.0), 1.0)
            g = 1.0 + ratio_m1 * sched_f(s)
            rate = ratio_m1 * sched_df(s) / (tau * g)
            out = (-1j * inv_hbar / (g * g)) * (e0 * c) - rate * (gmat @ c)
            out += rate * gcol * c[n0]
            return out
    else:
        def rhs(t, c):
            s = min(max(t / tau, 0.0), 1.0)
            g = 1.0 + ratio_m1 * sched_f(s)
            rate = ratio_m1 * sched_df(s) / (tau * g)
            return (-1j * inv_hbar / (g * g)) * (e0 * c) - rate * (gmat @ c)

    c0 = np.zeros(n_basis, dtype=np.complex128)
    c0[n0] = 1.0
    traj = ode_solve(rhs, c0, (0.0, tau), config)

    coeffs = traj.states
    gammas = ramp_mod.gamma(ramp, traj.times)
    lengths = gammas * ramp.L_i
    pops = np.abs(coeffs) ** 2
    energies = (pops * (e0 / gammas[:, None] ** 2)).sum(axis=1)
    norm_err = float(np.abs(pops.sum(axis=1) - 1.0).max())

    tail = pops[:, n_basis - TRUNCATION_TAIL_STATES:].sum(axis=1).max()
    truncated = bool(tail > TRUNCATION_THRESHOLD)
    if truncated:
        warnings.warn(
            f"basis truncation: top-{TRUNCATION_TAIL_STATES} population "
            f"{tail:.2e} exceeds {TRUNCATION_THRESHOLD:.0e}; increase N",
            RuntimeWarning, stacklevel=3)

    return TrajectoryRecord(spec=spec, ramp=ramp, index=index,
                            mode="cd" if counterdiabatic else "bare",
                            times=traj.times, lengths=lengths, coeffs=coeffs,
                            energies=energies, dense=traj,
                            truncation_warning=truncated,
                            max_norm_error=norm_err)


def evolve_bare(spec: HierarchySpec, index: EigenIndex, ramp: ramp_mod.RampSpec,
                n_basis: int = 64, config: Optional[IntegratorConfig] = None,
                rule: Optional[QuadratureRule] = None) -> TrajectoryRecord:
    """Evolve eigenstate n through the ramp without any control field."""
    return _evolve(spec, index, ramp, n_basis, config or DEFAULT_INTEGRATOR,
                   rule or gauss_legendre(200), counterdiabatic=False)


def evolve_cd(spec: HierarchySpec, index: EigenIndex, ramp: ramp_mod.RampSpec,
              n_basis: int = 64, config: Optional[IntegratorConfig] = None,
              rule: Optional[QuadratureRule] = None) -> TrajectoryRecord:
    """Evolve with the counterdiabatic term targeting state n."""
    return _evolve(spec, index, ramp, n_basis, config or DEFAULT_INTEGRATOR,
                   rule or gauss_legendre(200), counterdiabatic=True)


def sudden_quench(spec: HierarchySpec, index: EigenIndex, L_i: float, L_f: float,
                  n_basis: int = 64, rule: Optional[QuadratureRule] = None):
    """Instantaneous L_i -> L_f quench: fidelity and the projected state.

    Returns (|<psi_n(L_f)|psi_n(L_i)>|^2, BasisState of projection
    coefficients onto the L_f eigenbasis). The overlap is taken over the
    initial support, which requires L_f >= L_i.
    """
    if L_f < L_i:
        raise ValueError("sudden quench overlap requires L_f >= L_i")
    rule = rule or gauss_legendre(200)
    y, w = rule.nodes, rule.weights
    r = L_i / L_f
    src = eigenstate(index).evaluate(y)
    d = np.empty(n_basis)
    for m in range(1, n_basis + 1):
        tgt = eigenstate(EigenIndex(spec.alpha, m)).evaluate(r * y)
        d[m - 1] = math.sqrt(r) * float(np.sum(w * tgt * src))
    fid = d[index.n - 1] ** 2
    return fid, BasisState(alpha=spec.alpha, coeffs=d.astype(np.complex128), t=0.0)


def reconstruct_wavefunction(state: BasisState, L: float, x) -> np.ndarray:
    """Position-space amplitudes Psi(x) = sum_m c_m phi_m(x/L) / sqrt(L)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= L / 2.0):
        raise ValueError("grid points must lie strictly inside the walls")
    y = x / L
    psi = np.zeros(y.shape, dtype=np.complex128)
    for m in range(1, state.dim + 1):
        psi += state.coeffs[m - 1] * eigenstate(EigenIndex(state.alpha, m)).evaluate(y)
    return psi / math.sqrt(L)
