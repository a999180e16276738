"""Supersymmetric partner hierarchy of the expanding box.

Builds the tan-superpotential hierarchy over the centered infinite box,
evolves eigenstates through finite-time expansions with and without
counterdiabatic driving, and computes fidelity, Bures angle, excess
energy, driving cost, and quantum-speed-limit times.
"""

from .hierarchy import (DEFAULT_BOX_LENGTH, NATURAL_UNITS, EigenIndex,
                        HierarchySpec, PhysicalUnits, ScaledEigenstate,
                        apply_A, apply_A_dagger, check_factorization,
                        eigenstate, eigenstate_dt, energy, energy_gap,
                        potential, superpotential)
from .ramp import SMOOTHER_STEP, RampSample, RampSpec, Schedule, gamma, gamma_dot, sample
from .numerics import (CouplingMatrix, DenseTrajectory, IntegrationError,
                       IntegratorConfig, QuadratureRule, coupling_matrix,
                       gauss_legendre, inner_product, integrate, ode_solve)
from .dynamics import (BasisState, TrajectoryRecord, evolve_bare, evolve_cd,
                       reconstruct_wavefunction, sudden_quench)
from .observables import (ObservableSeries, QslReport, adiabatic_avg_energy,
                          bures_angle, cd_intertwine_residual,
                          cost_rate, cost_rate_closed_form_gs,
                          cost_rate_closed_form_isospectral, cost_shape_factor,
                          excess_energy, fidelity, overlap_between_lengths,
                          qsl_nonadiabatic, qsl_report, qsl_sta,
                          time_avg_cost, time_avg_energy)

__version__ = "0.1.0"
