import math

import numpy as np
import pytest
from scipy.special import eval_gegenbauer, gammaln

from susybox import (DEFAULT_BOX_LENGTH, EigenIndex, HierarchySpec,
                     PhysicalUnits, apply_A, apply_A_dagger,
                     check_factorization, eigenstate, eigenstate_dt, energy,
                     energy_gap, inner_product, potential, superpotential)

L0 = DEFAULT_BOX_LENGTH


# ----------------------------------------------------------- domain types ---

def test_units_must_be_positive():
    with pytest.raises(ValueError):
        PhysicalUnits(hbar=0.0)
    with pytest.raises(ValueError):
        PhysicalUnits(mass=-1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        HierarchySpec(alpha=0)
    with pytest.raises(ValueError):
        HierarchySpec(alpha=1, L_i=-1.0)
    with pytest.raises(ValueError):
        EigenIndex(alpha=1, n=0)


# ---------------------------------------------------------- superpotential ---

def test_superpotential_vanishes_at_center():
    assert superpotential(HierarchySpec(1), 0.0, L0) == 0.0


def test_superpotential_quarter_box_value():
    # alpha hbar pi tan(pi/4) / (sqrt(2) L) = 2 at L = pi/sqrt(2), alpha = 2
    w = superpotential(HierarchySpec(2), L0 / 4.0, L0)
    assert w == pytest.approx(2.0, abs=1e-12)


def test_superpotential_odd_symmetry():
    spec = HierarchySpec(1)
    assert superpotential(spec, -L0 / 4.0, L0) == pytest.approx(
        -superpotential(spec, L0 / 4.0, L0), abs=1e-14)


def test_superpotential_wall_is_domain_error():
    with pytest.raises(ValueError):
        superpotential(HierarchySpec(1), L0 / 2.0, L0)
    with pytest.raises(ValueError):
        superpotential(HierarchySpec(1), np.array([0.0, 0.6 * L0]), L0)


# --------------------------------------------------------------- potential ---

def test_box_potential_zero_inside_infinite_outside():
    spec = HierarchySpec(1)
    assert potential(spec, 0.3 * L0, L0) == 0.0
    assert potential(spec, 0.7 * L0, L0) == math.inf
    vals = potential(spec, np.array([-0.49, 0.0, 0.49, 0.51]) * L0, L0)
    assert np.all(vals[:3] == 0.0) and vals[3] == math.inf


def test_partner_potential_center_values():
    assert potential(HierarchySpec(2), 0.0, L0) == pytest.approx(1.0, abs=1e-12)
    assert potential(HierarchySpec(3), 0.0, L0) == pytest.approx(2.0, abs=1e-12)


def test_partner_potential_matches_pair_construction(rule200):
    # V^(alpha) must equal W^2 + (hbar/sqrt(2m)) W' of the previous order
    spec_prev = HierarchySpec(2)
    x = rule200.nodes * L0
    w = superpotential(spec_prev, x, L0)
    dw = 2 * np.pi / (math.sqrt(2.0) * L0) * (np.pi / L0) / np.cos(np.pi * x / L0) ** 2
    v = potential(HierarchySpec(3), x, L0)
    ref = w ** 2 + dw / math.sqrt(2.0)
    assert np.abs((v - ref) / np.maximum(np.abs(ref), 1.0)).max() < 1e-12


# ------------------------------------------------------------------ energy ---

def test_energy_base_ground_state_is_unity():
    assert energy(EigenIndex(1, 1), L0) == pytest.approx(1.0, abs=1e-14)


def test_energy_isospectral_triple_is_sixteen():
    for a, n in ((2, 3), (3, 2), (4, 1)):
        assert energy(EigenIndex(a, n), L0) == pytest.approx(16.0, abs=1e-12)


def test_energy_depends_only_on_shifted_index(rng):
    for _ in range(10):
        a = int(rng.integers(1, 7))
        n = int(rng.integers(1, 13))
        L = float(rng.uniform(0.3, 5.0))
        assert energy(EigenIndex(a + 1, n), L) == energy(EigenIndex(a, n + 1), L)


# -------------------------------------------------------------- eigenstate ---

def _closed_form_norm(alpha, n):
    # normalization constants of the two lowest scaled states
    if n == 1:
        return math.exp(0.5 * (0.5 * math.log(math.pi)
                               + gammaln(alpha + 1) - gammaln(alpha + 0.5)))
    if n == 2:
        return math.exp(0.5 * (math.log(2.0) + 0.5 * math.log(math.pi)
                               + gammaln(alpha + 2) - gammaln(alpha + 0.5)))
    raise ValueError


@pytest.mark.parametrize("alpha", range(1, 7))
@pytest.mark.parametrize("n", (1, 2))
def test_lowest_states_match_gamma_closed_form(alpha, n):
    st = eigenstate(EigenIndex(alpha, n))
    y = np.linspace(-0.45, 0.45, 31)
    shape = np.cos(np.pi * y) ** alpha
    if n == 2:
        shape = shape * np.sin(np.pi * y)
    ref = _closed_form_norm(alpha, n) * shape
    assert np.abs(st.evaluate(y) - ref).max() < 1e-12


def test_base_ground_state_physical_normalization(rule200):
    # integral of |phi(y)|^2 over the scaled interval is 1 for every order
    for alpha in range(1, 7):
        st = eigenstate(EigenIndex(alpha, 1))
        assert inner_product(st.evaluate, st.evaluate, rule200) == pytest.approx(1.0, abs=1e-12)


def test_ground_state_center_value_alpha2():
    # phi(0)/sqrt(L) = sqrt(8/(3 L)) from the gamma-function constant
    st = eigenstate(EigenIndex(2, 1))
    val = st.evaluate(0.0) / math.sqrt(L0)
    assert val == pytest.approx(math.sqrt(8.0 / (3.0 * L0)), rel=1e-12)


def test_box_states_recovered_at_order_one(rule200):
    y = rule200.nodes
    for n in (1, 2, 3, 5):
        st = eigenstate(EigenIndex(1, n))
        box = math.sqrt(2.0) * np.sin(n * np.pi * (y + 0.5))
        sign = np.sign(np.sum(st.evaluate(y) * box))
        assert np.abs(st.evaluate(y) - sign * box).max() < 1e-12


def test_odd_state_node_at_center():
    assert abs(eigenstate(EigenIndex(1, 2)).evaluate(0.0)) < 1e-15


def test_wall_values_vanish():
    for alpha, n in ((1, 1), (2, 3), (3, 2)):
        st = eigenstate(EigenIndex(alpha, n))
        assert abs(st.evaluate(0.5)) < 1e-12
        assert abs(st.evaluate(-0.5)) < 1e-12


def test_orthonormality(rule200):
    for alpha in range(1, 5):
        vals = np.array([eigenstate(EigenIndex(alpha, k)).evaluate(rule200.nodes)
                         for k in range(1, 13)])
        gram = (vals * rule200.weights) @ vals.T
        assert np.abs(gram - np.eye(12)).max() < 1e-10


def test_gegenbauer_oracle(rng):
    # recurrence inside ScaledEigenstate against the library polynomials
    y = rng.uniform(-0.49, 0.49, size=50)
    for alpha in (1, 2, 3, 4):
        for n in (1, 2, 5, 9):
            st = eigenstate(EigenIndex(alpha, n))
            ref = (st.norm_constant * np.cos(np.pi * y) ** alpha
                   * eval_gegenbauer(n - 1, alpha, np.sin(np.pi * y)))
            assert np.abs(st.evaluate(y) - ref).max() < 1e-10


def test_derivatives_match_finite_differences(rng):
    y = rng.uniform(-0.45, 0.45, size=20)
    h = 1e-5
    for alpha, n in ((1, 1), (1, 4), (2, 2), (3, 5), (4, 1)):
        st = eigenstate(EigenIndex(alpha, n))
        d_fd = (st.evaluate(y + h) - st.evaluate(y - h)) / (2 * h)
        assert np.abs(st.evaluate_dy(y) - d_fd).max() < 1e-6
        d2_fd = (st.evaluate(y + h) - 2 * st.evaluate(y) + st.evaluate(y - h)) / h ** 2
        assert np.abs(st.evaluate_d2y(y) - d2_fd).max() < 1e-4


# ------------------------------------------------------------ eigenstate_dt ---

def test_eigenstate_dt_zero_for_static_walls(rng):
    st = eigenstate(EigenIndex(2, 1))
    x = rng.uniform(-0.4, 0.4, size=9) * L0
    assert np.abs(eigenstate_dt(st, L0, 0.0)(x)).max() == 0.0


def test_eigenstate_dt_ground_state_closed_form(rng):
    # psi [ -1/2 + (pi x alpha / L) tan(pi x / L) ] Ldot / L
    alpha, L, Ldot = 2, 1.7, 0.9
    st = eigenstate(EigenIndex(alpha, 1))
    x = rng.uniform(-0.45, 0.45, size=40) * L
    psi = st.evaluate(x / L) / math.sqrt(L)
    expected = psi * (-0.5 + (np.pi * x * alpha / L) * np.tan(np.pi * x / L)) * (Ldot / L)
    assert np.abs(eigenstate_dt(st, L, Ldot)(x) - expected).max() < 1e-10


def test_eigenstate_dt_first_excited_closed_form(rng):
    # psi [ -1/2 - (pi x / L) cot(pi x / L) + (pi x alpha / L) tan(pi x / L) ] Ldot / L
    alpha, L, Ldot = 3, 0.8, -0.4
    st = eigenstate(EigenIndex(alpha, 2))
    x = rng.uniform(0.05, 0.45, size=40) * L * np.sign(rng.standard_normal(40))
    psi = st.evaluate(x / L) / math.sqrt(L)
    u = np.pi * x / L
    expected = psi * (-0.5 - u / np.tan(u) + alpha * u * np.tan(u)) * (Ldot / L)
    assert np.abs(eigenstate_dt(st, L, Ldot)(x) - expected).max() < 1e-10


def test_eigenstate_dt_center_value_is_minus_half_rate():
    st = eigenstate(EigenIndex(2, 1))
    L, Ldot = 1.3, 0.7
    psi0 = st.evaluate(0.0) / math.sqrt(L)
    assert eigenstate_dt(st, L, Ldot)(0.0) == pytest.approx(-0.5 * psi0 * Ldot / L, rel=1e-12)


def test_eigenstate_dt_orthogonal_to_state(rule200):
    # norm preservation forces <psi | d psi/dt> = 0 for real states
    st = eigenstate(EigenIndex(1, 1))
    L, Ldot = 2.0, 1.1
    rate = eigenstate_dt(st, L, Ldot)
    val = inner_product(lambda y: st.evaluate(y),
                        lambda y: np.asarray(rate(y * L)), rule200)
    assert abs(val) < 1e-12


# --------------------------------------------------------- ladder operators ---

def test_apply_A_annihilates_ground_state(rule200):
    for alpha in range(1, 5):
        img = apply_A(alpha, eigenstate(EigenIndex(alpha, 1)), L=L0)
        norm = math.sqrt(inner_product(img, img, rule200))
        assert norm < 1e-10


def test_apply_A_lowers_into_next_order(rule200):
    # A psi_2^(1) = sqrt(3) psi_1^(2) at L = pi/sqrt(2)
    img = apply_A(1, eigenstate(EigenIndex(1, 2)), L=L0)
    target = eigenstate(EigenIndex(2, 1))
    gap = energy_gap(EigenIndex(1, 2), L0)
    assert gap == pytest.approx(3.0, abs=1e-12)
    diff = lambda y: np.asarray(img(y)) - math.sqrt(gap) * target.evaluate(y)
    assert math.sqrt(inner_product(diff, diff, rule200)) < 1e-10


def test_apply_A_dagger_raises_from_next_order(rule200):
    # A+ psi_1^(2) = sqrt(3) psi_2^(1), same sign convention
    img = apply_A_dagger(1, eigenstate(EigenIndex(2, 1)), L=L0)
    target = eigenstate(EigenIndex(1, 2))
    diff = lambda y: np.asarray(img(y)) - math.sqrt(3.0) * target.evaluate(y)
    assert math.sqrt(inner_product(diff, diff, rule200)) < 1e-10


def test_apply_A_adjointness(rule200):
    f = eigenstate(EigenIndex(2, 2))
    g = eigenstate(EigenIndex(3, 1))
    lhs = inner_product(apply_A(2, f, L=L0), g.evaluate, rule200)
    rhs = inner_product(f.evaluate, apply_A_dagger(2, g, L=L0), rule200)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_apply_A_linearity_on_zero(rule200):
    zero = lambda y: np.zeros_like(np.asarray(y))
    img = apply_A_dagger(2, zero, zero, L=L0)
    assert np.abs(np.asarray(img(rule200.nodes))).max() == 0.0


def test_apply_A_wall_evaluation_returns_zero():
    img = apply_A(1, eigenstate(EigenIndex(1, 2)), L=L0)
    assert img(0.5) == 0.0 and img(-0.5) == 0.0


def test_apply_A_requires_derivative_for_plain_callables():
    with pytest.raises(ValueError):
        apply_A(1, lambda y: y, L=L0)


def test_intertwining_norm_equals_energy_gap(rule200):
    for alpha, n in ((1, 2), (1, 4), (2, 3), (3, 2)):
        img = apply_A(alpha, eigenstate(EigenIndex(alpha, n)), L=L0)
        norm2 = inner_product(img, img, rule200)
        assert norm2 == pytest.approx(energy_gap(EigenIndex(alpha, n), L0), abs=1e-8)


# ------------------------------------------------------- factorization suite ---

@pytest.mark.parametrize("alpha,n_max", ((1, 6), (2, 5), (3, 4)))
def test_check_factorization_residuals(alpha, n_max):
    rep = check_factorization(HierarchySpec(alpha), n_max)
    assert rep.max_residual < 1e-10
    assert rep.ok
    assert len(rep.intertwining_residuals) == n_max - 1


def test_check_factorization_skips_ground_state_intertwining():
    rep = check_factorization(HierarchySpec(2), 2)
    # only n = 2 contributes an intertwining residual; n = 1 is annihilated
    assert len(rep.intertwining_residuals) == 1
    assert rep.annihilation_norm < 1e-10


def test_check_factorization_detects_sign_error():
    rep = check_factorization(HierarchySpec(1), 3, superpotential_sign=-1.0)
    assert not rep.ok
    assert rep.max_residual > 1e-2
