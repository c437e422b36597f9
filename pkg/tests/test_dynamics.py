"""Unit tests of the state propagators against independent oracles."""

import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from ottofridge.dynamics import (
    BathSpec,
    StateVector,
    adiabat_power,
    apply_frequency_jump,
    const_mu_matrix,
    equilibrium_state,
    exponential_matrix,
    isochore_affine,
    linear_matrix,
    observables,
    propagate_adiabat_const_mu,
    propagate_adiabat_numeric,
    propagate_free_segment,
    propagate_isochore,
    rk_matrix,
)
from ottofridge.schedules import Schedule, build_three_jump, critical_mu


def casimir(v, omega):
    return (v[0] ** 2 - v[1] ** 2 - v[2] ** 2) / omega**2


def random_state(rng, omega=None):
    """A random physical state: thermal-squeezed with bounded transverse part."""
    w = omega if omega is not None else math.exp(rng.uniform(math.log(0.2), math.log(50)))
    n = rng.uniform(0.0, 5.0)
    e_h = w * (n + 0.5)
    r = rng.uniform(0.0, 0.9) * math.sqrt(max(e_h**2 - (0.5 * w) ** 2, 0.0))
    ang = rng.uniform(0, 2 * math.pi)
    return StateVector(e_h, r * math.cos(ang), r * math.sin(ang), w)


# ---------------------------------------------------------------------------
# equilibrium_state / observables
# ---------------------------------------------------------------------------

def test_equilibrium_occupation_one():
    # exp(omega/T) = 2 at omega = T ln 2
    n, e = equilibrium_state(math.log(2.0) * 1.7, BathSpec(1.7, 1.0))
    assert n == pytest.approx(1.0, rel=1e-14)
    assert e == pytest.approx(math.log(2.0) * 1.7 * 1.5, rel=1e-14)


def test_equilibrium_bose_einstein_value():
    n, e = equilibrium_state(1.0, BathSpec(1.0, 1.0))
    assert n == pytest.approx(0.58197670686932642, rel=1e-14)
    assert e == pytest.approx(1.08197670686932642, rel=1e-14)


def test_equilibrium_ground_state_regime():
    n, e = equilibrium_state(100.0, BathSpec(1.0, 1.0))
    assert n == pytest.approx(math.exp(-100.0), abs=1e-45)
    assert e == pytest.approx(50.0, rel=1e-12)


def test_equilibrium_overflow_guard():
    n, e = equilibrium_state(800.0, BathSpec(1.0, 1.0))
    assert n == 0.0
    assert e == 400.0


def test_observables_thermal_and_ground():
    st = StateVector.from_occupation(2.0, 1.7)
    obs = observables(st)
    assert obs.occupation == pytest.approx(1.7, rel=1e-12)
    assert obs.invariant_occupation == pytest.approx(1.7, rel=1e-12)
    assert obs.energy_entropy == pytest.approx(obs.vn_entropy, rel=1e-12)

    ground = observables(StateVector.ground(3.0))
    assert ground.occupation == 0.0
    assert ground.invariant_occupation == 0.0
    assert ground.energy_entropy == 0.0
    assert ground.vn_entropy == 0.0


def test_observables_squeezed_example():
    obs = observables(StateVector(1.0, 0.6, 0.0, 1.0))
    assert obs.casimir == pytest.approx(0.64, rel=1e-14)
    assert obs.invariant_occupation == pytest.approx(0.3, rel=1e-12)
    assert obs.occupation == pytest.approx(0.5, rel=1e-12)
    assert obs.vn_entropy < obs.energy_entropy


def test_state_invariants_rejected():
    with pytest.raises(ValueError):
        StateVector(1.0, 2.0, 0.0, 1.0)          # Casimir violation
    with pytest.raises(ValueError):
        StateVector(0.2, 0.0, 0.0, 1.0)          # below ground floor
    with pytest.raises(ValueError):
        StateVector(1.0, 0.0, 0.0, -1.0)         # bad frequency


# ---------------------------------------------------------------------------
# isochore
# ---------------------------------------------------------------------------

def test_isochore_zero_time_identity():
    st = StateVector(3.0, 1.0, -0.5, 2.0)
    out = propagate_isochore(st, BathSpec(1.0, 0.5), 0.0)
    assert out == st


def test_isochore_long_time_equilibrium():
    bath = BathSpec(0.8, 1.0)
    st = StateVector(3.0, 1.0, -0.5, 2.0)
    out = propagate_isochore(st, bath, 150.0)
    _, e_eq = equilibrium_state(2.0, bath)
    assert out.e_h == pytest.approx(e_eq, rel=1e-12)
    assert abs(out.e_l) < 1e-12 and abs(out.e_c) < 1e-12


def test_isochore_half_life_half_turn():
    # Gamma*t = ln 2 halves the distance to equilibrium; 2*omega*t = pi flips (L, C)
    t = 1.3
    omega = math.pi / (2.0 * t)
    bath = BathSpec(0.7, math.log(2.0) / t)
    st = StateVector(2.5, 0.8, -0.3, omega)
    _, e_eq = equilibrium_state(omega, bath)
    out = propagate_isochore(st, bath, t)
    assert out.e_h - e_eq == pytest.approx(0.5 * (st.e_h - e_eq), rel=1e-12)
    assert out.e_l == pytest.approx(-0.5 * st.e_l, rel=1e-12)
    assert out.e_c == pytest.approx(-0.5 * st.e_c, rel=1e-12)


def test_isochore_matches_ode_oracle():
    bath = BathSpec(1.3, 0.5)
    omega, t = 2.0, 0.7
    st = StateVector(4.1, 1.2, -2.0, omega)
    _, e_eq = equilibrium_state(omega, bath)

    def rhs(_, v):
        g = bath.conductance
        return [-g * (v[0] - e_eq),
                -g * v[1] - 2 * omega * v[2],
                2 * omega * v[1] - g * v[2]]

    sol = solve_ivp(rhs, (0, t), st.as_array(), rtol=1e-12, atol=1e-14, method="DOP853")
    out = propagate_isochore(st, bath, t)
    np.testing.assert_allclose(out.as_array(), sol.y[:, -1], rtol=1e-10, atol=1e-12)


def test_isochore_contraction_norms():
    # |e_h - e_eq| and sqrt(e_l^2 + e_c^2) both decay; the transverse norm
    # decays exactly as exp(-Gamma t).
    bath = BathSpec(1.0, 0.8)
    st = StateVector(4.0, 1.5, 0.5, 1.7)
    _, e_eq = equilibrium_state(1.7, bath)
    prev_gap, prev_trans = abs(st.e_h - e_eq), math.hypot(st.e_l, st.e_c)
    for t in (0.3, 0.9, 2.1, 5.0):
        out = propagate_isochore(st, bath, t)
        gap, trans = abs(out.e_h - e_eq), math.hypot(out.e_l, out.e_c)
        assert gap <= prev_gap and trans <= prev_trans
        assert trans == pytest.approx(math.exp(-bath.conductance * t)
                                      * math.hypot(st.e_l, st.e_c), rel=1e-12)
        prev_gap, prev_trans = gap, trans
    assert propagate_isochore(StateVector.thermal(1.7, bath), bath, 2.0).e_h == \
        pytest.approx(e_eq, rel=1e-13)

    with pytest.raises(ValueError):
        propagate_isochore(st, bath, -0.1)


# ---------------------------------------------------------------------------
# constant-mu adiabat
# ---------------------------------------------------------------------------

def test_const_mu_identity_at_zero_span():
    st = StateVector(3.0, 1.0, -0.5, 2.0)
    out, elapsed = propagate_adiabat_const_mu(st, 2.0, -0.4)
    assert out == st and elapsed == 0.0


def test_const_mu_sudden_limit_energy():
    # expansion of the hot ground state with |mu| -> infinity
    w_h, ratio = 7.0, 12.0
    w_c = w_h / ratio
    st = StateVector.ground(w_h)
    out, _ = propagate_adiabat_const_mu(st, w_c, -1e6)
    expected = 0.25 * w_c * (ratio + 1.0 / ratio)
    assert out.e_h == pytest.approx(expected, rel=1e-5)


def test_const_mu_critical_is_frictionless():
    rng = np.random.default_rng(7)
    for _ in range(25):
        ratio = math.exp(rng.uniform(math.log(1.01), math.log(1e3)))
        w_h = math.exp(rng.uniform(math.log(0.5), math.log(100)))
        n = rng.uniform(0, 5)
        mu_star, tau_star = critical_mu(ratio, omega_h=w_h)
        st = StateVector.from_occupation(w_h, n)
        out, elapsed = propagate_adiabat_const_mu(st, w_h / ratio, mu_star)
        n_f = out.e_h / (w_h / ratio) - 0.5
        assert abs(n_f - n) <= 1e-9
        assert elapsed == pytest.approx(tau_star, rel=1e-12)


def test_const_mu_energy_closed_form_from_ground():
    # E_final = (omega_c/2) (mu^2 cosh(Omega theta) - 4) / Omega^2 evaluated
    # independently through complex arithmetic.
    for mu, ratio in ((-0.9, 4.0), (-1.99, 30.0), (-3.5, 2.5)):
        w_h = 5.0
        w_c = w_h / ratio
        theta = -math.log(ratio) / mu
        omega2 = complex(mu * mu - 4.0)
        om = cmath.sqrt(omega2)
        e_ref = 0.5 * w_c * (mu * mu * cmath.cosh(om * theta) - 4.0) / omega2
        out, _ = propagate_adiabat_const_mu(StateVector.ground(w_h), w_c, mu)
        assert out.e_h == pytest.approx(e_ref.real, rel=1e-12)


def test_const_mu_direction_and_zero_mu_errors():
    st = StateVector.ground(5.0)
    with pytest.raises(ValueError):
        propagate_adiabat_const_mu(st, 1.0, 0.5)     # expansion needs mu < 0
    with pytest.raises(ValueError):
        propagate_adiabat_const_mu(st, 9.0, -0.5)
    with pytest.raises(ValueError):
        propagate_adiabat_const_mu(st, 1.0, 0.0)


# ---------------------------------------------------------------------------
# frequency jump
# ---------------------------------------------------------------------------

def test_jump_identity():
    st = StateVector(3.0, 1.0, -0.5, 2.0)
    assert apply_frequency_jump(st, 2.0) == st


def test_jump_sudden_energy_from_ground():
    w_h, ratio = 9.0, 6.0
    w_c = w_h / ratio
    out = apply_frequency_jump(StateVector.ground(w_h), w_c)
    # same algebra up to rounding: exact to a few ulp
    assert out.e_h == pytest.approx(0.25 * w_c * (ratio + 1.0 / ratio), rel=5e-16)


def test_jump_preserves_casimir():
    rng = np.random.default_rng(3)
    st = random_state(rng, omega=2.0)
    for w_new in (6.0, 0.5, 2.0 * 3.0):    # includes s = 9
        out = apply_frequency_jump(st, w_new)
        assert casimir(out.as_array(), w_new) == \
            pytest.approx(casimir(st.as_array(), st.omega), rel=1e-13)
    with pytest.raises(ValueError):
        apply_frequency_jump(st, -1.0)


def test_jump_matches_infinite_mu_limit_both_directions():
    # the sudden map is the |mu| -> inf limit; at |mu| = 4e6 the residual
    # O(ln(ratio)/|mu|) difference sits well inside the 1e-6 contract
    for w0, w1, mu in ((10.0, 2.0, -4e6), (2.0, 10.0, 4e6)):
        rng = np.random.default_rng(11)
        st = random_state(rng, omega=w0)
        fast, _ = propagate_adiabat_const_mu(st, w1, mu)
        jumped = apply_frequency_jump(st, w1)
        gap = np.linalg.norm(fast.as_array() - jumped.as_array())
        assert gap <= 1e-6 * np.linalg.norm(jumped.as_array())


# ---------------------------------------------------------------------------
# free segment
# ---------------------------------------------------------------------------

def test_free_segment_identity_and_full_turn():
    st = StateVector(3.0, 1.0, -0.5, 2.0)
    assert propagate_free_segment(st, 0.0) == st
    full = propagate_free_segment(st, math.pi / st.omega)   # 2*omega*t = 2*pi
    np.testing.assert_allclose(full.as_array(), st.as_array(), rtol=1e-12, atol=1e-14)


def test_free_segment_quarter_turn():
    st = StateVector(2.0, 0.7, 0.0, 1.0)
    out = propagate_free_segment(st, math.pi / 4.0)          # 2*omega*t = pi/2
    assert out.e_l == pytest.approx(0.0, abs=1e-12)
    assert out.e_c == pytest.approx(0.7, rel=1e-12)
    assert out.e_h == st.e_h


# ---------------------------------------------------------------------------
# numeric propagation and cross-validation of the fast paths
# ---------------------------------------------------------------------------

def test_numeric_matches_const_mu_closed_form():
    rng = np.random.default_rng(42)
    cases = [(-2.0 + 1e-3, 5.0), (-2.0 - 1e-3, 5.0), (2.0 - 1e-3, 5.0)]
    while len(cases) < 25:
        mu = rng.choice([-1, 1]) * math.exp(rng.uniform(math.log(0.05), math.log(15)))
        ratio = math.exp(rng.uniform(math.log(1.1), math.log(20)))
        cases.append((float(mu), float(ratio)))
    for mu, ratio in cases:
        w0 = 4.0
        w1 = w0 / ratio if mu < 0 else w0 * ratio
        st = random_state(np.random.default_rng(1), omega=w0)
        sched = Schedule.const_mu(w0, w1, mu)
        numeric = propagate_adiabat_numeric(st, sched, tol=1e-12)
        closed, _ = propagate_adiabat_const_mu(st, w1, mu)
        err = np.linalg.norm(numeric.as_array() - closed.as_array()) / \
            np.linalg.norm(closed.as_array())
        assert err <= 1e-8, (mu, ratio, err)


def test_numeric_zero_duration_identity():
    st = StateVector(3.0, 1.0, -0.5, 2.0)
    sched = Schedule.piecewise(2.0, 2.0, [])
    assert propagate_adiabat_numeric(st, sched, tol=1e-10) == st


def test_numeric_three_jump_splits_at_jumps():
    st = StateVector.from_occupation(10.0, 2.5)
    out = propagate_adiabat_numeric(st, build_three_jump(10.0, 1.0), tol=1e-10)
    assert out.e_h / 1.0 - 0.5 == pytest.approx(2.5, abs=1e-9)


def test_numeric_quasistatic_linear_preserves_occupation():
    st = StateVector.ground(20.0)
    out = propagate_adiabat_numeric(st, Schedule.linear(20.0, 2.0, 50.0), tol=1e-10)
    assert abs(out.e_h / 2.0 - 0.5) <= 1e-3
    # friction shrinks quadratically with the ramp time
    slower = propagate_adiabat_numeric(st, Schedule.linear(20.0, 2.0, 200.0), tol=1e-10)
    assert abs(slower.e_h / 2.0 - 0.5) < 0.2 * abs(out.e_h / 2.0 - 0.5)


def test_numeric_tolerance_domain():
    st = StateVector.ground(5.0)
    with pytest.raises(ValueError):
        propagate_adiabat_numeric(st, Schedule.linear(5.0, 1.0, 1.0), tol=1e-3)


def test_exponential_fast_path_matches_rk():
    for w0, w1, tau in ((10.0, 2.0, 3.0), (2.0, 10.0, 5.0), (100.0, 1.0, 8.0)):
        sched = Schedule.exponential(w0, w1, tau)
        np.testing.assert_allclose(exponential_matrix(sched), rk_matrix(sched, 1e-12),
                                   rtol=1e-8, atol=1e-12)


def test_linear_fast_path_matches_rk():
    for w0, w1, tau in ((10.0, 2.0, 3.0), (2.0, 10.0, 5.0), (20.0, 2.0, 50.0)):
        sched = Schedule.linear(w0, w1, tau)
        np.testing.assert_allclose(linear_matrix(sched, tol=1e-8), rk_matrix(sched, 1e-12),
                                   rtol=1e-7, atol=1e-12)


def test_linear_fast_path_long_ramp_consistency():
    # far beyond direct integration reach: compare two resolutions
    sched = Schedule.linear(50.0, 0.05, (50.0 - 0.05) / (0.5 * 0.05**2))
    u_coarse = linear_matrix(sched, tol=1e-2)
    u_fine = linear_matrix(sched, tol=1e-4)
    assert np.max(np.abs(u_coarse - u_fine)) / np.max(np.abs(u_fine)) < 1e-5


# ---------------------------------------------------------------------------
# Casimir conservation and power bookkeeping
# ---------------------------------------------------------------------------

def test_casimir_conserved_on_all_adiabat_paths():
    rng = np.random.default_rng(5)
    st = random_state(rng, omega=6.0)
    x0 = casimir(st.as_array(), st.omega)

    closed, _ = propagate_adiabat_const_mu(st, 2.0, -0.8)
    assert casimir(closed.as_array(), 2.0) == pytest.approx(x0, rel=1e-12)

    jumped = apply_frequency_jump(st, 2.0)
    assert casimir(jumped.as_array(), 2.0) == pytest.approx(x0, rel=1e-14)

    rotated = propagate_free_segment(st, 0.37)
    assert casimir(rotated.as_array(), st.omega) == pytest.approx(x0, rel=1e-13)

    numeric = propagate_adiabat_numeric(st, Schedule.linear(6.0, 2.0, 4.0), tol=1e-11)
    assert casimir(numeric.as_array(), 2.0) == pytest.approx(x0, rel=1e-9)

    bessel = exponential_matrix(Schedule.exponential(6.0, 2.0, 4.0)) @ st.as_array()
    assert casimir(bessel, 2.0) == pytest.approx(x0, rel=1e-12)


def test_adiabat_power_zero_cases():
    st = StateVector(3.0, 1.0, -0.5, 2.0)
    assert adiabat_power(st, 0.0) == 0.0
    kinetic = StateVector(3.0, 3.0 - 1e-12, 0.0, 1.0, check=False)
    assert adiabat_power(kinetic, 0.7) == pytest.approx(0.0, abs=1e-11)


def test_power_integral_equals_energy_change():
    # first law on the adiabat: integral of P dt = Delta E (const-mu sweep)
    w0, w1, mu = 8.0, 2.0, -0.9
    st = StateVector(5.0, 1.0, 0.7, w0)
    final, tau = propagate_adiabat_const_mu(st, w1, mu)

    def power(t):
        w_t = w0 / (1.0 - mu * w0 * t)
        v = const_mu_matrix(w0, w_t, mu) @ st.as_array()
        return mu * w_t * (v[0] - v[1])

    integral, _ = quad(power, 0.0, tau, limit=400, epsabs=1e-12, epsrel=1e-11)
    delta_e = final.e_h - st.e_h
    assert integral == pytest.approx(delta_e, rel=1e-6)
