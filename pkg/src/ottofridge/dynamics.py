"""Propagation of the harmonic working medium's second-moment state.

The dynamical state is the triple of operator expectations

    e_h = <H>   (energy,     H = P^2/2 + omega^2 Q^2 / 2)
    e_l = <L>   (Lagrangian, L = P^2/2 - omega^2 Q^2 / 2)
    e_c = <C>   (correlation, C = omega (QP + PQ) / 2)

together with the instantaneous frequency omega.  This set is closed under
both the driven unitary dynamics (adiabats) and the dissipative contact with
a thermal bath at fixed frequency (isochores):

  adiabat:   d/dt (e_h, e_l, e_c) = omega(t) * M(mu) * (e_h, e_l, e_c),
             M(mu) = [[mu, -mu, 0], [-mu, mu, -2], [0, 2, mu]],
             mu = (d omega/dt) / omega^2

  isochore:  d e_h/dt = -Gamma (e_h - e_eq),
             d/dt (e_l, e_c) = [[-Gamma, -2 omega], [2 omega, -Gamma]] (e_l, e_c)

Every branch map here is affine in (e_h, e_l, e_c), which the limit-cycle
solver exploits.  Natural units hbar = k_B = m = 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import j0, j1, y0, y1

from .schedules import PIECEWISE_KINDS, Schedule, ScheduleError

# Relative slack accepted when validating state invariants; absorbs honest
# floating-point and integrator error without letting garbage through.
_STATE_RTOL = 1e-6
_STATE_ATOL = 1e-9

# For omega/T beyond this the Bose-Einstein occupation underflows to 0 exactly.
_EXP_OVERFLOW = 700.0


class PropagationError(RuntimeError):
    """Numerical propagation failed (stiffness, step underflow, bad domain)."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BathSpec:
    """One thermal reservoir: temperature T and heat conductance Gamma.

    Gamma is the net relaxation rate of the energy toward its equilibrium
    value (difference of downward and upward rates); it is treated as a
    constant independent of omega and T.
    """

    temperature: float
    conductance: float

    def __post_init__(self):
        for name in ("temperature", "conductance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"BathSpec.{name} must be finite and > 0, got {v}")


@dataclass(frozen=True)
class StateVector:
    """The (e_h, e_l, e_c) expectations plus the current frequency.

    Construction validates the physicality invariants up to a small relative
    slack: e_h > 0, e_h^2 >= e_l^2 + e_c^2 (nonnegative Casimir) and
    e_h >= omega/2 (ground-state energy floor).  Internal propagation code
    bypasses validation with ``check=False`` where coarse integrator
    tolerances would trip the slack.
    """

    e_h: float
    e_l: float
    e_c: float
    omega: float
    check: bool = True

    def __post_init__(self):
        if not self.check:
            return
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be finite and > 0, got {self.omega}")
        if not all(math.isfinite(v) for v in (self.e_h, self.e_l, self.e_c)):
            raise ValueError("state expectations must be finite")
        slack = _STATE_RTOL * self.e_h * self.e_h + _STATE_ATOL
        if self.e_h <= 0:
            raise ValueError(f"e_h must be positive, got {self.e_h}")
        if self.e_h**2 + slack < self.e_l**2 + self.e_c**2:
            raise ValueError("Casimir positivity violated: e_h^2 < e_l^2 + e_c^2")
        if self.e_h < 0.5 * self.omega * (1.0 - _STATE_RTOL) - _STATE_ATOL:
            raise ValueError(f"e_h = {self.e_h} below ground-state floor omega/2 = {self.omega / 2}")

    # -- constructors --

    @classmethod
    def thermal(cls, omega: float, bath: "BathSpec | float") -> "StateVector":
        """Thermal state at the bath temperature: e_h = e_eq, e_l = e_c = 0."""
        temperature = bath.temperature if isinstance(bath, BathSpec) else float(bath)
        _, e_eq = equilibrium_state(omega, BathSpec(temperature, 1.0))
        return cls(e_eq, 0.0, 0.0, omega)

    @classmethod
    def ground(cls, omega: float) -> "StateVector":
        return cls(0.5 * omega, 0.0, 0.0, omega)

    @classmethod
    def from_occupation(cls, omega: float, n: float) -> "StateVector":
        """Thermal-shaped state with mean occupation n (e_l = e_c = 0)."""
        if n < 0:
            raise ValueError("occupation must be >= 0")
        return cls(omega * (n + 0.5), 0.0, 0.0, omega)

    @classmethod
    def from_array(cls, vec, omega: float, check: bool = True) -> "StateVector":
        return cls(float(vec[0]), float(vec[1]), float(vec[2]), omega, check=check)

    def as_array(self) -> np.ndarray:
        return np.array([self.e_h, self.e_l, self.e_c])


@dataclass(frozen=True)
class Observables:
    """Derived quantities of a state.

    occupation             n = E/omega - 1/2
    casimir                X = (E^2 - L^2 - C^2) / omega^2, invariant under
                           every unitary branch map (units of (n + 1/2)^2)
    invariant_occupation   n~ = sqrt(X) - 1/2, the adiabatically conserved
                           occupation; equals n for thermal states
    energy_entropy         S(n)   with S(x) = (x+1)ln(x+1) - x ln(x)
    vn_entropy             S(n~)
    """

    energy: float
    occupation: float
    casimir: float
    invariant_occupation: float
    energy_entropy: float
    vn_entropy: float


def oscillator_entropy(x: float) -> float:
    """Entropy of a thermal oscillator with mean occupation x; S(0) = 0."""
    if x <= 0.0:
        return 0.0
    return (x + 1.0) * math.log1p(x) - x * math.log(x)


def equilibrium_state(omega: float, bath: BathSpec) -> tuple[float, float]:
    """Equilibrium occupation and energy of the oscillator in a bath.

    Uses the full Bose-Einstein form n_eq = 1/(exp(omega/T) - 1) and
    e_eq = omega (n_eq + 1/2).  For omega/T > ~700 the exponential overflows
    and the exact ground-state values (0, omega/2) are returned.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    y = omega / bath.temperature
    if y > _EXP_OVERFLOW:
        return 0.0, 0.5 * omega
    n_eq = 1.0 / math.expm1(y)
    return n_eq, omega * (n_eq + 0.5)


def observables(state: StateVector) -> Observables:
    """Compute the derived observables of a state (see :class:`Observables`)."""
    e, w = state.e_h, state.omega
    n = e / w - 0.5
    x = (e * e - state.e_l**2 - state.e_c**2) / (w * w)
    n_inv = math.sqrt(max(x, 0.0)) - 0.5
    n_inv = max(n_inv, 0.0)
    n = max(n, 0.0)
    return Observables(
        energy=e,
        occupation=n,
        casimir=x,
        invariant_occupation=n_inv,
        energy_entropy=oscillator_entropy(n),
        vn_entropy=oscillator_entropy(n_inv),
    )


def adiabat_power(state: StateVector, mu: float) -> float:
    """Instantaneous external power on an adiabat: P = mu * omega * (e_h - e_l)."""
    return mu * state.omega * (state.e_h - state.e_l)


# ---------------------------------------------------------------------------
# Isochore (bath contact at fixed omega)
# ---------------------------------------------------------------------------

def isochore_affine(omega: float, bath: BathSpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """The exact isochore map as (linear part A, offset b): v -> A v + b.

    e_h relaxes exponentially toward equilibrium at rate Gamma while
    (e_l, e_c) spiral to zero: decay e^(-Gamma t) combined with a rotation by
    angle 2*omega*t (d e_l/dt = -2 omega e_c, d e_c/dt = +2 omega e_l).
    """
    if t < 0:
        raise ValueError("isochore duration must be >= 0")
    _, e_eq = equilibrium_state(omega, bath)
    decay = math.exp(-bath.conductance * t)
    ang = 2.0 * omega * t
    c, s = math.cos(ang), math.sin(ang)
    A = np.array([
        [decay, 0.0, 0.0],
        [0.0, decay * c, -decay * s],
        [0.0, decay * s, decay * c],
    ])
    b = np.array([(1.0 - decay) * e_eq, 0.0, 0.0])
    return A, b


def propagate_isochore(state: StateVector, bath: BathSpec, t: float) -> StateVector:
    """Evolve a state in contact with one bath at fixed frequency for time t."""
    A, b = isochore_affine(state.omega, bath, t)
    v = A @ state.as_array() + b
    return StateVector.from_array(v, state.omega)


# ---------------------------------------------------------------------------
# Adiabat building blocks (exact maps)
# ---------------------------------------------------------------------------

def _phi_funcs(w):
    """Stable evaluation of f1 = sinh(x)/x and f2 = (cosh(x)-1)/x^2 at x^2 = w.

    w may be negative (trigonometric branch).  Near w = 0 a series expansion
    avoids the 0/0 of the degenerate |mu| = 2 case.
    """
    w = np.asarray(w, dtype=float)
    f1 = np.empty_like(w)
    f2 = np.empty_like(w)
    small = np.abs(w) < 1e-8
    ws = w[small]
    f1[small] = 1.0 + ws / 6.0 + ws * ws / 120.0
    f2[small] = 0.5 + ws / 24.0 + ws * ws / 720.0
    pos = ~small & (w > 0)
    x = np.sqrt(w[pos])
    f1[pos] = np.sinh(x) / x
    f2[pos] = (np.cosh(x) - 1.0) / w[pos]
    neg = ~small & (w < 0)
    x = np.sqrt(-w[neg])
    f1[neg] = np.sin(x) / x
    f2[neg] = (1.0 - np.cos(x)) / (-w[neg])
    return f1, f2


def const_mu_matrix(omega0, omega1, mu):
    """Exact propagator matrix for a constant-mu sweep omega0 -> omega1.

    With theta = ln(omega1/omega0)/mu the matrix is
    (omega1/omega0) * exp(theta * B(mu)), B = [[0,-mu,0],[-mu,0,-2],[0,2,0]],
    evaluated in closed form through the scalar functions of
    w = (mu^2 - 4) theta^2 (hyperbolic for |mu| > 2, trigonometric for
    |mu| < 2, series at the degenerate |mu| = 2).

    Accepts scalars or equal-length arrays; returns shape (3,3) or (N,3,3).
    """
    omega0 = np.asarray(omega0, dtype=float)
    omega1 = np.asarray(omega1, dtype=float)
    mu = np.asarray(mu, dtype=float)
    theta = np.where(omega0 == omega1, 0.0, np.log(omega1 / omega0) / np.where(mu == 0, 1.0, mu))
    if np.any(mu == 0):
        raise ValueError("const-mu propagator requires mu != 0")
    if np.any(theta < 0):
        raise ValueError("mu sign inconsistent with sweep direction")
    w = (mu * mu - 4.0) * theta * theta
    f1, f2 = _phi_funcs(w)
    g1 = theta * f1            # sinh(Omega theta)/Omega
    g2 = theta * theta * f2    # (cosh(Omega theta)-1)/Omega^2
    ratio = omega1 / omega0
    shape = np.broadcast_shapes(mu.shape, theta.shape, ratio.shape)
    U = np.empty(shape + (3, 3))
    U[..., 0, 0] = 1.0 + g2 * mu * mu
    U[..., 0, 1] = -g1 * mu
    U[..., 0, 2] = 2.0 * mu * g2
    U[..., 1, 0] = -g1 * mu
    U[..., 1, 1] = 1.0 + g2 * (mu * mu - 4.0)
    U[..., 1, 2] = -2.0 * g1
    U[..., 2, 0] = -2.0 * mu * g2
    U[..., 2, 1] = 2.0 * g1
    U[..., 2, 2] = 1.0 - 4.0 * g2
    return U * ratio[..., None, None] if U.ndim > 2 else U * float(ratio)


def propagate_adiabat_const_mu(state: StateVector, omega_target: float,
                               mu: float) -> tuple[StateVector, float]:
    """Closed-form constant-mu adiabat from state.omega to omega_target.

    Returns the final state and the elapsed time
    (1/mu) * (1/omega_start - 1/omega_target).  mu must be nonzero with sign
    matching the sweep direction (mu < 0 for expansion).
    """
    w0, w1 = state.omega, omega_target
    if w1 <= 0:
        raise ValueError("omega_target must be positive")
    if mu == 0:
        raise ValueError("mu must be nonzero; use the numeric propagator for mu = 0")
    if w0 != w1 and (w1 > w0) != (mu > 0):
        raise ValueError("sign of mu inconsistent with direction of frequency change")
    U = const_mu_matrix(w0, w1, mu)
    elapsed = (1.0 / mu) * (1.0 / w0 - 1.0 / w1)
    return StateVector.from_array(U @ state.as_array(), w1), elapsed


def jump_matrix(omega_old, omega_new):
    """Linear map of an instantaneous frequency jump (continuity of Q, P moments)."""
    r = np.asarray(omega_new, dtype=float) / np.asarray(omega_old, dtype=float)
    s = r * r
    shape = s.shape
    J = np.empty(shape + (3, 3))
    J[..., 0, 0] = 0.5 * (1.0 + s)
    J[..., 0, 1] = 0.5 * (1.0 - s)
    J[..., 0, 2] = 0.0
    J[..., 1, 0] = 0.5 * (1.0 - s)
    J[..., 1, 1] = 0.5 * (1.0 + s)
    J[..., 1, 2] = 0.0
    J[..., 2, 0] = 0.0
    J[..., 2, 1] = 0.0
    J[..., 2, 2] = r
    return J


def apply_frequency_jump(state: StateVector, omega_new: float) -> StateVector:
    """Instantaneous change of the confining potential's frequency.

    The position and momentum moments are continuous across the jump, so with
    s = (omega_new/omega_old)^2:

        e_h' = (e_h + e_l)/2 + s (e_h - e_l)/2
        e_l' = (e_h + e_l)/2 - s (e_h - e_l)/2
        e_c' = (omega_new/omega_old) e_c

    The Casimir invariant is preserved exactly.
    """
    if omega_new <= 0:
        raise ValueError("omega_new must be positive")
    J = jump_matrix(state.omega, omega_new)
    return StateVector.from_array(J @ state.as_array(), omega_new)


def free_segment_matrix(omega, t):
    """Rotation of (e_l, e_c) by angle 2*omega*t at constant frequency."""
    ang = 2.0 * np.asarray(omega, dtype=float) * np.asarray(t, dtype=float)
    c, s = np.cos(ang), np.sin(ang)
    F = np.zeros(ang.shape + (3, 3))
    F[..., 0, 0] = 1.0
    F[..., 1, 1] = c
    F[..., 1, 2] = -s
    F[..., 2, 1] = s
    F[..., 2, 2] = c
    return F


def propagate_free_segment(state: StateVector, t: float) -> StateVector:
    """Free evolution at constant omega, decoupled from the baths.

    e_h is constant; (e_l, e_c) rotate at angular rate 2*omega
    (d e_l/dt = -2 omega e_c, d e_c/dt = +2 omega e_l).
    """
    if t < 0:
        raise ValueError("duration must be >= 0")
    F = free_segment_matrix(state.omega, t)
    return StateVector.from_array(F @ state.as_array(), state.omega)


# ---------------------------------------------------------------------------
# Piecewise-constant schedules: exact composition of jumps and holds
# ---------------------------------------------------------------------------

def piecewise_matrix(schedule: Schedule) -> np.ndarray:
    """Exact propagator of a piecewise-constant schedule (jumps + holds).

    Composed through the classical (Q, P) fundamental matrix: the position
    and momentum moments are continuous across frequency jumps, so each jump
    is the identity there and each hold is a plane rotation at its own
    frequency.  Lifting the 2x2 product to second moments once at the end
    avoids the catastrophic cancellation that a direct product of 3x3 jump
    maps suffers at extreme compression ratios.
    """
    if schedule.kind not in PIECEWISE_KINDS:
        raise ScheduleError("piecewise_matrix needs a piecewise-constant schedule")
    phi = np.eye(2)
    for w, dt in schedule.segments:
        if dt > 0:
            ang = w * dt
            c, s = math.cos(ang), math.sin(ang)
            phi = np.array([[c, s / w], [-w * s, c]]) @ phi
    return (_moments_to_hlc(schedule.omega_end) @ _moment_lift(phi)
            @ _hlc_to_moments(schedule.omega_start))


# ---------------------------------------------------------------------------
# Exponential schedules: exact propagator via order-0 Bessel solutions
# ---------------------------------------------------------------------------

def _moment_lift(phi: np.ndarray) -> np.ndarray:
    """Second-moment map (<Q^2>, <P^2>, <QP+PQ>/2) induced by a classical
    fundamental matrix phi = [[a, b], [c, d]] acting on (Q, P)."""
    a, b = phi[0, 0], phi[0, 1]
    c, d = phi[1, 0], phi[1, 1]
    return np.array([
        [a * a, b * b, 2 * a * b],
        [c * c, d * d, 2 * c * d],
        [a * c, b * d, a * d + b * c],
    ])


def _hlc_to_moments(omega: float) -> np.ndarray:
    w2 = omega * omega
    return np.array([
        [1.0 / w2, -1.0 / w2, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 0.0, 1.0 / omega],
    ])


def _moments_to_hlc(omega: float) -> np.ndarray:
    w2 = omega * omega
    return np.array([
        [0.5 * w2, 0.5, 0.0],
        [-0.5 * w2, 0.5, 0.0],
        [0.0, 0.0, omega],
    ])


def exponential_matrix(schedule: Schedule) -> np.ndarray:
    """Exact propagator of an exponential sweep omega(t) = omega0 exp(alpha t).

    The classical oscillator equation x'' + omega(t)^2 x = 0 reduces to the
    order-0 Bessel equation in z = omega/|alpha|, so the fundamental matrix is
    assembled from J0, Y0, J1, Y1 at the endpoint arguments with the exact
    constant Wronskian 2 sign(alpha) |alpha| / pi.  Machine-precision accurate
    for sweeps of any duration.
    """
    if schedule.kind != "exponential":
        raise ScheduleError("exponential_matrix needs an exponential schedule")
    alpha = schedule.alpha
    sgn = 1.0 if alpha > 0 else -1.0
    aa = abs(alpha)
    w0, w1 = schedule.omega_start, schedule.omega_end
    z0, z1 = w0 / aa, w1 / aa
    if min(z0, z1) < 1e-6:
        # Bessel evaluation degrades; integrate instead.
        return rk_matrix(schedule, 1e-12)

    def fundamental(z, w):
        return np.array([
            [j0(z), y0(z)],
            [-sgn * w * j1(z), -sgn * w * y1(z)],
        ])

    S0 = fundamental(z0, w0)
    S1 = fundamental(z1, w1)
    det = 2.0 * sgn * aa / math.pi    # exact Wronskian of the columns
    S0_inv = np.array([[S0[1, 1], -S0[0, 1]], [-S0[1, 0], S0[0, 0]]]) / det
    phi = S1 @ S0_inv
    return _moments_to_hlc(w1) @ _moment_lift(phi) @ _hlc_to_moments(w0)


# ---------------------------------------------------------------------------
# Linear schedules: phase-exact product integrator
# ---------------------------------------------------------------------------

def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """Product mats[-1] @ ... @ mats[0] by pairwise reduction (order preserved)."""
    while mats.shape[0] > 1:
        n = mats.shape[0]
        half = n // 2
        paired = np.matmul(mats[1: 2 * half: 2], mats[0: 2 * half: 2])
        if n % 2:
            mats = np.concatenate([paired, mats[-1:]], axis=0)
        else:
            mats = paired
    return mats[0]


def linear_matrix(schedule: Schedule, tol: float = 1e-8) -> np.ndarray:
    """Propagator of a linear sweep by a product of constant-mu steps.

    Each step spans [omega_k, omega_k+1] of the ramp and applies the exact
    constant-mu propagator whose mu equals the step's time average of mu(t),
    wrapped in half-angle rotations that make the accumulated oscillation
    phase integral exact.  The local defect scales with the variation of mu
    across the step, not with the oscillation frequency, so steps stretch
    enormously in the slow (hot) part of the ramp; the grid is uniform in
    omega^(2/3), which equidistributes the defect.  ``tol`` is a heuristic
    global accuracy target.

    Unlike direct time stepping this stays affordable for near-quasistatic
    ramps whose total oscillation phase is astronomically large.
    """
    if schedule.kind != "linear":
        raise ScheduleError("linear_matrix needs a linear schedule")
    w0, w1, tau = schedule.omega_start, schedule.omega_end, schedule.duration
    if w0 == w1 or tau == 0.0:
        return free_segment_matrix(w0, tau)
    beta = (w0 - w1) / tau           # signed; > 0 for expansion
    i23 = 1.5 * abs(w0 ** (2.0 / 3.0) - w1 ** (2.0 / 3.0)) / abs(beta) ** (1.0 / 3.0)
    n_steps = int(min(max(i23 ** 1.5 / math.sqrt(tol), 32), 5e7))

    total = np.eye(3)
    chunk = 131072
    u0 = w0 ** (2.0 / 3.0)
    u1 = w1 ** (2.0 / 3.0)
    grid = np.linspace(u0, u1, n_steps + 1) ** 1.5
    for lo in range(0, n_steps, chunk):
        hi = min(lo + chunk, n_steps)
        wa = grid[lo:hi]
        wb = grid[lo + 1: hi + 1]
        mu_hat = -beta / (wa * wb)                       # exact step-average of mu(t)
        theta_hat = np.log(wb / wa) / mu_hat
        dtheta = (wa * wa - wb * wb) / (2.0 * beta)      # exact phase integral of omega dt
        half = 0.5 * (dtheta - theta_hat)
        U = const_mu_matrix(wa, wb, mu_hat)
        R = free_segment_matrix(1.0, half)               # rotation over theta-span `half`
        U = np.matmul(R, np.matmul(U, R))
        total = _ordered_product(U) @ total
    return total


# ---------------------------------------------------------------------------
# General numeric propagation (adaptive embedded Runge-Kutta)
# ---------------------------------------------------------------------------

def _adiabat_rhs(t, y, schedule):
    w, mu = schedule.evaluate(t)
    h, l, c = y[0::3], y[1::3], y[2::3]
    out = np.empty_like(y)
    out[0::3] = w * (mu * h - mu * l)
    out[1::3] = w * (-mu * h + mu * l - 2.0 * c)
    out[2::3] = w * (2.0 * l + mu * c)
    return out


def _rk_solve(schedule: Schedule, y0: np.ndarray, tol: float) -> np.ndarray:
    scale = max(float(np.max(np.abs(y0))), 1e-30)
    sol = solve_ivp(
        _adiabat_rhs, (0.0, schedule.duration), y0, args=(schedule,),
        method="DOP853", rtol=tol, atol=tol * scale * 1e-2, dense_output=False,
    )
    if not sol.success:
        raise PropagationError(f"adaptive integration failed: {sol.message}")
    return sol.y[:, -1]


def rk_matrix(schedule: Schedule, tol: float) -> np.ndarray:
    """Fundamental 3x3 matrix of a smooth schedule by adaptive integration."""
    if schedule.duration == 0.0:
        return np.eye(3)
    y = _rk_solve(schedule, np.eye(3).flatten(order="F"), tol)
    return y.reshape(3, 3, order="F")


def propagate_adiabat_numeric(state: StateVector, schedule: Schedule,
                              tol: float = 1e-10) -> StateVector:
    """Propagate through an arbitrary schedule by time-ordered integration.

    Smooth kinds use an adaptive embedded Runge-Kutta stepper (Dormand-Prince
    8(5,3)) with local error control at ``tol``.  Schedules with
    discontinuities are split at the jump points: the holds evolve exactly and
    the jump map is applied between them.
    """
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    if not math.isclose(state.omega, schedule.omega_start, rel_tol=1e-9):
        raise ValueError("state.omega does not match schedule.omega_start")
    if schedule.kind in PIECEWISE_KINDS:
        v = piecewise_matrix(schedule) @ state.as_array()
        return StateVector.from_array(v, schedule.omega_end)
    if schedule.duration == 0.0:
        return state
    v = _rk_solve(schedule, state.as_array(), tol)
    return StateVector.from_array(v, schedule.omega_end)


def schedule_propagator(schedule: Schedule, tol: float = 1e-10) -> np.ndarray:
    """Best-available 3x3 propagator matrix for a schedule.

    Exact closed forms for const-mu, piecewise-constant (incl. three-jump)
    and exponential kinds; the phase-exact product integrator for linear
    ramps.  ``tol`` only affects the linear path.
    """
    if schedule.kind == "const_mu":
        return const_mu_matrix(schedule.omega_start, schedule.omega_end, schedule.mu)
    if schedule.kind in PIECEWISE_KINDS:
        return piecewise_matrix(schedule)
    if schedule.kind == "exponential":
        return exponential_matrix(schedule)
    if schedule.kind == "linear":
        return linear_matrix(schedule, tol=max(tol, 1e-12))
    raise ScheduleError(f"no propagator for schedule kind {schedule.kind!r}")
