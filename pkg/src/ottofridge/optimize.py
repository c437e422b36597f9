"""Optimization of the cooling rate: isochore time allocation, cold-frequency
choice, derivative-free search over branch times, and a genetic search over
piecewise frequency protocols.

All stochastic searches draw from a seeded PCG64 generator and reduce results
in candidate order, so a fixed seed gives bit-identical output.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize

from .cycle import CycleRecord, CycleSpec, limit_cycle
from .schedules import Schedule, build_three_jump

_FREE_VARS = ("tau_c", "tau_h", "tau_hc", "tau_ch", "omega_c")


# ---------------------------------------------------------------------------
# Closed-form pieces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsochoreAllocation:
    z: float
    tau_h: float
    tau_c: float
    degenerate: bool = False


def solve_isochore_z(gamma_h: float, gamma_c: float,
                     tau_adiabats: float) -> IsochoreAllocation:
    """Optimal isochore times for given total adiabat time.

    Solves 2 z + Gamma * tau_adiabats = 2 sinh(z) for the unique z > 0 and
    returns tau_h = z / gamma_h, tau_c = z / gamma_c.  The transcendental
    equation is the exact stationarity condition of the cooling rate when the
    two conductances are equal (z = Gamma_h tau_h = Gamma_c tau_c with a
    single Gamma); for gamma_h != gamma_c it is a heuristic (gamma_h is used)
    and a searched optimization is authoritative.
    """
    if gamma_h <= 0 or gamma_c <= 0:
        raise ValueError("conductances must be positive")
    if tau_adiabats < 0:
        raise ValueError("tau_adiabats must be >= 0")
    if tau_adiabats == 0.0:
        return IsochoreAllocation(0.0, 0.0, 0.0, degenerate=True)
    a = gamma_h * tau_adiabats

    def f(z):
        return 2.0 * math.sinh(z) - 2.0 * z - a

    hi = max(1.0, math.asinh(0.5 * a) + 1.0)
    while f(hi) < 0:
        hi *= 1.5
    z = brentq(f, 0.0, hi, xtol=1e-15, rtol=8.9e-16)
    for _ in range(3):   # Newton polish to the floating-point fixed point
        fz = f(z)
        dz = 2.0 * math.cosh(z) - 2.0
        if dz == 0.0:
            break
        z_new = z - fz / dz
        if z_new == z:
            break
        z = z_new
    return IsochoreAllocation(z, z / gamma_h, z / gamma_c)


_NEG_INV_E = -math.exp(-1.0)


def lambert_w0(x: float) -> float:
    """Principal branch of the product-log: w with w * exp(w) = x, w >= -1.

    Halley iteration from a piecewise initial guess (branch-point series near
    -1/e, log(x) - log(log(x)) for large x, log1p(x) otherwise) converged to
    residual |w e^w - x| <= 1e-14 * max(|x|, 1).
    """
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    if x < _NEG_INV_E * (1.0 + 4e-16) - 1e-300:
        raise ValueError(f"lambert_w0 domain is x >= -1/e; got {x}")
    if x <= _NEG_INV_E:
        return -1.0
    if x == 0.0:
        return 0.0
    if x < -0.30:
        p = math.sqrt(2.0 * (1.0 + math.e * x))
        w = -1.0 + p - p * p / 3.0 + 11.0 * p**3 / 72.0
    elif x > math.e:
        lx = math.log(x)
        w = lx - math.log(lx)
    else:
        w = math.log1p(x)
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-15 * max(abs(x), 1.0):
            break
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) <= 4e-16 * max(abs(w), 1.0):
            break
    if abs(w * math.exp(w) - x) > 1e-14 * max(abs(x), 1.0):
        raise ArithmeticError(f"lambert_w0 failed to converge at x = {x}")
    return w


def optimal_cold_frequency(nu: float, t_c: float) -> tuple[float, float]:
    """Frequency maximizing omega^nu * n_eq(omega, T_c) and the ratio kappa.

    kappa = nu + W0(-nu e^-nu) solves the stationarity condition
    nu (1 - e^(-omega/T)) = omega/T of the full Bose-Einstein occupation.
    The optimum is interior only for nu > 1 (kappa = 0 otherwise).
    Returns (omega_c_star, kappa) with omega_c_star = kappa * T_c.
    """
    if nu <= 0 or t_c <= 0:
        raise ValueError("nu and t_c must be positive")
    kappa = nu + lambert_w0(-nu * math.exp(-nu))
    return kappa * t_c, kappa


# ---------------------------------------------------------------------------
# Derivative-free search over branch times / cold frequency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizationSpec:
    """Search setup over a CycleSpec template.

    ``free`` names the variables being optimized (subset of tau_c, tau_h,
    tau_hc, tau_ch, omega_c); ``bounds`` maps each to a positive (lo, hi)
    interval.  The genetic-search fields are used by
    :func:`ga_schedule_search` only.
    """

    base: CycleSpec
    free: tuple[str, ...] = ()
    bounds: dict = field(default_factory=dict)
    seed: int = 0
    restarts: int = 3
    max_iter: int = 400
    xtol: float = 1e-7
    ftol: float = 1e-11
    # genetic algorithm
    segments: int = 2
    population: int = 32
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 0.35
    mutation_scale: float = 0.25
    mutation_decay: float = 0.99
    tau_max: float | None = None
    initial_population: np.ndarray | None = None

    def __post_init__(self):
        for name in self.free:
            if name not in _FREE_VARS:
                raise ValueError(f"unknown free variable {name!r}")
            if name not in self.bounds:
                raise ValueError(f"missing bounds for free variable {name!r}")
        for name, (lo, hi) in self.bounds.items():
            if not (0 < lo < hi < math.inf):
                raise ValueError(f"bounds for {name!r} must satisfy 0 < lo < hi < inf")
        if self.free and ("tau_hc" in self.free or "tau_ch" in self.free):
            for which in ("tau_hc", "tau_ch"):
                if which not in self.free:
                    continue
                sched = self.base.expansion if which == "tau_hc" else self.base.compression
                if sched.kind in ("three_jump", "piecewise_const"):
                    raise ValueError(f"{which} is derived for {sched.kind} schedules and cannot be freed")


@dataclass(frozen=True)
class OptimizationResult:
    best_spec: CycleSpec
    best_record: CycleRecord
    best_values: dict
    restarts: tuple[tuple[dict, float], ...]
    seed: int
    z_comparison: dict | None = None
    failures: int = 0


def _rebuild_schedule(sched: Schedule, omega_start: float, omega_end: float,
                      duration: float | None = None) -> Schedule:
    """Same-kind schedule with new endpoints and/or duration."""
    dur = sched.duration if duration is None else duration
    if sched.kind == "three_jump":
        return build_three_jump(omega_start, omega_end)
    if sched.kind == "linear":
        return Schedule.linear(omega_start, omega_end, dur)
    if sched.kind == "exponential":
        return Schedule.exponential(omega_start, omega_end, dur)
    if sched.kind == "const_mu":
        # duration fixes mu; preserves frictionless criticality only by accident
        mu = (1.0 / dur) * (1.0 / omega_start - 1.0 / omega_end)
        return Schedule.const_mu(omega_start, omega_end, mu)
    raise ValueError(f"cannot rebuild schedule of kind {sched.kind!r}")


def apply_free_values(base: CycleSpec, values: dict) -> CycleSpec:
    """New CycleSpec with the named free variables replaced."""
    tau_c = values.get("tau_c", base.tau_c)
    tau_h = values.get("tau_h", base.tau_h)
    omega_c = values.get("omega_c", base.omega_c)
    expansion, compression = base.expansion, base.compression
    if "omega_c" in values:
        expansion = _rebuild_schedule(expansion, base.omega_h, omega_c)
        compression = _rebuild_schedule(compression, omega_c, base.omega_h)
    if "tau_hc" in values:
        expansion = _rebuild_schedule(expansion, expansion.omega_start,
                                      expansion.omega_end, duration=values["tau_hc"])
    if "tau_ch" in values:
        compression = _rebuild_schedule(compression, compression.omega_start,
                                        compression.omega_end, duration=values["tau_ch"])
    return replace(base, tau_c=tau_c, tau_h=tau_h, omega_c=omega_c,
                   expansion=expansion, compression=compression)


def optimize_time_allocation(spec: OptimizationSpec) -> OptimizationResult:
    """Multi-start Nelder-Mead maximization of the limit-cycle cooling rate.

    The free variables are searched in log space (they span decades near
    T_c -> 0).  Failed objective evaluations count as -inf fitness.  When
    only the isochore times are free and the conductances are equal, the
    result is compared against the analytic z-equation allocation and the
    comparison is attached to the result.
    """
    base = spec.base
    if not spec.free:
        _, record = limit_cycle(base)
        return OptimizationResult(base, record, {}, (), spec.seed)

    names = list(spec.free)
    lo = np.log([spec.bounds[n][0] for n in names])
    hi = np.log([spec.bounds[n][1] for n in names])
    failures = 0

    def objective(x):
        nonlocal failures
        values = {n: math.exp(v) for n, v in zip(names, np.clip(x, lo, hi))}
        try:
            _, record = limit_cycle(apply_free_values(base, values))
            return -record.r_c
        except Exception as exc:
            failures += 1
            warnings.warn(f"objective evaluation failed at {values}: {exc}")
            return math.inf

    rng = np.random.default_rng(spec.seed)
    starts = [0.5 * (lo + hi)]
    current = np.array([math.log(getattr(base, n)) if n != "tau_hc" and n != "tau_ch"
                        else math.log(base.expansion.duration if n == "tau_hc"
                                      else base.compression.duration)
                        for n in names])
    if np.all(current >= lo) and np.all(current <= hi):
        starts.insert(0, current)
    while len(starts) < spec.restarts:
        starts.append(rng.uniform(lo, hi))

    results = []
    for x0 in starts[: spec.restarts]:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxiter": spec.max_iter, "xatol": spec.xtol,
                                "fatol": spec.ftol, "adaptive": True})
        x = np.clip(res.x, lo, hi)
        values = {n: math.exp(v) for n, v in zip(names, x)}
        results.append((values, -res.fun))

    best_values, best_rc = max(enumerate(results), key=lambda kv: (kv[1][1], -kv[0]))[1]
    best_spec = apply_free_values(base, best_values)
    _, best_record = limit_cycle(best_spec)

    z_comparison = None
    if set(names) == {"tau_c", "tau_h"} and math.isclose(
            base.hot_bath.conductance, base.cold_bath.conductance, rel_tol=1e-12):
        alloc = solve_isochore_z(base.hot_bath.conductance, base.cold_bath.conductance,
                                 base.expansion.duration + base.compression.duration)
        _, z_record = limit_cycle(apply_free_values(
            base, {"tau_c": alloc.tau_c, "tau_h": alloc.tau_h}))
        gap = abs(z_record.r_c - best_record.r_c) / max(abs(z_record.r_c), 1e-300)
        z_comparison = {
            "z": alloc.z, "tau_c": alloc.tau_c, "tau_h": alloc.tau_h,
            "r_c_z": z_record.r_c, "r_c_searched": best_record.r_c,
            "relative_gap": gap, "agree_1pct": gap <= 0.01,
        }
        if z_record.r_c > best_record.r_c:
            # analytic allocation beat the search; keep the better point
            best_values = {"tau_c": alloc.tau_c, "tau_h": alloc.tau_h}
            best_spec = apply_free_values(base, best_values)
            best_record = z_record

    return OptimizationResult(best_spec, best_record, best_values,
                              tuple(results), spec.seed, z_comparison, failures)


# ---------------------------------------------------------------------------
# Genetic search over piecewise-constant schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GAResult:
    schedule: Schedule
    record: CycleRecord
    fitness: float
    history: tuple[float, ...]      # best fitness per generation (non-decreasing)
    seed: int
    evaluations: int


def _ga_candidate_spec(base: CycleSpec, genes: np.ndarray) -> CycleSpec:
    """CycleSpec for one genome [(omega_i, tau_i) ...].

    The expansion is the piecewise schedule given by the genes; the
    compression is its time reverse.  Isochore times follow the z-equation
    for the candidate's own adiabat time, so every genome is scored with its
    optimal heat-exchange allocation.
    """
    segs = [(genes[2 * i], genes[2 * i + 1]) for i in range(len(genes) // 2)]
    expansion = Schedule.piecewise(base.omega_h, base.omega_c, segs)
    compression = Schedule.piecewise(base.omega_c, base.omega_h, segs[::-1])
    alloc = solve_isochore_z(base.hot_bath.conductance, base.cold_bath.conductance,
                             expansion.duration + compression.duration)
    return replace(base, expansion=expansion, compression=compression,
                   tau_c=max(alloc.tau_c, 1e-12), tau_h=max(alloc.tau_h, 1e-12))


def ga_schedule_search(spec: OptimizationSpec) -> GAResult:
    """Genetic search over N-segment piecewise frequency protocols.

    Tournament selection (size 3), blend crossover on the (omega_i, tau_i)
    genes, Gaussian mutation with a geometrically decaying step, elitism of
    one.  Fitness is the limit-cycle cooling rate; candidates are always
    evaluated in index order so runs are reproducible bit for bit.
    """
    if spec.population < 4:
        raise ValueError("population must be at least 4")
    if spec.segments < 2:
        raise ValueError("at least 2 segments are required")
    base = spec.base
    n_genes = 2 * spec.segments
    tau_max = spec.tau_max if spec.tau_max is not None else math.pi / base.omega_c
    glo = np.tile([base.omega_c, 0.0], spec.segments)
    ghi = np.tile([base.omega_h, tau_max], spec.segments)

    rng = np.random.default_rng(spec.seed)
    evaluations = 0

    def fitness(genes: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        try:
            _, record = limit_cycle(_ga_candidate_spec(base, genes))
            return record.r_c
        except Exception:
            return -math.inf

    if spec.initial_population is not None:
        pop = np.clip(np.asarray(spec.initial_population, dtype=float), glo, ghi)
        if pop.shape != (spec.population, n_genes):
            raise ValueError("initial_population has wrong shape")
    else:
        pop = rng.uniform(glo, ghi, size=(spec.population, n_genes))

    fits = np.array([fitness(g) for g in pop])
    history = []
    sigma = spec.mutation_scale
    span = ghi - glo

    for _ in range(spec.generations):
        best_idx = int(np.argmax(fits))
        history.append(fits[best_idx])
        new_pop = [pop[best_idx].copy()]                 # elitism of 1
        while len(new_pop) < spec.population:
            # tournament selection, size 3
            parents = []
            for _ in range(2):
                idx = rng.integers(0, spec.population, size=3)
                parents.append(pop[idx[np.argmax(fits[idx])]])
            p1, p2 = parents
            if rng.random() < spec.crossover_rate:       # BLX-0.5 blend
                lo_g = np.minimum(p1, p2)
                hi_g = np.maximum(p1, p2)
                d = hi_g - lo_g
                child = rng.uniform(lo_g - 0.5 * d, hi_g + 0.5 * d + 1e-300)
            else:
                child = p1.copy()
            mask = rng.random(n_genes) < spec.mutation_rate
            noise = rng.standard_normal(n_genes)
            child = child + mask * sigma * span * noise
            new_pop.append(np.clip(child, glo, ghi))
        pop = np.array(new_pop)
        fits = np.array([fitness(g) for g in pop])
        sigma *= spec.mutation_decay

    best_idx = int(np.argmax(fits))
    history.append(fits[best_idx])
    champion = pop[best_idx]
    champ_spec = _ga_candidate_spec(base, champion)
    _, record = limit_cycle(champ_spec)
    return GAResult(champ_spec.expansion, record, fits[best_idx],
                    tuple(history), spec.seed, evaluations)
