"""Temperature sweeps toward T_c -> 0 and power-law exponent extraction.

For each grid temperature the sweep chooses the cold frequency (fixed
kappa * T_c by default), builds the branch schedules for the requested kind,
allocates the isochore times, solves the limit cycle and records the row.
Schedules without a frictionless closed form (linear, exponential) get their
adiabat duration from a per-point golden-section search that maximizes the
limit-cycle cooling rate.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .cycle import CycleSpec, limit_cycle
from .dynamics import BathSpec
from .optimize import optimal_cold_frequency, solve_isochore_z
from .schedules import Schedule, build_three_jump, critical_mu

SWEEP_KINDS = ("three_jump", "const_mu", "linear", "exponential")

# exponent nu of the rate bound omega^nu * n_eq for the frictionless kinds;
# the searched kinds default to the const-mu value.
_KIND_NU = {"three_jump": 1.5, "const_mu": 2.0, "linear": 2.0, "exponential": 2.0}

# default heuristic accuracy of the linear-ramp product integrator in sweeps;
# its true error is orders of magnitude below the target (see tests).
_LINEAR_SWEEP_TOL = 1e-2


@dataclass(frozen=True)
class SweepSpec:
    """Setup of one temperature sweep (see module docstring)."""

    kind: str
    omega_h: float = 100.0
    t_hot: float = 1.0
    gamma: float = 1.0
    t_max: float = 1.0
    t_min: float = 1e-4
    points_per_decade: int = 5
    kappa: float | None = None          # None: kind default via optimal_cold_frequency
    optimize_omega_c: bool = False
    allocation: str = "z"               # "z" or "searched"
    ode_tol: float | None = None
    tail_decades: float = 1.0
    seed: int = 0
    duration_bracket: tuple[float, float] = (0.02, 10.0)
    search_iters: int = 20

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep schedule kind {self.kind!r}")
        if not (0 < self.t_min < self.t_max):
            raise ValueError("need 0 < t_min < t_max")
        if self.points_per_decade < 1:
            raise ValueError("points_per_decade must be >= 1")
        if self.allocation not in ("z", "searched"):
            raise ValueError("allocation must be 'z' or 'searched'")
        if self.omega_h <= 0 or self.t_hot <= 0 or self.gamma <= 0:
            raise ValueError("omega_h, t_hot and gamma must be positive")
        if self.omega_h / self.t_hot < 30:
            warnings.warn("omega_h / T_h < 30: hot-bath occupation is not negligible")

    @property
    def grid(self) -> np.ndarray:
        """Strictly decreasing log-spaced T_c grid."""
        decades = math.log10(self.t_max / self.t_min)
        n = int(round(decades * self.points_per_decade)) + 1
        return np.logspace(math.log10(self.t_max), math.log10(self.t_min), n)

    def kind_kappa(self) -> float:
        if self.kappa is not None:
            return self.kappa
        _, kappa = optimal_cold_frequency(_KIND_NU[self.kind], 1.0)
        return kappa

    def effective_ode_tol(self) -> float:
        if self.ode_tol is not None:
            return self.ode_tol
        return _LINEAR_SWEEP_TOL if self.kind == "linear" else 1e-9


@dataclass(frozen=True)
class SweepRow:
    """One sweep point.  flag: 1 = converged and cooling, 2 = converged but
    q_c <= 0, 0 = failed (error recorded, numeric fields nan)."""

    t_c: float
    omega_c: float
    tau_hc: float
    tau_c: float
    tau_ch: float
    tau_h: float
    tau_total: float
    q_c: float
    q_h: float
    w: float
    r_c: float
    sigma: float
    flag: int
    error: str = ""

    def csv_fields(self) -> tuple:
        return (self.t_c, self.omega_c, self.tau_hc, self.tau_c, self.tau_ch,
                self.tau_h, self.tau_total, self.q_c, self.q_h, self.w,
                self.r_c, self.sigma, self.flag)


@dataclass(frozen=True)
class PowerLawFit:
    delta: float
    prefactor: float
    rms_residual: float
    n_used: int


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]
    fit: PowerLawFit | None
    tail_fit: PowerLawFit | None


def fit_power_law(points, tail_decades: float | None = None) -> PowerLawFit:
    """Least-squares slope of ln R against ln T.

    ``points`` is an iterable of (T, R); rows with R <= 0 are excluded with a
    warning.  With ``tail_decades`` set, only points within that many decades
    of the smallest T are fitted (the asymptotic window).  Fewer than 4
    surviving points is an error.
    """
    pts = [(float(t), float(r)) for t, r in points]
    kept = [(t, r) for t, r in pts if r > 0 and t > 0]
    if len(kept) < len(pts):
        warnings.warn(f"fit_power_law: excluded {len(pts) - len(kept)} non-positive points")
    if tail_decades is not None:
        t_min = min(t for t, _ in kept) if kept else 0.0
        kept = [(t, r) for t, r in kept if t <= t_min * 10.0 ** tail_decades * (1 + 1e-12)]
    if len(kept) < 4:
        raise ValueError(f"fit_power_law needs >= 4 positive points, got {len(kept)}")
    lt = np.log([t for t, _ in kept])
    lr = np.log([r for _, r in kept])
    slope, intercept = np.polyfit(lt, lr, 1)
    rms = float(np.sqrt(np.mean((lr - (slope * lt + intercept)) ** 2)))
    return PowerLawFit(float(slope), float(math.exp(intercept)), rms, len(kept))


# ---------------------------------------------------------------------------
# Per-point cycle assembly
# ---------------------------------------------------------------------------

def _golden_max(f, lo: float, hi: float, iters: int):
    """Deterministic golden-section maximization on [lo, hi]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _allocate(spec: SweepSpec, cycle: CycleSpec) -> CycleSpec:
    alloc = solve_isochore_z(spec.gamma, spec.gamma,
                             cycle.expansion.duration + cycle.compression.duration)
    tau = max(alloc.tau_c, 1e-12)
    cycle = replace(cycle, tau_c=tau, tau_h=tau)
    if spec.allocation == "searched":
        from .optimize import OptimizationSpec, optimize_time_allocation
        bounds = {"tau_c": (tau / 10.0, tau * 10.0), "tau_h": (tau / 10.0, tau * 10.0)}
        result = optimize_time_allocation(OptimizationSpec(
            base=cycle, free=("tau_c", "tau_h"), bounds=bounds,
            seed=spec.seed, restarts=1))
        cycle = result.best_spec
    return cycle


def build_point(spec: SweepSpec, t_c: float, omega_c: float | None = None) -> CycleSpec:
    """Assemble the cycle for one sweep temperature (duration search included)."""
    hot = BathSpec(spec.t_hot, spec.gamma)
    cold = BathSpec(t_c, spec.gamma)
    if omega_c is None:
        omega_c = spec.kind_kappa() * t_c
    w_h, w_c = spec.omega_h, omega_c
    if w_c >= w_h:
        raise ValueError("sweep produced omega_c >= omega_h; shrink the grid")
    tol = spec.effective_ode_tol()

    def assemble(expansion, compression):
        return _allocate(spec, CycleSpec(hot, cold, w_h, w_c, expansion, compression,
                                         tau_c=1e-12, tau_h=1e-12, ode_tol=tol))

    if spec.kind == "three_jump":
        return assemble(build_three_jump(w_h, w_c), build_three_jump(w_c, w_h))
    if spec.kind == "const_mu":
        mu_star, _ = critical_mu(w_h / w_c, omega_h=w_h)
        return assemble(Schedule.const_mu(w_h, w_c, mu_star),
                        Schedule.const_mu(w_c, w_h, -mu_star))

    # searched adiabat duration for the generic kinds; the parameter is the
    # peak adiabatic rate |mu| at the cold end of the ramp.
    def cycle_for(param: float) -> CycleSpec:
        if spec.kind == "linear":
            tau = (w_h - w_c) / (param * w_c * w_c)
            return assemble(Schedule.linear(w_h, w_c, tau), Schedule.linear(w_c, w_h, tau))
        tau = math.log(w_h / w_c) / (param * w_c)
        return assemble(Schedule.exponential(w_h, w_c, tau),
                        Schedule.exponential(w_c, w_h, tau))

    def score(log_param: float) -> float:
        try:
            _, record = limit_cycle(cycle_for(math.exp(log_param)))
            return record.r_c
        except Exception:
            return -math.inf

    lo, hi = spec.duration_bracket
    best_log, _ = _golden_max(score, math.log(lo), math.log(hi), spec.search_iters)
    return cycle_for(math.exp(best_log))


def _evaluate_point(spec: SweepSpec, t_c: float) -> SweepRow:
    nan = float("nan")
    try:
        if spec.optimize_omega_c:
            def score(log_y):
                try:
                    _, rec = limit_cycle(build_point(spec, t_c, math.exp(log_y) * t_c))
                    return rec.r_c
                except Exception:
                    return -math.inf
            best_log, _ = _golden_max(score, math.log(0.05), math.log(3.0), spec.search_iters)
            cycle = build_point(spec, t_c, math.exp(best_log) * t_c)
        else:
            cycle = build_point(spec, t_c)
        _, record = limit_cycle(cycle)
    except Exception as exc:
        return SweepRow(t_c, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan,
                        flag=0, error=f"{type(exc).__name__}: {exc}")
    flag = 1 if record.q_c > 0 else 2
    return SweepRow(
        t_c=t_c, omega_c=cycle.omega_c, tau_hc=cycle.expansion.duration,
        tau_c=cycle.tau_c, tau_ch=cycle.compression.duration, tau_h=cycle.tau_h,
        tau_total=record.tau_total, q_c=record.q_c, q_h=record.q_h, w=record.w,
        r_c=record.r_c, sigma=record.sigma, flag=flag,
    )


def temperature_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Run the sweep over the full grid; failed points are recorded, not dropped.

    Points are independent; with ``threads`` > 1 they are evaluated in a
    thread pool and reassembled in grid order, so parallel and serial runs
    produce identical output.
    """
    grid = spec.grid
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda t: _evaluate_point(spec, t), grid))
    else:
        rows = [_evaluate_point(spec, t) for t in grid]

    cooling = [(r.t_c, r.r_c) for r in rows if r.flag == 1]
    fit = tail = None
    decades = math.log10(spec.t_max / spec.t_min)
    if len(cooling) >= 8 and decades >= 2 - 1e-9:
        fit = fit_power_law(cooling)
        tail = fit_power_law(cooling, tail_decades=spec.tail_decades)
    elif len(cooling) >= 4:
        fit = fit_power_law(cooling)
    return SweepResult(spec, tuple(rows), fit, tail)
