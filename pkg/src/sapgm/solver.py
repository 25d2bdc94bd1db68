"""Smoothing accelerated proximal gradient method (SAPGM) and its FPGA baseline.

One outer iteration:

1. extrapolate ``y = x_k + (k-1)/(k+alpha-1) (x_k - x_{k-1})``;
2. take the next smoothing level ``mu_{k+1} = mu0 / ((k+alpha-1) ln^sigma(k+alpha-1))``;
3. solve the subproblem at ``(x_k, y, mu_{k+1})`` with ``ell = 1/(gamma mu_{k+1})``,
   shrinking ``gamma <- eta * gamma`` until the descent test holds.

The run stops when ``||x_{k+1} - x_k||_inf < eps`` and ``mu_{k+1} < eps``.
With smoothing disabled (FPGA mode) ``mu`` is frozen at 1, the objectives are
used as they are, and only the ``x`` criterion applies.

The descent test accepts ``gamma`` when, for every objective,
``f~(x^) - f~(y) - <grad f~(y), x^ - y> <= ||x^ - y||^2 / (2 gamma mu)``.
``paper_literal_backtrack=True`` checks only the best objective instead
(``min`` over objectives), which does not certify the inequality for all of
them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .problems import ProblemSpec
from .subproblem import SubproblemInstance, frank_wolfe_solve

__all__ = [
    "SolverConfig",
    "TraceEntry",
    "RunRecord",
    "Diagnostics",
    "BacktrackError",
    "extrapolate",
    "mu_schedule",
    "backtrack_gamma",
    "sapgm_run",
    "fpga_run",
    "diagnostics_step",
    "energy_sequence",
    "merit_u0_approx",
    "merit_from_values",
]


class BacktrackError(RuntimeError):
    """The step parameter underflowed during backtracking."""


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 4.0
    sigma: float = 0.75
    mu0: float = 0.5
    gamma0: float = 1.0
    eta: float = 0.5
    eps: float = 1e-3
    max_iter: int = 1000
    fw_iters: int = 200
    fw_tol: float = 1e-8
    fw_step: str = "exact"
    smoothing_enabled: bool = True
    paper_literal_backtrack: bool = False
    full_trace: bool = False
    trace_every: int = 10

    def __post_init__(self):
        if not self.alpha > 3:
            raise ValueError("alpha must be > 3")
        if not 0.5 < self.sigma <= 1:
            raise ValueError("sigma must lie in (1/2, 1]")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        for name in ("mu0", "gamma0", "eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 0 or self.fw_iters < 1 or self.trace_every < 1:
            raise ValueError("max_iter >= 0, fw_iters >= 1 and trace_every >= 1 required")

    def replace(self, **changes) -> "SolverConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return SolverConfig(**d)


@dataclass
class TraceEntry:
    """State after outer iteration ``k`` produced ``x = x^{k+1}``."""

    k: int
    mu: float
    gamma: float
    drift: float
    F: np.ndarray
    x: np.ndarray
    fw_gap: float
    fw_iters: int
    shrinks: int
    descent_slack: float


@dataclass
class RunRecord:
    x: np.ndarray
    F: np.ndarray
    iterations: int
    fw_iterations: int
    wall_time: float
    converged: bool
    x0: np.ndarray
    solver: str = "sapgm"
    trace: list = field(default_factory=list)

    @property
    def points(self) -> list:
        """Iterates ``x^0, x^1, ...`` (complete only for full traces)."""
        return [self.x0] + [t.x for t in self.trace]


def extrapolate(x_cur, x_prev, k: int, alpha: float) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be >= 0")
    x_cur = np.asarray(x_cur, dtype=float)
    beta = (k - 1) / (k + alpha - 1)
    return x_cur + beta * (x_cur - np.asarray(x_prev, dtype=float))


def mu_schedule(k: int, cfg: SolverConfig) -> float:
    """Smoothing level ``mu_{k+1}`` used in outer iteration ``k``."""
    t = k + cfg.alpha - 1.0
    return cfg.mu0 / (t * math.log(t) ** cfg.sigma)


def _descent_excess(problem, x_hat, y, f_y, jac_y, mu):
    d = x_hat - y
    return problem.f_values(x_hat, mu) - f_y - jac_y @ d, float(d @ d)


def backtrack_gamma(problem: ProblemSpec, x, y, mu_next: float, gamma_bar: float, cfg: SolverConfig):
    """Backtracking on ``gamma`` for one outer iteration.

    Returns ``(gamma, x_next, info)``; ``info`` holds the inner solve
    statistics (``fw_iters`` summed over trials, ``fw_gap``, ``shrinks``,
    ``slack``: margin of the accepted descent test, ``>= 0`` when sound).
    """
    if not (gamma_bar > 0 and mu_next > 0):
        raise ValueError("gamma and mu must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f_y = problem.f_values(y, mu_next)
    jac_y = problem.f_jacobian(y, mu_next)
    offsets = f_y - problem.F_smoothed(x, mu_next)
    # rounding slack for the descent test when x_hat is very close to y
    tol = 64 * np.finfo(float).eps * (1.0 + np.abs(f_y))
    # sound test: every objective passes (2 max excess <= ell d^2); literal: the best one does
    reduce = np.max if cfg.paper_literal_backtrack else np.min
    fw_total = 0
    shrinks = 0
    g = gamma_bar
    while True:
        ell = 1.0 / (g * mu_next)
        inst = SubproblemInstance(y, mu_next, ell, jac_y, offsets, x)
        res = frank_wolfe_solve(inst, problem.g, cfg.fw_iters, cfg.fw_tol, cfg.fw_step)
        fw_total += max(res.iterations, 1)
        excess, dist2 = _descent_excess(problem, res.z, y, f_y, jac_y, mu_next)
        margin = ell * dist2 - 2.0 * (excess - tol)
        if not reduce(margin) < 0.0:
            break
        g *= cfg.eta
        shrinks += 1
        if g < 1e-16:
            raise BacktrackError(f"gamma underflow at mu={mu_next:g}; gradient or Lipschitz bound is wrong")
    slack = float(np.min(ell * dist2 - 2.0 * excess))
    info = {"fw_iters": fw_total, "fw_gap": float(res.gap), "shrinks": shrinks, "slack": slack}
    return g, res.z, info


def _run(problem: ProblemSpec, x0, cfg: SolverConfig, smoothing: bool) -> RunRecord:
    start = time.perf_counter()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.n,):
        raise ValueError(f"x0 must have shape ({problem.n},)")
    if not problem.g.in_box(x0):
        raise ValueError("x0 must lie inside the box")
    x_prev = x_cur = x0.copy()
    gamma = cfg.gamma0
    trace = []
    fw_total = 0
    converged = False
    k = 0
    while k < cfg.max_iter:
        y = extrapolate(x_cur, x_prev, k, cfg.alpha)
        mu = mu_schedule(k, cfg) if smoothing else 1.0
        gamma, x_next, info = backtrack_gamma(problem, x_cur, y, mu, gamma, cfg)
        fw_total += info["fw_iters"]
        drift = float(np.max(np.abs(x_next - x_cur)))
        x_prev, x_cur = x_cur, x_next
        stop = drift < cfg.eps and (mu < cfg.eps or not smoothing)
        if cfg.full_trace or k % cfg.trace_every == 0 or stop or k + 1 == cfg.max_iter:
            trace.append(
                TraceEntry(
                    k, mu, gamma, drift, problem.F(x_cur), x_cur.copy(),
                    info["fw_gap"], info["fw_iters"], info["shrinks"], info["slack"],
                )
            )
        k += 1
        if stop:
            converged = True
            break
    return RunRecord(
        x=x_cur,
        F=problem.F(x_cur),
        iterations=k,
        fw_iterations=fw_total,
        wall_time=time.perf_counter() - start,
        converged=converged,
        x0=x0,
        solver="sapgm" if smoothing else "fpga",
        trace=trace,
    )


def sapgm_run(problem: ProblemSpec, x0, cfg: SolverConfig) -> RunRecord:
    """Run SAPGM from ``x0``; with ``cfg.smoothing_enabled=False`` this is FPGA."""
    if not cfg.smoothing_enabled:
        return fpga_run(problem, x0, cfg)
    return _run(problem, x0, cfg, smoothing=True)


def fpga_run(problem: ProblemSpec, x0, cfg: SolverConfig) -> RunRecord:
    """Accelerated proximal gradient without smoothing (smooth problems only)."""
    if not problem.is_smooth:
        raise ValueError(f"FPGA needs differentiable objectives; {problem.name!r} is nonsmooth")
    return _run(problem, x0, cfg, smoothing=False)


# --- diagnostics ------------------------------------------------------------


@dataclass
class Diagnostics:
    W: float
    u: np.ndarray
    energy: float
    reference: tuple


def diagnostics_step(
    problem: ProblemSpec,
    k: int,
    x_k,
    x_next,
    mu_k: float,
    gamma: float,
    reference: tuple,
    cfg: SolverConfig,
    kappa: float | None = None,
) -> Diagnostics:
    """Lyapunov bookkeeping for outer iteration ``k``.

    ``reference = (x_star, F(x_star))``. Computes

    * ``W = min_i [F~_i(x_k, mu_k) - F_i(x_star)] + kappa mu_k``,
    * ``u = ((k+alpha-1) x_{k+1} - k x_k) / (alpha-1)``,
    * ``E_{k+1} = 2 gamma mu_k / (alpha-1) (k+alpha-1)^2 W + (alpha-1) ||u - x_star||^2
      + 4 kappa gamma0 mu0 / (2 sigma - 1) mu_k (k+alpha-2) ln^{1-sigma}(k+alpha-2)``.

    In FPGA mode pass ``mu_k = 1`` and ``kappa = 0``.
    """
    a, s = cfg.alpha, cfg.sigma
    x_star, F_star = reference
    x_k = np.asarray(x_k, dtype=float)
    kappa = problem.kappa if kappa is None else kappa
    F_tilde = problem.F_smoothed(x_k, mu_k) if kappa > 0 else problem.F(x_k)
    W = float(np.min(F_tilde - np.asarray(F_star))) + kappa * mu_k
    u = ((k + a - 1) * np.asarray(x_next, dtype=float) - k * x_k) / (a - 1)
    du = u - np.asarray(x_star, dtype=float)
    t = k + a - 2
    tail = 4 * kappa * cfg.gamma0 * cfg.mu0 / (2 * s - 1) * mu_k * t * math.log(t) ** (1 - s)
    energy = 2 * gamma * mu_k / (a - 1) * (k + a - 1) ** 2 * W + (a - 1) * float(du @ du) + tail
    return Diagnostics(W, u, energy, (x_star, F_star))


def energy_sequence(problem: ProblemSpec, run: RunRecord, reference: tuple, cfg: SolverConfig) -> np.ndarray:
    """Energies ``E_1, E_2, ...`` along a full-trace run.

    Entry ``k`` pairs ``x_k`` with the smoothing level ``mu_k`` it was
    produced at (``mu0`` for ``x_0``) and the step parameter ``gamma_k``
    accepted at that iteration (``gamma0`` for ``k = 0``).
    """
    pts = run.points
    if len(pts) != run.iterations + 1:
        raise ValueError("energy_sequence needs a full trace (cfg.full_trace=True)")
    fpga = run.solver == "fpga"
    kappa = 0.0 if fpga else problem.kappa
    out = []
    for k in range(run.iterations):
        if fpga:
            mu_k = 1.0
        else:
            mu_k = cfg.mu0 if k == 0 else run.trace[k - 1].mu
        gamma_k = cfg.gamma0 if k == 0 else run.trace[k - 1].gamma
        d = diagnostics_step(problem, k, pts[k], pts[k + 1], mu_k, gamma_k, reference, cfg, kappa)
        out.append(d.energy)
    return np.array(out)


def merit_from_values(Fx, F_ref) -> float:
    """``max_z min_i [F_i(x) - F_i(z)]`` over the rows ``F(z)`` of ``F_ref``, floored at 0.

    ``z = x`` is always a candidate in the true supremum, so the floor keeps
    the value a valid lower bound on ``u0(x)``.
    """
    F_ref = np.atleast_2d(np.asarray(F_ref, dtype=float))
    if F_ref.shape[0] == 0:
        raise ValueError("reference set must be nonempty")
    best = float(np.max(np.min(np.asarray(Fx, dtype=float) - F_ref, axis=1)))
    return max(best, 0.0)


def merit_u0_approx(x, reference_set, problem: ProblemSpec) -> float:
    """Lower bound on the merit ``u0(x)`` from a finite reference set of points."""
    ref = [np.asarray(z, dtype=float) for z in reference_set]
    if not ref:
        raise ValueError("reference set must be nonempty")
    return merit_from_values(problem.F(x), np.array([problem.F(z) for z in ref]))
