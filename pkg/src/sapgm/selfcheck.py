"""End-to-end self tests behind ``sapgm check``.

Each suite compares a library component with an independent oracle:

``fd``
    objective gradients of every benchmark problem against central finite
    differences;
``prox``
    the exact prox against brute-force minimization on a fine grid;
``duality``
    Frank-Wolfe on random two-objective subproblems against golden-section
    search over the weights, plus the primal-dual gap and KKT residual;
``schedule``
    the smoothing schedule against its closed form.

The component under test can be swapped through keyword arguments, which is
how the mutation tests make a suite fail on purpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .problems import TABLE_PROBLEMS, build_problem
from .solver import SolverConfig, mu_schedule
from .subproblem import (
    ProxFriendlyG,
    SubproblemInstance,
    dual_omega,
    frank_wolfe_solve,
    kkt_residual,
    phi_ell,
    weighted_prox,
)

__all__ = [
    "SuiteResult",
    "CheckReport",
    "fd_gradient_error",
    "random_subproblem",
    "golden_section_max",
    "check_fd",
    "check_prox",
    "check_duality",
    "check_schedule",
    "run_checks",
]

FD_STEP = 1e-6
FD_TOL = 1e-6


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, msg: str) -> None:
        self.failures.append(msg)


@dataclass
class CheckReport:
    suites: list

    @property
    def ok(self) -> bool:
        return all(s.passed for s in self.suites)

    def lines(self, max_failures: int = 5) -> list[str]:
        out = []
        for s in self.suites:
            status = "PASS" if s.passed else "FAIL"
            out.append(f"{s.name:<9} {status}  {s.cases - len(s.failures)}/{s.cases} cases")
            for msg in s.failures[:max_failures]:
                out.append(f"    {msg}")
            if len(s.failures) > max_failures:
                out.append(f"    ... {len(s.failures) - max_failures} more")
        return out


def fd_gradient_error(fun: Callable, grad: np.ndarray, x: np.ndarray, h: float = FD_STEP) -> float:
    """``||grad - fd||_inf / max(1, ||grad||_inf)`` with central differences."""
    fd = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        fd[j] = (fun(x + e) - fun(x - e)) / (2 * h)
    return float(np.max(np.abs(grad - fd)) / max(1.0, float(np.max(np.abs(grad)))))


def _interior_points(problem, count: int, rng, h: float) -> np.ndarray:
    # keep the finite-difference stencil inside the box
    lo, hi = problem.lo + 2 * h, problem.hi - 2 * h
    return rng.uniform(lo, hi, size=(count, problem.n))


def check_fd(
    problems=TABLE_PROBLEMS,
    builder: Callable = build_problem,
    mus=(1e-1, 1e-3),
    points: int = 20,
    seed: int = 0,
    tol: float = FD_TOL,
) -> SuiteResult:
    res = SuiteResult("fd")
    rng = np.random.default_rng(seed)
    for name in problems:
        problem = builder(name)
        for x in _interior_points(problem, points, rng, FD_STEP):
            for mu in mus:
                for obj in problem.objectives:
                    res.cases += 1
                    err = fd_gradient_error(lambda z: obj.eval(z, mu), np.asarray(obj.grad(x, mu), float), x)
                    if not err <= tol:
                        res.fail(f"{name}.{obj.name} mu={mu:g} x={np.array2string(x[:4], precision=4)}: rel err {err:.3g}")
    return res


def _brute_prox(g: ProxFriendlyG, lam, t, v, step=1e-4):
    grid = np.append(np.arange(g.lo[0], g.hi[0], step), g.hi[0])
    vals = t * float(np.dot(lam, g.coef)) * np.abs(grid) + 0.5 * (grid - v[0]) ** 2
    return grid[int(np.argmin(vals))]


def check_prox(prox: Callable = weighted_prox, cases: int = 100, seed: int = 1) -> SuiteResult:
    res = SuiteResult("prox")
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        res.cases += 1
        lo = rng.uniform(-2.0, 0.5)
        hi = lo + rng.uniform(0.2, 2.5)
        coef = rng.uniform(0.0, 1.0, 2)
        g = ProxFriendlyG.l1_box(coef, [lo], [hi]) if rng.random() < 0.8 else ProxFriendlyG.box([lo], [hi], 2)
        lam = rng.dirichlet([1.0, 1.0])
        t = rng.uniform(0.05, 2.0)
        v = rng.uniform(lo - 1.0, hi + 1.0, 1)
        p = float(np.asarray(prox(lam, t, v, g))[0])
        q = _brute_prox(g, lam, t, v)
        if not abs(p - q) <= 1.01e-4:
            res.fail(f"lo={lo:.4f} hi={hi:.4f} c={coef} lam={lam} t={t:.4f} v={v[0]:.4f}: prox {p:.6f} vs grid {q:.6f}")
    return res


def random_subproblem(rng, m: int = 2, n: int | None = None, l1: bool | None = None):
    """A random subproblem instance with box (and maybe l1) ``g``."""
    n = int(rng.integers(1, 6)) if n is None else n
    y = rng.uniform(-1.0, 1.0, n)
    lo = y - rng.uniform(0.2, 2.0, n)
    hi = y + rng.uniform(0.2, 2.0, n)
    if l1 is None:
        l1 = bool(rng.random() < 0.5)
    g = ProxFriendlyG.l1_box(rng.uniform(0.0, 0.5, m), lo, hi) if l1 else ProxFriendlyG.box(lo, hi, m)
    inst = SubproblemInstance(
        y=y,
        mu=0.1,
        ell=float(rng.uniform(0.5, 5.0)),
        gradients=rng.normal(size=(m, n)),
        offsets=rng.normal(scale=0.5, size=m),
    )
    return inst, g


def golden_section_max(f: Callable[[float], float], a: float = 0.0, b: float = 1.0, tol: float = 1e-12) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(argmax, max)``."""
    r = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - r * (b - a), a + r * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = f(d)
    best = [(f(a), a), (f(b), b), (fc, c), (fd, d)]
    val, arg = max(best)
    return arg, val


def check_duality(solver: Callable = frank_wolfe_solve, cases: int = 100, seed: int = 2) -> SuiteResult:
    res = SuiteResult("duality")
    rng = np.random.default_rng(seed)
    for i in range(cases):
        res.cases += 1
        inst, g = random_subproblem(rng)
        lam, z, _ = solver(inst, g, 200)
        omega = dual_omega(lam, inst, g)
        gap = phi_ell(z, inst, g) - omega
        kkt = kkt_residual(z, lam, inst, g)
        _, best = golden_section_max(lambda s: dual_omega(np.array([s, 1.0 - s]), inst, g))
        problems = []
        if not gap <= 1e-5:
            problems.append(f"gap {gap:.3g}")
        if not kkt <= 1e-4:
            problems.append(f"kkt {kkt:.3g}")
        if not abs(best - omega) <= 1e-6:
            problems.append(f"omega {omega:.10g} vs golden {best:.10g}")
        if problems:
            res.fail(f"case {i} (n={inst.y.size}, ell={inst.ell:.3f}): " + ", ".join(problems))
    return res


def _schedule_oracle(k: int, mu0: float, alpha: float, sigma: float) -> float:
    t = k + alpha - 1.0
    return mu0 / t / math.log(t) ** sigma


def check_schedule(schedule: Callable = mu_schedule, kmax: int = 10_000) -> SuiteResult:
    res = SuiteResult("schedule")
    configs = [SolverConfig(), SolverConfig(alpha=3.5, sigma=1.0, mu0=1.0), SolverConfig(alpha=10.0, sigma=0.6, mu0=0.1)]
    for cfg in configs:
        for k in range(kmax + 1):
            res.cases += 1
            got = schedule(k, cfg)
            want = _schedule_oracle(k, cfg.mu0, cfg.alpha, cfg.sigma)
            if not abs(got - want) <= 1e-14 * want:
                res.fail(f"k={k} alpha={cfg.alpha} sigma={cfg.sigma} mu0={cfg.mu0}: {got!r} != {want!r}")
                break
    return res


def run_checks(
    *,
    schedule: Callable = mu_schedule,
    builder: Callable = build_problem,
    prox: Callable = weighted_prox,
    fw_solver: Callable = frank_wolfe_solve,
    problems=TABLE_PROBLEMS,
) -> CheckReport:
    return CheckReport(
        [
            check_fd(problems, builder),
            check_prox(prox),
            check_duality(fw_solver),
            check_schedule(schedule),
        ]
    )
