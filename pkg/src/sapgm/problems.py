"""Benchmark problems and the seeded large-scale data generator.

Every problem is ``F_i = f_i + g_i`` with ``f_i`` handled through a smoothing
family and ``g_i`` a box indicator (plus, optionally, an l1 term for the
large-scale problem). Kinks of ``f_i`` are smoothed with the primitives in
:mod:`sapgm.smoothing`; smooth pieces are passed through unchanged.

Problem names::

    large_scale, cr_mf2, cb3_lq, cb3_mf1, jos1_l1, bk1_l1, sp1_l1
    jos1, bk1, sp1          (smooth two-objective variants)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .smoothing import (
    ABS_KAPPA,
    PLUS_KAPPA,
    SmoothedObjective,
    smooth_abs,
    smooth_abs_grad,
    smooth_l1,
    smooth_l1_grad,
    smooth_max_weights,
    smooth_plus,
    smooth_plus_grad,
)
from .subproblem import ProxFriendlyG

__all__ = [
    "TABLE_PROBLEMS",
    "SMOOTH_PROBLEMS",
    "PROBLEM_NAMES",
    "ProblemSpec",
    "LargeScaleData",
    "build_problem",
    "generate_large_scale",
    "sample_starts",
    "scalarization_sweep",
    "save_large_scale",
    "load_large_scale",
]

TABLE_PROBLEMS = ("large_scale", "cr_mf2", "cb3_lq", "cb3_mf1", "jos1_l1", "bk1_l1", "sp1_l1")
SMOOTH_PROBLEMS = ("jos1", "bk1", "sp1")
PROBLEM_NAMES = TABLE_PROBLEMS + SMOOTH_PROBLEMS

_ALIASES = {
    "cr&mf2": "cr_mf2",
    "cb3&lq": "cb3_lq",
    "cb3&mf1": "cb3_mf1",
    "jos1&l1": "jos1_l1",
    "bk1&l1": "bk1_l1",
    "sp1&l1": "sp1_l1",
    "large": "large_scale",
}


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    name: str
    n: int
    objectives: tuple
    g: ProxFriendlyG
    params: dict = field(default_factory=dict)
    known_front_hint: Callable | None = None

    @property
    def m(self) -> int:
        return len(self.objectives)

    @property
    def lo(self) -> np.ndarray:
        return self.g.lo

    @property
    def hi(self) -> np.ndarray:
        return self.g.hi

    @property
    def is_smooth(self) -> bool:
        return all(o.is_smooth for o in self.objectives)

    @property
    def kappas(self) -> np.ndarray:
        return np.array([o.kappa for o in self.objectives])

    @property
    def kappa(self) -> float:
        return float(self.kappas.max())

    def f_values(self, x, mu: float) -> np.ndarray:
        return np.array([o.eval(x, mu) for o in self.objectives])

    def f_jacobian(self, x, mu: float) -> np.ndarray:
        return np.vstack([o.grad(x, mu) for o in self.objectives])

    def f_exact(self, x) -> np.ndarray:
        return np.array([o.exact(x) for o in self.objectives])

    def F(self, x) -> np.ndarray:
        """Exact composite objective vector ``f_i(x) + g_i(x)``."""
        x = np.asarray(x, dtype=float)
        return self.f_exact(x) + self.g.values(x)

    def F_smoothed(self, x, mu: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.f_values(x, mu) + self.g.values(x)


def _obj(name, exact, ev, gr, kappa, lip) -> SmoothedObjective:
    return SmoothedObjective(name, exact, ev, gr, float(kappa), float(lip))


def _smooth(name, fn, gr, lip) -> SmoothedObjective:
    return _obj(name, fn, lambda x, mu: fn(x), lambda x, mu: gr(x), 0.0, lip)


def _max_objective(name, pieces, lip) -> SmoothedObjective:
    """``max_j p_j(x)`` from ``pieces = [(p_j, grad p_j), ...]``."""

    def exact(x):
        return max(p(x) for p, _ in pieces)

    def ev(x, mu):
        return smooth_max_weights([p(x) for p, _ in pieces], mu)[0]

    def gr(x, mu):
        _, w = smooth_max_weights([p(x) for p, _ in pieces], mu)
        return sum(wj * dp(x) for wj, (_, dp) in zip(w, pieces))

    return _obj(name, exact, ev, gr, (len(pieces) - 1) * PLUS_KAPPA, lip)


def _l1_objective(name, n) -> SmoothedObjective:
    return _obj(
        name,
        lambda x: float(np.sum(np.abs(x))),
        smooth_l1,
        smooth_l1_grad,
        n * ABS_KAPPA,
        1.0,
    )


def _fold_lip(grad_bound: float, hess_bound: float, count: int) -> float:
    # Each fold step adds curvature <= |grad(b - acc)|^2 / mu <= (2 G)^2 / mu.
    return (count - 1) * (2.0 * grad_bound) ** 2 + hess_bound


def _box(lo, hi, n):
    return np.full(n, float(lo)), np.full(n, float(hi))


# --- two-objective nonsmooth problems -------------------------------------


def _cb3_pieces():
    return [
        (lambda x: x[0] ** 4 + x[1] ** 2, lambda x: np.array([4 * x[0] ** 3, 2 * x[1]])),
        (
            lambda x: (2 - x[0]) ** 2 + (2 - x[1]) ** 2,
            lambda x: np.array([-2 * (2 - x[0]), -2 * (2 - x[1])]),
        ),
        (
            lambda x: 2 * math.exp(x[1] - x[0]),
            lambda x: 2 * math.exp(x[1] - x[0]) * np.array([-1.0, 1.0]),
        ),
    ]


def _cb3_lip(lo, hi) -> float:
    a = max(abs(lo), abs(hi))
    g1 = math.hypot(4 * a**3, 2 * a)
    g2 = math.hypot(2 * (2 - lo), 2 * (2 - lo))
    g3 = 2 * math.sqrt(2) * math.exp(hi - lo)
    h = max(12 * a * a, 2.0, 4 * math.exp(hi - lo))
    return _fold_lip(max(g1, g2, g3), h, 3)


def _cr_mf2(params):
    n = 2
    lo, hi = _box(1.5, 2.0, n)
    f1 = _max_objective(
        "f1",
        [
            (
                lambda x: x[0] ** 2 + (x[1] - 1) ** 2 + x[1] - 1,
                lambda x: np.array([2 * x[0], 2 * (x[1] - 1) + 1]),
            ),
            (
                lambda x: -x[0] ** 2 - (x[1] - 1) ** 2 + x[1] + 1,
                lambda x: np.array([-2 * x[0], -2 * (x[1] - 1) + 1]),
            ),
        ],
        _fold_lip(math.hypot(4.0, 3.0), 4.0, 2),
    )

    def r(x):
        return x[0] ** 2 + x[1] ** 2 - 1

    def f2_exact(x):
        return -x[0] + 2 * r(x) + 1.75 * abs(r(x))

    def f2(x, mu):
        return -x[0] + 2 * r(x) + 1.75 * smooth_abs(r(x), mu)

    def f2_grad(x, mu):
        dr = 2 * np.asarray(x, dtype=float)
        return np.array([-1.0, 0.0]) + (2 + 1.75 * smooth_abs_grad(r(x), mu)) * dr

    # |grad r|^2 <= 32 on the box, hess r = 2 I
    lip2 = 1.75 * 32 + 4 + 1.75 * 2
    return n, (f1, _obj("f2", f2_exact, f2, f2_grad, 1.75 * ABS_KAPPA, lip2)), ProxFriendlyG.box(lo, hi, 2)


def _cb3_lq(params):
    n = 2
    lo, hi = _box(1.5, 2.0, n)
    f1 = _max_objective("f1", _cb3_pieces(), _cb3_lip(1.5, 2.0))
    f2 = _max_objective(
        "f2",
        [
            (lambda x: -x[0] - x[1], lambda x: np.array([-1.0, -1.0])),
            (
                lambda x: -x[0] - x[1] + x[0] ** 2 + x[1] ** 2 - 1,
                lambda x: np.array([-1 + 2 * x[0], -1 + 2 * x[1]]),
            ),
        ],
        32.0 + 2.0,
    )
    return n, (f1, f2), ProxFriendlyG.box(lo, hi, 2)


def _cb3_mf1(params):
    n = 2
    lo, hi = _box(0.0, 1.0, n)
    f1 = _max_objective("f1", _cb3_pieces(), _cb3_lip(0.0, 1.0))

    def r(x):
        return x[0] ** 2 + x[1] ** 2 - 1

    def f2_exact(x):
        return -x[0] + 20 * max(r(x), 0.0)

    def f2(x, mu):
        return -x[0] + 20 * smooth_plus(r(x), mu)

    def f2_grad(x, mu):
        return np.array([-1.0, 0.0]) + 20 * smooth_plus_grad(r(x), mu) * 2 * np.asarray(x, dtype=float)

    f2o = _obj("f2", f2_exact, f2, f2_grad, 20 * PLUS_KAPPA, 20 * 8 + 20 * 2)
    return n, (f1, f2o), ProxFriendlyG.box(lo, hi, 2)


# --- smooth pieces for the three-objective problems -------------------------


def _jos1_pair(n):
    f1 = _smooth("f1", lambda x: float(np.dot(x, x)) / n, lambda x: 2.0 * np.asarray(x) / n, 2.0 / n)
    f2 = _smooth(
        "f2",
        lambda x: float(np.dot(x - 2.0, x - 2.0)) / n,
        lambda x: 2.0 * (np.asarray(x) - 2.0) / n,
        2.0 / n,
    )
    return f1, f2


def _bk1_pair():
    f1 = _smooth("f1", lambda x: float(x[0] ** 2 + x[1] ** 2), lambda x: 2.0 * np.asarray(x, dtype=float), 2.0)
    f2 = _smooth(
        "f2",
        lambda x: float((x[0] - 5) ** 2 + (x[1] - 5) ** 2),
        lambda x: 2.0 * (np.asarray(x, dtype=float) - 5.0),
        2.0,
    )
    return f1, f2


def _sp1_pair():
    lip = 3.0 + math.sqrt(5.0)
    f1 = _smooth(
        "f1",
        lambda x: float((x[0] - 1) ** 2 + (x[0] - x[1]) ** 2),
        lambda x: np.array([2 * (x[0] - 1) + 2 * (x[0] - x[1]), -2 * (x[0] - x[1])]),
        lip,
    )
    f2 = _smooth(
        "f2",
        lambda x: float((x[1] - 3) ** 2 + (x[0] - x[1]) ** 2),
        lambda x: np.array([2 * (x[0] - x[1]), 2 * (x[1] - 3) - 2 * (x[0] - x[1])]),
        lip,
    )
    return f1, f2


def _jos1_front(n):
    def hint(count=200):
        return [np.full(n, t) for t in np.linspace(1.0, 2.0, count)]

    return hint


def _with_l1(pair, n, lo, hi):
    objs = tuple(pair) + (_l1_objective("f3", n),)
    return n, objs, ProxFriendlyG.box(*_box(lo, hi, n), 3)


# --- large-scale problem ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class LargeScaleData:
    """Data ``(A, b)`` of the sparse large-scale problem.

    ``A`` is ``m_rows x n`` standard normal, ``x_true`` has exactly
    ``ceil(spar * n)`` nonzeros drawn uniformly from ``[0, 1)`` at shuffled
    positions, and ``b = max(A x_true, 0)``. All draws come from
    ``numpy.random.default_rng(seed)`` in that order (A, x values, shuffle).
    """

    A: np.ndarray
    b: np.ndarray
    x_true: np.ndarray
    spar: float
    seed: int
    epsilon_hat: float = 1e-3

    @property
    def m_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


def _nonzero_count(spar: float, n: int) -> int:
    return int(math.ceil(spar * n - 1e-9))


def generate_large_scale(m_rows: int, n: int, spar: float, seed: int, epsilon_hat: float = 1e-3) -> LargeScaleData:
    if not 0 < spar <= 1:
        raise ValueError("spar must lie in (0, 1]")
    if m_rows < 1 or n < 1:
        raise ValueError("m_rows and n must be positive")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m_rows, n))
    x = rng.uniform(0.0, 1.0, n)
    x[: n - _nonzero_count(spar, n)] = 0.0
    rng.shuffle(x)
    x[x > 1] = 1.0
    b = np.maximum(A @ x, 0.0)
    return LargeScaleData(A, b, x, float(spar), int(seed), float(epsilon_hat))


def _large_scale(params):
    data = params.get("data")
    if data is None and params.get("data_file"):
        data = load_large_scale(params["data_file"])
    if data is None:
        data = generate_large_scale(
            int(params.get("m_rows", 500)),
            int(params.get("n", 100)),
            float(params.get("spar", 0.1)),
            int(params.get("data_seed", 0)),
            float(params.get("epsilon_hat", 1e-3)),
        )
    A, b, eps_hat = data.A, data.b, data.epsilon_hat
    m_rows, n = A.shape
    l1_in_g = bool(params.get("l1_in_g", False))
    c1, c2 = (0.0, 0.0) if l1_in_g else (0.01, 0.03)
    a_norm2 = float(np.linalg.norm(A, 2)) ** 2

    def f1_exact(x):
        return float(np.sum(np.abs(np.maximum(A @ x, 0.0) - b)) + c1 * np.sum(np.abs(x)))

    def f1(x, mu):
        s = smooth_plus(A @ x, mu)
        return float(np.sum(smooth_abs(s - b, mu))) + c1 * smooth_l1(x, mu)

    def f1_grad(x, mu):
        ax = A @ x
        w = smooth_abs_grad(smooth_plus(ax, mu) - b, mu) * smooth_plus_grad(ax, mu)
        return A.T @ w + c1 * smooth_l1_grad(x, mu)

    def f2_exact(x):
        return float(-max(np.sum(np.abs(A @ x - b)) - eps_hat, 0.0) - c2 * np.sum(np.abs(x)))

    def f2(x, mu):
        return -smooth_plus(smooth_l1(A @ x - b, mu) - eps_hat, mu) - c2 * smooth_l1(x, mu)

    def f2_grad(x, mu):
        r = A @ x - b
        outer = smooth_plus_grad(smooth_l1(r, mu) - eps_hat, mu)
        return -outer * (A.T @ smooth_abs_grad(r, mu)) - c2 * smooth_l1_grad(x, mu)

    k1 = m_rows * (ABS_KAPPA + PLUS_KAPPA) + c1 * n * ABS_KAPPA
    k2 = m_rows * ABS_KAPPA + PLUS_KAPPA + c2 * n * ABS_KAPPA
    objs = (
        _obj("f1", f1_exact, f1, f1_grad, k1, 2 * a_norm2 + c1),
        _obj("f2", f2_exact, f2, f2_grad, k2, a_norm2 * (m_rows + 1) + c2),
    )
    lo, hi = _box(0.0, 1.0, n)
    g = ProxFriendlyG.l1_box([0.01, -0.03], lo, hi) if l1_in_g else ProxFriendlyG.box(lo, hi, 2)
    extra = {"data": data}
    return n, objs, g, extra


def build_problem(name: str, params: dict | None = None) -> ProblemSpec:
    """Construct a benchmark problem by name.

    ``params``: ``n`` for the JOS1 variants (default 2); ``m_rows``, ``n``,
    ``spar``, ``data_seed``, ``epsilon_hat`` (or a ready ``data``, or a
    ``data_file`` written by :func:`save_large_scale`) and ``l1_in_g`` for
    the large-scale problem.
    """
    params = dict(params or {})
    key = _ALIASES.get(name.lower(), name.lower())
    hint = None
    if key == "large_scale":
        n, objs, g, extra = _large_scale(params)
        params.update(extra)
    elif key == "cr_mf2":
        n, objs, g = _cr_mf2(params)
    elif key == "cb3_lq":
        n, objs, g = _cb3_lq(params)
    elif key == "cb3_mf1":
        n, objs, g = _cb3_mf1(params)
    elif key in ("jos1_l1", "jos1"):
        n = int(params.get("n", 2))
        pair = _jos1_pair(n)
        hint = _jos1_front(n)
        if key == "jos1":
            objs, g = pair, ProxFriendlyG.box(*_box(1.0, 2.0, n), 2)
        else:
            n, objs, g = _with_l1(pair, n, 1.0, 2.0)
    elif key in ("bk1_l1", "bk1"):
        n = 2
        if key == "bk1":
            objs, g = _bk1_pair(), ProxFriendlyG.box(*_box(-5.0, 10.0, n), 2)
        else:
            n, objs, g = _with_l1(_bk1_pair(), n, -5.0, 10.0)
    elif key in ("sp1_l1", "sp1"):
        n = 2
        if key == "sp1":
            objs, g = _sp1_pair(), ProxFriendlyG.box(*_box(5.0, 10.0, n), 2)
        else:
            n, objs, g = _with_l1(_sp1_pair(), n, 5.0, 10.0)
    else:
        raise ValueError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEM_NAMES)}")
    return ProblemSpec(key, n, tuple(objs), g, params, hint)


def sample_starts(spec: ProblemSpec, count: int, seed: int) -> list[np.ndarray]:
    """``count`` points uniform in the box, from ``default_rng(seed)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(spec.lo, spec.hi, size=(count, spec.n))
    return [p for p in pts]


def scalarization_sweep(spec: ProblemSpec, n_weights: int = 200, mu: float = 1e-6, iters: int = 2000, tol: float = 1e-12) -> np.ndarray:
    """Weighted-sum reference points, one per weight on a uniform grid.

    Each scalarized problem ``min sum_i w_i F_i`` over the box is solved by
    projected gradient with Armijo backtracking, started at the box center.
    For m = 3 the grid is the simplex lattice with about ``n_weights`` nodes.
    Returns an array of decision vectors (rows).
    """
    m = spec.m
    if m == 2:
        ts = np.linspace(0.0, 1.0, n_weights)
        weights = np.column_stack([ts, 1.0 - ts])
    else:
        h = max(1, int(round((-3 + math.sqrt(1 + 8 * n_weights)) / 2)))
        weights = np.array(
            [(i / h, j / h, (h - i - j) / h) for i in range(h + 1) for j in range(h + 1 - i)]
        )
    out = []
    x = 0.5 * (spec.lo + spec.hi)
    for w in weights:
        x = _projected_gradient(spec, w, x.copy(), mu, iters, tol)
        out.append(x.copy())
    return np.array(out)


def _projected_gradient(spec, w, x, mu, iters, tol):
    def val(z):
        return float(w @ spec.f_values(z, mu))

    step = 1.0
    fx = val(x)
    for _ in range(iters):
        gr = w @ spec.f_jacobian(x, mu)
        while True:
            xn = spec.g.project(x - step * gr)
            fn = val(xn)
            d = xn - x
            if fn <= fx + gr @ d + 0.5 / step * (d @ d) + 1e-15 * (1 + abs(fx)):
                break
            step *= 0.5
        if np.max(np.abs(d)) <= tol:
            x = xn
            break
        x, fx = xn, fn
        step *= 2.0
    return x


# --- large-scale data files -------------------------------------------------


def _fmt(v) -> str:
    return format(float(v), ".17g")


def save_large_scale(data: LargeScaleData, path) -> None:
    """Write ``data`` as CSV: a header row, then tagged rows ``A``, ``b``, ``x``."""
    lines = [
        "m_rows,n,spar,seed,epsilon_hat",
        f"{data.m_rows},{data.n},{_fmt(data.spar)},{data.seed},{_fmt(data.epsilon_hat)}",
    ]
    lines += ["A," + ",".join(_fmt(v) for v in row) for row in data.A]
    lines.append("b," + ",".join(_fmt(v) for v in data.b))
    lines.append("x," + ",".join(_fmt(v) for v in data.x_true))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_large_scale(path) -> LargeScaleData:
    with open(path) as fh:
        rows = [ln.rstrip("\n").split(",") for ln in fh if ln.strip()]
    if rows[0] != ["m_rows", "n", "spar", "seed", "epsilon_hat"]:
        raise ValueError(f"{path}: not a large-scale data file")
    m_rows, n = int(rows[1][0]), int(rows[1][1])
    spar, seed, eps_hat = float(rows[1][2]), int(rows[1][3]), float(rows[1][4])
    A = np.array([[float(v) for v in r[1:]] for r in rows[2:] if r[0] == "A"])
    b = np.array([float(v) for v in next(r for r in rows if r[0] == "b")[1:]])
    x = np.array([float(v) for v in next(r for r in rows if r[0] == "x")[1:]])
    if A.shape != (m_rows, n) or b.size != m_rows or x.size != n:
        raise ValueError(f"{path}: shape mismatch with header")
    return LargeScaleData(A, b, x, spar, seed, eps_hat)
