"""Per-iteration subproblem and its dual over the simplex.

For fixed ``x``, ``y``, ``mu`` and ``ell > 0`` the subproblem is

    min_z  phi(z) = max_i [<grad_i, z - y> + g_i(z) + offset_i] + ell/2 ||z - y||^2

with ``grad_i = grad f~_i(y, mu)`` and ``offset_i = f~_i(y, mu) - F~_i(x, mu)``.
Its Lagrangian dual is the maximization over the simplex of

    omega(lam) = ell * M_h(y - G/ell) - ||G||^2 / (2 ell) + <lam, offsets>

where ``G = sum_i lam_i grad_i``, ``h = (1/ell) sum_i lam_i g_i`` and ``M_h`` is
the Moreau envelope. The primal solution is recovered as ``prox_h(y - G/ell)``.

Only separable ``g_i`` are supported (a box indicator, optionally plus a
weighted l1 norm), for which the prox is exact: soft-threshold, then clamp.
Clamping after thresholding is exact because each coordinate problem is a
one-dimensional convex problem whose unconstrained minimizer is the
soft-threshold; restricting to an interval moves the minimizer to the nearest
endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "ProxFriendlyG",
    "SubproblemInstance",
    "FWResult",
    "simplex_check",
    "phi_ell",
    "psi_values",
    "weighted_prox",
    "moreau_envelope",
    "dual_omega",
    "dual_omega_grad",
    "frank_wolfe_solve",
    "kkt_residual",
]


@dataclass(frozen=True, eq=False)
class ProxFriendlyG:
    """``g_i(x) = coef_i * ||x||_1 + indicator(lo <= x <= hi)``.

    ``kind`` is ``"box_indicator"`` (all coefficients zero) or
    ``"weighted_l1_plus_box"``. Negative coefficients are accepted only when
    the box lies in the nonnegative orthant, where ``||x||_1`` is linear and
    the prox stays exact.
    """

    lo: np.ndarray
    hi: np.ndarray
    coef: np.ndarray
    kind: str = "box_indicator"

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        coef = np.asarray(self.coef, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "coef", coef)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-D arrays of equal length")
        if np.any(lo >= hi):
            raise ValueError("box needs lo < hi componentwise")
        if self.kind == "box_indicator":
            if np.any(coef != 0.0):
                raise ValueError("box_indicator must have zero l1 coefficients")
        elif self.kind == "weighted_l1_plus_box":
            if np.any(coef < 0) and np.any(lo < 0):
                raise ValueError("negative l1 weights need a box inside the nonnegative orthant")
        else:
            raise ValueError(f"unknown g kind {self.kind!r}")

    @classmethod
    def box(cls, lo, hi, m: int) -> "ProxFriendlyG":
        return cls(lo, hi, np.zeros(m), "box_indicator")

    @classmethod
    def l1_box(cls, coef, lo, hi) -> "ProxFriendlyG":
        return cls(lo, hi, coef, "weighted_l1_plus_box")

    @property
    def m(self) -> int:
        return self.coef.size

    @property
    def n(self) -> int:
        return self.lo.size

    def in_box(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def values(self, x: np.ndarray) -> np.ndarray:
        """Vector ``(g_1(x), ..., g_m(x))``; ``+inf`` outside the box."""
        if not self.in_box(x):
            return np.full(self.m, np.inf)
        if self.kind == "box_indicator":
            return np.zeros(self.m)
        return self.coef * np.sum(np.abs(x))

    def weighted_value(self, lam: np.ndarray, x: np.ndarray) -> float:
        if not self.in_box(x):
            return np.inf
        if self.kind == "box_indicator":
            return 0.0
        return float(np.dot(lam, self.coef)) * float(np.sum(np.abs(x)))

    def prox(self, lam: np.ndarray, t: float, v: np.ndarray) -> np.ndarray:
        """``argmin_u t * sum_i lam_i g_i(u) + 1/2 ||u - v||^2``."""
        if self.kind == "box_indicator":
            return np.clip(v, self.lo, self.hi)
        tau = t * float(np.dot(lam, self.coef))
        if np.all(self.lo >= 0):
            # |u| = u on the box: the l1 term is linear.
            return np.clip(v - tau, self.lo, self.hi)
        shrunk = np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)
        return np.clip(shrunk, self.lo, self.hi)


def simplex_check(lam, m: int | None = None, tol: float = 1e-12) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or (m is not None and lam.size != m):
        raise ValueError("weights must be a 1-D vector of length m")
    if np.any(lam < -tol) or abs(lam.sum() - 1.0) > tol:
        raise ValueError(f"weights {lam} are not on the simplex")
    return lam


@dataclass(frozen=True, eq=False)
class SubproblemInstance:
    """Data of one subproblem: ``y``, ``mu``, ``ell``, gradients (m x n), offsets (m)."""

    y: np.ndarray
    mu: float
    ell: float
    gradients: np.ndarray
    offsets: np.ndarray
    x: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        jac = np.atleast_2d(np.asarray(self.gradients, dtype=float))
        off = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "gradients", jac)
        object.__setattr__(self, "offsets", off)
        if not (self.ell > 0 and self.mu > 0):
            raise ValueError("ell and mu must be positive")
        if jac.shape != (off.size, y.size):
            raise ValueError(f"gradients shape {jac.shape} does not match m={off.size}, n={y.size}")

    @property
    def m(self) -> int:
        return self.offsets.size


def psi_values(z: np.ndarray, inst: SubproblemInstance, g: ProxFriendlyG) -> np.ndarray:
    """Bracketed terms ``<grad_i, z - y> + g_i(z) + offset_i`` (without the quadratic)."""
    d = z - inst.y
    return inst.gradients @ d + g.values(z) + inst.offsets


def phi_ell(z, inst: SubproblemInstance, g: ProxFriendlyG) -> float:
    z = np.asarray(z, dtype=float)
    d = z - inst.y
    return float(np.max(psi_values(z, inst, g)) + 0.5 * inst.ell * np.dot(d, d))


def weighted_prox(lam, t: float, v, g: ProxFriendlyG) -> np.ndarray:
    if not t > 0:
        raise ValueError("prox parameter must be positive")
    return g.prox(np.asarray(lam, dtype=float), t, np.asarray(v, dtype=float))


def moreau_envelope(lam, t: float, v, g: ProxFriendlyG) -> float:
    """``min_u t * sum_i lam_i g_i(u) + 1/2 ||u - v||^2``, evaluated at the exact prox."""
    lam = np.asarray(lam, dtype=float)
    v = np.asarray(v, dtype=float)
    p = weighted_prox(lam, t, v, g)
    d = p - v
    return t * g.weighted_value(lam, p) + 0.5 * float(np.dot(d, d))


def _prox_point(lam: np.ndarray, inst: SubproblemInstance, g: ProxFriendlyG):
    G = lam @ inst.gradients
    v = inst.y - G / inst.ell
    return G, v, g.prox(lam, 1.0 / inst.ell, v)


def dual_omega(lam, inst: SubproblemInstance, g: ProxFriendlyG) -> float:
    lam = np.asarray(lam, dtype=float)
    G, v, _ = _prox_point(lam, inst, g)
    env = moreau_envelope(lam, 1.0 / inst.ell, v, g)
    return inst.ell * env - float(np.dot(G, G)) / (2.0 * inst.ell) + float(np.dot(lam, inst.offsets))


def dual_omega_grad(lam, inst: SubproblemInstance, g: ProxFriendlyG) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    _, _, p = _prox_point(lam, inst, g)
    return psi_values(p, inst, g)


@dataclass
class FWResult:
    lam: np.ndarray
    z: np.ndarray
    gap: float
    iterations: int
    fw_gap: float
    history: list = field(default_factory=list)

    def __iter__(self):
        # unpack as (lam, z, gap)
        return iter((self.lam, self.z, self.gap))


def _line_search(lam, s, inst, g) -> float:
    """Exact step along ``lam -> s`` for the concave ``omega``.

    The directional derivative ``t -> <grad omega(lam + t d), d>`` is
    nonincreasing; its root in ``[0, 1]`` is located with Brent's method.
    """
    d = s - lam

    def slope(t):
        return float(np.dot(dual_omega_grad(lam + t * d, inst, g), d))

    if slope(1.0) >= 0.0:
        return 1.0
    if slope(0.0) <= 0.0:
        return 0.0
    return brentq(slope, 0.0, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200)


def frank_wolfe_solve(
    inst: SubproblemInstance,
    g: ProxFriendlyG,
    K: int = 200,
    tol: float = 1e-8,
    step: str = "exact",
    track: bool = False,
) -> FWResult:
    """Maximize ``omega`` over the simplex with Frank-Wolfe.

    The linear oracle picks the vertex of the largest gradient component
    (lowest index on ties). ``step="open_loop"`` uses the classical
    ``2/(k+2)`` rule; ``step="exact"`` (default) uses an exact line search
    along the same direction. Iteration stops after ``K`` steps or when the
    Frank-Wolfe gap drops to ``tol``.

    Returns an :class:`FWResult` that also unpacks as ``(lam, z, gap)`` where
    ``gap = phi(z) - omega(lam)`` is the duality gap at the recovered primal.
    """
    if K < 1:
        raise ValueError("Frank-Wolfe needs at least one iteration")
    if step not in ("exact", "open_loop"):
        raise ValueError(f"unknown step rule {step!r}")
    m = inst.m
    lam = np.full(m, 1.0 / m)
    history = []
    it = 0
    fw_gap = np.inf
    for k in range(K):
        grad = dual_omega_grad(lam, inst, g)
        j = int(np.argmax(grad))
        fw_gap = float(grad[j] - np.dot(grad, lam))
        if track:
            history.append(dual_omega(lam, inst, g))
        if fw_gap <= tol:
            break
        s = np.zeros(m)
        s[j] = 1.0
        gamma = 2.0 / (k + 2) if step == "open_loop" else _line_search(lam, s, inst, g)
        lam = (1.0 - gamma) * lam + gamma * s
        it = k + 1
    lam = np.maximum(lam, 0.0)
    lam /= lam.sum()
    _, _, z = _prox_point(lam, inst, g)
    gap = phi_ell(z, inst, g) - dual_omega(lam, inst, g)
    if track:
        history.append(dual_omega(lam, inst, g))
    return FWResult(lam, z, gap, it, fw_gap, history)


def _subgradient_interval(z, g: ProxFriendlyG, tau: float):
    """Per-coordinate interval ``[a, b]`` of ``tau * d||z||_1 + N_box(z)``."""
    if g.kind == "box_indicator" or tau == 0.0:
        a = np.zeros_like(z)
        b = np.zeros_like(z)
    elif np.all(g.lo >= 0):
        a = np.full_like(z, tau)
        b = np.full_like(z, tau)
    else:
        sgn = np.sign(z)
        a = np.where(sgn == 0, -abs(tau), tau * sgn)
        b = np.where(sgn == 0, abs(tau), tau * sgn)
    a = np.where(z <= g.lo, -np.inf, a)
    b = np.where(z >= g.hi, np.inf, b)
    return a, b


def kkt_residual(z, lam, inst: SubproblemInstance, g: ProxFriendlyG) -> float:
    """Violation of the optimality system at ``(z, lam)``.

    Stationarity: distance from ``-(G + ell (z - y))`` to the set
    ``sum_i lam_i dg_i(z)`` (minimum-norm subgradient selection).
    Complementarity: ``sum_i lam_i (max_j psi_j(z) - psi_i(z))``, which is zero
    iff weight sits only on active objectives. The two are added.
    """
    z = np.asarray(z, dtype=float)
    lam = np.asarray(lam, dtype=float)
    r = lam @ inst.gradients + inst.ell * (z - inst.y)
    a, b = _subgradient_interval(z, g, float(np.dot(lam, g.coef)))
    target = -r
    dist = np.where(target < a, a - target, np.where(target > b, target - b, 0.0))
    stat = float(np.linalg.norm(dist))
    psi = psi_values(z, inst, g)
    comp = float(np.dot(lam, np.max(psi) - psi))
    return stat + comp
