"""Smoothing functions for the nonsmooth primitives used by the test problems.

Two primitives are provided, both convex and C^1 for every ``mu > 0`` with
gradient Lipschitz constant ``1/mu``:

* ``smooth_plus``: a cubic smoothing of ``max(z, 0)`` with
  ``0 <= smooth_plus(z, mu) - max(z, 0) <= mu/6``.
* ``smooth_abs``: a Huber-type smoothing of ``|z|`` with
  ``0 <= smooth_abs(z, mu) - |z| <= mu/2``.

Derived constructions (``smooth_l1``, ``smooth_max``) are built from them.

Note on ``smooth_plus``: the commonly printed form of the branch on
``0 <= z <= mu`` is ``z + (z + mu)**3 / (6 mu**2)``, which jumps at ``z = mu``.
The branch used here is ``z + (mu - z)**3 / (6 mu**2)``; it is the mirror
image of the left branch, so the function is C^1, convex, and its gap to
``max(z, 0)`` is maximal (``mu/6``) at ``z = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PLUS_KAPPA",
    "ABS_KAPPA",
    "SmoothingPrimitive",
    "SmoothedObjective",
    "smooth_plus",
    "smooth_plus_grad",
    "smooth_plus_hess",
    "smooth_abs",
    "smooth_abs_grad",
    "smooth_l1",
    "smooth_l1_grad",
    "smooth_max",
    "smooth_max_weights",
]

#: Uniform approximation constants (the ``kappa`` with ``|f~ - f| <= kappa*mu``).
PLUS_KAPPA = 1.0 / 6.0
ABS_KAPPA = 0.5


def _check_mu(mu: float) -> None:
    if not mu > 0:
        raise ValueError(f"smoothing parameter must be positive, got mu={mu!r}")


def _out(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


def smooth_plus(z, mu: float):
    """Cubic smoothing of ``max(z, 0)``; accepts scalars or arrays."""
    _check_mu(mu)
    z = np.asarray(z, dtype=float)
    mu2 = 6.0 * mu * mu
    left = (z + mu) ** 3 / mu2
    right = z + (mu - z) ** 3 / mu2
    res = np.where(z < -mu, 0.0, np.where(z < 0.0, left, np.where(z <= mu, right, z)))
    return _out(res)


def smooth_plus_grad(z, mu: float):
    """Derivative of :func:`smooth_plus` with respect to ``z``."""
    _check_mu(mu)
    z = np.asarray(z, dtype=float)
    mu2 = 2.0 * mu * mu
    left = (z + mu) ** 2 / mu2
    right = 1.0 - (mu - z) ** 2 / mu2
    res = np.where(z < -mu, 0.0, np.where(z < 0.0, left, np.where(z <= mu, right, 1.0)))
    return _out(res)


def smooth_plus_hess(z, mu: float):
    """Second derivative of :func:`smooth_plus`; bounded by ``1/mu``."""
    _check_mu(mu)
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) <= mu
    res = np.where(inside, (mu - np.abs(z)) / (mu * mu), 0.0)
    return _out(res)


def smooth_abs(z, mu: float):
    """Huber-type smoothing of ``|z|``."""
    _check_mu(mu)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    res = np.where(a > mu, a, z * z / (2.0 * mu) + mu / 2.0)
    return _out(res)


def smooth_abs_grad(z, mu: float):
    _check_mu(mu)
    z = np.asarray(z, dtype=float)
    res = np.where(np.abs(z) > mu, np.sign(z), z / mu)
    return _out(res)


def smooth_l1(x, mu: float) -> float:
    """Componentwise :func:`smooth_abs` summed; within ``n*mu/2`` of ``||x||_1``."""
    return float(np.sum(smooth_abs(np.atleast_1d(np.asarray(x, dtype=float)), mu)))


def smooth_l1_grad(x, mu: float) -> np.ndarray:
    return np.atleast_1d(smooth_abs_grad(np.atleast_1d(np.asarray(x, dtype=float)), mu))


def smooth_max_weights(values: Sequence[float], mu: float) -> tuple[float, np.ndarray]:
    """Smoothed maximum and its sensitivities to each entry.

    The maximum is folded left to right with ``a (+) b = a + smooth_plus(b - a)``.
    The returned weights ``w`` are nonnegative, sum to one, and give the
    gradient of the fold as ``sum_j w_j * grad(values_j)``.

    The fold never undershoots the true maximum and overshoots it by at most
    ``(len(values) - 1) * mu / 6``.
    """
    _check_mu(mu)
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0:
        raise ValueError("smooth_max needs at least one value")
    acc = float(vals[0])
    w = np.zeros(vals.size)
    w[0] = 1.0
    for j in range(1, vals.size):
        d = float(vals[j]) - acc
        s = float(smooth_plus_grad(d, mu))
        acc = acc + float(smooth_plus(d, mu))
        w[:j] *= 1.0 - s
        w[j] = s
    return acc, w


def smooth_max(values: Sequence[float], mu: float) -> float:
    return smooth_max_weights(values, mu)[0]


@dataclass(frozen=True)
class SmoothingPrimitive:
    """One of the two stateless scalar primitives, selected by ``kind``."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("plus", "abs"):
            raise ValueError(f"unknown primitive kind {self.kind!r}")

    @property
    def kappa(self) -> float:
        return PLUS_KAPPA if self.kind == "plus" else ABS_KAPPA

    def value(self, z, mu: float):
        return smooth_plus(z, mu) if self.kind == "plus" else smooth_abs(z, mu)

    def grad(self, z, mu: float):
        return smooth_plus_grad(z, mu) if self.kind == "plus" else smooth_abs_grad(z, mu)

    def exact(self, z):
        z = np.asarray(z, dtype=float)
        return _out(np.maximum(z, 0.0) if self.kind == "plus" else np.abs(z))


@dataclass(frozen=True)
class SmoothedObjective:
    """A smoothing family ``f~(., mu)`` of one objective ``f``.

    Attributes
    ----------
    name
        Short label, e.g. ``"f1"``.
    exact
        The underlying (possibly nonsmooth) function ``f``.
    eval, grad
        ``f~(x, mu)`` and its gradient in ``x``.
    kappa
        Constant with ``|f~(x, mu) - f(x)| <= kappa * mu``. Zero for smooth
        objectives, which ignore ``mu``.
    lip_factor
        ``L`` such that ``grad(., mu)`` is ``L/mu``-Lipschitz on the problem's
        box for every ``0 < mu <= 1``.
    """

    name: str
    exact: Callable[[np.ndarray], float]
    eval: Callable[[np.ndarray, float], float]
    grad: Callable[[np.ndarray, float], np.ndarray]
    kappa: float
    lip_factor: float

    @property
    def is_smooth(self) -> bool:
        return self.kappa == 0.0
