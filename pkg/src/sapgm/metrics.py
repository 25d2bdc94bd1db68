"""Pareto-front quality metrics and Dolan-More performance profiles.

Conventions
-----------
* All objectives are minimized; a point ``p`` dominates ``q`` when
  ``p <= q`` componentwise with at least one strict inequality.
* Purity counts a point as a member of the reference front when some
  reference point agrees with it to ``1e-9`` (scaled by ``max(1, |r|_inf)``).
* Spread metrics follow Custodio et al. (2011). For objective ``j`` the front
  values are sorted and bracketed by the extreme values ``lo_j`` / ``hi_j``
  (taken from a reference front, or the front itself), giving gaps
  ``d_0 = f_1 - lo_j``, ``d_i = f_{i+1} - f_i`` (``i = 1..N-1``) and
  ``d_N = hi_j - f_N``. Then::

      Gamma = max_j max_i d_i                      (i = 0..N)
      Delta = max_j (d_0 + d_N + sum_i |d_i - mean|) / (d_0 + d_N + (N-1) mean)

  with ``mean`` taken over the interior gaps ``i = 1..N-1``.
* Hypervolume is exact: a sweep for two objectives, slicing along the third
  objective for three.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Front",
    "ProfileCurve",
    "MEMBERSHIP_TOL",
    "DIV_EPS",
    "dominates",
    "filter_nondominated",
    "union_front",
    "purity",
    "spread_gamma",
    "spread_delta",
    "hypervolume",
    "default_ref_point",
    "metrics_table",
    "to_cost",
    "performance_profile",
    "write_front",
    "read_front",
    "write_profile",
    "read_profile",
]

MEMBERSHIP_TOL = 1e-9
#: Offset in the larger-is-better cost transform ``1 / (value + DIV_EPS)``.
DIV_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class Front:
    """Objective vectors (rows of ``points``) produced by one solver."""

    points: np.ndarray
    source: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0, 0) if pts.size == 0 else pts.reshape(1, -1)
        if pts.ndim != 2:
            raise ValueError("front points must form a 2-D array")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Step function ``rho(tau)`` sampled on ``tau``."""

    solver: str
    tau: np.ndarray
    rho: np.ndarray


def _as_points(points) -> np.ndarray:
    if isinstance(points, Front):
        return points.points
    if isinstance(points, np.ndarray):
        arr = points.astype(float)
        return arr.reshape(0, 0) if arr.size == 0 and arr.ndim < 2 else np.atleast_2d(arr)
    rows = [np.asarray(p, dtype=float).ravel() for p in points]
    if not rows:
        return np.zeros((0, 0))
    dims = {r.size for r in rows}
    if len(dims) != 1:
        raise ValueError(f"objective vectors have mixed dimensions {sorted(dims)}")
    return np.vstack(rows)


def dominates(p, q) -> bool:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return bool(np.all(p <= q) and np.any(p < q))


def filter_nondominated(points, source: str = "") -> Front:
    """Keep exactly the points that no other point dominates.

    Duplicates do not dominate each other, so repeated vectors all survive.
    The surviving rows keep their input order.
    """
    if isinstance(points, Front) and not source:
        source = points.source
    pts = _as_points(points)
    n = pts.shape[0]
    if n == 0:
        return Front(np.zeros((0, pts.shape[1] if pts.ndim == 2 else 0)), source)
    # Lexicographic order: a point can only be dominated by an earlier one.
    order = np.lexsort(pts.T[::-1])
    kept: list[int] = []
    for idx in order:
        p = pts[idx]
        if kept:
            K = pts[kept]
            le = np.all(K <= p, axis=1)
            lt = np.any(K < p, axis=1)
            if np.any(le & lt):
                continue
        kept.append(int(idx))
    kept.sort()
    return Front(pts[kept], source)


def union_front(fronts: Iterable[Front], source: str = "reference") -> Front:
    """Nondominated filter of the union of several fronts."""
    fronts = list(fronts)
    blocks = [f.points for f in fronts if len(f)]
    dims = {f.m for f in fronts if len(f)}
    if len(dims) > 1:
        raise ValueError(f"fronts have mixed objective dimensions {sorted(dims)}")
    if not blocks:
        return Front(np.zeros((0, 0)), source)
    return filter_nondominated(np.vstack(blocks), source)


def _member_mask(pts: np.ndarray, ref: np.ndarray, tol: float) -> np.ndarray:
    if ref.shape[0] == 0:
        return np.zeros(pts.shape[0], dtype=bool)
    mask = np.empty(pts.shape[0], dtype=bool)
    scale = np.maximum(1.0, np.max(np.abs(ref), axis=1))
    for i, p in enumerate(pts):
        mask[i] = bool(np.any(np.max(np.abs(ref - p), axis=1) <= tol * scale))
    return mask


def purity(front: Front, reference: Front, tol: float = MEMBERSHIP_TOL) -> float:
    """Fraction of ``front`` that also lies on ``reference``.

    An empty front has no defined purity; it scores 0 and a warning is issued.
    """
    pts = _as_points(front)
    if pts.shape[0] == 0:
        warnings.warn("purity of an empty front is undefined; reporting 0", RuntimeWarning, stacklevel=2)
        return 0.0
    ref = _as_points(reference)
    if ref.shape[0] and ref.shape[1] != pts.shape[1]:
        raise ValueError("front and reference have different objective dimensions")
    return float(np.mean(_member_mask(pts, ref, tol)))


def _extreme_bounds(pts: np.ndarray, extremes) -> tuple[np.ndarray, np.ndarray]:
    if extremes is None:
        return pts.min(axis=0), pts.max(axis=0)
    ext = _as_points(extremes)
    return ext.min(axis=0), ext.max(axis=0)


def _gaps(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    v = np.sort(values)
    # Extremes outside the reference range contribute no gap.
    return np.concatenate([[max(v[0] - lo, 0.0)], np.diff(v), [max(hi - v[-1], 0.0)]])


def spread_gamma(front: Front, extremes: Front | None = None) -> float:
    """Largest gap between consecutive values of any objective, extremes included.

    Returns ``nan`` (with a warning) for fronts with fewer than two points.
    """
    pts = _as_points(front)
    if pts.shape[0] < 2:
        warnings.warn("Gamma needs at least two points", RuntimeWarning, stacklevel=2)
        return math.nan
    lo, hi = _extreme_bounds(pts, extremes)
    return float(max(np.max(_gaps(pts[:, j], lo[j], hi[j])) for j in range(pts.shape[1])))


def spread_delta(front: Front, extremes: Front | None = None) -> float:
    """Worst (over objectives) normalized deviation of the consecutive gaps.

    Returns ``nan`` (with a warning) for fewer than two points, or when an
    objective has no spread at all so the ratio is 0/0.
    """
    pts = _as_points(front)
    if pts.shape[0] < 2:
        warnings.warn("Delta needs at least two points", RuntimeWarning, stacklevel=2)
        return math.nan
    lo, hi = _extreme_bounds(pts, extremes)
    worst = 0.0
    for j in range(pts.shape[1]):
        d = _gaps(pts[:, j], lo[j], hi[j])
        inner = d[1:-1]
        mean = float(np.mean(inner))
        num = d[0] + d[-1] + float(np.sum(np.abs(inner - mean)))
        den = d[0] + d[-1] + inner.size * mean
        if den <= 0.0:
            warnings.warn("Delta undefined: an objective has zero spread", RuntimeWarning, stacklevel=2)
            return math.nan
        worst = max(worst, num / den)
    return float(worst)


def _hv2(pts: np.ndarray, ref: np.ndarray) -> float:
    if pts.shape[0] == 0:
        return 0.0
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    vol = 0.0
    best_y = ref[1]
    for x, y in pts:
        if y < best_y:
            vol += (ref[0] - x) * (best_y - y)
            best_y = y
    return vol


def _hv3(pts: np.ndarray, ref: np.ndarray) -> float:
    pts = pts[np.argsort(pts[:, 2], kind="stable")]
    levels = np.append(np.unique(pts[:, 2]), ref[2])
    vol = 0.0
    for lower, upper in zip(levels[:-1], levels[1:]):
        active = pts[pts[:, 2] <= lower]
        vol += _hv2(active[:, :2], ref[:2]) * (upper - lower)
    return vol


def hypervolume(front: Front, ref_point) -> float:
    """Volume dominated by ``front`` and bounded by ``ref_point``.

    Points not below ``ref_point`` in every coordinate are dropped (with a
    warning) since they enclose no volume. Supports two or three objectives;
    a single objective gives ``ref - min``.
    """
    pts = _as_points(front)
    ref = np.asarray(ref_point, dtype=float).ravel()
    if pts.shape[0] == 0:
        return 0.0
    if pts.shape[1] != ref.size:
        raise ValueError("reference point dimension does not match the front")
    m = ref.size
    if m > 3:
        raise ValueError("hypervolume is implemented for at most three objectives")
    inside = np.all(pts <= ref, axis=1)
    if not np.all(inside):
        warnings.warn(
            f"dropping {int(np.sum(~inside))} point(s) outside the hypervolume reference box",
            RuntimeWarning,
            stacklevel=2,
        )
        pts = pts[inside]
    if pts.shape[0] == 0:
        return 0.0
    if m == 1:
        return float(ref[0] - pts[:, 0].min())
    if m == 2:
        return float(_hv2(pts, ref))
    return float(_hv3(pts, ref))


def default_ref_point(fronts: Sequence[Front] | Front, margin: float = 0.1) -> np.ndarray:
    """Componentwise max of the union plus ``margin`` times its range.

    Axes with zero range get ``margin * max(1, |max|)`` instead.
    """
    if isinstance(fronts, Front):
        fronts = [fronts]
    blocks = [f.points for f in fronts if len(f)]
    if not blocks:
        raise ValueError("cannot derive a reference point from empty fronts")
    allp = np.vstack(blocks)
    hi, lo = allp.max(axis=0), allp.min(axis=0)
    span = hi - lo
    pad = np.where(span > 0, margin * span, margin * np.maximum(1.0, np.abs(hi)))
    return hi + pad


def metrics_table(fronts: Mapping[str, Front] | Sequence[Front], ref_point=None) -> list[dict]:
    """Purity, Gamma, Delta and hypervolume of each front against their union.

    Each input front is filtered first. Spread extremes and the default
    hypervolume reference point come from the union reference front.
    """
    if not isinstance(fronts, Mapping):
        fronts = {f.source or f"front{i}": f for i, f in enumerate(fronts)}
    filtered = {k: filter_nondominated(f, k) for k, f in fronts.items()}
    reference = union_front(filtered.values())
    if ref_point is None:
        ref_point = default_ref_point(list(filtered.values()))
    rows = []
    for label, f in filtered.items():
        rows.append(
            {
                "solver": label,
                "size": len(f),
                "purity": purity(f, reference),
                "gamma": spread_gamma(f, reference),
                "delta": spread_delta(f, reference),
                "hv": hypervolume(f, ref_point),
            }
        )
    return rows


def to_cost(values, larger_is_better: bool) -> np.ndarray:
    """Turn metric values into positive smaller-is-better costs.

    Larger-is-better values map to ``1 / (v + DIV_EPS)``; the others are
    shifted by ``DIV_EPS`` so zeros stay usable as ratio denominators.
    Non-finite inputs stay ``inf`` (failures).
    """
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore"):
        out = 1.0 / (v + DIV_EPS) if larger_is_better else v + DIV_EPS
    return np.where(np.isfinite(v) & (out > 0), out, np.inf)


def performance_profile(
    costs: Mapping[str, Sequence[float]], tau_grid=None, n_tau: int = 200
) -> list[ProfileCurve]:
    """Dolan-More profiles from a ``solver -> per-problem costs`` table.

    Failed runs are ``inf`` or ``nan`` and never count at finite ``tau``.
    Problems where every solver failed are dropped with a warning. Without
    an explicit ``tau_grid`` the curves are sampled on a log-spaced grid from
    1 to the largest finite ratio, merged with every observed ratio so each
    step is represented exactly.
    """
    labels = list(costs)
    if not labels:
        raise ValueError("need at least one solver")
    table = np.array([np.asarray(costs[s], dtype=float) for s in labels])
    if table.ndim != 2:
        raise ValueError("every solver needs one cost per problem")
    table = np.where(np.isfinite(table), table, np.inf)
    if np.any(table <= 0):
        raise ValueError("costs must be positive")
    ok = np.any(np.isfinite(table), axis=0)
    if not np.all(ok):
        warnings.warn(f"dropping {int(np.sum(~ok))} problem(s) where every solver failed", RuntimeWarning, stacklevel=2)
        table = table[:, ok]
    if table.shape[1] == 0:
        raise ValueError("no problem has a successful solver")
    ratios = table / table.min(axis=0)
    if tau_grid is None:
        finite = ratios[np.isfinite(ratios)]
        top = max(float(finite.max()), 1.0)
        grid = np.geomspace(1.0, top, n_tau) if top > 1.0 else np.array([1.0])
        tau = np.unique(np.concatenate([grid, finite]))
    else:
        tau = np.unique(np.asarray(tau_grid, dtype=float))
    n_prob = ratios.shape[1]
    curves = []
    for s, row in zip(labels, ratios):
        rho = np.array([np.count_nonzero(row <= t) / n_prob for t in tau])
        curves.append(ProfileCurve(s, tau.copy(), rho))
    return curves


# --- CSV I/O ----------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_front(path, front: Front | np.ndarray, m: int | None = None) -> None:
    """Write objective vectors with header ``f1,...,fm``."""
    pts = _as_points(front)
    m = pts.shape[1] if pts.shape[0] else (m or 0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i + 1}" for i in range(m)])
        for row in pts:
            w.writerow([_fmt(v) for v in row])


def read_front(path, source: str | None = None) -> Front:
    """Read a front CSV; the header must be ``f1,...,fm``."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    m = len(header)
    if header != [f"f{i + 1}" for i in range(m)]:
        raise ValueError(f"{path}: header must be f1,...,f{m}, got {','.join(header)}")
    data = []
    for ln, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != m:
            raise ValueError(f"{path}: line {ln} has {len(row)} fields, expected {m}")
        data.append([float(v) for v in row])
    pts = np.array(data, dtype=float) if data else np.zeros((0, m))
    return Front(pts, source if source is not None else path.stem)


def write_profile(path, curves: Sequence[ProfileCurve]) -> None:
    """Write curves sharing one grid as ``tau,rho_<solver>,...``."""
    if not curves:
        raise ValueError("no curves to write")
    tau = curves[0].tau
    for c in curves[1:]:
        if c.tau.shape != tau.shape or np.any(c.tau != tau):
            raise ValueError("curves must share one tau grid")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau"] + [f"rho_{c.solver}" for c in curves])
        for i, t in enumerate(tau):
            w.writerow([_fmt(t)] + [_fmt(c.rho[i]) for c in curves])


def read_profile(path) -> list[ProfileCurve]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if not header or header[0] != "tau" or not all(h.startswith("rho_") for h in header[1:]):
        raise ValueError(f"{path}: header must be tau,rho_<solver>,...")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, len(header))
    return [ProfileCurve(h[4:], data[:, 0].copy(), data[:, i].copy()) for i, h in enumerate(header[1:], start=1)]
