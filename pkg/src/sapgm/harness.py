"""Multistart orchestration, result files, and metric/profile reports.

A :class:`RunManifest` fixes every input of a benchmark run. Running it
writes, into ``manifest.out``:

``runs.csv``
    one row per start, ordered by start index;
``front.csv``
    nondominated final objective vectors, in start order;
``timings.csv``
    wall-clock seconds per start (kept apart so the two files above are
    byte-identical across repeated runs);
``manifest.json``, ``summary.json``
    the manifest echo and run totals.

Column layouts are documented in ``docs/formats.md``.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .metrics import (
    Front,
    ProfileCurve,
    filter_nondominated,
    metrics_table,
    performance_profile,
    read_front,
    to_cost,
    write_front,
    write_profile,
)
from .problems import ProblemSpec, build_problem, sample_starts
from .solver import RunRecord, SolverConfig, fpga_run, sapgm_run

__all__ = [
    "SOLVERS",
    "UsageError",
    "RunManifest",
    "RunResult",
    "run_manifest",
    "load_run_fronts",
    "metrics_report",
    "write_metrics_csv",
    "read_metrics_csv",
    "profile_report",
    "PROFILE_METRICS",
]

SOLVERS = ("sapgm", "fpga")
#: Profiled columns of ``metrics.csv``; ``True`` marks larger-is-better.
PROFILE_METRICS = {
    "iterations": False,
    "time": False,
    "purity": True,
    "gamma": False,
    "delta": False,
    "hv": True,
}
METRICS_COLUMNS = ("problem", "solver", "size", "purity", "gamma", "delta", "hv", "iterations", "time")


class UsageError(ValueError):
    """Bad user input: unknown names, inconsistent files, too few solvers."""


def _fmt(v) -> str:
    return format(float(v), ".17g")


@dataclass
class RunManifest:
    """Complete description of a multistart benchmark run."""

    problem: str
    solver: str = "sapgm"
    params: dict = field(default_factory=dict)
    config: SolverConfig = field(default_factory=SolverConfig)
    starts: int = 200
    seed: int = 0
    out: str = "out"
    workers: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise UsageError(f"unknown solver {self.solver!r}; expected one of {', '.join(SOLVERS)}")
        if self.starts < 1:
            raise UsageError("starts must be >= 1")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if isinstance(self.config, Mapping):
            self.config = _config_from_dict(self.config)

    def to_dict(self) -> dict:
        d = {
            "problem": self.problem,
            "solver": self.solver,
            "params": dict(self.params),
            "config": asdict(self.config),
            "starts": self.starts,
            "seed": self.seed,
            "out": self.out,
            "workers": self.workers,
        }
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunManifest":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise UsageError(f"unknown manifest keys: {', '.join(sorted(extra))}")
        if "problem" not in d:
            raise UsageError("manifest needs a 'problem'")
        return cls(**dict(d))

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _config_from_dict(d: Mapping) -> SolverConfig:
    known = {f.name for f in fields(SolverConfig)}
    extra = set(d) - known
    if extra:
        raise UsageError(f"unknown solver config keys: {', '.join(sorted(extra))}")
    try:
        return SolverConfig(**dict(d))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


@dataclass
class RunResult:
    manifest: RunManifest
    records: list
    front: Front
    summary: dict


# --- execution --------------------------------------------------------------

_PROBLEM_CACHE: dict = {}


def _problem(name: str, params: Mapping) -> ProblemSpec:
    key = (name, json.dumps(params, sort_keys=True, default=str))
    if key not in _PROBLEM_CACHE:
        _PROBLEM_CACHE.clear()
        _PROBLEM_CACHE[key] = build_problem(name, dict(params))
    return _PROBLEM_CACHE[key]


def _solve(task) -> RunRecord:
    name, params, solver, cfg, x0 = task
    problem = _problem(name, params)
    x0 = problem.g.project(np.asarray(x0, dtype=float))
    runner = fpga_run if solver == "fpga" else sapgm_run
    rec = runner(problem, x0, cfg)
    rec.trace = []  # keep worker results small
    return rec


def _build_checked(manifest: RunManifest) -> ProblemSpec:
    try:
        problem = _problem(manifest.problem, manifest.params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if manifest.solver == "fpga" and not problem.is_smooth:
        raise UsageError(f"fpga needs a smooth problem; {problem.name!r} is nonsmooth")
    return problem


def run_manifest(manifest: RunManifest, write: bool = True) -> RunResult:
    """Run every start of ``manifest`` and (optionally) write the artifacts."""
    problem = _build_checked(manifest)
    starts = sample_starts(problem, manifest.starts, manifest.seed)
    cfg = manifest.config
    if manifest.solver == "fpga":
        cfg = cfg.replace(smoothing_enabled=False)
    tasks = [(manifest.problem, manifest.params, manifest.solver, cfg, x0) for x0 in starts]
    if manifest.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=manifest.workers) as pool:
            records = list(pool.map(_solve, tasks, chunksize=max(1, len(tasks) // (4 * manifest.workers))))
    else:
        records = [_solve(t) for t in tasks]
    front = filter_nondominated(np.array([r.F for r in records]), manifest.solver)
    summary = {
        "problem": problem.name,
        "solver": manifest.solver,
        "starts": len(records),
        "converged": int(sum(r.converged for r in records)),
        "total_iterations": int(sum(r.iterations for r in records)),
        "total_fw_iterations": int(sum(r.fw_iterations for r in records)),
        "total_time": float(sum(r.wall_time for r in records)),
        "front_size": len(front),
    }
    result = RunResult(manifest, records, front, summary)
    if write:
        write_run(result, problem)
    return result


def write_run(result: RunResult, problem: ProblemSpec) -> Path:
    out = Path(result.manifest.out)
    out.mkdir(parents=True, exist_ok=True)
    m, n = problem.m, problem.n
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["start", "converged", "iterations", "fw_iterations"]
            + [f"f{i + 1}" for i in range(m)]
            + [f"x{j + 1}" for j in range(n)]
        )
        for i, r in enumerate(result.records):
            w.writerow(
                [i, int(r.converged), r.iterations, r.fw_iterations]
                + [_fmt(v) for v in r.F]
                + [_fmt(v) for v in r.x]
            )
    with open(out / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start", "wall_time"])
        for i, r in enumerate(result.records):
            w.writerow([i, _fmt(r.wall_time)])
    write_front(out / "front.csv", result.front, m)
    result.manifest.dump(out / "manifest.json")
    with open(out / "summary.json", "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


# --- metrics ----------------------------------------------------------------


def _split_label(spec: str) -> tuple[str | None, Path]:
    if "=" in spec:
        label, path = spec.split("=", 1)
        return label, Path(path)
    return None, Path(spec)


def load_run_fronts(specs: Sequence[str]) -> tuple[dict, dict, str]:
    """Load fronts from run directories or front CSV files.

    Each entry is a path, optionally prefixed ``label=``. A directory is read
    as a run directory (its ``front.csv``, labelled by the manifest's solver,
    with totals from ``summary.json``); a file is a plain front CSV, labelled
    by its stem. Returns ``(fronts, summaries, problem)``.
    """
    fronts: dict[str, Front] = {}
    summaries: dict[str, dict] = {}
    problem = ""
    dims: dict[str, int] = {}
    for spec in specs:
        label, path = _split_label(spec)
        summary = None
        if path.is_dir():
            front_path = path / "front.csv"
            if not front_path.exists():
                raise UsageError(f"{path}: no front.csv in run directory")
            front = read_front(front_path)
            if (path / "summary.json").exists():
                summary = json.loads((path / "summary.json").read_text())
                problem = problem or summary.get("problem", "")
                label = label or summary.get("solver")
            label = label or path.name
        elif path.exists():
            try:
                front = read_front(path)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            label = label or path.stem
        else:
            raise UsageError(f"{path}: no such file or directory")
        if label in fronts:
            raise UsageError(f"duplicate front label {label!r}; use label=path")
        if len(front):
            dims[str(path)] = front.m
        fronts[label] = Front(front.points, label)
        if summary is not None:
            summaries[label] = summary
    if len(set(dims.values())) > 1:
        first = next(iter(dims.values()))
        bad = next(p for p, d in dims.items() if d != first)
        raise UsageError(f"{bad}: objective dimension {dims[bad]} differs from {first}")
    return fronts, summaries, problem


def metrics_report(fronts: Mapping[str, Front], summaries: Mapping[str, dict] | None = None, problem: str = "", ref_point=None) -> list[dict]:
    """Rows of ``metrics.csv``: one per front, against the union reference."""
    summaries = summaries or {}
    rows = metrics_table(fronts, ref_point)
    for row in rows:
        s = summaries.get(row["solver"], {})
        row["problem"] = problem
        row["iterations"] = s.get("total_iterations", math.nan)
        row["time"] = s.get("total_time", math.nan)
    return rows


def write_metrics_csv(path, rows: Sequence[Mapping]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for row in rows:
            out = []
            for col in METRICS_COLUMNS:
                v = row.get(col, "")
                if col in ("problem", "solver"):
                    out.append(str(v))
                elif col == "size":
                    out.append(str(int(v)))
                else:
                    out.append("" if v is None or (isinstance(v, float) and math.isnan(v)) else _fmt(v))
            w.writerow(out)


def read_metrics_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"problem", "solver"} <= set(reader.fieldnames):
            raise UsageError(f"{path}: expected a metrics table with problem and solver columns")
        rows = []
        for raw in reader:
            row = {"problem": raw["problem"], "solver": raw["solver"]}
            for col in PROFILE_METRICS:
                v = raw.get(col, "")
                row[col] = float(v) if v not in ("", None) else math.nan
            rows.append(row)
    return rows


def profile_report(rows: Sequence[Mapping], out_dir=None) -> dict[str, list[ProfileCurve]]:
    """One set of performance-profile curves per metric column.

    Rows are ``(problem, solver, metric values...)``. A missing or non-finite
    value counts as a failure. Larger-is-better metrics (purity, hv) are
    turned into costs by :func:`sapgm.metrics.to_cost`. Metrics with no
    finite value anywhere are skipped.
    """
    solvers = list(dict.fromkeys(r["solver"] for r in rows))
    if len(solvers) < 2:
        raise UsageError("performance profiles need at least two solvers")
    problems = list(dict.fromkeys(r["problem"] for r in rows))
    out: dict[str, list[ProfileCurve]] = {}
    for metric, larger in PROFILE_METRICS.items():
        table = {s: np.full(len(problems), math.nan) for s in solvers}
        for r in rows:
            table[r["solver"]][problems.index(r["problem"])] = r.get(metric, math.nan)
        if not any(np.any(np.isfinite(v)) for v in table.values()):
            continue
        costs = {s: to_cost(v, larger) for s, v in table.items()}
        out[metric] = performance_profile(costs)
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for metric, curves in out.items():
            write_profile(d / f"profile_{metric}.csv", curves)
    return out
