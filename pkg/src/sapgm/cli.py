"""Command-line interface: ``sapgm {run,metrics,profile,check,gen}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import (
    SOLVERS,
    RunManifest,
    UsageError,
    load_run_fronts,
    metrics_report,
    profile_report,
    read_metrics_csv,
    run_manifest,
    write_metrics_csv,
)
from .problems import generate_large_scale, save_large_scale
from .selfcheck import run_checks

# flag -> SolverConfig field
_CONFIG_FLAGS = {
    "alpha": "alpha",
    "sigma": "sigma",
    "mu0": "mu0",
    "gamma0": "gamma0",
    "eta": "eta",
    "eps": "eps",
    "max_iter": "max_iter",
    "fw_iters": "fw_iters",
}
# flag -> problem parameter
_PARAM_FLAGS = {"n": "n", "m_rows": "m_rows", "spar": "spar", "data_seed": "data_seed", "data_file": "data_file"}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sapgm", description="Multiobjective SAPGM benchmark harness")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="multistart run from a manifest and/or flags")
    r.add_argument("--manifest", help="JSON manifest; flags override its fields")
    r.add_argument("--problem")
    r.add_argument("--solver", choices=SOLVERS)
    r.add_argument("--starts", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--alpha", type=float)
    r.add_argument("--sigma", type=float)
    r.add_argument("--mu0", type=float)
    r.add_argument("--gamma0", type=float)
    r.add_argument("--eta", type=float)
    r.add_argument("--eps", type=float)
    r.add_argument("--max-iter", type=int)
    r.add_argument("--fw-iters", type=int)
    r.add_argument("--paper-literal-backtrack", action="store_true", default=None,
                   help="accept a step when the best objective passes the descent test")
    r.add_argument("--n", type=int, help="dimension (JOS1 variants, large scale)")
    r.add_argument("--m-rows", type=int, help="rows of A (large scale)")
    r.add_argument("--spar", type=float, help="fraction of nonzeros in x_true (large scale)")
    r.add_argument("--data-seed", type=int, help="seed of the large-scale data")
    r.add_argument("--data-file", help="large-scale data written by 'sapgm gen'")
    r.add_argument("--l1-in-g", action="store_true", default=None,
                   help="large scale: keep the l1 terms exact in g instead of smoothing them")
    r.add_argument("--workers", type=int)
    r.add_argument("--out")

    mt = sub.add_parser("metrics", help="purity, spread and hypervolume of several fronts")
    mt.add_argument("fronts", nargs="+", help="run directories or front CSVs, optionally label=path")
    mt.add_argument("--problem", default=None, help="problem label for the table")
    mt.add_argument("--ref-point", type=float, nargs="+", help="hypervolume reference point")
    mt.add_argument("--out", default="metrics.csv")

    pf = sub.add_parser("profile", help="performance profiles from metrics tables")
    pf.add_argument("tables", nargs="+", help="metrics.csv files (one or more problems)")
    pf.add_argument("--out", default="profiles")

    sub.add_parser("check", help="run the self-test suites")

    g = sub.add_parser("gen", help="write a large-scale data file")
    g.add_argument("--m-rows", type=int, default=500)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--spar", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--epsilon-hat", type=float, default=1e-3)
    g.add_argument("--out", required=True)
    return p


def _manifest_from_args(args) -> RunManifest:
    base = RunManifest.load(args.manifest).to_dict() if args.manifest else {}
    if args.problem is not None:
        base["problem"] = args.problem
    if "problem" not in base:
        raise UsageError("--problem or --manifest is required")
    for key in ("solver", "starts", "seed", "out", "workers"):
        v = getattr(args, key)
        if v is not None:
            base[key] = v
    cfg = dict(base.get("config", {}))
    for flag, name in _CONFIG_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            cfg[name] = v
    if args.paper_literal_backtrack:
        cfg["paper_literal_backtrack"] = True
    base["config"] = cfg
    params = dict(base.get("params", {}))
    for flag, name in _PARAM_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            params[name] = v
    if args.l1_in_g:
        params["l1_in_g"] = True
    base["params"] = params
    return RunManifest.from_dict(base)


def _cmd_run(args) -> int:
    manifest = _manifest_from_args(args)
    result = run_manifest(manifest)
    s = result.summary
    print(
        f"{s['problem']} {s['solver']}: {s['starts']} starts, {s['converged']} converged, "
        f"iter {s['total_iterations']}, time {s['total_time']:.2f}s, front {s['front_size']} -> {manifest.out}"
    )
    return 0


def _cmd_metrics(args) -> int:
    fronts, summaries, problem = load_run_fronts(args.fronts)
    rows = metrics_report(fronts, summaries, args.problem if args.problem is not None else problem, args.ref_point)
    write_metrics_csv(args.out, rows)
    for r in rows:
        print(f"{r['solver']:<12} size={r['size']:<4d} purity={r['purity']:.4f} gamma={r['gamma']:.4f} "
              f"delta={r['delta']:.4f} hv={r['hv']:.6g}")
    return 0


def _cmd_profile(args) -> int:
    rows = []
    for path in args.tables:
        if not Path(path).exists():
            raise UsageError(f"{path}: no such file")
        rows.extend(read_metrics_csv(path))
    curves = profile_report(rows, args.out)
    for metric in curves:
        print(f"wrote {Path(args.out) / f'profile_{metric}.csv'}")
    return 0


def _cmd_check(args) -> int:
    report = run_checks()
    for line in report.lines():
        print(line)
    print("all suites passed" if report.ok else "self-check FAILED")
    return 0 if report.ok else 1


def _cmd_gen(args) -> int:
    data = generate_large_scale(args.m_rows, args.n, args.spar, args.seed, args.epsilon_hat)
    save_large_scale(data, args.out)
    print(f"wrote {args.out} ({data.m_rows}x{data.n}, {int((data.x_true != 0).sum())} nonzeros)")
    return 0


_COMMANDS = {"run": _cmd_run, "metrics": _cmd_metrics, "profile": _cmd_profile, "check": _cmd_check, "gen": _cmd_gen}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"sapgm {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
