import dataclasses
import json
import math

import numpy as np
import pytest

from sapgm import cli
from sapgm.harness import (
    RunManifest,
    UsageError,
    load_run_fronts,
    metrics_report,
    profile_report,
    read_metrics_csv,
    run_manifest,
    write_metrics_csv,
)
from sapgm.metrics import Front, read_front, read_profile, write_front
from sapgm.problems import build_problem, load_large_scale, sample_starts
from sapgm.selfcheck import check_fd, check_schedule, run_checks
from sapgm.solver import SolverConfig, mu_schedule


def manifest(tmp_path, name="a", **kw):
    base = dict(problem="bk1", solver="sapgm", starts=4, seed=1, out=str(tmp_path / name))
    base.update(kw)
    return RunManifest(**base)


class TestManifest:
    def test_round_trip(self, tmp_path):
        m = manifest(tmp_path, params={"n": 3}, problem="jos1", config=SolverConfig(eps=1e-2))
        m.dump(tmp_path / "m.json")
        back = RunManifest.load(tmp_path / "m.json")
        assert back.to_dict() == m.to_dict()
        assert back.config.eps == 1e-2

    def test_config_from_dict(self, tmp_path):
        m = RunManifest.from_dict({"problem": "bk1", "config": {"alpha": 5.0}})
        assert m.config.alpha == 5.0 and m.config.sigma == 0.75

    @pytest.mark.parametrize(
        "bad",
        [
            {"problem": "bk1", "colour": 1},
            {"solver": "sapgm"},
            {"problem": "bk1", "solver": "newton"},
            {"problem": "bk1", "starts": 0},
            {"problem": "bk1", "config": {"alpha": 2.0}},
            {"problem": "bk1", "config": {"speed": 2.0}},
        ],
    )
    def test_rejects(self, bad):
        with pytest.raises(UsageError):
            RunManifest.from_dict(bad)

    def test_shipped_manifests_load(self):
        from pathlib import Path

        paths = sorted((Path(__file__).parent.parent / "manifests").glob("*.json"))
        assert len(paths) >= 7
        for p in paths:
            m = RunManifest.load(p)
            build_problem(m.problem, m.params)


class TestRuns:
    def test_artifacts(self, tmp_path):
        res = run_manifest(manifest(tmp_path))
        out = tmp_path / "a"
        for f in ("runs.csv", "timings.csv", "front.csv", "manifest.json", "summary.json"):
            assert (out / f).exists()
        lines = (out / "runs.csv").read_text().splitlines()
        assert lines[0] == "start,converged,iterations,fw_iterations,f1,f2,x1,x2"
        assert len(lines) == 5
        summary = json.loads((out / "summary.json").read_text())
        assert summary["starts"] == 4
        assert summary["total_iterations"] == sum(r.iterations for r in res.records)
        assert len(read_front(out / "front.csv")) == summary["front_size"] == len(res.front)

    def test_byte_identical(self, tmp_path):
        run_manifest(manifest(tmp_path, "a"))
        run_manifest(manifest(tmp_path, "b"))
        for f in ("runs.csv", "front.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_workers_same_output(self, tmp_path):
        run_manifest(manifest(tmp_path, "a"))
        run_manifest(manifest(tmp_path, "b", workers=2))
        for f in ("runs.csv", "front.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_max_iter_zero_front_is_starts(self, tmp_path):
        res = run_manifest(manifest(tmp_path, config=SolverConfig(max_iter=0)))
        p = build_problem("bk1")
        F0 = np.array([p.F(x) for x in sample_starts(p, 4, 1)])
        assert all(any(np.array_equal(f, g) for g in F0) for f in res.front.points)
        assert res.summary["total_iterations"] == 0

    def test_fpga_refuses_nonsmooth(self, tmp_path):
        with pytest.raises(UsageError):
            run_manifest(manifest(tmp_path, problem="cr_mf2", solver="fpga"))

    def test_unknown_problem(self, tmp_path):
        with pytest.raises(UsageError):
            run_manifest(manifest(tmp_path, problem="nope"))

    def test_fpga_freezes_mu(self, tmp_path):
        res = run_manifest(manifest(tmp_path, solver="fpga", starts=2, config=SolverConfig(gamma0=0.05)), write=False)
        assert all(r.solver == "fpga" for r in res.records)


class TestMetrics:
    @pytest.fixture()
    def two_runs(self, tmp_path):
        run_manifest(manifest(tmp_path, "s", starts=6))
        run_manifest(manifest(tmp_path, "f", starts=6, solver="fpga", config=SolverConfig(gamma0=0.05)))
        return tmp_path / "s", tmp_path / "f"

    def test_self_purity(self, two_runs):
        fronts, summaries, problem = load_run_fronts([str(two_runs[0])])
        rows = metrics_report(fronts, summaries, problem)
        assert rows[0]["purity"] == 1.0 and problem == "bk1"
        assert rows[0]["iterations"] == summaries["sapgm"]["total_iterations"]

    def test_labels_and_csv(self, two_runs, tmp_path):
        fronts, summaries, problem = load_run_fronts([str(p) for p in two_runs])
        assert set(fronts) == {"sapgm", "fpga"}
        rows = metrics_report(fronts, summaries, problem)
        write_metrics_csv(tmp_path / "m.csv", rows)
        back = read_metrics_csv(tmp_path / "m.csv")
        assert [r["solver"] for r in back] == ["sapgm", "fpga"]
        for r, b in zip(rows, back):
            assert b["purity"] == r["purity"] and b["hv"] == r["hv"]

    def test_external_csv(self, two_runs, tmp_path):
        ext = tmp_path / "other.csv"
        write_front(ext, Front(np.array([[0.0, 50.0], [50.0, 0.0]])))
        fronts, _, _ = load_run_fronts([str(two_runs[0]), f"mine={ext}"])
        assert set(fronts) == {"sapgm", "mine"}

    def test_dimension_mismatch_names_file(self, two_runs, tmp_path):
        ext = tmp_path / "three.csv"
        write_front(ext, Front(np.zeros((1, 3))))
        with pytest.raises(UsageError, match="three.csv"):
            load_run_fronts([str(two_runs[0]), str(ext)])

    def test_duplicate_label(self, two_runs):
        with pytest.raises(UsageError):
            load_run_fronts([str(two_runs[0]), str(two_runs[0])])

    def test_missing_path(self, tmp_path):
        with pytest.raises(UsageError):
            load_run_fronts([str(tmp_path / "nothing")])


class TestProfiles:
    ROWS = [
        {"problem": "p1", "solver": "a", "iterations": 10, "time": 1.0, "purity": 1.0, "gamma": 0.1, "delta": 0.5, "hv": 2.0},
        {"problem": "p1", "solver": "b", "iterations": 20, "time": 2.0, "purity": 0.5, "gamma": 0.2, "delta": 0.4, "hv": 1.0},
        {"problem": "p2", "solver": "a", "iterations": 30, "time": math.nan, "purity": 0.2, "gamma": 0.1, "delta": 0.5, "hv": 2.0},
        {"problem": "p2", "solver": "b", "iterations": 15, "time": 3.0, "purity": 0.8, "gamma": 0.3, "delta": 0.4, "hv": 1.0},
    ]

    def test_single_solver_is_usage_error(self):
        with pytest.raises(UsageError):
            profile_report(self.ROWS[:1])

    def test_files(self, tmp_path):
        curves = profile_report(self.ROWS, tmp_path)
        assert set(curves) == {"iterations", "time", "purity", "gamma", "delta", "hv"}
        it = {c.solver: c for c in read_profile(tmp_path / "profile_iterations.csv")}
        assert it["a"].rho[0] == 0.5 and it["b"].rho[0] == 0.5
        t = {c.solver: c for c in curves["time"]}
        assert t["a"].rho[-1] == 0.5  # the nan is a failure
        pur = {c.solver: c for c in curves["purity"]}
        assert pur["a"].rho[0] == 0.5


class TestSelfCheck:
    def test_all_pass(self):
        report = run_checks()
        assert report.ok, "\n".join(report.lines())

    def test_perturbed_schedule_fails(self):
        res = check_schedule(lambda k, cfg: mu_schedule(k, cfg) * (1 + 1e-10), kmax=50)
        assert not res.passed

    def test_gradient_sign_flip_fails(self):
        def flipped(name):
            p = build_problem(name)
            o = p.objectives[0]
            bad = dataclasses.replace(o, grad=lambda x, mu, g=o.grad: -g(x, mu))
            return dataclasses.replace(p, objectives=(bad,) + p.objectives[1:])

        res = check_fd(("cr_mf2",), flipped, points=3)
        assert not res.passed

    def test_wrong_prox_fails(self):
        report = run_checks(prox=lambda lam, t, v, g: g.project(v), problems=("bk1_l1",))
        names = {s.name: s.passed for s in report.suites}
        assert not names["prox"] and names["fd"]


class TestCli:
    def test_run_and_metrics_and_profile(self, tmp_path, capsys):
        a, b = tmp_path / "s", tmp_path / "f"
        assert cli.main(["run", "--problem", "bk1", "--starts", "3", "--out", str(a)]) == 0
        assert cli.main(["run", "--problem", "bk1", "--solver", "fpga", "--gamma0", "0.05", "--starts", "3", "--out", str(b)]) == 0
        m = tmp_path / "m.csv"
        assert cli.main(["metrics", str(a), str(b), "--out", str(m)]) == 0
        assert cli.main(["profile", str(m), "--out", str(tmp_path / "prof")]) == 0
        assert (tmp_path / "prof" / "profile_hv.csv").exists()

    def test_manifest_override(self, tmp_path):
        m = manifest(tmp_path, "x", starts=2)
        m.dump(tmp_path / "m.json")
        out = tmp_path / "y"
        assert cli.main(["run", "--manifest", str(tmp_path / "m.json"), "--out", str(out), "--eps", "0.01"]) == 0
        saved = RunManifest.load(out / "manifest.json")
        assert saved.config.eps == 0.01 and saved.starts == 2

    def test_usage_errors_exit_2(self, tmp_path, capsys):
        assert cli.main(["run", "--problem", "nope", "--out", str(tmp_path / "z")]) == 2
        assert cli.main(["run", "--out", str(tmp_path / "z")]) == 2
        assert cli.main(["metrics", str(tmp_path / "missing")]) == 2
        assert cli.main(["profile", str(tmp_path / "missing.csv")]) == 2
        assert "error" in capsys.readouterr().err

    def test_gen(self, tmp_path):
        out = tmp_path / "d.csv"
        assert cli.main(["gen", "--m-rows", "10", "--n", "8", "--spar", "0.25", "--seed", "2", "--out", str(out)]) == 0
        d = load_large_scale(out)
        assert d.A.shape == (10, 8) and np.count_nonzero(d.x_true) == 2

    def test_check(self, capsys):
        assert cli.main(["check"]) == 0
        assert "all suites passed" in capsys.readouterr().out
