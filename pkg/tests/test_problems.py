import math

import numpy as np
import pytest

from sapgm.problems import (
    PROBLEM_NAMES,
    SMOOTH_PROBLEMS,
    TABLE_PROBLEMS,
    build_problem,
    generate_large_scale,
    load_large_scale,
    sample_starts,
    save_large_scale,
    scalarization_sweep,
)
from sapgm.selfcheck import fd_gradient_error

SMALL_LS = {"m_rows": 30, "n": 12, "spar": 0.25, "data_seed": 3}


def build(name):
    return build_problem(name, SMALL_LS if name == "large_scale" else None)


# Independent transcriptions of the objective formulas.
def cr_mf2(x):
    r = x[0] ** 2 + x[1] ** 2 - 1
    f1 = max(x[0] ** 2 + (x[1] - 1) ** 2 + x[1] - 1, -(x[0] ** 2) - (x[1] - 1) ** 2 + x[1] + 1)
    return np.array([f1, -x[0] + 2 * r + 1.75 * abs(r)])


def cb3(x):
    return max(x[0] ** 4 + x[1] ** 2, (2 - x[0]) ** 2 + (2 - x[1]) ** 2, 2 * math.exp(x[1] - x[0]))


def cb3_lq(x):
    return np.array([cb3(x), max(-x[0] - x[1], -x[0] - x[1] + x[0] ** 2 + x[1] ** 2 - 1)])


def cb3_mf1(x):
    return np.array([cb3(x), -x[0] + 20 * max(x[0] ** 2 + x[1] ** 2 - 1, 0)])


def jos1_l1(x):
    n = x.size
    return np.array([np.sum(x**2) / n, np.sum((x - 2) ** 2) / n, np.sum(np.abs(x))])


def bk1_l1(x):
    return np.array([x[0] ** 2 + x[1] ** 2, (x[0] - 5) ** 2 + (x[1] - 5) ** 2, abs(x[0]) + abs(x[1])])


def sp1_l1(x):
    return np.array(
        [(x[0] - 1) ** 2 + (x[0] - x[1]) ** 2, (x[1] - 3) ** 2 + (x[0] - x[1]) ** 2, abs(x[0]) + abs(x[1])]
    )


ORACLES = {"cr_mf2": cr_mf2, "cb3_lq": cb3_lq, "cb3_mf1": cb3_mf1, "jos1_l1": jos1_l1, "bk1_l1": bk1_l1, "sp1_l1": sp1_l1}
BOXES = {
    "large_scale": (0.0, 1.0),
    "cr_mf2": (1.5, 2.0),
    "cb3_lq": (1.5, 2.0),
    "cb3_mf1": (0.0, 1.0),
    "jos1_l1": (1.0, 2.0),
    "bk1_l1": (-5.0, 10.0),
    "sp1_l1": (5.0, 10.0),
}


class TestCatalogue:
    def test_names(self):
        assert len(TABLE_PROBLEMS) == 7
        assert set(SMOOTH_PROBLEMS) <= set(PROBLEM_NAMES)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            build_problem("zdt1")

    @pytest.mark.parametrize("alias,key", [("CR&MF2", "cr_mf2"), ("JOS1&l1", "jos1_l1"), ("cb3&lq", "cb3_lq")])
    def test_aliases(self, alias, key):
        assert build_problem(alias).name == key

    @pytest.mark.parametrize("name", TABLE_PROBLEMS)
    def test_boxes_as_listed(self, name):
        p = build(name)
        lo, hi = BOXES[name]
        assert np.all(p.lo == lo) and np.all(p.hi == hi)
        assert p.m in (2, 3)
        assert np.all(p.lo < p.hi)

    def test_smooth_flags(self):
        for name in SMOOTH_PROBLEMS:
            assert build_problem(name).is_smooth
        for name in TABLE_PROBLEMS:
            assert not build(name).is_smooth


class TestValues:
    def test_bk1_origin(self):
        np.testing.assert_allclose(build_problem("bk1_l1").F(np.zeros(2)), [0.0, 50.0, 0.0])

    def test_jos1_corner(self):
        np.testing.assert_allclose(build_problem("jos1_l1").F(np.array([2.0, 2.0]))[:2], [4.0, 0.0])

    def test_cb3_lq_smoothed_max(self):
        p = build_problem("cb3_lq")
        assert p.objectives[1].eval(np.array([1.0, 1.0]), 1e-9) == pytest.approx(-1.0, abs=1e-12)

    def test_outside_box_is_infinite(self):
        p = build_problem("cr_mf2")
        assert np.all(np.isinf(p.F(np.array([0.0, 0.0]))))

    @pytest.mark.parametrize("name", sorted(ORACLES))
    def test_exact_matches_formula(self, name):
        p = build_problem(name)
        rng = np.random.default_rng(0)
        for x in rng.uniform(p.lo, p.hi, (50, p.n)):
            np.testing.assert_allclose(p.F(x), ORACLES[name](x), rtol=1e-13, atol=1e-13)

    def test_large_scale_formula(self):
        p = build("large_scale")
        d = p.params["data"]
        rng = np.random.default_rng(1)
        for x in rng.uniform(0, 1, (20, p.n)):
            f1 = np.sum(np.abs(np.maximum(d.A @ x, 0) - d.b)) + 0.01 * np.sum(np.abs(x))
            f2 = -max(np.sum(np.abs(d.A @ x - d.b)) - 1e-3, 0) - 0.03 * np.sum(np.abs(x))
            np.testing.assert_allclose(p.F(x), [f1, f2], rtol=1e-13)

    def test_l1_in_g_same_exact_values(self):
        a = build_problem("large_scale", SMALL_LS)
        b = build_problem("large_scale", dict(SMALL_LS, l1_in_g=True))
        x = np.random.default_rng(2).uniform(0, 1, a.n)
        np.testing.assert_allclose(a.F(x), b.F(x), rtol=1e-13)
        assert b.g.kind == "weighted_l1_plus_box"


@pytest.mark.parametrize("name", TABLE_PROBLEMS + SMOOTH_PROBLEMS)
class TestSmoothing:
    def test_gradients_fd(self, name):
        p = build(name)
        rng = np.random.default_rng(4)
        for x in rng.uniform(p.lo + 1e-5, p.hi - 1e-5, (20, p.n)):
            for mu in (1e-1, 1e-3):
                for obj in p.objectives:
                    err = fd_gradient_error(lambda z: obj.eval(z, mu), obj.grad(x, mu), x)
                    assert err <= 1e-6, (obj.name, mu, x)

    def test_uniform_error(self, name):
        p = build(name)
        rng = np.random.default_rng(5)
        for x in rng.uniform(p.lo, p.hi, (100, p.n)):
            for mu in (0.5, 1e-2, 1e-4):
                err = np.abs(p.f_values(x, mu) - p.f_exact(x))
                assert np.all(err <= p.kappas * mu + 1e-9 * (1 + np.abs(p.f_exact(x))))

    def test_convex_midpoints(self, name):
        p = build(name)
        if name == "large_scale":
            pytest.skip("f2 of the large-scale problem is nonconvex as listed")
        rng = np.random.default_rng(6)
        a = rng.uniform(p.lo, p.hi, (500, p.n))
        b = rng.uniform(p.lo, p.hi, (500, p.n))
        mu = 1e-2
        for x, y in zip(a, b):
            lhs = p.f_values((x + y) / 2, mu)
            rhs = (p.f_values(x, mu) + p.f_values(y, mu)) / 2
            assert np.all(lhs <= rhs + 1e-10 * (1 + np.abs(rhs)))

    def test_lipschitz_factor(self, name):
        p = build(name)
        rng = np.random.default_rng(7)
        mu = 1e-2
        for _ in range(200):
            x, y = rng.uniform(p.lo, p.hi, (2, p.n))
            for obj in p.objectives:
                lhs = np.linalg.norm(obj.grad(x, mu) - obj.grad(y, mu))
                assert lhs <= obj.lip_factor / mu * np.linalg.norm(x - y) * (1 + 1e-9) + 1e-12


def test_large_scale_f1_nonnegative():
    p = build("large_scale")
    rng = np.random.default_rng(8)
    f1 = p.objectives[0]
    for x in rng.uniform(0, 1, (100, p.n)):
        assert f1.exact(x) >= 0
        assert f1.eval(x, 1e-2) >= -1e-12


class TestGenerator:
    def test_nonzero_count(self):
        d = generate_large_scale(40, 100, 0.1, 0)
        assert np.count_nonzero(d.x_true) == 10

    @pytest.mark.parametrize("spar,n,want", [(0.2, 100, 20), (0.5, 100, 50), (0.15, 10, 2), (1.0, 7, 7)])
    def test_ceil_count(self, spar, n, want):
        assert np.count_nonzero(generate_large_scale(5, n, spar, 1).x_true) == want

    def test_b_nonnegative_and_clipped(self):
        d = generate_large_scale(50, 20, 0.5, 2)
        assert np.all(d.b >= 0)
        assert np.all((d.x_true >= 0) & (d.x_true <= 1))
        np.testing.assert_array_equal(d.b, np.maximum(d.A @ d.x_true, 0))

    def test_deterministic(self):
        a, b = generate_large_scale(30, 10, 0.3, 9), generate_large_scale(30, 10, 0.3, 9)
        for f in ("A", "b", "x_true"):
            assert getattr(a, f).tobytes() == getattr(b, f).tobytes()

    def test_draw_order(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((6, 5))
        x = rng.uniform(0, 1, 5)
        x[:3] = 0
        rng.shuffle(x)
        d = generate_large_scale(6, 5, 0.4, 4)
        np.testing.assert_array_equal(d.A, A)
        np.testing.assert_array_equal(d.x_true, x)

    @pytest.mark.parametrize("bad", [0.0, 1.5, -0.1])
    def test_bad_spar(self, bad):
        with pytest.raises(ValueError):
            generate_large_scale(5, 5, bad, 0)

    def test_file_round_trip(self, tmp_path):
        d = generate_large_scale(7, 4, 0.5, 11, 2e-3)
        path = tmp_path / "d.csv"
        save_large_scale(d, path)
        e = load_large_scale(path)
        assert e.A.tobytes() == d.A.tobytes()
        assert e.b.tobytes() == d.b.tobytes()
        assert e.x_true.tobytes() == d.x_true.tobytes()
        assert (e.spar, e.seed, e.epsilon_hat) == (d.spar, d.seed, d.epsilon_hat)
        p = build_problem("large_scale", {"data_file": str(path)})
        assert p.n == 4


class TestStarts:
    def test_count_and_feasible(self):
        p = build_problem("cr_mf2")
        pts = sample_starts(p, 200, 0)
        assert len(pts) == 200
        assert all(p.g.in_box(x) for x in pts)

    def test_box_respected(self):
        pts = sample_starts(build_problem("jos1_l1", {"n": 5}), 50, 3)
        assert np.all(np.array(pts) >= 1) and np.all(np.array(pts) <= 2)

    def test_seeds_differ(self):
        p = build_problem("bk1_l1")
        assert not np.array_equal(sample_starts(p, 1, 0)[0], sample_starts(p, 1, 1)[0])

    def test_deterministic(self):
        p = build_problem("bk1_l1")
        np.testing.assert_array_equal(sample_starts(p, 5, 7), sample_starts(p, 5, 7))

    def test_bad_count(self):
        with pytest.raises(ValueError):
            sample_starts(build_problem("bk1"), 0, 0)


def test_scalarization_sweep_on_jos1_diagonal():
    p = build_problem("jos1")
    ref = scalarization_sweep(p, 50)
    assert ref.shape == (50, 2)
    # the Pareto set of JOS1 inside [1, 2]^2 is the diagonal
    np.testing.assert_allclose(ref[:, 0], ref[:, 1], atol=1e-8)
    assert ref.min() == pytest.approx(1.0, abs=1e-8) and ref.max() == pytest.approx(2.0, abs=1e-8)
