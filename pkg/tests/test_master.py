import numpy as np
import pytest

from helpers import is_feasible, vertex_enumeration
from smoothrank.master import (DistanceColumns, MasterError, build_bounded_master,
                               build_l1_master, build_smooth_master,
                               build_unbounded_master, record_solves, solve_master)


def cols_from_delta(deltas):
    """One pair per entry of ``deltas`` (rows = columns), built from explicit distances."""
    deltas = np.atleast_2d(np.asarray(deltas, dtype=float))
    T, R = deltas.shape
    # point 2r is the positive, 2r+1 the negative of pair r; only those pairs are used
    X = np.zeros((2 * R, 1))
    cols = DistanceColumns(X, np.arange(0, 2 * R, 2), np.arange(1, 2 * R, 2))
    keep = np.arange(R) * R + np.arange(R)
    cols.pair_pos, cols.pair_neg = cols.pair_pos[keep], cols.pair_neg[keep]
    for t in range(T):
        d = np.full(2 * R, 5.0)
        d[0::2] += deltas[t]
        cols.append_distances(np.array([float(t)]), d)
    return cols


def random_cols(rng, n_pos=5, n_neg=6, d=2, T=4):
    X = rng.normal(size=(n_pos + n_neg, d))
    cols = DistanceColumns(X, np.arange(n_pos), np.arange(n_pos, n_pos + n_neg))
    for _ in range(T):
        cols.append(rng.normal(size=d) * 1.5)
    return cols


def check_invariants(mp, sol, tol=1e-7):
    assert np.all(sol.pi >= -tol)
    assert np.max(sol.pi, initial=0.0) <= (mp.C if mp.kind == "l1" else 1.0) + 1e-9
    assert sol.newest_residual <= tol
    assert np.max(np.abs(sol.dual_residuals), initial=0.0) <= tol
    assert sol.objective == pytest.approx(sol.xi_sum + sol.penalty, abs=1e-9)
    assert sol.lp_report.ok(tol)
    assert sol.route_gap <= tol
    if mp.kind == "smooth":
        assert np.all(sol.alpha >= -tol) and np.all(sol.beta >= -tol)
        assert np.all(sol.alpha + sol.beta <= mp.C + tol)


class TestHandExamples:
    def test_bounded_single_pair(self):
        mp = build_bounded_master(cols_from_delta([[1.0]]))
        sol = solve_master(mp)
        assert sol.objective == pytest.approx(0.0, abs=1e-12)
        assert 0.0 <= sol.pi[0] <= 1.0
        check_invariants(mp, sol)

    def test_bounded_negative_delta(self):
        sol = solve_master(build_bounded_master(cols_from_delta([[-1.0]])))
        assert sol.objective == pytest.approx(0.0, abs=1e-12)
        assert sol.w[0] == pytest.approx(-1.0)

    def test_bounded_conflicting_pairs(self):
        # xi_1 >= 1 - w and xi_2 >= 1 + w, so xi_1 + xi_2 >= 2 for every w in [-1, 1]
        mp = build_bounded_master(cols_from_delta([[1.0, -1.0]]))
        sol = solve_master(mp)
        assert sol.objective == pytest.approx(vertex_enumeration(mp.lp), abs=1e-12)
        assert sol.objective == pytest.approx(2.0)
        check_invariants(mp, sol)

    def test_vertex_oracle_on_small_masters(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            mp = build_bounded_master(cols_from_delta(rng.normal(size=(2, 2))))
            assert solve_master(mp).objective == pytest.approx(vertex_enumeration(mp.lp),
                                                               abs=1e-8)

    def test_smooth_first_iteration(self):
        mp = build_smooth_master(cols_from_delta([[2.0]]), [], C=0.5)
        sol = solve_master(mp)
        assert sol.objective == pytest.approx(0.0, abs=1e-12)
        assert sol.penalty == 0.0
        check_invariants(mp, sol)

    def test_primal_lp_shape(self):
        mp = build_smooth_master(cols_from_delta([[1.0, 2.0], [3.0, -1.0]]), [0.3], C=0.1)
        lp = mp.lp
        assert (lp.m, lp.k) == (2 + 2, 2 + 2 + 1)
        assert np.all(np.isinf(lp.lower[:2])) and np.all(np.isinf(lp.upper[:2]))


@pytest.mark.parametrize("kind", ["bounded", "unbounded", "smooth", "l1"])
@pytest.mark.parametrize("seed", range(5))
def test_routes_agree_and_invariants(kind, seed):
    rng = np.random.default_rng(seed)
    cols = random_cols(rng, T=int(rng.integers(1, 5)))
    T = len(cols)
    mp = {"bounded": lambda: build_bounded_master(cols),
          "unbounded": lambda: build_unbounded_master(cols),
          "smooth": lambda: build_smooth_master(cols, rng.normal(size=T - 1) * 0.3, 0.05),
          "l1": lambda: build_l1_master(cols, 0.7)}[kind]()
    a = solve_master(mp, route="dual")
    b = solve_master(mp, route="primal")
    check_invariants(mp, a)
    check_invariants(mp, b)
    assert a.objective == pytest.approx(b.objective, abs=1e-8)
    xi = np.maximum(0.0, 1.0 - a.w @ cols.delta_matrix())
    extra = []
    if kind == "smooth":
        extra = [np.abs(a.w[:-1] - mp.w_old)]
    elif kind == "l1":
        extra = [np.abs(a.w)]
    x = np.concatenate([a.w, xi] + extra)
    assert is_feasible(mp.lp, x, tol=1e-9)
    assert float(mp.lp.c @ x) == pytest.approx(b.objective, abs=1e-8)


@pytest.mark.parametrize("seed", range(20))
def test_zero_smoothing_matches_unbounded(seed):
    rng = np.random.default_rng(100 + seed)
    cols = random_cols(rng, T=int(rng.integers(1, 6)))
    w_old = rng.normal(size=len(cols) - 1)
    s = solve_master(build_smooth_master(cols, w_old, 0.0))
    u = solve_master(build_unbounded_master(cols))
    assert s.objective == pytest.approx(u.objective, abs=1e-8)


@pytest.mark.parametrize("seed", range(10))
def test_large_smoothing_freezes_old_weights(seed):
    rng = np.random.default_rng(200 + seed)
    cols = random_cols(rng, T=int(rng.integers(2, 6)))
    Delta = cols.delta_matrix()
    C = 1.01 * float(np.abs(Delta[:-1]).sum(axis=1).max()) + 1e-3
    w_old = rng.normal(size=len(cols) - 1)
    sol = solve_master(build_smooth_master(cols, w_old, C))
    np.testing.assert_allclose(sol.w[:-1], w_old, atol=1e-6, rtol=0)


@pytest.mark.parametrize("seed", range(10))
def test_more_columns_never_hurt(seed):
    rng = np.random.default_rng(300 + seed)
    cols = random_cols(rng, T=6)
    objs = [solve_master(build_bounded_master(cols, n_cols=t)).objective for t in range(1, 7)]
    assert all(b <= a + 1e-9 for a, b in zip(objs, objs[1:]))


def test_pair_order_is_row_major():
    cols = DistanceColumns(np.zeros((5, 1)), [0, 3], [1, 2, 4])
    assert cols.pair_pos.tolist() == [0, 0, 0, 3, 3, 3]
    assert cols.pair_neg.tolist() == [1, 2, 4, 1, 2, 4]


def test_delta_is_distance_difference():
    rng = np.random.default_rng(0)
    cols = random_cols(rng, T=2)
    D = np.vstack(cols.D)
    assert np.all(D >= 0)
    np.testing.assert_array_equal(cols.delta(1), D[1, cols.pair_pos] - D[1, cols.pair_neg])


def test_pair_cap():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 2))
    cols = DistanceColumns(X, np.arange(10), np.arange(10, 20), pair_cap=30, seed=1)
    assert cols.n_pairs == 30
    assert len(set(zip(cols.pair_pos, cols.pair_neg))) == 30


def test_errors():
    cols = cols_from_delta([[1.0], [2.0]])
    with pytest.raises(ValueError):
        build_bounded_master(DistanceColumns(np.zeros((2, 1)), [0], [1]))
    with pytest.raises(ValueError):
        solve_master(build_smooth_master(cols, [0.1, 0.2], 1.0))
    mp = build_bounded_master(cols)
    mp.n_cols = 1
    _ = mp.lp
    mp.n_cols = 2
    with pytest.raises(ValueError, match="index maps"):
        solve_master(mp)
    with pytest.raises(ValueError):
        solve_master(build_bounded_master(cols), route="nope")


def test_master_error_is_runtime_error():
    assert issubclass(MasterError, RuntimeError)


def test_record_solves():
    cols = cols_from_delta([[1.0, -1.0]])
    with record_solves() as log:
        solve_master(build_bounded_master(cols))
        solve_master(build_unbounded_master(cols))
    solve_master(build_bounded_master(cols))
    assert [s.extra["kind"] for s in log] == ["bounded", "unbounded"]
