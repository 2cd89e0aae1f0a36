"""Pool building, ranking, recursive combination, k selection, profiles."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ensembed as eb
from ensembed.core import ForecastPanel
from ensembed.errors import EmptyGrid, PoolUnderfullWarning


def panel_from(values, horizons=(1,), scored=None):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if scored is None:
        scored = np.isfinite(values)
    return ForecastPanel(values=values, horizons=tuple(horizons), scored=scored)


class TestCombineRecursive:
    def test_hand_example(self):
        f = np.array([1.0, 2.0, 3.0])
        assert eb.combine_recursive(f, 1) == 1.0
        assert eb.combine_recursive(f, 2) == 1.5
        assert eb.combine_recursive(f, 3) == 2.0

    def test_constant_members(self):
        f = np.full(7, 4.25)
        for k in range(1, 8):
            assert eb.combine_recursive(f, k) == 4.25

    def test_matches_direct_mean(self):
        rng = np.random.default_rng(0)
        f = rng.standard_normal((10, 25))
        for k in range(1, 11):
            direct = f[:k].mean(axis=0)
            assert np.abs(eb.combine_recursive(f, k) - direct).max() < 1e-12

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_recursion_equals_mean_property(self, seed):
        rng = np.random.default_rng(seed)
        f = rng.standard_normal(rng.integers(1, 30))
        k = int(rng.integers(1, f.size + 1))
        assert eb.combine_recursive(f, k) == pytest.approx(f[:k].mean(), rel=1e-12, abs=1e-12)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            eb.combine_recursive(np.array([1.0]), 2)


class TestRankMembers:
    def test_orders_by_error(self):
        truth = np.array([0.0, 0.0, 0.0, 99.0])
        y = truth  # truth series: horizon-1 futures of origins 0..2
        a = panel_from([np.nan, 0.5, 0.5, np.nan])  # worse
        b = panel_from([np.nan, 0.2, 0.2, np.nan])  # better
        order = eb.rank_members([a, b], np.array([0.0, 0, 0, 0, 0.0]), 1)
        assert order.tolist() == [1, 0]

    def test_stable_ties_keep_member_id_order(self):
        vals = np.array([np.nan, 0.3, 0.3, np.nan])
        order = eb.rank_members([panel_from(vals), panel_from(vals.copy())],
                                np.zeros(5), 1)
        assert order.tolist() == [0, 1]

    def test_grid_intersection(self):
        # member a valid at origins {1, 2}, member b only at {2}
        a = panel_from([np.nan, 1.0, 1.0, np.nan])
        b = panel_from([np.nan, np.nan, 0.0, np.nan])
        y = np.array([0.0, 0, 0, 0.2, 0])
        # only origin 2 is shared; there b (error 0.2) beats a (error 0.8),
        # even though a would win on its own wider grid
        order = eb.rank_members([a, b], y, 1)
        assert order.tolist() == [1, 0]

    def test_empty_grid_raises(self):
        a = panel_from([np.nan, 1.0, np.nan])
        b = panel_from([np.nan, np.nan, 1.0])
        with pytest.raises(EmptyGrid):
            eb.rank_members([a, b], np.zeros(4), 1)

    def test_spreadsheet_oracle(self):
        # three members, four origins; mean squared errors computed by hand
        y = np.array([0.0, 0, 0, 0, 1.0, 2.0, 3.0, 4.0])
        origins = np.array([0, 1, 2, 3])
        truth = y[origins + 4]
        vals = {
            0: truth + np.array([0.5, -0.5, 0.5, -0.5]),   # mse 0.25
            1: truth + np.array([0.1, 0.1, 0.1, 0.1]),     # mse 0.01
            2: truth + np.array([1.0, 0.0, 0.0, 0.0]),     # mse 0.25, ties with 0
        }
        panels = []
        for m in range(3):
            v = np.full((8, 1), np.nan)
            v[origins, 0] = vals[m]
            panels.append(ForecastPanel(values=v, horizons=(4,), scored=np.isfinite(v)))
        order = eb.rank_members(panels, y, 4)
        assert order.tolist() == [1, 0, 2]


class TestSelectKHat:
    def test_single_member(self):
        k, err = eb.select_k_hat(np.array([[1.0, 2.0]]), np.array([1.0, 2.0]))
        assert k == 1 and err.shape == (1,)

    def test_perfect_first_member_keeps_k1(self):
        truth = np.array([1.0, 2.0, 3.0])
        ranked = np.stack([truth, truth + 5.0])
        k, err = eb.select_k_hat(ranked, truth)
        assert k == 1
        assert err[0] == 0.0 and err[1] > 0.0

    def test_anticorrelated_trio_prefers_k3(self):
        truth = np.zeros(6)
        a = np.array([1.0, -1, 1, -1, 1, -1]) * 0.9
        b = -a * 0.8
        c = np.array([0.1, -0.1, 0.1, -0.1, 0.1, -0.1])
        ranked = np.stack([c, a, b])  # c alone already good; a+b cancel
        k, err = eb.select_k_hat(ranked, truth)
        # hand oracle: Err(1)=6*0.01=0.06, Err(2): mean(c,a) errors, Err(3) smaller
        direct = [np.sum((np.mean(ranked[:kk], axis=0) - truth) ** 2) for kk in (1, 2, 3)]
        assert np.allclose(err, direct)
        assert k == int(np.argmin(direct)) + 1 == 3

    def test_tie_takes_smallest_k(self):
        truth = np.zeros(2)
        ranked = np.stack([np.zeros(2), np.zeros(2)])
        k, err = eb.select_k_hat(ranked, truth)
        assert k == 1 and err[0] == err[1] == 0.0


class TestBuildPool:
    def test_single_split_single_code(self, small_l63_series):
        s = small_l63_series
        es = eb.EsConfig(mu=4, lambda_=8, generations=2, population_size=10, rng_seed=0)
        pool = eb.build_pool(s, 2, 1, 1, 0, [eb.FilterSpec.standardize(s)], es,
                             (1, 2), eb.AnalogueConfig())
        assert pool.size == 1 and len(pool.codes) == 1
        assert pool.members[0].hof_rank == 0  # the best Hall of Fame entry

    def test_provenance_covers_splits_and_filters(self, small_l63_series):
        s = small_l63_series
        es = eb.EsConfig(mu=4, lambda_=8, generations=2, population_size=10, rng_seed=0)
        filters = [eb.FilterSpec.fit(s, 0.0), eb.FilterSpec.fit(s, -1.0)]
        pool = eb.build_pool(s, 2, 2, 1, 0, filters, es, (1, 2), eb.AnalogueConfig())
        assert pool.size == 4  # K*M*L = 2*1*2? here K=2, M=1 -> 2 codes x 2 filters
        assert sorted({m.split_id for m in pool.members}) == [1, 2]
        assert sorted({m.rho for m in pool.members}) == [-1.0, 0.0]

    def test_theta_enforced_across_splits(self, small_pipeline):
        _, pool, _, _, _ = small_pipeline
        for i, a in enumerate(pool.codes):
            for b in pool.codes[i + 1:]:
                assert eb.hamming(a, b) >= 2

    def test_underfull_pool_warns(self, tiny_lorenz):
        es = eb.EsConfig(mu=4, lambda_=8, generations=2, population_size=10, rng_seed=0)
        with pytest.warns(PoolUnderfullWarning):
            pool = eb.build_pool(tiny_lorenz, 2, 4, 4, 2,
                                 [eb.FilterSpec.standardize(tiny_lorenz)], es,
                                 (1, 2), eb.AnalogueConfig())
        assert pool.underfull
        assert len(pool.codes) < 8

    def test_deterministic_given_seeds(self, small_l63_series):
        s = small_l63_series
        es = eb.EsConfig(mu=4, lambda_=8, generations=2, population_size=10, rng_seed=3)
        kw = dict(filters=[eb.FilterSpec.standardize(s)], es_cfg=es,
                  horizons=(1, 2), cfg=eb.AnalogueConfig())
        a = eb.build_pool(s, 3, 2, 1, 1, **kw)
        b = eb.build_pool(s, 3, 2, 1, 1, **kw)
        assert [c.key() for c in a.codes] == [c.key() for c in b.codes]


class TestSelection:
    def test_err_at_k_hat_beats_single_best(self, small_pipeline):
        _, _, _, selection, _ = small_pipeline
        for i in range(len(selection.horizons)):
            k = selection.k_hat[i]
            assert selection.err_curves[i][k - 1] <= selection.err_curves[i][0]

    def test_two_path_test_forecast_bit_equal(self, small_pipeline):
        series, pool, _, selection, combined = small_pipeline
        p = 3
        col = selection.horizons.index(p)
        ids = selection.top_members(p)
        cfg = eb.AnalogueConfig()
        stack = np.stack([
            eb.test_panel(series, pool.members[int(m)].code, pool.members[int(m)].filt,
                          selection.horizons, cfg).values[:, col]
            for m in ids
        ])
        ok = np.isfinite(stack).all(axis=0)
        expected = eb.combine_recursive(stack[:, ok], len(ids))
        assert np.array_equal(expected, combined.values[ok, col])

    def test_forecast_test_single_origin(self, small_pipeline):
        series, pool, _, selection, combined = small_pipeline
        t = int(series.test_indices[5])
        got = eb.forecast_test(pool, selection, series, t, 2, eb.AnalogueConfig())
        assert got == combined.value(t, 2)

    def test_k_hat_members_only(self, small_pipeline):
        series, pool, _, selection, _ = small_pipeline
        for i, p in enumerate(selection.horizons):
            assert selection.top_members(p).size == selection.k_hat[i]


class TestProfile:
    def _pool_of(self, series, codes, rhos):
        members = [
            eb.ensemble.PoolMember(code=c, filt=eb.FilterSpec.fit(series, r),
                                   split_id=1, hof_rank=i)
            for i, (c, r) in enumerate(zip(codes, rhos))
        ]
        return eb.EmbeddingPool(members=members, codes=list(codes),
                                expected_codes=len(codes), es_traces=[])

    def _selection_of(self, n_members, k):
        return eb.EnsembleSelection(
            horizons=(1,),
            ranking=np.arange(n_members, dtype=np.int64)[None, :],
            k_hat=np.array([k], dtype=np.int64),
            err_curves=np.zeros((1, n_members)),
        )

    def test_single_member_target_only(self, small_l63_series):
        s = small_l63_series
        code = eb.EmbeddingCode.from_coords([(0, 0)], 3, 2)
        pool = self._pool_of(s, [code], [0.0])
        prof = eb.profile(pool, self._selection_of(1, 1), s)
        assert prof.proportions[:, 0].tolist() == [1.0, 0.0, 0.0]
        assert prof.mean_dimension[0] == 1.0
        assert prof.mean_rho[0] == 0.0

    def test_counting_two_members(self, small_l63_series):
        s = small_l63_series
        c1 = eb.EmbeddingCode.from_coords([(0, 0)], 3, 2)
        c2 = eb.EmbeddingCode.from_coords([(0, 0), (1, 1)], 3, 2)
        pool = self._pool_of(s, [c1, c2], [0.0, -1.0])
        prof = eb.profile(pool, self._selection_of(2, 2), s)
        assert prof.proportions[:, 0] == pytest.approx([2 / 3, 1 / 3, 0.0])
        assert prof.mean_dimension[0] == 1.5
        assert prof.mean_rho[0] == -0.5

    def test_proportions_sum_to_one(self, small_pipeline):
        series, pool, _, selection, _ = small_pipeline
        prof = eb.profile(pool, selection, series)
        assert np.abs(prof.proportions.sum(axis=0) - 1.0).max() < 1e-12

    def test_multi_lag_variable_counts_once(self, small_l63_series):
        s = small_l63_series
        code = eb.EmbeddingCode.from_coords([(0, 0), (0, 1), (1, 0)], 3, 2)
        pool = self._pool_of(s, [code], [0.0])
        prof = eb.profile(pool, self._selection_of(1, 1), s)
        assert prof.proportions[:, 0] == pytest.approx([0.5, 0.5, 0.0])
