"""Neighbor library, analogue forecasts, and in-sample panels."""
import numpy as np
import pytest

import ensembed as eb
from ensembed.errors import EmptyLibrary, MissingFuture, ValidationError

from conftest import make_series


def one_dim_library():
    return eb.NeighborLibrary(
        points=np.array([[0.0], [10.0], [4.0]]),
        times=np.array([0, 1, 2], dtype=np.int64),
        futures=np.array([[5.0], [6.0], [7.0]]),
        horizons=(1,),
        coords=((0, 0),),
    )


class TestKnnQuery:
    def test_nearest(self):
        got = eb.knn_query(one_dim_library(), eb.DelayVector(np.array([3.0]), ((0, 0),)),
                           eb.AnalogueConfig(neighbor_count=1))
        assert got == [(2, 1.0)]

    def test_two_nearest(self):
        got = eb.knn_query(one_dim_library(), eb.DelayVector(np.array([3.0]), ((0, 0),)),
                           eb.AnalogueConfig(neighbor_count=2))
        assert got == [(2, 1.0), (0, 3.0)]

    def test_exclusion(self):
        got = eb.knn_query(one_dim_library(), eb.DelayVector(np.array([3.0]), ((0, 0),)),
                           eb.AnalogueConfig(neighbor_count=1, exclusion=frozenset({2})))
        assert got == [(0, 3.0)]

    def test_empty_after_exclusion(self):
        with pytest.raises(EmptyLibrary):
            eb.knn_query(one_dim_library(), eb.DelayVector(np.array([3.0]), ((0, 0),)),
                         eb.AnalogueConfig(exclusion=frozenset({0, 1, 2})))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            eb.knn_query(one_dim_library(), eb.DelayVector(np.array([1.0, 2.0]), ((0, 0), (1, 0))),
                         eb.AnalogueConfig())


class TestAnalogueForecast:
    def test_single_neighbor_returns_its_future(self):
        lib = eb.NeighborLibrary(
            points=np.array([[1.0]]), times=np.array([5], dtype=np.int64),
            futures=np.array([[42.0]]), horizons=(1,), coords=((0, 0),),
        )
        q = eb.DelayVector(np.array([0.5]), ((0, 0),))
        assert eb.analogue_forecast(lib, q, 1, eb.AnalogueConfig()) == 42.0

    def test_symmetric_neighbors_average(self):
        lib = eb.NeighborLibrary(
            points=np.array([[-1.0], [1.0]]), times=np.array([0, 1], dtype=np.int64),
            futures=np.array([[2.0], [4.0]]), horizons=(1,), coords=((0, 0),),
        )
        q = eb.DelayVector(np.array([0.0]), ((0, 0),))
        for mode in ("inverse-square", "literal-square", "uniform"):
            got = eb.analogue_forecast(lib, q, 1, eb.AnalogueConfig(weighting=mode))
            assert got == pytest.approx(3.0, abs=1e-15)

    def test_inverse_square_hand_value(self):
        lib = eb.NeighborLibrary(
            points=np.array([[0.0], [3.0]]), times=np.array([0, 1], dtype=np.int64),
            futures=np.array([[0.0], [10.0]]), horizons=(1,), coords=((0, 0),),
        )
        q = eb.DelayVector(np.array([1.0]), ((0, 0),))
        got = eb.analogue_forecast(lib, q, 1, eb.AnalogueConfig(neighbor_count=2))
        assert got == pytest.approx(2.0, abs=1e-15)

    def test_missing_horizon(self):
        with pytest.raises(MissingFuture):
            eb.analogue_forecast(one_dim_library(),
                                 eb.DelayVector(np.array([3.0]), ((0, 0),)), 2,
                                 eb.AnalogueConfig())

    def test_convex_combination_bounds(self):
        rng = np.random.default_rng(0)
        lib = eb.NeighborLibrary(
            points=rng.standard_normal((40, 3)),
            times=np.arange(40, dtype=np.int64),
            futures=rng.standard_normal((40, 2)),
            horizons=(1, 2),
            coords=((0, 0), (1, 0), (2, 0)),
        )
        for mode in ("inverse-square", "literal-square", "uniform"):
            cfg = eb.AnalogueConfig(neighbor_count=5, weighting=mode)
            for _ in range(20):
                q = eb.DelayVector(rng.standard_normal(3), lib.coords)
                got = eb.analogue_forecast(lib, q, 1, cfg)
                order = np.argsort(((lib.points - q.components) ** 2).sum(axis=1), kind="stable")
                futs = lib.futures[order[:5], 0]
                assert futs.min() - 1e-12 <= got <= futs.max() + 1e-12


class TestInSamplePanel:
    def test_periodic_series_exact(self):
        y = np.tile([0.0, 1.0], 20)
        s = make_series(y)
        code = eb.EmbeddingCode(np.array([1, 1], dtype=np.uint8), 1, 2)
        panel = eb.in_sample_panel(s, code, eb.FilterSpec.standardize(s), (1, 2), eb.AnalogueConfig())
        scored = panel.scored[:, 0]
        t = np.flatnonzero(scored)
        assert np.abs(panel.values[t, 0] - y[t + 1]).max() == 0.0

    def test_constant_series(self):
        s = make_series(np.full(30, 4.2))
        code = eb.EmbeddingCode(np.array([1], dtype=np.uint8), 1, 1)
        panel = eb.in_sample_panel(s, code, eb.FilterSpec.standardize(s), (1, 2, 3), eb.AnalogueConfig())
        vals = panel.values[panel.scored.any(axis=1)]
        assert np.allclose(vals[np.isfinite(vals)], 4.2)

    def test_noise_variable_scores_worse_than_target(self):
        names, values = eb.generate_dataset(
            eb.DatasetSpec(kind="lorenz63", length=240, seed=8, n_system_vars=2, n_random_walks=1)
        )
        s = eb.TimeSeriesSet(values, names, 0)
        filt = eb.FilterSpec.standardize(s)
        cfg = eb.AnalogueConfig()
        horizons = (1, 2)
        noise_only = eb.EmbeddingCode.from_coords([(2, 0), (2, 1)], 3, 2)
        target_code = eb.EmbeddingCode.from_coords([(0, 0), (0, 1)], 3, 2)
        y = s.target_values

        def mse(panel):
            t = np.flatnonzero(panel.scored[:, 0])
            return np.mean((panel.values[t, 0] - y[t + 1]) ** 2)

        assert mse(eb.in_sample_panel(s, noise_only, filt, horizons, cfg)) > mse(
            eb.in_sample_panel(s, target_code, filt, horizons, cfg)
        )

    def test_leave_one_out_excludes_query_time(self):
        # a huge outlier at one time: with LOO its own forecast cannot use it
        y = np.sin(np.arange(60) * 0.7)
        s = make_series(y)
        code = eb.EmbeddingCode(np.array([1], dtype=np.uint8), 1, 1)
        lib = eb.build_library(eb.FilterSpec.standardize(s).apply(s), code, (1,))
        q = eb.DelayVector(np.array([lib.points[10, 0]]), ((0, 0),))
        neighbors = eb.knn_query(lib, q, eb.AnalogueConfig(neighbor_count=3,
                                                           exclusion=frozenset({10})))
        assert all(t != 10 for t, _ in neighbors)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        names, values = eb.generate_dataset(
            eb.DatasetSpec(kind="lorenz63", length=150, seed=3, n_system_vars=3)
        )
        s = eb.TimeSeriesSet(values, names, 0)
        filt = eb.FilterSpec.standardize(s)
        fz = filt.apply(s)
        code = eb.EmbeddingCode.from_coords([(0, 0), (1, 1), (2, 0)], 3, 2)
        lib = eb.build_library(fz, code, (1, 2))
        perm = rng.permutation(lib.points.shape[1])
        out = eb.panel_forecasts(lib.points, lib.futures, lib.times, lib.points, lib.times,
                                 k=4, theiler=0, mode=0)
        out_p = eb.panel_forecasts(lib.points[:, perm], lib.futures, lib.times,
                                   lib.points[:, perm], lib.times, k=4, theiler=0, mode=0)
        assert np.nanmax(np.abs(out - out_p)) < 1e-12

    def test_restricted_origins_match_full_panel(self, small_l63_series):
        s = small_l63_series
        code = eb.EmbeddingCode.from_coords([(0, 0), (1, 0), (2, 1)], 3, 3)
        filt = eb.FilterSpec.fit(s, -0.4)
        cfg = eb.AnalogueConfig()
        full = eb.in_sample_panel(s, code, filt, (1, 2, 3), cfg)
        sub = np.array([50, 51, 52, 90, 130], dtype=np.int64)
        part = eb.in_sample_panel(s, code, filt, (1, 2, 3), cfg, origins=sub)
        assert np.array_equal(full.values[sub], part.values[sub], equal_nan=True)

    def test_weights_sum_to_one_through_forecast(self):
        # all futures equal c -> any convex weighting must return exactly c
        rng = np.random.default_rng(5)
        lib = rng.standard_normal((30, 2))
        fut = np.full((30, 1), 3.25)
        tlib = np.arange(30, dtype=np.int64)
        out = eb.panel_forecasts(lib, fut, tlib, rng.standard_normal((10, 2)),
                                 np.full(10, -9, dtype=np.int64), k=7, mode=0)
        assert np.abs(out - 3.25).max() < 1e-12


class TestTestPanel:
    def test_queries_only_training_library(self, small_l63_series):
        s = small_l63_series
        code = eb.EmbeddingCode.from_coords([(0, 0), (1, 0)], 3, 2)
        filt = eb.FilterSpec.standardize(s)
        panel = eb.test_panel(s, code, filt, (1, 2), eb.AnalogueConfig())
        # forecasts exist only at test origins
        got = np.flatnonzero(np.isfinite(panel.values[:, 0]))
        assert set(got) <= set(s.test_indices.tolist())
        assert got.size > 0
