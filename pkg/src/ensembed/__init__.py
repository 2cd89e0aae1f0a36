"""Ensemble forecasting of nonlinear time series via diverse delay embeddings.

Two steps: evolve pools of near-optimal embedding codes on split training
data (keeping only mutually Hamming-distant survivors), then combine the
per-horizon best members with the in-sample-optimal averaging count.
"""

from ._kernels import NUMBA_ENABLED, panel_forecasts
from .baselines import BaselineConfig, BaselineResult, mve_forecast, rde_forecast, sbe_forecast
from .core import (
    DelayVector,
    EmbeddingCode,
    FilteredSeries,
    FilterSpec,
    ForecastPanel,
    TimeSeriesSet,
    apply_filter,
    build_delay_vector,
    hamming,
    restore_forecast,
)
from .dynamics import (
    DatasetSpec,
    SimSpec,
    add_observational_noise,
    generate_dataset,
    integrate_ks,
    integrate_ode,
    random_walk,
)
from .ensemble import (
    EmbeddingPool,
    EmbeddingProfile,
    EnsembleSelection,
    build_pool,
    build_selection,
    combine_recursive,
    forecast_test,
    forecast_test_panel,
    member_panels,
    profile,
    rank_members,
    select_k_hat,
)
from .evolve import (
    EsConfig,
    FitnessEvaluator,
    HallOfFame,
    TrainSplit,
    es_step,
    fitness,
    make_splits,
    run_es,
    select_diverse,
)
from .predictor import (
    AnalogueConfig,
    NeighborLibrary,
    analogue_forecast,
    build_library,
    in_sample_panel,
    knn_query,
    test_panel,
)

__version__ = "0.1.0"

__all__ = [
    "AnalogueConfig",
    "BaselineConfig",
    "BaselineResult",
    "DatasetSpec",
    "DelayVector",
    "EmbeddingCode",
    "EmbeddingPool",
    "EmbeddingProfile",
    "EnsembleSelection",
    "EsConfig",
    "FilteredSeries",
    "FilterSpec",
    "FitnessEvaluator",
    "ForecastPanel",
    "HallOfFame",
    "NeighborLibrary",
    "NUMBA_ENABLED",
    "SimSpec",
    "TimeSeriesSet",
    "TrainSplit",
    "add_observational_noise",
    "analogue_forecast",
    "apply_filter",
    "build_delay_vector",
    "build_library",
    "build_pool",
    "build_selection",
    "combine_recursive",
    "es_step",
    "fitness",
    "forecast_test",
    "forecast_test_panel",
    "generate_dataset",
    "hamming",
    "in_sample_panel",
    "integrate_ks",
    "integrate_ode",
    "knn_query",
    "make_splits",
    "member_panels",
    "mve_forecast",
    "panel_forecasts",
    "profile",
    "random_walk",
    "rank_members",
    "rde_forecast",
    "restore_forecast",
    "run_es",
    "sbe_forecast",
    "select_diverse",
    "select_k_hat",
    "test_panel",
]
