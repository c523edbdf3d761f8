"""Random Fourier feature forecasting of chaotic time series."""

from .errors import (ChecksumError, ClosedLoopInfeasible, ConfigError, DivergenceError, EmbeddingError,
                     IllConditionedError, InvalidArgument, ModelFormatError, NumericalError, RFFRCError,
                     VersionError)
from .features import FeatureMap, gaussian_kernel, sample_feature_map, transform
from .forecaster import (ForecastModel, RolloutResult, Scaler, one_step_predictions, predict_batch,
                         predict_one_step, rollout, train)
from .metrics import GridSpec, Hyper, grid_search, nrmse, sweep_single_hyperparameter, valid_prediction_time
from .model_io import load_model, save_model
from .ridge import RidgeModel
from .systems import (KSParams, Lorenz63Params, MackeyGlassParams, NoiseSpec, add_awgn, integrate_ks,
                      integrate_lorenz, integrate_mackey_glass, measure_snr)
from .timeseries import DelayConfig, SplitSpec, TimeSeries, chronological_split, delay_embed

__version__ = "0.1.0"
