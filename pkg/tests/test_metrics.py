import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rffrc.errors import InvalidArgument
from rffrc.metrics import (GridRow, GridSearchError, GridSpec, Hyper, fit_and_score, grid_search, nrmse,
                           normalized_step_error, sweep_single_hyperparameter, valid_prediction_time)
from rffrc.timeseries import SplitSpec, TimeSeries


def test_nrmse_example():
    truth = np.array([0.0, 1, 2, 3])
    r = nrmse(truth, truth + 1)
    assert r.per_channel_nrmse[0] == pytest.approx(1 / np.std(truth))
    assert r.mean_nrmse == pytest.approx(0.8944271909999159)


def test_nrmse_range_normalization():
    truth = np.array([0.0, 1, 2, 3])
    assert nrmse(truth, truth + 1, "range").mean_nrmse == pytest.approx(1 / 3)


def test_nrmse_perfect_and_errors():
    x = np.random.default_rng(0).normal(size=(20, 2))
    assert nrmse(x, x).mean_nrmse == 0
    with pytest.raises(InvalidArgument):
        nrmse(np.ones((5, 1)), np.zeros((5, 1)))
    with pytest.raises(InvalidArgument):
        nrmse(x, x[:3])
    with pytest.raises(InvalidArgument):
        nrmse(x, x, "max")


@given(st.floats(0.01, 100), st.floats(-50, 50))
def test_nrmse_affine_invariant(a, b):
    g = np.random.default_rng(1)
    t, p = g.normal(size=(30, 2)), g.normal(size=(30, 2))
    assert nrmse(a * t + b, a * p + b).mean_nrmse == pytest.approx(nrmse(t, p).mean_nrmse, rel=1e-7)


def test_valid_time_ramp():
    truth = np.sin(np.linspace(0, 20, 100))
    scale = np.array([1.0])
    pred = truth + np.linspace(0, 0.8, 100)  # error crosses 0.4 between samples 49 and 50
    steps, lt = valid_prediction_time(truth, pred, 0.4, steps_per_lyapunov=10, scale=scale)
    assert steps == 51 and lt == 5.1


def test_valid_time_never_crossed():
    truth = np.random.default_rng(0).normal(size=(50, 3))
    assert valid_prediction_time(truth, truth)[0] == 50


def test_valid_time_first_step():
    truth = np.random.default_rng(0).normal(size=(50, 3))
    assert valid_prediction_time(truth, truth + 100)[0] == 1


def test_valid_time_rejects_theta():
    with pytest.raises(InvalidArgument):
        valid_prediction_time(np.ones(3), np.ones(3), 0)


def test_step_error_zero_scale():
    e = normalized_step_error(np.ones((1, 2)), np.ones((1, 2)) + [[0, 1]])
    assert e[0] == math.inf


def test_fit_and_score(lorenz):
    model, sc, preds = fit_and_score(lorenz, SplitSpec(), Hyper(5, 300, 1e-6, 2.0), 1)
    assert set(sc) == {"train", "val", "test"}
    assert preds["test"][0].shape == (800, 3)
    assert max(sc["test"]) < 1e-2


def test_grid_candidates_canonical():
    g = GridSpec((5, 3), (200,), (1e-6, 1e-8), (2.0, 1.0))
    c = g.candidates()
    assert len(c) == 8 and c[0] == Hyper(3, 200, 1e-8, 1.0)
    with pytest.raises(InvalidArgument):
        GridSpec((), (1,), (1.0,), (1.0,))
    with pytest.raises(InvalidArgument):
        GridSpec((1,), (1,), (0.0,), (1.0,))


def test_tiebreak_order():
    rows = [GridRow(5, 200, 1e-6, 2.0, 0, val_nrmse=0.1), GridRow(3, 200, 1e-6, 2.0, 0, val_nrmse=0.1),
            GridRow(3, 200, 1e-4, 2.0, 0, val_nrmse=0.1), GridRow(3, 200, 1e-4, 1.0, 0, val_nrmse=0.1),
            GridRow(3, 100, 1e-8, 9.0, 0, val_nrmse=0.2)]
    rows.sort(key=GridRow.sort_key)
    assert (rows[0].k, rows[0].lambda_reg, rows[0].sigma_rff) == (3, 1e-4, 1.0)
    assert rows[-1].m == 100


def test_grid_search_small(lorenz):
    grid = GridSpec((2, 4), (200,), (1e-6,), (2.0,), seed=1)
    best, rows = grid_search(lorenz, SplitSpec(), grid)
    assert len(rows) == 2 and best is rows[0]
    assert rows[0].val_nrmse <= rows[1].val_nrmse
    # order of the lists does not matter
    best2, _ = grid_search(lorenz, SplitSpec(), GridSpec((4, 2), (200,), (1e-6,), (2.0,), seed=1))
    assert best2.hyper == best.hyper and best2.val_nrmse == best.val_nrmse


def test_grid_search_all_fail():
    s = TimeSeries(np.sin(np.arange(60.0)))
    with pytest.raises(GridSearchError):
        grid_search(s, SplitSpec(), GridSpec((40,), (10,), (1e-6,), (1.0,)))


def test_grid_search_threads_match(lorenz, monkeypatch):
    grid = GridSpec((2, 3), (100,), (1e-6, 1e-3), (2.0,), seed=1)
    _, serial = grid_search(lorenz, SplitSpec(), grid, workers=1)
    _, threaded = grid_search(lorenz, SplitSpec(), grid, workers=2)
    assert [(r.hyper, r.val_nrmse) for r in serial] == [(r.hyper, r.val_nrmse) for r in threaded]


def test_sweep_shapes(lorenz):
    curve = sweep_single_hyperparameter(lorenz, SplitSpec(), Hyper(3, 100, 1e-6, 2.0), "m", [50, 100], seeds=(1, 2))
    assert [p.value for p in curve] == [50, 100]
    assert all(p.q25 <= p.median_nrmse <= p.q75 and len(p.per_seed) == 2 for p in curve)
    with pytest.raises(InvalidArgument):
        sweep_single_hyperparameter(lorenz, SplitSpec(), Hyper(3, 100, 1e-6, 2.0), "bogus", [1])


def test_sweep_point_matches_independent_fit(lorenz):
    curve = sweep_single_hyperparameter(lorenz, SplitSpec(), Hyper(3, 100, 1e-6, 2.0), "sigma_rff", [1.0], seeds=(2,))
    _, sc, _ = fit_and_score(lorenz, SplitSpec(), Hyper(3, 100, 1e-6, 1.0), 2)
    assert curve[0].per_seed[0] == float(np.mean(sc["test"]))


def test_grid_best_is_table_minimum(lorenz):
    best, rows = grid_search(lorenz, SplitSpec(), GridSpec((2, 3), (100,), (1e-6, 1e-3), (1.0, 2.0), seed=1))
    assert best.val_nrmse == min(r.val_nrmse for r in rows)


def test_grid_stability_filter(lorenz):
    best, rows = grid_search(lorenz, SplitSpec(), GridSpec((3,), (200,), (1e-6,), (2.0,), seed=1), stability_steps=50)
    assert best.bounded_steps == 50 and best.stable
