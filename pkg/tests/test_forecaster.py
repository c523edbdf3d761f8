import numpy as np
import pytest

from rffrc.errors import ClosedLoopInfeasible, InvalidArgument
from rffrc.forecaster import (Scaler, _window_to_vector, bounded_rollout_steps, one_step_predictions, predict_batch,
                              predict_one_step, rollout, train)
from rffrc.metrics import nrmse
from rffrc.timeseries import DelayConfig, TimeSeries, delay_embed


def test_scaler_kinds():
    x = np.array([[0.0, 5.0], [2.0, 5.0], [4.0, 5.0]])
    s = Scaler.fit(x, "minmax")
    np.testing.assert_array_equal(s.offset, [0, 5])
    np.testing.assert_array_equal(s.scale, [4, 1])  # constant channel passes through
    s = Scaler.fit(x, "standard")
    assert s.offset[0] == 2.0
    s = Scaler.fit(x, "none")
    np.testing.assert_array_equal(s.scale, [1, 1])
    with pytest.raises(InvalidArgument):
        Scaler.fit(x, "bogus")


def test_one_step_accuracy(lorenz, lorenz_model):
    pred, truth = one_step_predictions(lorenz_model, lorenz.segment(2400, 3200))
    assert max(nrmse(truth, pred).per_channel_nrmse) < 5e-3


def test_train_records_metadata(lorenz_model):
    m = lorenz_model
    assert m.k == 5 and m.observed_channels == (0, 1, 2) and m.target_names == ("x", "y", "z")
    assert m.feature_map.input_dim == 15 and m.ridge.m == 400
    assert len(m.train_nrmse) == 3 and all(v < 1e-2 for v in m.train_nrmse)


def test_rowwise_matches_single(lorenz, lorenz_model):
    X = delay_embed(lorenz.segment(100, 130), DelayConfig(5))
    batch = predict_batch(lorenz_model, X)
    for r in range(X.shape[0]):
        np.testing.assert_array_equal(batch[r], predict_one_step(lorenz_model, X[r]))
    fast = predict_batch(lorenz_model, X, rowwise=False)
    np.testing.assert_allclose(fast, batch, rtol=0, atol=1e-9)


def test_rollout_first_step_is_one_step(lorenz, lorenz_model):
    win = lorenz.data[2395:2400]
    res = rollout(lorenz_model, win, 3)
    np.testing.assert_array_equal(res.predictions[0], predict_one_step(lorenz_model, _window_to_vector(win)))
    assert res.per_step_error is None and res.valid_steps is None


def test_window_to_vector_order():
    win = np.array([[1.0, 10], [2, 20], [3, 30]])  # oldest first
    np.testing.assert_array_equal(_window_to_vector(win), [3, 2, 1, 30, 20, 10])


def test_teacher_forced_rollout_equals_one_step(lorenz, lorenz_model):
    truth = lorenz.data[2400:2450]
    res = rollout(lorenz_model, lorenz.data[2395:2400], 50, truth, teacher_forced=True)
    pred, _ = one_step_predictions(lorenz_model, lorenz.segment(2395, 2450))
    np.testing.assert_array_equal(res.predictions, pred)


def test_rollout_horizon_zero(lorenz_model, lorenz):
    res = rollout(lorenz_model, lorenz.data[:5], 0)
    assert res.predictions.shape == (0, 3) and res.horizon == 0


def test_rollout_valid_time(lorenz, lorenz_model):
    truth = lorenz.data[2400:2700]
    res = rollout(lorenz_model, lorenz.data[2395:2400], 300, truth)
    assert res.valid_steps is not None and 30 < res.valid_steps <= 300
    assert res.per_step_error.shape == (300, 3)


def test_rollout_rejects(lorenz, lorenz_model):
    with pytest.raises(InvalidArgument):
        rollout(lorenz_model, lorenz.data[:4], 3)
    with pytest.raises(InvalidArgument):
        rollout(lorenz_model, lorenz.data[:5], -1)
    with pytest.raises(InvalidArgument):
        rollout(lorenz_model, lorenz.data[:5], 10, lorenz.data[:5])
    with pytest.raises(InvalidArgument):
        rollout(lorenz_model, lorenz.data[:5], 3, teacher_forced=True)


def test_partial_observation_closed_loop(lorenz):
    model = train(lorenz.segment(0, 1000), 4, 100, 1.0, 1e-6, observed=[0], target=[1, 2], seed=0)
    assert not model.closed_loop_ok
    with pytest.raises(ClosedLoopInfeasible):
        rollout(model, lorenz.data[:4, :1], 5)
    ok = train(lorenz.segment(0, 1000), 4, 100, 1.0, 1e-6, observed=[0], target=[0, 1, 2], seed=0)
    assert ok.closed_loop_ok
    assert rollout(ok, lorenz.data[:4, :1], 5).predictions.shape == (5, 3)


def test_predict_one_step_width(lorenz_model):
    with pytest.raises(InvalidArgument):
        predict_one_step(lorenz_model, np.zeros(14))


def test_same_seed_bitwise(lorenz):
    a = train(lorenz.segment(0, 800), 3, 200, 2.0, 1e-6, seed=4)
    b = train(lorenz.segment(0, 800), 3, 200, 2.0, 1e-6, seed=4)
    np.testing.assert_array_equal(a.ridge.W_ridge, b.ridge.W_ridge)


def test_train_rejects(lorenz):
    with pytest.raises(InvalidArgument):
        train(lorenz.segment(0, 5), 5, 10, 1.0, 1e-6)
    with pytest.raises(InvalidArgument):
        train(lorenz.segment(0, 100), 2, 10, -1.0, 1e-6)
    with pytest.raises(InvalidArgument):
        train(lorenz.segment(0, 100), 2, 10, 1.0, 1e-6, target_series=lorenz.segment(0, 50))


def test_clean_targets_used(lorenz):
    tr = lorenz.segment(0, 600)
    shifted = TimeSeries(tr.data + 1.0, tr.dt, tr.channel_names)
    m = train(tr, 3, 300, 2.0, 1e-8, seed=0, target_series=shifted)
    pred, truth = one_step_predictions(m, tr)
    assert np.mean(pred - truth) == pytest.approx(1.0, abs=0.05)


def test_linear_signal_learned():
    # a pure sinusoid obeys a linear two-term recurrence; the forecaster should track it
    t = np.arange(2000) * 0.05
    s = TimeSeries(np.sin(t), 0.05)
    m = train(s.segment(0, 1500), 2, 300, 1.0, 1e-8, seed=0)
    res = rollout(m, s.data[1498:1500], 200, s.data[1500:1700])
    assert res.valid_steps == 200


def test_bounded_steps(lorenz, lorenz_model):
    n = bounded_rollout_steps(lorenz_model, lorenz, 2400, 100)
    assert n == 100
    with pytest.raises(InvalidArgument):
        bounded_rollout_steps(lorenz_model, lorenz, 2, 10)


def test_partial_pathway_reduces_to_full(lorenz):
    tr = lorenz.segment(0, 800)
    a = train(tr, 3, 100, 2.0, 1e-6, seed=5)
    b = train(tr, 3, 100, 2.0, 1e-6, observed=[0, 1, 2], target=[0, 1, 2], seed=5)
    np.testing.assert_array_equal(a.ridge.W_ridge, b.ridge.W_ridge)
    win = lorenz.data[900:903]
    np.testing.assert_array_equal(rollout(a, win, 20).predictions, rollout(b, win, 20).predictions)
