import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rffrc.errors import EmbeddingError, InvalidArgument
from rffrc.timeseries import (DelayConfig, SplitSpec, TimeSeries, chronological_split, delay_embed,
                              make_training_pairs, read_csv, segment_bounds, split_lengths, write_csv)


def test_series_is_read_only_and_named():
    s = TimeSeries(np.arange(6.0), dt=0.5)
    assert s.n_steps == 6 and s.n_channels == 1
    assert s.channel_names == ("u0",)
    with pytest.raises(ValueError):
        s.data[0, 0] = 1.0


@pytest.mark.parametrize("data", [np.zeros((0, 2)), np.array([[np.nan, 1.0]]), np.array([[np.inf]])])
def test_series_rejects_bad_data(data):
    with pytest.raises(InvalidArgument):
        TimeSeries(data)


def test_series_rejects_bad_dt_and_names():
    with pytest.raises(InvalidArgument):
        TimeSeries(np.ones((3, 2)), dt=0.0)
    with pytest.raises(InvalidArgument):
        TimeSeries(np.ones((3, 2)), channel_names=("a",))


def test_delay_embed_scalar_example():
    s = TimeSeries(np.array([1.0, 2, 3, 4, 5]))
    X = delay_embed(s, DelayConfig(3))
    np.testing.assert_array_equal(X, [[3, 2, 1], [4, 3, 2], [5, 4, 3]])


def test_delay_embed_blocks_per_channel():
    s = TimeSeries(np.array([[1.0, 10], [2, 20], [3, 30]]))
    X = delay_embed(s, DelayConfig(2))
    np.testing.assert_array_equal(X, [[2, 1, 20, 10], [3, 2, 30, 20]])


def test_training_pairs_example():
    s = TimeSeries(np.array([1.0, 2, 3, 4, 5]))
    X, Y = make_training_pairs(s, DelayConfig(2))
    np.testing.assert_array_equal(X, [[2, 1], [3, 2], [4, 3]])
    np.testing.assert_array_equal(Y, [[3], [4], [5]])


def test_training_pairs_channel_subsets():
    s = TimeSeries(np.arange(12.0).reshape(4, 3))
    X, Y = make_training_pairs(s, DelayConfig(2), observed=[0], target=[1, 2])
    assert X.shape == (2, 2) and Y.shape == (2, 2)
    np.testing.assert_array_equal(Y, s.data[2:, 1:])


def test_embedding_too_short():
    s = TimeSeries(np.arange(3.0))
    with pytest.raises(EmbeddingError):
        delay_embed(s, DelayConfig(4))
    with pytest.raises(EmbeddingError):
        make_training_pairs(s, DelayConfig(3))


@pytest.mark.parametrize("k", [0, -1, 2.5])
def test_delay_config_rejects(k):
    with pytest.raises(InvalidArgument):
        DelayConfig(k)


def test_channel_index_out_of_range():
    with pytest.raises(InvalidArgument):
        make_training_pairs(TimeSeries(np.ones((5, 2))), DelayConfig(1), observed=[2])


@given(n=st.integers(8, 300), c=st.integers(1, 3), k=st.integers(1, 6))
def test_embedding_shape_and_lags(n, c, k):
    data = np.arange(n * c, dtype=float).reshape(n, c)
    s = TimeSeries(data)
    X = delay_embed(s, DelayConfig(k))
    assert X.shape == (n - k + 1, c * k)
    for r in (0, X.shape[0] - 1):
        t = r + k - 1
        for ch in range(c):
            np.testing.assert_array_equal(X[r, ch * k:(ch + 1) * k], data[t - np.arange(k), ch])


def test_split_examples():
    assert split_lengths(4000, SplitSpec()) == (2400, 800, 800)
    assert split_lengths(4001, SplitSpec()) == (2400, 800, 801)
    b = segment_bounds(4000, SplitSpec())
    assert b == {"train": (0, 2400), "val": (2400, 3200), "test": (3200, 4000)}


def test_split_swapped():
    b = segment_bounds(4000, SplitSpec(test_before_val=True))
    assert b["test"] == (2400, 3200) and b["val"] == (3200, 4000)
    tr, va, te = chronological_split(TimeSeries(np.arange(4000.0)), SplitSpec(test_before_val=True))
    assert te.data[0, 0] == 2400 and va.data[0, 0] == 3200


@pytest.mark.parametrize("fracs", [(0.5, 0.5, 0.2), (0.0, 0.5, 0.5), (1.2, -0.1, -0.1)])
def test_split_rejects_bad_fractions(fracs):
    with pytest.raises(InvalidArgument):
        SplitSpec(*fracs)


def test_split_rejects_empty_segment():
    with pytest.raises(InvalidArgument):
        split_lengths(3, SplitSpec(0.6, 0.2, 0.2))


@given(n=st.integers(10, 10000), swap=st.booleans())
def test_split_partitions(n, swap):
    spec = SplitSpec(test_before_val=swap)
    parts = chronological_split(TimeSeries(np.arange(float(n))), spec)
    joined = np.concatenate([p.data[:, 0] for p in sorted(parts, key=lambda p: p.data[0, 0])])
    np.testing.assert_array_equal(joined, np.arange(float(n)))
    assert sum(split_lengths(n, spec)) == n


def test_chronological_split_min_len():
    with pytest.raises(InvalidArgument):
        chronological_split(TimeSeries(np.arange(20.0)), SplitSpec(), min_len=5)


def test_csv_round_trip(tmp_path, rng):
    s = TimeSeries(rng.normal(size=(20, 2)), dt=0.025, channel_names=("a", "b"))
    write_csv(s, tmp_path / "s.csv")
    back = read_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.data, s.data)
    assert back.channel_names == ("a", "b")
    assert back.dt == pytest.approx(0.025)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "t,a,b"


def test_read_csv_rejects(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(InvalidArgument):
        read_csv(p)
    p.write_text("t,x\n")
    with pytest.raises(InvalidArgument):
        read_csv(p)


def test_split_ten_and_pair_counts():
    assert split_lengths(10, SplitSpec()) == (6, 2, 2)
    s = TimeSeries(np.zeros((4000, 3)))
    X, Y = make_training_pairs(s, DelayConfig(5))
    assert X.shape == (3995, 15) and Y.shape == (3995, 3)
    X, Y = make_training_pairs(s, DelayConfig(20), observed=[0], target=[0, 1, 2])
    assert X.shape[1] == 20 and Y.shape[1] == 3
    X, Y = make_training_pairs(TimeSeries(np.array([1.0, 2, 3])), DelayConfig(1))
    np.testing.assert_array_equal(X, [[1], [2]])
    np.testing.assert_array_equal(Y, [[2], [3]])
