import json

import pytest

from rffrc import config as C
from rffrc.errors import ConfigError


def test_empty_config_all_defaulted():
    cfg, defaulted = C.from_dict({})
    assert cfg.system == "lorenz63" and cfg.model.k == 5
    flat = C.annotated(cfg, defaulted)
    assert all(v["defaulted"] for v in flat.values())


def test_explicit_values_marked():
    cfg, defaulted = C.from_dict({"model": {"k": 3}, "seed": 4})
    flat = C.annotated(cfg, defaulted)
    assert flat["model.k"] == {"value": 3, "defaulted": False}
    assert flat["model.m"]["defaulted"] and not flat["seed"]["defaulted"]


@pytest.mark.parametrize("raw", [{"bogus": 1}, {"model": {"kk": 2}}, {"system": "henon"},
                                 {"rollout_segment": "train"}, {"split": {"train_frac": 0.9}},
                                 {"model": "x"}, {"horizon": -1}, {"external_csv": 1},
                                 {"system": "external_csv"}, {"sweep": {"axis": "q"}},
                                 {"noise": {"clean_targets": 1}}])
def test_rejects(raw):
    with pytest.raises(ConfigError):
        C.from_dict(raw)


def test_lists_become_tuples():
    cfg, _ = C.from_dict({"grid": {"k": [3, 5]}, "seeds": [1, 2], "observed": [0]})
    assert cfg.grid.k == (3, 5) and cfg.seeds == (1, 2) and cfg.observed == (0,)


def test_round_trip():
    cfg, _ = C.from_dict({"system": "ks", "ks": {"n_steps": 10}, "noise": {"snr_db": 15}})
    again, _ = C.from_dict(json.loads(json.dumps(C.to_dict(cfg))))
    assert again == cfg


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        C.load_config(tmp_path / "nope.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        C.load_config(p)


def test_noisy_copy(lorenz):
    cfg, _ = C.from_dict({})
    assert C.noisy_copy(lorenz, cfg) is lorenz
    cfg, _ = C.from_dict({"noise": {"snr_db": 20}})
    assert (C.noisy_copy(lorenz, cfg).data != lorenz.data).any()
