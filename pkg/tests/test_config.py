import json

import pytest

from trolldetect.config import EngineConfig, parse_config


def test_defaults():
    cfg = parse_config()
    assert cfg == EngineConfig()
    assert (cfg.context_duration_s, cfg.scorer.method, cfg.scorer.k, cfg.scorer.threshold) == (20, "dknn", 5, 40.0)


def test_file_then_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"context_duration_s": 30, "scorer": {"method": "sknn", "k": 7}, "seed": 3}))
    cfg = parse_config(path, {"k": 9, "seed": None, "threshold": 55.0})
    assert cfg.context_duration_s == 30 and cfg.seed == 3
    assert (cfg.scorer.method, cfg.scorer.k, cfg.scorer.threshold) == ("sknn", 9, 55.0)


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown"):
        parse_config(None, {"windw": 10})


@pytest.mark.parametrize("kw", [{"context_duration_s": 0}, {"recluster_interval_s": 5}, {"sample_size": 0}])
def test_validation(kw):
    with pytest.raises(ValueError):
        EngineConfig(**kw)
