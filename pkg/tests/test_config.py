"""Re-ranking configuration: defaults, serialization, validation, overrides."""

from __future__ import annotations

import json

import pytest

from a3r import ConfigError, KrConfig, RerankConfig, ValidationError, load_config


def test_defaults_match_documented_json():
    cfg = RerankConfig()
    assert cfg.to_json() == {
        "method": "a3r",
        "pool": 100,
        "tol": 1e-7,
        "max_iter": 1000,
        "clamp_nonnegative": False,
        "k1": 20,
        "k2": 6,
        "lambda": 0.3,
    }


def test_json_round_trip():
    cfg = RerankConfig(method="krnn", pool=0, k1=7, k2=3, lam=0.5,
                       clamp_nonnegative=True)
    assert RerankConfig.from_json(cfg.to_json()) == cfg


def test_partial_json_keeps_defaults():
    cfg = RerankConfig.from_json({"k1": 5, "k2": 2})
    assert cfg.k1 == 5 and cfg.k2 == 2
    assert cfg.pool == 100 and cfg.lam == 0.3


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        RerankConfig.from_json({"k1": 5, "bogus": 1})


@pytest.mark.parametrize("bad", [
    {"method": "fancy"},
    {"pool": -1},
    {"k1": 0},
    {"k2": 0},
    {"k1": 3, "k2": 4},
    {"lambda": -0.1},
    {"lambda": 1.5},
    {"tol": 0.0},
    {"max_iter": 0},
])
def test_invalid_values_rejected(bad):
    with pytest.raises((ValidationError, ConfigError)):
        RerankConfig.from_json(bad).validate()


def test_override_applies_only_given_fields():
    cfg = RerankConfig().override(k1=9, lam=None, method="krnn")
    assert cfg.k1 == 9
    assert cfg.lam == 0.3
    assert cfg.method == "krnn"


def test_kr_validate_against_pool_size():
    kr = KrConfig(k1=20, k2=6, lam=0.3)
    kr.validate(pool_size=20)
    with pytest.raises(ConfigError):
        kr.validate(pool_size=19)


def test_kr_clamped_shrinks_to_pool():
    kr = KrConfig(k1=20, k2=6, lam=0.3).clamped(pool_size=4)
    assert kr.k1 == 4
    assert kr.k2 == 4
    kr.validate(pool_size=4)
    untouched = KrConfig(k1=3, k2=2, lam=0.3).clamped(pool_size=10)
    assert untouched == KrConfig(k1=3, k2=2, lam=0.3)


def test_load_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"method": "none", "lambda": 0.7}))
    cfg = load_config(path)
    assert cfg.method == "none"
    assert cfg.lam == 0.7


def test_load_config_rejects_bad_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(path)
