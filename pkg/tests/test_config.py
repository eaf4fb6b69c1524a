import json
import math

import pytest

from aoivnet.config import (
    DEFAULT_CPU_FREQ_HZ,
    DEFAULTS,
    ConfigError,
    RicianMixture,
    config_from_mapping,
    db_to_linear,
    dbm_to_watt,
    env_overrides,
    linear_to_db,
    load_mapping,
    merge_layers,
    parse_config,
    watt_to_dbm,
)


def test_unit_conversions():
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert dbm_to_watt(23.0) == pytest.approx(0.19953, rel=1e-4)
    assert watt_to_dbm(dbm_to_watt(17.3)) == pytest.approx(17.3)
    assert db_to_linear(-10.0) == pytest.approx(0.1)
    assert linear_to_db(db_to_linear(3.7)) == pytest.approx(3.7)


def test_defaults_resolve(net):
    assert net.alpha == 3.0
    assert net.p_v == pytest.approx(dbm_to_watt(23.0))
    assert net.p_r == pytest.approx(dbm_to_watt(33.0))
    assert net.threshold == pytest.approx(0.1)
    assert net.cpu_freq_hz == DEFAULT_CPU_FREQ_HZ
    assert net.lambda_l == pytest.approx(5e-3 / math.pi)


def test_p_c_dbm_sets_frequency():
    net = config_from_mapping({"p_c_dbm": 20.0})
    assert net.cpu_freq_hz == pytest.approx(2e8, rel=1e-9)
    assert net.p_c == pytest.approx(0.1)


def test_cpu_freq_and_p_c_exclusive():
    with pytest.raises(ConfigError):
        config_from_mapping({"p_c_dbm": 20.0, "cpu_freq_hz": 2e8})


@pytest.mark.parametrize("alpha", [2.0, 1.5, 0.0])
def test_alpha_at_or_below_two_rejected(alpha):
    with pytest.raises(ConfigError, match="alpha"):
        config_from_mapping({"alpha": alpha})


def test_alpha_four_accepted():
    assert config_from_mapping({"alpha": 4.0}).alpha == 4.0


@pytest.mark.parametrize("key,value", [("lambda_pv", -1e-3), ("x_r", 0.0), ("bandwidth_hz", -1.0)])
def test_invalid_values_rejected(key, value):
    with pytest.raises(ConfigError):
        config_from_mapping({key: value})


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown"):
        config_from_mapping({"bogus": 1})


def test_mixture_weights_must_sum_to_one():
    with pytest.raises(ConfigError):
        RicianMixture((0.5, 0.4), (1.0, 2.0))
    with pytest.raises(ConfigError):
        RicianMixture((1.0,), (-1.0,))


def test_zero_intensity_allowed():
    net = config_from_mapping({"lambda_pv": 0.0, "lambda_pr": 0.0, "lambda_l": 0.0})
    assert net.lambda_pv == 0.0


def test_layer_precedence():
    merged = merge_layers(DEFAULTS, {"alpha": 3.5, "x_r": 30.0}, {"alpha": 3.8})
    assert merged["alpha"] == 3.8 and merged["x_r"] == 30.0


def test_higher_layer_power_clears_lower_frequency():
    merged = merge_layers(DEFAULTS, {"cpu_freq_hz": 3e8}, {"p_c_dbm": 25.0})
    assert "cpu_freq_hz" not in merged
    config_from_mapping(merged)


def test_env_overrides_parse_json():
    env = {"AOIVNET_ALPHA": "3.5", "AOIVNET_SEED": "7", "PATH": "/bin"}
    assert env_overrides(env) == {"alpha": 3.5, "seed": 7}


def test_load_and_parse(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"x_r": 25.0}))
    assert load_mapping(p) == {"x_r": 25.0}
    net = parse_config(p, alpha=3.2)
    assert net.x_r == 25.0 and net.alpha == 3.2
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert load_mapping(empty) == {}


def test_user_mapping_round_trip(net):
    again = config_from_mapping(net.user_mapping())
    assert again == net
    derived = net.replace(alpha=3.3)
    assert config_from_mapping(derived.user_mapping()) == derived
