import math
from pathlib import Path

import pytest

from satnl.config import (
    MODES,
    ConfigError,
    LinkConfig,
    apply_mode,
    from_dict,
    load_config,
    preset_for_target,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_preset_loads_with_expected_values():
    cfg = load_config(CONFIGS / "uplink_default.toml")
    assert cfg == LinkConfig()
    assert cfg.dac_cutoff == 55e9 and cfg.adc_cutoff == 55e9
    assert cfg.max_rate_per_2d == 6.5


def test_custom_profile_is_anchored_at_launch_power():
    cfg = load_config(CONFIGS / "profile_two_stage.toml")
    prof = cfg.power_profile(40.0)
    assert prof.output_dbm == 40.0 and prof.input_dbm == 5.0


def test_partial_tables_keep_section_defaults():
    cfg = from_dict({"pigtail": {"gamma_per_w_km": 0.0}})
    assert cfg.pigtail.length_m == 3.0
    assert cfg.hpoa.fiber.length_m == 30.0


@pytest.mark.parametrize(
    "data,where",
    [
        ({"modulation": {"Q": 1}}, "modulation.Q"),
        ({"modulation": {"M": 100}}, "modulation.M"),
        ({"modulation": {"M": "64"}}, "modulation.M"),
        ({"modulation": {"shaped": 1}}, "modulation.shaped"),
        ({"tx": {"bandwidth_convention": "both"}}, "tx.bandwidth_convention"),
        ({"nlpr": {"kappa": 1.5}}, "nlpr.kappa"),
        ({"sim": {"n_symbols": 100}}, "sim.n_symbols"),
        ({"hpoa": {"profile": [[0, 0], [20, 10]]}}, "hpoa.profile"),
        ({"hpoa": {"profile": [[1, 0], [30, 10]]}}, "hpoa.profile"),
        ({"hpoa": {"profile": "steep"}}, "hpoa.profile"),
        ({"pigtail": 3}, "pigtail"),
    ],
)
def test_errors_name_the_offending_key(data, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        from_dict(data)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="no such config"):
        load_config(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[tx\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_unlimited_bandwidth_and_one_sided_convention():
    cfg = from_dict({"tx": {"bandwidth_hz": math.inf}, "rx": {"bandwidth_convention": "one-sided", "bandwidth_hz": 50e9}})
    assert cfg.dac_cutoff is None
    assert cfg.adc_cutoff == 50e9


def test_modes():
    base = LinkConfig()
    got = {m: apply_mode(base, m) for m in MODES}
    assert not got["uniform"].modulation.shaped and not got["uniform"].nlpr.enabled
    assert got["shaped"].modulation.shaped and not got["shaped"].nlpr.enabled
    assert got["shaped_tx_nlpr"].nlpr.kappa == 1.0 and got["shaped_tx_nlpr"].nlpr.enabled
    assert got["shaped_split_nlpr"].nlpr.kappa == 0.6
    assert got["ideal"].dac_cutoff is None and got["ideal"].adc_cutoff is None
    assert got["linear"].hpoa.fiber.gamma_per_w_km == 0 and got["linear"].pigtail.gamma_per_w_km == 0
    with pytest.raises(ValueError):
        apply_mode(base, "magic")


def test_target_presets():
    assert preset_for_target(LinkConfig(), 3).modulation.M == 64
    assert preset_for_target(LinkConfig(), 3).max_rate_per_2d == 4.5
    assert preset_for_target(LinkConfig(), 5).modulation.k_bits == 9
