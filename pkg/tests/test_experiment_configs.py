import json

import pytest

from exo_mdp.errors import ConfigError
from exo_mdp.experiment_configs import (
    ExperimentConfig,
    default_config,
    load_config,
    parse_seeds,
    storage_case_i_configs,
    storage_case_ii_configs,
)


class TestDefaults:
    def test_tabular(self):
        cfg = default_config("tabular")
        assert cfg.algorithms == ["pto", "pto_opt", "pto_lite"]
        assert (cfg.episodes, len(cfg.seeds), cfg.c) == (250, 20, 0.3)
        assert cfg.environment["num_x"] == 5 and cfg.environment["num_a"] == 3

    def test_storage(self):
        cfg = default_config("storage")
        assert cfg.episodes == 100
        assert cfg.environment["horizon"] == 6
        assert cfg.environment["num_prices"] == cfg.environment["num_anchors"] == 10

    def test_bandit_and_peg(self):
        assert default_config("bandit").episodes == 500
        peg = default_config("peg")
        assert peg.environment["means"] == [0.75, 0.5]
        assert peg.episodes == 1000

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError) as info:
            default_config("atari")
        assert info.value.field == "experiment"


class TestValidation:
    @pytest.mark.parametrize(
        ("changes", "field"),
        [
            ({"algorithms": ["lsvi_pe"]}, "algorithms"),
            ({"algorithms": []}, "algorithms"),
            ({"algorithms": ["pto", "pto"]}, "algorithms"),
            ({"episodes": 0}, "episodes"),
            ({"seeds": []}, "seeds"),
            ({"seeds": [1, 1]}, "seeds"),
            ({"c": -0.1}, "c"),
            ({"delta": 1.0}, "delta"),
            ({"subsample_ratios": [0.0]}, "subsample_ratios"),
            ({"subsample_ratios": []}, "subsample_ratios"),
            ({"memory": 2}, "memory"),
            ({"regret_mode": "mean"}, "regret_mode"),
            ({"x1": 5}, "x1"),
            ({"environment": {"num_x": 0}}, "environment.num_x"),
            ({"environment": {"colour": 1}}, "environment"),
            ({"verbose": True}, "verbose"),
        ],
    )
    def test_tabular_field_is_named(self, changes, field):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict({"experiment": "tabular", **changes})
        assert info.value.field == field
        assert f"'{field}'" in str(info.value)

    def test_ftl_erm_needs_cap(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict({"experiment": "tabular", "algorithms": ["ftl_erm"]})
        assert info.value.field == "policy_cap"

    def test_ftl_erm_small_instance(self):
        cfg = ExperimentConfig.from_dict(
            {
                "experiment": "tabular",
                "algorithms": ["ftl_erm"],
                "environment": {"num_x": 2, "num_xi": 2, "num_a": 2, "horizon": 2},
                "policy_cap": 256,
            }
        )
        assert cfg.policy_cap == 256

    def test_storage_unknown_override(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict({"experiment": "storage", "environment": {"overrides": {"capacty": 3}}})
        assert info.value.field == "environment.overrides"

    def test_storage_override_replaces_whole_dict(self):
        cfg = ExperimentConfig.from_dict({"experiment": "storage", "environment": {"overrides": {"leakage": 0.9}}})
        assert cfg.environment["overrides"] == {"leakage": 0.9}
        assert cfg.environment["horizon"] == 6

    def test_peg_warm_start_must_fit(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict({"experiment": "peg", "episodes": 1, "environment": {"warm_start": 1}})
        assert info.value.field == "episodes"

    def test_with_overrides_ignores_none(self):
        cfg = default_config("bandit")
        assert cfg.with_overrides(episodes=None, seeds=[3]).seeds == [3]
        assert cfg.with_overrides(episodes=None).episodes == 500

    def test_with_overrides_validates(self):
        with pytest.raises(ConfigError):
            default_config("bandit").with_overrides(episodes=-1)


class TestSerialization:
    @pytest.mark.parametrize("experiment", ["tabular", "storage", "bandit", "peg"])
    def test_dict_round_trip(self, experiment):
        cfg = default_config(experiment)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_load_partial_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"experiment": "bandit", "episodes": 30, "seeds": [0, 1]}))
        cfg = load_config(path)
        assert (cfg.episodes, cfg.seeds) == (30, [0, 1])
        assert cfg.environment["num_arms"] == 5

    def test_load_metadata_sidecar(self, tmp_path):
        cfg = default_config("peg").with_overrides(episodes=20)
        path = tmp_path / "records.meta.json"
        path.write_text(json.dumps({"config": cfg.to_dict(), "code_version": "0.1.0"}))
        assert load_config(path) == cfg

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{experiment: tabular")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file_is_os_error(self, tmp_path):
        with pytest.raises(OSError):
            load_config(tmp_path / "absent.json")


class TestSeeds:
    def test_range(self):
        assert parse_seeds("0..4") == [0, 1, 2, 3, 4]

    def test_list(self):
        assert parse_seeds("3,1,7") == [3, 1, 7]

    @pytest.mark.parametrize("text", ["a..b", "5..2", ""])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_seeds(text)


class TestStoragePresets:
    def test_case_i(self):
        configs = storage_case_i_configs()
        assert [c.environment["horizon"] for c in configs] == [6, 8, 10]
        assert all(c.episodes == 100 and c.environment["num_prices"] == 10 for c in configs)

    def test_case_ii(self):
        configs = storage_case_ii_configs(seeds=[0])
        assert [c.environment["num_anchors"] for c in configs] == [20, 30, 40]
        assert all(c.episodes == 200 and c.seeds == [0] for c in configs)
