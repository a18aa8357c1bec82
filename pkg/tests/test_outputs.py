import xml.etree.ElementTree as ET

import pytest

from exo_mdp.errors import InvalidInputError
from exo_mdp.experiment_configs import ExperimentConfig, default_config
from exo_mdp.outputs import (
    CSV_COLUMNS,
    build_metadata,
    config_from_metadata,
    episode_statistics,
    metadata_path,
    read_csv,
    read_metadata,
    render_plots,
    write_csv,
    write_summary,
)
from exo_mdp.run_experiments import RunRecord


def _records(algorithms=("pto", "pto_opt"), seeds=(0, 1), episodes=3):
    records = []
    for a, algorithm in enumerate(algorithms):
        for seed in seeds:
            cumulative = 0.0
            for k in range(1, episodes + 1):
                regret = 0.1 * (a + 1) / k + 0.01 * seed
                cumulative += regret
                records.append(RunRecord("tabular", algorithm, seed, k, regret, cumulative, 1.0 / k, 0.0))
    return records


class TestCsv:
    def test_empty_records_header_only(self, tmp_path):
        path = write_csv([], tmp_path / "records.csv")
        assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"

    def test_round_trip(self, tmp_path):
        records = _records()
        back = read_csv(write_csv(records, tmp_path / "records.csv"))
        assert len(back) == len(records)
        for a, b in zip(sorted(records, key=lambda r: (r.algorithm, r.seed, r.episode)), back):
            assert (a.algorithm, a.seed, a.episode) == (b.algorithm, b.seed, b.episode)
            assert b.cumulative_regret == pytest.approx(a.cumulative_regret, rel=1e-8)

    def test_sorted_and_byte_identical(self, tmp_path):
        records = _records()
        first = write_csv(records, tmp_path / "a.csv").read_bytes()
        second = write_csv(list(reversed(records)), tmp_path / "b.csv").read_bytes()
        assert first == second
        lines = first.decode().splitlines()
        assert lines[1].startswith("tabular,pto,0,1,")

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            write_csv(_records(), blocker / "records.csv")


class TestMetadata:
    def test_sidecar_name(self, tmp_path):
        assert metadata_path(tmp_path / "records.csv") == tmp_path / "records.meta.json"

    def test_config_round_trip(self, tmp_path):
        cfg = default_config("tabular").with_overrides(episodes=12, seeds=[5, 6])
        path = write_csv(_records(), tmp_path / "records.csv", cfg)
        assert config_from_metadata(path) == cfg
        assert read_metadata(path)["code_version"] == "0.1.0"

    def test_storage_parameters_filled(self):
        cfg = ExperimentConfig.from_dict({"experiment": "storage", "environment": {"overrides": {"leakage": 0.95}}})
        storage = build_metadata(cfg)["storage_parameters"]
        assert storage["leakage"] == 0.95
        assert storage["prices"] == list(range(1, 11))
        assert storage["capacity"] == 10.0

    def test_summary_file(self, tmp_path):
        path = write_summary({"pto": {"final_cumulative_regret_mean": 1.5}}, tmp_path / "out" / "summary.json")
        assert path.read_text().startswith("{\n")


class TestPlots:
    def test_single_seed_band_is_zero(self):
        stats = episode_statistics(_records(seeds=(0,)), "instant_regret")
        assert (stats["se"] == 0.0).all()

    def test_standard_error(self):
        stats = episode_statistics(_records(algorithms=("pto",)), "instant_regret")
        # two seeds 0.01 apart
        assert stats["se"].iloc[0] == pytest.approx(0.005)

    def test_svgs_parse(self, tmp_path):
        written = render_plots(_records(), tmp_path)
        assert {p.name for p in written} == {
            "instant_regret.svg",
            "cumulative_regret.svg",
            "model_error.svg",
            "final_cumulative_regret.svg",
        }
        for path in written:
            assert ET.parse(path).getroot().tag.endswith("svg")

    def test_one_labelled_series_per_algorithm(self, tmp_path):
        render_plots(_records(), tmp_path)
        text = (tmp_path / "cumulative_regret.svg").read_text()
        assert "<!-- pto -->" in text
        assert "<!-- pto_opt -->" in text

    def test_empty_records(self, tmp_path):
        with pytest.raises(InvalidInputError):
            render_plots([], tmp_path)
