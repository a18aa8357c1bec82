"""CSV records, metadata sidecars and SVG plots of an experiment."""

# python modules
import json
import logging
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

# our modules
import exo_mdp
from exo_mdp.environments import PRICE_LOCAL_MASS, STORAGE_DEFAULTS
from exo_mdp.errors import InvalidInputError
from exo_mdp.experiment_configs import ExperimentConfig
from exo_mdp.run_experiments import RunRecord, sort_records
from utils.utils_path import ensure_folder
from utils.utils_plots import create_bar_chart, plot_mean_curves_with_band

logger = logging.getLogger(__name__)

CSV_COLUMNS = [f.name for f in fields(RunRecord)]
FLOAT_FORMAT = "%.9g"
METRICS = ("instant_regret", "cumulative_regret", "model_error")

# reporting conventions written next to every CSV
NOTES = {
    "bandit_sigma": "regret bounds are reported for 1/2 sub-Gaussian rewards (rewards in [0, 1])",
    "optimism": "pto_opt computes one optimistic row per (h, x, a, xi)",
    "storage_regret": "oracle return minus policy return on shared price traces, oracle is LSVI on the true kernel with dense anchors",
    "regret_mode": "summed: sum over (x, xi) of the stage-1 gap, fixed: gap at (x1, xi1)",
    "model_error": "mean Frobenius norm of P_hat - P over the H - 1 transition stages",
}


def metadata_path(csv_path: str | Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(f"{csv_path.stem}.meta.json")


def build_metadata(cfg: ExperimentConfig) -> dict[str, Any]:
    """Full config plus the defaults the environments fill in themselves."""
    metadata = {
        "config": cfg.to_dict(),
        "code_version": exo_mdp.__version__,
        "notes": NOTES,
    }
    if cfg.experiment == "storage":
        storage = dict(STORAGE_DEFAULTS)
        storage.update(cfg.environment["overrides"])
        if storage["prices"] is None:
            storage["prices"] = list(range(1, cfg.environment["num_prices"] + 1))
        storage["price_local_mass"] = PRICE_LOCAL_MASS
        metadata["storage_parameters"] = storage
    return metadata


def _dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_csv(records: list[RunRecord], path: str | Path, cfg: ExperimentConfig | None = None) -> Path:
    """Write records sorted by (algorithm, seed, episode); with cfg also the metadata sidecar."""
    path = Path(path)
    df = pd.DataFrame([asdict(r) for r in sort_records(records)], columns=CSV_COLUMNS)
    try:
        ensure_folder(path.parent)
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        if cfg is not None:
            metadata_path(path).write_text(_dumps(build_metadata(cfg)))
    except OSError as e:
        raise OSError(f"cannot write results to {path}: {e}") from e
    logger.info(f"Wrote {len(records)} records to {path}")
    return path


def read_csv(path: str | Path) -> list[RunRecord]:
    df = pd.read_csv(path, dtype={"experiment": str, "algorithm": str})
    return [
        RunRecord(
            experiment=row.experiment,
            algorithm=row.algorithm,
            seed=int(row.seed),
            episode=int(row.episode),
            instant_regret=float(row.instant_regret),
            cumulative_regret=float(row.cumulative_regret),
            model_error=float(row.model_error),
            wall_time_ms=float(row.wall_time_ms),
        )
        for row in df.itertuples(index=False)
    ]


def read_metadata(csv_path: str | Path) -> dict[str, Any]:
    return json.loads(metadata_path(csv_path).read_text())


def config_from_metadata(csv_path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(read_metadata(csv_path)["config"])


def write_summary(summary: dict[str, Any], path: str | Path) -> Path:
    path = Path(path)
    try:
        ensure_folder(path.parent)
        path.write_text(_dumps(summary))
    except OSError as e:
        raise OSError(f"cannot write summary to {path}: {e}") from e
    return path


def episode_statistics(records: list[RunRecord], metric: str) -> pd.DataFrame:
    """Mean and standard error of a metric across seeds, per (algorithm, episode)."""
    df = pd.DataFrame([asdict(r) for r in records], columns=CSV_COLUMNS)
    grouped = df.groupby(["algorithm", "episode"])[metric]
    stats = grouped.agg(mean="mean", std="std", count="count").reset_index()
    # a single seed has no spread
    stats["se"] = (stats["std"] / np.sqrt(stats["count"])).fillna(0.0)
    return stats


def render_plots(records: list[RunRecord], out_dir: str | Path) -> list[Path]:
    """One SVG per metric with mean +- 1 SE bands, plus a final-regret bar chart."""
    if not records:
        raise InvalidInputError("cannot plot an empty record list")
    out_dir = ensure_folder(out_dir)
    experiment = records[0].experiment
    written = []
    for metric in METRICS:
        stats = episode_statistics(records, metric)
        output_file_name = out_dir / f"{metric}.svg"
        plot_mean_curves_with_band(
            stats,
            x_column="episode",
            mean_column="mean",
            band_column="se",
            group_column="algorithm",
            title=f"{experiment}: {metric} (mean +- 1 SE)",
            ylabel=metric,
            output_file_name=str(output_file_name),
        )
        written.append(output_file_name)

    stats = episode_statistics(records, "cumulative_regret")
    final = stats.loc[stats.groupby("algorithm")["episode"].idxmax()]
    output_file_name = out_dir / "final_cumulative_regret.svg"
    create_bar_chart(
        final.rename(columns={"mean": "final_cumulative_regret"}),
        category_column="algorithm",
        value_column="final_cumulative_regret",
        error_column="se",
        title=f"{experiment}: final cumulative regret",
        output_file_name=str(output_file_name),
    )
    written.append(output_file_name)
    logger.info(f"Wrote {len(written)} plots to {out_dir}")
    return written
