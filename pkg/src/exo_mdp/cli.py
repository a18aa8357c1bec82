"""Command line interface: one subcommand per experiment type.

Exit codes: 0 on success, 2 on a config error, 3 on an I/O error.
"""

# python modules
import argparse
import logging
import sys
from pathlib import Path

# our modules
from configs import settings
from exo_mdp.errors import ConfigError
from exo_mdp.experiment_configs import ExperimentConfig, default_config, load_config, parse_seeds
from exo_mdp.outputs import render_plots, write_csv, write_summary
from exo_mdp.run_experiments import (
    run_bandit_experiment,
    run_peg_experiment,
    run_storage_experiment,
    run_tabular_experiment,
    summarize_records,
)
from utils.utils_logging import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3

# subcommand -> experiment type
SUBCOMMANDS = {
    "tabular": "tabular",
    "storage": "storage",
    "bandit": "bandit",
    "peg-demo": "peg",
}

RECORDS_FILE = "records.csv"
SUMMARY_FILE = "summary.json"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exo-mdp", description="Exo-MDP regret benchmarks")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in SUBCOMMANDS:
        sub = subparsers.add_parser(command, help=f"run the {command} experiment")
        sub.add_argument("--config", type=Path, help="JSON config file (defaults when omitted)")
        sub.add_argument("--out", type=Path, help="output folder")
        sub.add_argument("--seeds", help="seed range a..b (inclusive) or a,b,c")
        sub.add_argument("--episodes", type=int, help="number of episodes K (rounds T for bandits)")
        sub.add_argument("--jobs", type=int, help="worker pool size")
        sub.add_argument("--no-plots", action="store_true", help="skip the SVG plots")
        sub.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then the config file, then the flags."""
    experiment = SUBCOMMANDS[args.command]
    cfg = load_config(args.config) if args.config else default_config(experiment)
    if cfg.experiment != experiment:
        raise ConfigError("experiment", f"config is for '{cfg.experiment}' but the subcommand is '{args.command}'")
    out_dir = args.out if args.out is not None else settings.results_dir() / experiment
    return cfg.with_overrides(
        seeds=parse_seeds(args.seeds) if args.seeds else None,
        episodes=args.episodes,
        n_jobs=args.jobs,
        out_dir=str(out_dir),
    )


def run(cfg: ExperimentConfig, do_plots: bool = True) -> Path:
    """Run one experiment and write records, summary and plots to cfg.out_dir."""
    out_dir = Path(cfg.out_dir)
    if cfg.experiment == "tabular":
        records = run_tabular_experiment(cfg)
        summary = summarize_records(records)
    elif cfg.experiment == "storage":
        records = run_storage_experiment(cfg)
        summary = summarize_records(records)
    elif cfg.experiment == "bandit":
        records = run_bandit_experiment(cfg)
        summary = summarize_records(records)
    else:
        records, peg_summary = run_peg_experiment(cfg)
        summary = {"peg": peg_summary, "algorithms": summarize_records(records)}

    csv_path = write_csv(records, out_dir / RECORDS_FILE, cfg)
    write_summary(summary, out_dir / SUMMARY_FILE)
    if do_plots and records:
        render_plots(records, out_dir)
    return csv_path


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else None)
    try:
        cfg = resolve_config(args)
        csv_path = run(cfg, do_plots=not args.no_plots)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG_ERROR
    except OSError as e:
        logger.error(str(e))
        return EXIT_IO_ERROR
    logger.info(f"Done, results in {csv_path.parent}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
