"""Configuration file with settings."""

# python modules
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

WORK_DIR = os.getenv("WORKDIR", "")
LOGGING_LEVEL = os.getenv("LOGGING_LEVEL", "INFO")

""" Execution """
N_JOBS = int(os.getenv("N_JOBS", default="1"))
RESULTS_DIR = os.getenv("RESULTS_DIR", default="data/results/exo_mdp")

""" Paths """


def work_dir() -> Path:
    """Get working dir."""
    if WORK_DIR == "":
        return Path(__file__).parent.parent.parent
    else:
        return Path(WORK_DIR)


def results_dir() -> Path:
    """Get the default folder where experiment outputs are written."""
    path = Path(RESULTS_DIR)
    if path.is_absolute():
        return path
    return work_dir() / path
