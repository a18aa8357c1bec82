"""Script to run an Exo-MDP experiment from the command line.

Example:
    python bin/run/run_experiment.py tabular --config data/configs/tabular.json --seeds 0..19
"""

import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parent.parent.parent / "src"))

from exo_mdp.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
