"""Logging setup shared by the scripts and the CLI."""

import logging

import coloredlogs

from configs import settings

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"


def setup_logging(level: str | None = None) -> None:
    """Install coloredlogs on the root logger.

    Library modules only create loggers with logging.getLogger(__name__),
    the entry points call this once.
    """
    level = level or settings.LOGGING_LEVEL
    coloredlogs.install(level=level.upper(), fmt=LOG_FORMAT)
    # matplotlib is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
