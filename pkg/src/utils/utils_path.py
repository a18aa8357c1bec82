"""Module about PathLib helper functions."""

import logging
from pathlib import Path


def check_folder_exists(folder_name: str | Path) -> bool:
    """Check if a folder exists."""
    folder_path = Path(folder_name)
    if folder_path.is_dir():
        logging.debug(f"Folder exists {folder_path}")
        return True
    else:
        logging.debug(f"Folder does not exist {folder_path}")
        return False


def ensure_folder(folder_name: str | Path) -> Path:
    """Create a folder (and its parents) if it does not exist yet, return it."""
    folder_path = Path(folder_name)
    if not check_folder_exists(folder_path):
        logging.info(f"Creating folder {folder_path}")
        folder_path.mkdir(parents=True, exist_ok=True)
    return folder_path
