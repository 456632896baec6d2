"""Bundled example data."""

from importlib.resources import files
from pathlib import Path


def toy_wordlist_path() -> Path:
    """Filesystem path of the bundled toy wordlist."""
    return Path(str(files(__package__) / "toy_wordlist.tsv"))
