"""Paths to the data files bundled with the package."""
from __future__ import annotations

from importlib import resources
from pathlib import Path


def default_path(name: str) -> Path:
    """Return the filesystem path of a bundled data file."""
    path = Path(str(resources.files("keyrel").joinpath("data", name)))
    if not path.exists():
        raise FileNotFoundError(f"bundled data file missing: {name}")
    return path


DEFAULT_VOCAB = "vocab.json"
DEFAULT_MERGES = "merges.txt"
DEFAULT_LEXICON = "pos_lexicon.tsv"
DEFAULT_GAZETTEER = "gazetteer.tsv"
