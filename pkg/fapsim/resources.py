"""Helpers for loading data files embedded in the package."""

from __future__ import annotations

from importlib import resources

_PACKAGE = "fapsim.data"

DEFAULT_CONFIG = "defaults.yaml"
DEFAULT_MCS_TABLE = "mcs_vht160_1ss.csv"


def load_data_text(name: str) -> str:
    """Return the text of an embedded data file."""
    resource = resources.files(_PACKAGE).joinpath(name)
    return resource.read_text(encoding="utf-8")
