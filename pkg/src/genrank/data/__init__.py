"""Bundled toy study used by the examples and the CLI ``--example`` flag."""

from importlib.resources import files


def toy_study_paths():
    """Paths of the toy study CSV and its schema."""
    root = files(__name__)
    return root / "toy_study.csv", root / "toy_schema.json"
