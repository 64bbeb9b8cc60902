"""Bundled sandbox fixtures (the fully specified demo scenario)."""

from __future__ import annotations

from importlib.resources import files


def story1_text(name: str) -> str:
    """Contents of a story1 fixture file, e.g. story1_text("world.yaml")."""
    return files("storyloom").joinpath("fixtures", "story1", name).read_text(encoding="utf-8")


def story1_path(name: str):
    """Filesystem path of a story1 fixture file."""
    return files("storyloom").joinpath("fixtures", "story1", name)
