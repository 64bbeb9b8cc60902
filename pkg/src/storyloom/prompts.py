"""Prompt templates, externalized as text files with named placeholders."""

from __future__ import annotations

from functools import lru_cache
from importlib.resources import files
from string import Template


@lru_cache(maxsize=None)
def _load(name: str) -> Template:
    text = files("storyloom").joinpath("prompts", f"{name}.txt").read_text(encoding="utf-8")
    return Template(text)


def render(template_name: str, /, **values: str) -> str:
    """Render the named template; unknown placeholders raise KeyError."""
    return _load(template_name).substitute(**values)
