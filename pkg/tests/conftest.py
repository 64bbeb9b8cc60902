from __future__ import annotations

import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from storyloom import fixtures as fx  # noqa: E402
from storyloom.lm import ScriptedBackend  # noqa: E402
from storyloom.persona import SpatialMemory, parse_scratch  # noqa: E402
from storyloom.world import parse_world  # noqa: E402


@pytest.fixture(scope="session")
def story1_world_text() -> str:
    return fx.story1_text("world.yaml")


@pytest.fixture(scope="session")
def story1_tree(story1_world_text):
    return parse_world(story1_world_text)


@pytest.fixture()
def story1_personas(story1_tree):
    return parse_scratch(fx.story1_text("scratch.json"), world=story1_tree)


@pytest.fixture()
def story1_spatial(story1_tree):
    memory = SpatialMemory.from_json(fx.story1_text("spatial_memory.json"))
    memory.validate_against(story1_tree)
    return memory


@pytest.fixture()
def sim_backend():
    """Fresh scripted backend replaying the bundled demo simulation script."""
    return ScriptedBackend.from_file(fx.story1_path("sim_script.jsonl"))


@pytest.fixture()
def tell_backend():
    return ScriptedBackend.from_file(fx.story1_path("tell_script.jsonl"))
