"""Sandbox initialization: world.yaml, scratch.json, spatial_memory.json.

Each artifact is generated from a story setting with a one-example few-shot
prompt, extracted from a fenced code block, validated by the owning
module's parser, and regenerated with the validator's error message folded
into the prompt when validation fails. Generation is sequential since
later prompts depend on earlier artifacts.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from . import lm as lm_mod
from . import persona as persona_mod
from . import prompts
from .lm import LMBackend, LMParseFailed, LMRequest, ParseError
from .world import EnvironmentTree, EnvNode, Level, WorldError, parse_world

logger = logging.getLogger(__name__)


class BootstrapError(Exception):
    pass


class StructureMismatch(BootstrapError):
    """spatial_memory.json names/nesting diverge from the world tree."""


@dataclass
class StorySetting:
    premise: str
    setting: str
    characters: list[tuple[str, str]]  # (name, one-line description)

    def __post_init__(self) -> None:
        if not self.premise.strip() or not self.setting.strip():
            raise ValueError("premise and setting must be non-empty")
        if not self.characters:
            raise ValueError("at least one character is required")

    def character_block(self) -> str:
        return "\n".join(f"{name}: {desc}" for name, desc in self.characters)

    @classmethod
    def from_json(cls, json_text: str) -> "StorySetting":
        raw = json.loads(json_text)
        return cls(
            premise=raw["premise"],
            setting=raw["setting"],
            characters=[(c["name"], c["description"]) for c in raw["characters"]],
        )


@dataclass
class SandboxBundle:
    world_yaml: str
    scratch_json: str
    spatial_memory_json: str
    provenance: list[dict] = field(default_factory=list)


def _repair_note(error: Exception | None) -> str:
    if error is None:
        return ""
    return f"\nThe previous attempt failed validation: {error}. Please fix that problem.\n"


def generate_world(
    setting: StorySetting,
    example_yaml: str,
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> tuple[str, int]:
    """Generate and validate world.yaml; returns (text, attempts used)."""
    last_error: Exception | None = None
    for attempt in range(1, attempts + 1):
        prompt = prompts.render(
            "bootstrap_world",
            example=example_yaml,
            premise=setting.premise,
            setting=setting.setting,
            characters=setting.character_block(),
            repair=_repair_note(last_error),
        )
        completion = lm.complete(LMRequest(prompt))
        try:
            body = lm_mod.extract_fenced(completion, "yaml")
            parse_world(body)
            return body, attempt
        except (ParseError, WorldError) as exc:
            last_error = exc
            logger.info("world generation attempt %d failed: %s", attempt, exc)
    if isinstance(last_error, WorldError):
        raise last_error
    raise LMParseFailed(attempts, last_error)


def generate_personas(
    setting: StorySetting,
    example_json: str,
    world: EnvironmentTree,
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> tuple[str, int]:
    """Generate scratch.json whose living areas resolve in the world."""
    world_yaml = world.serialize()
    last_error: Exception | None = None
    for attempt in range(1, attempts + 1):
        prompt = prompts.render(
            "bootstrap_scratch",
            example=example_json,
            premise=setting.premise,
            setting=setting.setting,
            characters=setting.character_block(),
            world=world_yaml,
            repair=_repair_note(last_error),
        )
        completion = lm.complete(LMRequest(prompt))
        try:
            body = lm_mod.extract_fenced(completion, "json")
            personas = persona_mod.parse_scratch(body, world=world)
            if not personas:
                raise persona_mod.MalformedDocument("no personas generated")
            return body, attempt
        except (ParseError, persona_mod.PersonaError) as exc:
            last_error = exc
            logger.info("persona generation attempt %d failed: %s", attempt, exc)
    if isinstance(last_error, persona_mod.PersonaError):
        raise last_error
    raise LMParseFailed(attempts, last_error)


def world_to_nested(world: EnvironmentTree) -> dict:
    """The spatial-memory shape of a world: nested names, object-name leaves."""

    def build(node: EnvNode):
        if node.level is Level.AREA:
            return [c.name for c in node.children]
        return {c.name: build(c) for c in node.children}

    return {world.root.name: build(world.root)}


def check_isomorphic(world: EnvironmentTree, spatial: dict) -> None:
    """Structural isomorphism: same names, same nesting; order ignored."""

    def compare(expected, actual, path: str) -> None:
        if isinstance(expected, dict):
            if not isinstance(actual, dict):
                raise StructureMismatch(f"{path}: expected a mapping")
            missing = set(expected) - set(actual)
            extra = set(actual) - set(expected)
            if missing or extra:
                raise StructureMismatch(
                    f"{path}: names diverge (missing {sorted(missing)}, extra {sorted(extra)})"
                )
            for name in expected:
                compare(expected[name], actual[name], f"{path}/{name}")
        else:
            actual_list = actual if isinstance(actual, list) else None
            if actual_list is None:
                raise StructureMismatch(f"{path}: expected a list of object names")
            if sorted(expected) != sorted(actual_list):
                raise StructureMismatch(
                    f"{path}: objects diverge (expected {sorted(expected)}, got {sorted(actual_list)})"
                )

    compare(world_to_nested(world), spatial, "<root>")


def generate_spatial_memory(
    world: EnvironmentTree,
    example_json: str,
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> tuple[str, int]:
    """Convert the world into the spatial_memory.json object tree."""
    world_yaml = world.serialize()
    last_error: Exception | None = None
    for attempt in range(1, attempts + 1):
        prompt = prompts.render(
            "bootstrap_spatial",
            example=example_json,
            world=world_yaml,
            repair=_repair_note(last_error),
        )
        completion = lm.complete(LMRequest(prompt))
        try:
            body = lm_mod.extract_fenced(completion, "json")
            try:
                spatial = json.loads(body)
            except json.JSONDecodeError as exc:
                raise ParseError(f"not valid JSON: {exc}") from exc
            check_isomorphic(world, spatial)
            return body, attempt
        except (ParseError, StructureMismatch) as exc:
            last_error = exc
            logger.info("spatial memory attempt %d failed: %s", attempt, exc)
    if isinstance(last_error, StructureMismatch):
        raise last_error
    raise LMParseFailed(attempts, last_error)


def generate_bundle(
    setting: StorySetting,
    example_world: str,
    example_scratch: str,
    example_spatial: str,
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> SandboxBundle:
    """Generate all three artifacts, in dependency order, with provenance."""
    world_yaml, world_attempts = generate_world(setting, example_world, lm, attempts)
    world = parse_world(world_yaml)
    scratch_json, scratch_attempts = generate_personas(
        setting, example_scratch, world, lm, attempts
    )
    spatial_json, spatial_attempts = generate_spatial_memory(world, example_spatial, lm, attempts)
    return SandboxBundle(
        world_yaml=world_yaml,
        scratch_json=scratch_json,
        spatial_memory_json=spatial_json,
        provenance=[
            {"artifact": "world.yaml", "prompt": "bootstrap_world", "attempts": world_attempts},
            {"artifact": "scratch.json", "prompt": "bootstrap_scratch", "attempts": scratch_attempts},
            {
                "artifact": "spatial_memory.json",
                "prompt": "bootstrap_spatial",
                "attempts": spatial_attempts,
            },
        ],
    )
