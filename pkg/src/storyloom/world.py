"""Tree-structured environment model and colon-separated addresses.

The sandbox world is a five-level hierarchy (World, Region, Zone, Area,
Object) loaded from a ``world.yaml`` document whose nesting keys are
``cities`` / ``places`` / ``areas`` / ``objects``.  Locations are addressed
by colon-joined name paths such as
``Frozen City:City Center:Tech Hub:Room 5``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import yaml


class WorldError(Exception):
    """Base class for world-model errors."""


class MalformedDocument(WorldError):
    """The input text is not parseable YAML."""


class SchemaViolation(WorldError):
    """The document parses but breaks the world.yaml schema."""


class DuplicateSibling(WorldError):
    """Two children of the same node share a name."""


class BadSegmentCount(WorldError):
    """An address does not have 4 or 5 segments."""


class EmptySegment(WorldError):
    """An address contains an empty segment."""


class NotFound(WorldError):
    """An address segment does not match any node."""


class NotAnArea(WorldError):
    """objects_at was asked about a node that is not an Area."""


class Level(IntEnum):
    WORLD = 0
    REGION = 1
    ZONE = 2
    AREA = 3
    OBJECT = 4


# world.yaml nesting key that introduces the children of each level.
CHILD_KEYS: dict[Level, str] = {
    Level.WORLD: "cities",
    Level.REGION: "places",
    Level.ZONE: "areas",
    Level.AREA: "objects",
}

MIN_SEGMENTS = 4
MAX_SEGMENTS = 5


@dataclass(frozen=True)
class Address:
    """A root-to-node name path with 4 (Area) or 5 (Object) segments."""

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not MIN_SEGMENTS <= len(self.segments) <= MAX_SEGMENTS:
            raise BadSegmentCount(
                f"address must have {MIN_SEGMENTS} or {MAX_SEGMENTS} segments, "
                f"got {len(self.segments)}"
            )
        for seg in self.segments:
            if not seg:
                raise EmptySegment("address contains an empty segment")
            if ":" in seg:
                raise EmptySegment(f"segment {seg!r} contains a colon")

    def __str__(self) -> str:
        return format_address(self.segments)


def format_address(segments: tuple[str, ...] | list[str] | Address) -> str:
    if isinstance(segments, Address):
        segments = segments.segments
    return ":".join(segments)


def parse_address(text: str) -> Address:
    """Parse a colon-separated address; round-trips with format_address."""
    return Address(tuple(text.split(":")))


@dataclass
class EnvNode:
    level: Level
    name: str
    description: str | None = None
    children: list[EnvNode] = field(default_factory=list)

    def child(self, name: str) -> EnvNode | None:
        for node in self.children:
            if node.name == name:
                return node
        return None


@dataclass
class EnvironmentTree:
    """A validated five-level environment; immutable after load."""

    root: EnvNode

    def resolve(self, addr: Address) -> EnvNode:
        """Return the node whose root-to-node name path equals the address."""
        if addr.segments[0] != self.root.name:
            raise NotFound(f"no node named {addr.segments[0]!r}")
        node = self.root
        for seg in addr.segments[1:]:
            nxt = node.child(seg)
            if nxt is None:
                raise NotFound(f"no node named {seg!r} under {node.name!r}")
            node = nxt
        return node

    def objects_at(self, addr: Address) -> list[tuple[str, str]]:
        """All Object children of an Area, in document order."""
        node = self.resolve(addr)
        if node.level is not Level.AREA:
            raise NotAnArea(f"{format_address(addr)} is a {node.level.name}, not an Area")
        return [(obj.name, obj.description or "") for obj in node.children]

    def tree_distance(self, a: Address, b: Address) -> int:
        """Number of edges on the unique tree path between two nodes."""
        self.resolve(a)
        self.resolve(b)
        pa, pb = a.segments, b.segments
        common = 0
        for x, y in zip(pa, pb):
            if x != y:
                break
            common += 1
        return (len(pa) - common) + (len(pb) - common)

    def iter_nodes(self):
        """Yield (address_segments, node) over the whole tree, preorder."""
        stack: deque[tuple[tuple[str, ...], EnvNode]] = deque(
            [((self.root.name,), self.root)]
        )
        while stack:
            path, node = stack.popleft()
            yield path, node
            for child in node.children:
                stack.append((path + (child.name,), child))

    def area_addresses(self) -> list[Address]:
        return [
            Address(path)
            for path, node in self.iter_nodes()
            if node.level is Level.AREA
        ]

    def serialize(self) -> str:
        """Render back to world.yaml text (same keys as parse_world reads)."""
        return yaml.safe_dump(_node_to_mapping(self.root), sort_keys=False, allow_unicode=True)


def _node_to_mapping(node: EnvNode) -> dict:
    out: dict = {"name": node.name}
    if node.description is not None:
        out["description"] = node.description
    if node.level is not Level.OBJECT:
        key = CHILD_KEYS[node.level]
        out[key] = [_node_to_mapping(c) for c in node.children]
    return out


def _build_node(raw: object, level: Level, context: str) -> EnvNode:
    if not isinstance(raw, dict):
        raise SchemaViolation(f"{context}: expected a mapping, got {type(raw).__name__}")
    name = raw.get("name")
    if not isinstance(name, str) or not name.strip():
        raise SchemaViolation(f"{context}: missing or empty 'name'")
    name = name.strip()
    description = raw.get("description")
    if description is not None and not isinstance(description, str):
        raise SchemaViolation(f"{context}: 'description' must be a string")
    if level is Level.OBJECT and not (description or "").strip():
        raise SchemaViolation(f"object {name!r} has no description")

    known = {"name", "description"}
    node = EnvNode(level=level, name=name, description=description)
    if level is Level.OBJECT:
        extra = set(raw) - known
        if extra:
            raise SchemaViolation(f"object {name!r} has unexpected keys {sorted(extra)}")
        return node

    child_key = CHILD_KEYS[level]
    known.add(child_key)
    extra = set(raw) - known
    if extra:
        raise SchemaViolation(
            f"{level.name.title()} {name!r} has unexpected keys {sorted(extra)}; "
            f"children belong under {child_key!r}"
        )
    children_raw = raw.get(child_key)
    if children_raw is None:
        children_raw = []
    if not isinstance(children_raw, list):
        raise SchemaViolation(f"{level.name.title()} {name!r}: {child_key!r} must be a list")

    seen: set[str] = set()
    for i, child_raw in enumerate(children_raw):
        child = _build_node(child_raw, Level(level + 1), f"{name}[{child_key}][{i}]")
        if child.name in seen:
            raise DuplicateSibling(f"duplicate sibling {child.name!r} under {name!r}")
        seen.add(child.name)
        node.children.append(child)
    return node


def parse_world(yaml_text: str) -> EnvironmentTree:
    """Parse and validate a world.yaml document into an EnvironmentTree."""
    try:
        raw = yaml.safe_load(yaml_text)
    except yaml.YAMLError as exc:
        raise MalformedDocument(f"not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaViolation("top level of world.yaml must be a mapping")
    return EnvironmentTree(root=_build_node(raw, Level.WORLD, "<root>"))
