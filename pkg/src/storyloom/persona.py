"""Character identity, spatial memory, and daily-plan/schedule machinery."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date as Date

from . import lm as lm_mod
from . import prompts
from .lm import LMBackend, LMParseFailed, LMRequest, ParseError
from .world import Address, EnvironmentTree, Level, NotFound, WorldError, parse_address

logger = logging.getLogger(__name__)

SCRATCH_FIELDS = (
    "Name",
    "Age",
    "Innate",
    "Learned",
    "Currently",
    "Lifestyle",
    "Living Area",
    "Daily Plan Requirement",
)

MAX_PLAN_ITEMS = 8
SLEEP_HOURS = range(0, 6)  # filler for 00:00-06:00
FALLBACK_WINDOW_START = 9  # fallback schedules spread tasks over 09:00-21:00
FALLBACK_WINDOW_HOURS = 12


class PersonaError(Exception):
    pass


class MalformedDocument(PersonaError):
    pass


class MissingField(PersonaError):
    pass


class UnresolvableLivingArea(PersonaError):
    """The living area is not a 4-level address resolving in the world."""


@dataclass
class DailyPlanRecord:
    date: Date
    items: list[str]


@dataclass
class PersonaScratch:
    name: str
    age: int
    innate: str
    learned: str
    currently: str
    lifestyle: str
    living_area: Address
    daily_plan_requirement: list[str]
    plan_history: list[DailyPlanRecord] = field(default_factory=list)

    def identity_summary(self) -> str:
        """One-paragraph identity text (the stable set used for CBC judging)."""
        return (
            f"Name: {self.name}\nAge: {self.age}\nInnate: {self.innate}\n"
            f"Learned: {self.learned}\nCurrently: {self.currently}\n"
            f"Lifestyle: {self.lifestyle}"
        )


def parse_scratch(json_text: str, world: EnvironmentTree | None = None) -> list[PersonaScratch]:
    """Parse a scratch.json document (outer layer a list) into personas.

    When a world tree is supplied, each Living Area is cross-validated
    against it.
    """
    try:
        raw = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise MalformedDocument("outer layer of scratch.json must be a list")

    personas: list[PersonaScratch] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise MalformedDocument(f"entry {i} is not an object")
        for fname in SCRATCH_FIELDS:
            if fname not in entry:
                raise MissingField(f"entry {i} missing field {fname!r}")
        name = str(entry["Name"]).strip()
        if not name:
            raise MissingField(f"entry {i} has an empty Name")
        if name in seen:
            raise MalformedDocument(f"duplicate persona name {name!r}")
        seen.add(name)
        try:
            age = int(entry["Age"])
        except (TypeError, ValueError) as exc:
            raise MalformedDocument(f"{name}: Age must be an integer") from exc
        if age <= 0:
            raise MalformedDocument(f"{name}: Age must be positive")

        area_text = str(entry["Living Area"])
        try:
            living_area = parse_address(area_text)
        except WorldError as exc:
            raise UnresolvableLivingArea(f"{name}: {exc}") from exc
        if len(living_area.segments) != 4:
            raise UnresolvableLivingArea(
                f"{name}: living area must have exactly four levels, got "
                f"{len(living_area.segments)}"
            )
        if world is not None:
            try:
                world.resolve(living_area)
            except NotFound as exc:
                raise UnresolvableLivingArea(f"{name}: {exc}") from exc

        plan = entry["Daily Plan Requirement"]
        if isinstance(plan, str):
            plan = [line for line in (s.strip() for s in plan.splitlines()) if line]
        if not isinstance(plan, list) or not plan:
            raise MissingField(f"{name}: Daily Plan Requirement must be a non-empty list")

        personas.append(
            PersonaScratch(
                name=name,
                age=age,
                innate=str(entry["Innate"]),
                learned=str(entry["Learned"]),
                currently=str(entry["Currently"]),
                lifestyle=str(entry["Lifestyle"]),
                living_area=living_area,
                daily_plan_requirement=[str(t) for t in plan],
            )
        )
    return personas


class SpatialMemory:
    """Addresses a persona knows, stored as the world-mirroring nested map.

    spatial_memory.json is a JSON object tree with the same nesting as
    world.yaml: world -> region -> zone -> area -> [object names].
    """

    def __init__(self, tree: dict):
        self.tree = tree

    @classmethod
    def from_json(cls, json_text: str) -> "SpatialMemory":
        try:
            raw = json.loads(json_text)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise MalformedDocument("spatial_memory.json must be a JSON object")
        return cls(raw)

    @classmethod
    def from_world(cls, world: EnvironmentTree) -> "SpatialMemory":
        """Full knowledge of the given world."""
        def build(node):
            if node.level is Level.AREA:
                return [c.name for c in node.children]
            return {c.name: build(c) for c in node.children}

        return cls({world.root.name: build(world.root)})

    def to_json(self) -> str:
        return json.dumps(self.tree, indent=2, ensure_ascii=False)

    def addresses(self) -> list[Address]:
        """All known 4- and 5-segment addresses."""
        out: list[Address] = []
        for w_name, regions in self.tree.items():
            for r_name, zones in (regions or {}).items():
                for z_name, areas in (zones or {}).items():
                    for a_name, objects in (areas or {}).items():
                        out.append(Address((w_name, r_name, z_name, a_name)))
                        for o_name in objects or []:
                            out.append(Address((w_name, r_name, z_name, a_name, o_name)))
        return out

    def knows(self, addr: Address) -> bool:
        node = self.tree
        for seg in addr.segments[:-1]:
            if not isinstance(node, dict) or seg not in node:
                return False
            node = node[seg]
        last = addr.segments[-1]
        if isinstance(node, dict):
            return last in node
        if isinstance(node, list):
            return last in node
        return False

    def add(self, addr: Address) -> None:
        node = self.tree
        for seg in addr.segments[:3]:
            node = node.setdefault(seg, {})
        area = addr.segments[3]
        if len(addr.segments) == 4:
            node.setdefault(area, {})
        else:
            objects = node.setdefault(area, [])
            if isinstance(objects, list) and addr.segments[4] not in objects:
                objects.append(addr.segments[4])

    def validate_against(self, world: EnvironmentTree) -> None:
        """Every stored address must resolve in the world tree."""
        for addr in self.addresses():
            world.resolve(addr)


@dataclass
class DailySchedule:
    date: Date
    slots: list[str]  # exactly 24, one per hour

    def __post_init__(self) -> None:
        if len(self.slots) != 24:
            raise ValueError(f"schedule needs 24 slots, got {len(self.slots)}")

    def task_at(self, hour: int) -> str:
        return self.slots[hour]


def _plan_extractor(text: str) -> list[str]:
    items = lm_mod.numbered_lines(text, at_most=MAX_PLAN_ITEMS)
    return items


def regenerate_daily_plan(
    persona: PersonaScratch,
    date: Date,
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> list[str]:
    """Replace the persona's daily plan with a fresh LM-proposed list.

    Called once per simulated day start. On parse failure the previous
    day's list is kept. Either way the day's plan is appended to the
    persona's plan history.
    """
    previous = "\n".join(persona.daily_plan_requirement)
    prompt = prompts.render(
        "plan",
        name=persona.name,
        date=date.isoformat(),
        innate=persona.innate,
        currently=persona.currently,
        lifestyle=persona.lifestyle,
        previous=previous,
    )
    try:
        items, _ = lm_mod.complete_parsed(lm, LMRequest(prompt), _plan_extractor, attempts)
        persona.daily_plan_requirement = items
    except LMParseFailed:
        logger.warning(
            "daily plan regeneration failed for %s on %s; keeping previous plan",
            persona.name,
            date,
        )
    persona.plan_history.append(
        DailyPlanRecord(date=date, items=list(persona.daily_plan_requirement))
    )
    return persona.daily_plan_requirement


def _schedule_extractor(text: str) -> dict[int, str]:
    import re

    assignments: dict[int, str] = {}
    for line in text.splitlines():
        m = re.match(r"^\s*(\d{1,2}):00\s*[-–]\s*(.+?)\s*$", line)
        if not m:
            continue
        hour = int(m.group(1))
        if 0 <= hour <= 23 and hour not in assignments:
            assignments[hour] = m.group(2)
    if not assignments:
        raise ParseError("no 'HH:00 - task' lines in completion")
    return assignments


def fallback_schedule(requirements: list[str], date: Date) -> DailySchedule:
    """Deterministic schedule: requirements spread evenly over 09:00-21:00."""
    slots: list[str | None] = [None] * 24
    stride = max(1, FALLBACK_WINDOW_HOURS // len(requirements))
    for i, req in enumerate(requirements):
        hour = min(FALLBACK_WINDOW_START + i * stride, 23)
        slots[hour] = req
    return DailySchedule(date=date, slots=_fill(slots))


def _fill(slots: list[str | None]) -> list[str]:
    return [
        slot if slot is not None else ("sleep" if h in SLEEP_HOURS else "idle")
        for h, slot in enumerate(slots)
    ]


def build_schedule(
    persona: PersonaScratch,
    requirements: list[str],
    date: Date,
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> DailySchedule:
    """24 hourly slots covering every requirement.

    Unfilled hours default to sleep (00:00-06:00) or idle; requirements the
    LM left out are patched into empty hours so coverage always holds. On
    parse failure the even-spread fallback is used instead.
    """
    if not requirements:
        raise ValueError("requirements must be non-empty")
    prompt = prompts.render(
        "schedule",
        name=persona.name,
        date=date.isoformat(),
        lifestyle=persona.lifestyle,
        requirements="\n".join(f"{i+1}. {r}" for i, r in enumerate(requirements)),
    )
    try:
        assignments, _ = lm_mod.complete_parsed(
            lm, LMRequest(prompt), _schedule_extractor, attempts
        )
    except LMParseFailed:
        logger.warning("schedule build failed for %s on %s; using fallback", persona.name, date)
        return fallback_schedule(requirements, date)

    slots: list[str | None] = [None] * 24
    for hour, task in assignments.items():
        slots[hour] = task

    for req in requirements:
        covered = any(req.lower() in (s or "").lower() for s in slots)
        if covered:
            continue
        hour = next((h for h in range(FALLBACK_WINDOW_START, 24) if slots[h] is None), None)
        if hour is None:
            hour = next((h for h in range(24) if slots[h] is None), None)
        if hour is None:
            slots[23] = f"{slots[23]}; {req}"
        else:
            slots[hour] = req
    return DailySchedule(date=date, slots=_fill(slots))
