"""Discrete-time sandbox simulation loop.

One step per hour; personas act strictly sequentially in registration
order. Each persona turn draws one abnormal-behavior roll from the seeded
RNG, asks the LM for a behavior (move / chat / none), validates it, and
records contextualized events. The loop is single-threaded by design and
fully deterministic given (seed, config, fixtures, scripted backend).
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime, timedelta

from . import events as events_mod
from . import lm as lm_mod
from . import prompts
from .events import EventStore
from .lm import LMBackend, LMError, LMParseFailed, LMRequest, ParseError
from .persona import (
    DailySchedule,
    PersonaScratch,
    SpatialMemory,
    build_schedule,
    fallback_schedule,
    regenerate_daily_plan,
)
from .world import Address, EnvironmentTree, Level, WorldError, format_address, parse_address

logger = logging.getLogger(__name__)

DEFAULT_START = datetime(2024, 9, 1, 0, 0)  # "2024-09-01 12:00 AM" read as midnight
CHAT_REACH_HOPS = 2
CHAT_MINUTES_PER_TURN = 15


class SimError(Exception):
    pass


class InvalidTarget(ParseError):
    """A proposed behavior target fails validation; counts as a parse attempt."""


@dataclass
class SimConfig:
    start_time: datetime = DEFAULT_START
    step: timedelta = timedelta(hours=1)
    abnormal_factor: float = 0.3
    chat_cycles: int = 2
    max_parse_attempts: int = 5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.abnormal_factor <= 1.0:
            raise ValueError("abnormal_factor must be in [0, 1]")
        if self.step <= timedelta(0):
            raise ValueError("step must be positive")
        if self.chat_cycles < 1:
            raise ValueError("chat_cycles must be >= 1")


def load_sim_config(path=None, **overrides) -> SimConfig:
    """SimConfig from an optional config file plus keyword overrides.

    The file may be YAML or flat key=value lines; recognized keys are
    start_time (ISO timestamp), step_hours, abnormal_factor, chat_cycles,
    max_parse_attempts, rng_seed. Explicit overrides win over file values.
    """
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if str(path).endswith((".yaml", ".yml")):
            import yaml

            raw = yaml.safe_load(text) or {}
            if not isinstance(raw, dict):
                raise SimError("config file must be a mapping")
        else:
            raw = {}
            for line in text.splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise SimError(f"bad config line (want key=value): {line!r}")
                key, _, value = line.partition("=")
                raw[key.strip()] = value.strip()
        values.update(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})

    kwargs: dict = {}
    if "start_time" in values:
        v = values["start_time"]
        kwargs["start_time"] = v if isinstance(v, datetime) else datetime.fromisoformat(str(v))
    if "step_hours" in values:
        kwargs["step"] = timedelta(hours=float(values["step_hours"]))
    if "abnormal_factor" in values:
        kwargs["abnormal_factor"] = float(values["abnormal_factor"])
    if "chat_cycles" in values:
        kwargs["chat_cycles"] = int(values["chat_cycles"])
    if "max_parse_attempts" in values:
        kwargs["max_parse_attempts"] = int(values["max_parse_attempts"])
    if "rng_seed" in values:
        kwargs["rng_seed"] = int(values["rng_seed"])
    return SimConfig(**kwargs)


@dataclass(frozen=True)
class Move:
    target: Address
    action: str = ""
    description: str | None = None
    detail: str | None = None


@dataclass(frozen=True)
class Chat:
    partner: str
    description: str | None = None


@dataclass(frozen=True)
class Idle:
    description: str | None = None
    detail: str | None = None


Behavior = Move | Chat | Idle


@dataclass
class ChatTranscript:
    participants: tuple[str, str]
    turns: list[tuple[str, str]]
    cycles: int

    def render(self) -> str:
        return "\n".join(f"{speaker}: {utterance}" for speaker, utterance in self.turns)


@dataclass
class SimulationReport:
    days: int
    steps: int
    events_recorded: int
    skipped_turns: int


@dataclass
class BehaviorContext:
    time: datetime
    location: Address
    task: str
    visible_objects: list[tuple[str, str]]
    nearby: list[tuple[str, Address]]  # other personas within chat reach
    known_areas: list[Address]
    locations: dict[str, Address]  # every persona's current location
    unavailable: set[str] = field(default_factory=set)  # already acted or in a chat


def _time_of_day(hour: int) -> str:
    if hour < 6:
        return "night"
    if hour < 12:
        return "morning"
    if hour < 18:
        return "afternoon"
    return "evening"


class Simulation:
    """Owns personas, clock, and RNG; external observers read the store."""

    def __init__(
        self,
        world: EnvironmentTree,
        personas: list[PersonaScratch],
        config: SimConfig,
        backend: LMBackend,
        store: EventStore | None = None,
        spatial: dict[str, SpatialMemory] | None = None,
    ):
        self.world = world
        self.personas = list(personas)
        self.config = config
        self.backend = backend
        self.store = store if store is not None else EventStore(world=world)
        if spatial is None:
            shared = SpatialMemory.from_world(world)
            spatial = {p.name: shared for p in self.personas}
        self.spatial = spatial
        self.rng = random.Random(config.rng_seed)
        self.clock = config.start_time
        self.locations: dict[str, Address] = {p.name: p.living_area for p in self.personas}
        self.schedules: dict[str, DailySchedule] = {}
        self.steps = 0
        self.skipped_turns = 0
        self.abnormal_draws = 0
        self.abnormal_hits = 0
        for p in self.personas:
            world.resolve(p.living_area)
            if not self.spatial[p.name].knows(p.living_area):
                raise SimError(f"{p.name}'s living area is not in their spatial memory")

    # -- day handling --------------------------------------------------------

    def _start_day(self, persona: PersonaScratch, day: Date) -> None:
        requirements = regenerate_daily_plan(
            persona, day, self.backend, self.config.max_parse_attempts
        )
        try:
            schedule = build_schedule(
                persona, requirements, day, self.backend, self.config.max_parse_attempts
            )
        except LMError:
            schedule = fallback_schedule(requirements, day)
        self.schedules[persona.name] = schedule

    # -- behavior selection ---------------------------------------------------

    def _context_for(self, persona: PersonaScratch, unavailable: set[str]) -> BehaviorContext:
        here = self.locations[persona.name]
        try:
            visible = self.world.objects_at(Address(here.segments[:4]))
        except WorldError:
            visible = []
        nearby = [
            (other.name, self.locations[other.name])
            for other in self.personas
            if other.name != persona.name
            and self.world.tree_distance(here, self.locations[other.name]) <= CHAT_REACH_HOPS
        ]
        schedule = self.schedules.get(persona.name)
        task = schedule.task_at(self.clock.hour) if schedule else "idle"
        return BehaviorContext(
            time=self.clock,
            location=here,
            task=task,
            visible_objects=visible,
            nearby=nearby,
            known_areas=[a for a in self.spatial[persona.name].addresses() if len(a.segments) == 4],
            locations=dict(self.locations),
            unavailable=set(unavailable),
        )

    def _behavior_extractor(self, persona: PersonaScratch, context: BehaviorContext):
        import json

        def extract(text: str) -> Behavior:
            body = text
            try:
                body = lm_mod.extract_fenced(text, "json")
            except ParseError:
                pass
            try:
                raw = json.loads(body.strip())
            except json.JSONDecodeError as exc:
                raise ParseError(f"behavior is not valid JSON: {exc}") from exc
            if not isinstance(raw, dict):
                raise ParseError("behavior must be a JSON object")
            kind = str(raw.get("behavior", "")).strip().lower()
            if kind == "none":
                return Idle(description=raw.get("description"), detail=raw.get("detail"))
            if kind == "move":
                target_text = raw.get("target")
                if not target_text:
                    raise InvalidTarget("move requires a target address")
                try:
                    target = parse_address(str(target_text))
                    self.world.resolve(target)
                except WorldError as exc:
                    raise InvalidTarget(f"move target invalid: {exc}") from exc
                if not self.spatial[persona.name].knows(target):
                    raise InvalidTarget(f"{persona.name} does not know {target_text}")
                return Move(
                    target=target,
                    action=str(raw.get("action", "")).strip(),
                    description=raw.get("description"),
                    detail=raw.get("detail"),
                )
            if kind == "chat":
                partner = str(raw.get("partner", "")).strip()
                if not partner or partner == persona.name:
                    raise InvalidTarget("chat requires another character as partner")
                if partner not in context.locations:
                    raise InvalidTarget(f"unknown chat partner {partner!r}")
                if partner in context.unavailable:
                    raise InvalidTarget(f"{partner} is occupied this hour")
                distance = self.world.tree_distance(
                    context.location, context.locations[partner]
                )
                if distance > CHAT_REACH_HOPS:
                    raise InvalidTarget(
                        f"{partner} is out of reach (distance {distance} > {CHAT_REACH_HOPS})"
                    )
                return Chat(partner=partner, description=raw.get("description"))
            raise ParseError(f"unknown behavior kind {kind!r}")

        return extract

    def select_behavior(
        self, persona: PersonaScratch, context: BehaviorContext, abnormal: bool
    ) -> Behavior:
        """Ask the LM for a validated behavior; invalid targets consume attempts."""
        abnormal_clause = ""
        if abnormal:
            abnormal_clause = (
                "Right now you feel a strong urge to break from routine: you may "
                "abandon the daily plan to pursue other activities, or seek out "
                "conflict with another character.\n"
            )
        prompt = prompts.render(
            "behavior",
            name=persona.name,
            time=context.time.strftime("%Y-%m-%d %H:%M"),
            location=format_address(context.location),
            task=context.task,
            objects=", ".join(name for name, _ in context.visible_objects) or "none",
            nearby=", ".join(f"{n} ({format_address(a)})" for n, a in context.nearby) or "none",
            known=", ".join(format_address(a) for a in context.known_areas),
            abnormal_clause=abnormal_clause,
        )
        behavior, _ = lm_mod.complete_parsed(
            self.backend,
            LMRequest(prompt),
            self._behavior_extractor(persona, context),
            self.config.max_parse_attempts,
        )
        return behavior

    # -- chat -----------------------------------------------------------------

    def run_chat(self, a: PersonaScratch, b: PersonaScratch, scene: str) -> ChatTranscript:
        """Alternating a,b,a,b turns; truncates at the last parseable turn."""
        if a.name == b.name:
            raise SimError("chat requires two distinct personas")
        transcript = ChatTranscript(participants=(a.name, b.name), turns=[], cycles=self.config.chat_cycles)
        speakers = [a.name, b.name] * self.config.chat_cycles
        for speaker in speakers:
            prompt = prompts.render(
                "chat_turn",
                a=a.name,
                b=b.name,
                scene=scene,
                transcript=transcript.render() or "(conversation opens)",
                speaker=speaker,
            )
            try:
                utterance, _ = lm_mod.complete_parsed(
                    self.backend,
                    LMRequest(prompt),
                    lm_mod.strip_text,
                    self.config.max_parse_attempts,
                )
            except LMParseFailed:
                logger.warning("chat between %s and %s truncated at %d turns", a.name, b.name, len(transcript.turns))
                break
            transcript.turns.append((speaker, utterance))
        return transcript

    # -- detail composition ----------------------------------------------------

    def _compose_detail(self, persona: PersonaScratch, location: Address, action_text: str) -> str:
        node = self.world.resolve(Address(location.segments[:4]))
        place = node.description or node.name
        try:
            objects = self.world.objects_at(Address(location.segments[:4]))
        except WorldError:
            objects = []
        setting = "; ".join(f"{n}: {d}" for n, d in objects) or "nothing notable"
        others = sorted(
            name
            for name, loc in self.locations.items()
            if name != persona.name and loc.segments[:4] == location.segments[:4]
        )
        company = ", ".join(others) if others else "no one else"
        return (
            f"It is {_time_of_day(self.clock.hour)} on {self.clock.date().isoformat()} "
            f"at {format_address(location)} ({place}). Around: {setting}. "
            f"Present: {company}. {persona.name} ({persona.innate.lower()}) {action_text} "
            f"Motivation: {persona.currently}"
        )

    # -- execution --------------------------------------------------------------

    def _execute(self, persona: PersonaScratch, behavior: Behavior) -> list[int]:
        start = self.clock
        end = self.clock + self.config.step
        if isinstance(behavior, Move):
            self.locations[persona.name] = behavior.target
            area = behavior.target.segments[3]
            action = behavior.action or "looks around"
            description = behavior.description or f"{persona.name} moves to {area} to {action}"
            detail = behavior.detail or self._compose_detail(
                persona, behavior.target, f"moves to {area} and {action}."
            )
            ev = events_mod.draft(
                start, end, [persona.name], behavior.target, description, detail, "move"
            )
            return [self.store.record(ev)]
        if isinstance(behavior, Chat):
            partner = next(p for p in self.personas if p.name == behavior.partner)
            scene = (
                f"{_time_of_day(self.clock.hour)} at {format_address(self.locations[persona.name])}; "
                f"{persona.name} approaches {partner.name}."
            )
            transcript = self.run_chat(persona, partner, scene)
            if not transcript.turns:
                return []
            description = behavior.description or f"{persona.name} talks with {partner.name}"
            chat_end = min(
                end, start + timedelta(minutes=CHAT_MINUTES_PER_TURN * len(transcript.turns))
            )
            ev = events_mod.draft(
                start,
                chat_end,
                [persona.name, partner.name],
                self.locations[persona.name],
                description,
                transcript.render(),
                "chat",
            )
            return [self.store.record(ev)]
        # Idle: still an event, flagged low-salience so retrieval can filter.
        description = behavior.description or "idle/reflection"
        detail = behavior.detail or self._compose_detail(
            persona, self.locations[persona.name], "pauses to rest and reflect."
        )
        ev = events_mod.draft(
            start,
            end,
            [persona.name],
            self.locations[persona.name],
            description,
            detail,
            "none",
            salience="low",
        )
        return [self.store.record(ev)]

    # -- stepping ----------------------------------------------------------------

    def run_step(self) -> list[int]:
        """Advance one step: every persona perceives, rolls, acts, records."""
        if self.clock.hour == 0 and self.clock.minute == 0:
            for persona in self.personas:
                self._start_day(persona, self.clock.date())

        recorded: list[int] = []
        acted: set[str] = set()  # has an event (or skip) this step; chat partners included
        for persona in self.personas:
            # The abnormal roll is drawn for every persona every step, even
            # when the turn is consumed by an earlier persona's chat, so
            # replay stays stable no matter which behaviors occur.
            roll = self.rng.random()
            abnormal = roll < self.config.abnormal_factor
            self.abnormal_draws += 1
            if abnormal:
                self.abnormal_hits += 1

            if persona.name in acted:
                continue  # pulled into a chat earlier this step

            context = self._context_for(persona, unavailable=acted)
            try:
                behavior = self.select_behavior(persona, context, abnormal)
            except (LMParseFailed, lm_mod.Timeout):
                self.skipped_turns += 1
                continue
            recorded.extend(self._execute(persona, behavior))
            acted.add(persona.name)
            if isinstance(behavior, Chat):
                acted.add(behavior.partner)

        self.clock = self.clock + self.config.step
        self.steps += 1
        return recorded

    def run_days(self, n: int) -> SimulationReport:
        """Execute n full days of steps; report totals are exact counters."""
        if n < 1:
            raise ValueError("n must be >= 1")
        steps_per_day = int(timedelta(days=1) / self.config.step)
        events_before = len(self.store)
        skipped_before = self.skipped_turns
        steps_run = 0
        for _ in range(n * steps_per_day):
            self.run_step()
            steps_run += 1
        return SimulationReport(
            days=n,
            steps=steps_run,
            events_recorded=len(self.store) - events_before,
            skipped_turns=self.skipped_turns - skipped_before,
        )
