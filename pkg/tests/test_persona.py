from __future__ import annotations

import json
from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from storyloom import fixtures as fx
from storyloom.lm import ScriptedBackend
from storyloom.persona import (
    MalformedDocument,
    MissingField,
    PersonaScratch,
    SpatialMemory,
    UnresolvableLivingArea,
    build_schedule,
    fallback_schedule,
    parse_scratch,
    regenerate_daily_plan,
)
from storyloom.world import parse_address

DAY = date(2024, 9, 1)


def _claire(story1_tree=None) -> PersonaScratch:
    return parse_scratch(fx.story1_text("scratch.json"))[0]


# -- parse_scratch -------------------------------------------------------------


def test_story1_scratch_parses(story1_tree):
    personas = parse_scratch(fx.story1_text("scratch.json"), world=story1_tree)
    assert len(personas) == 6
    claire = personas[0]
    assert claire.name == "Claire Matthews"
    assert claire.age == 32
    assert str(claire.living_area) == "Frozen City:City Center:Highland Apartments:Room 704"
    assert personas[2].living_area.segments[2] == "Abandoned Warehouse"


def test_empty_list_gives_empty_result():
    assert parse_scratch("[]") == []


def test_unresolvable_living_area(story1_tree):
    entries = json.loads(fx.story1_text("scratch.json"))
    entries[0]["Living Area"] = "Frozen City:Nowhere:X:Y"
    with pytest.raises(UnresolvableLivingArea):
        parse_scratch(json.dumps(entries), world=story1_tree)


def test_five_level_living_area_rejected():
    entries = json.loads(fx.story1_text("scratch.json"))
    entries[0]["Living Area"] += ":Research Desk"
    with pytest.raises(UnresolvableLivingArea):
        parse_scratch(json.dumps(entries))


def test_missing_field():
    entries = json.loads(fx.story1_text("scratch.json"))
    del entries[1]["Lifestyle"]
    with pytest.raises(MissingField, match="Lifestyle"):
        parse_scratch(json.dumps(entries))


def test_malformed_document():
    with pytest.raises(MalformedDocument):
        parse_scratch("{not json")
    with pytest.raises(MalformedDocument):
        parse_scratch('{"outer": "not a list"}')


# -- spatial memory ---------------------------------------------------------------


def test_spatial_memory_resolves_and_contains_living_areas(story1_tree, story1_personas):
    memory = SpatialMemory.from_json(fx.story1_text("spatial_memory.json"))
    memory.validate_against(story1_tree)
    for p in story1_personas:
        assert memory.knows(p.living_area)


def test_spatial_memory_knows_objects(story1_spatial):
    assert story1_spatial.knows(parse_address("Frozen City:City Center:Tech Hub:Room 5:Server Rack"))
    assert not story1_spatial.knows(parse_address("Frozen City:City Center:Tech Hub:Room 5:Toaster"))
    assert not story1_spatial.knows(parse_address("Frozen City:City Center:Mall:Shop 1"))


def test_spatial_memory_from_world_matches_fixture(story1_tree):
    built = SpatialMemory.from_world(story1_tree)
    shipped = SpatialMemory.from_json(fx.story1_text("spatial_memory.json"))
    assert built.tree == shipped.tree


def test_spatial_memory_add():
    memory = SpatialMemory({})
    addr = parse_address("W:R:Z:A:Obj")
    memory.add(addr)
    assert memory.knows(addr)
    assert memory.knows(parse_address("W:R:Z:A"))


# -- daily plans -------------------------------------------------------------------


def test_regenerate_plan_passthrough():
    persona = _claire()
    backend = ScriptedBackend.from_pairs(
        [("Plan the day", ["1. task one\n2. task two\n3. task three\n4. task four"])]
    )
    items = regenerate_daily_plan(persona, DAY, backend)
    assert items == ["task one", "task two", "task three", "task four"]
    assert persona.plan_history[-1].items == items


def test_regenerate_plan_keeps_previous_on_failure(caplog):
    persona = _claire()
    before = list(persona.daily_plan_requirement)
    backend = ScriptedBackend.from_pairs([("Plan the day", ["   "] * 5)])
    with caplog.at_level("WARNING"):
        items = regenerate_daily_plan(persona, DAY, backend)
    assert items == before
    assert any("keeping previous plan" in r.message for r in caplog.records)
    assert persona.plan_history[-1].items == before


def test_regenerate_plan_echoes_fixture_plan():
    persona = _claire()
    scripted = "\n".join(
        f"{i+1}. {t}"
        for i, t in enumerate(
            [
                "Analyze the frozen state phenomenon",
                "Conduct experiments on temporal mechanics",
                "Document findings",
                "Collaborate with Dr. Reed",
            ]
        )
    )
    backend = ScriptedBackend.from_pairs([("Plan the day", [scripted])])
    assert regenerate_daily_plan(persona, DAY, backend) == [
        "Analyze the frozen state phenomenon",
        "Conduct experiments on temporal mechanics",
        "Document findings",
        "Collaborate with Dr. Reed",
    ]


def test_plan_trimmed_to_eight_items():
    persona = _claire()
    backend = ScriptedBackend.from_pairs(
        [("Plan the day", ["\n".join(f"{i}. t{i}" for i in range(1, 12))])]
    )
    assert len(regenerate_daily_plan(persona, DAY, backend)) == 8


def test_plan_history_one_entry_per_day():
    persona = _claire()
    backend = ScriptedBackend.from_pairs([("Plan the day", ["1. a"] * 3)])
    for day in (date(2024, 9, 1), date(2024, 9, 2), date(2024, 9, 3)):
        regenerate_daily_plan(persona, day, backend)
    assert [r.date for r in persona.plan_history] == [
        date(2024, 9, 1),
        date(2024, 9, 2),
        date(2024, 9, 3),
    ]


# -- schedules ----------------------------------------------------------------------


def test_schedule_passthrough_hours():
    persona = _claire()
    reqs = ["alpha", "beta", "gamma", "delta"]
    backend = ScriptedBackend.from_pairs(
        [("hourly schedule", ["09:00 - alpha\n10:00 - beta\n11:00 - gamma\n12:00 - delta"])]
    )
    schedule = build_schedule(persona, reqs, DAY, backend)
    assert schedule.slots[9:13] == reqs
    assert len(schedule.slots) == 24


def test_schedule_missing_early_hours_get_filler():
    persona = _claire()
    backend = ScriptedBackend.from_pairs([("hourly schedule", ["09:00 - alpha"])])
    schedule = build_schedule(persona, ["alpha"], DAY, backend)
    assert schedule.slots[0:6] == ["sleep"] * 6
    assert schedule.slots[7] == "idle"
    assert len(schedule.slots) == 24


def test_schedule_fallback_even_spread():
    # Hand-computed spread for k=4 over 09:00-21:00: stride 3.
    persona = _claire()
    reqs = ["task 1", "task 2", "task 3", "task 4"]
    backend = ScriptedBackend.from_pairs([("hourly schedule", ["nonsense"] * 5)])
    schedule = build_schedule(persona, reqs, DAY, backend)
    assert schedule.slots[9] == "task 1"
    assert schedule.slots[12] == "task 2"
    assert schedule.slots[15] == "task 3"
    assert schedule.slots[18] == "task 4"


def test_schedule_patches_uncovered_requirements():
    persona = _claire()
    backend = ScriptedBackend.from_pairs([("hourly schedule", ["10:00 - alpha"])])
    schedule = build_schedule(persona, ["alpha", "beta"], DAY, backend)
    assert any("beta" in slot for slot in schedule.slots)


@given(
    st.lists(
        st.text(st.characters(min_codepoint=97, max_codepoint=122), min_size=3, max_size=10),
        min_size=1,
        max_size=8,
        unique=True,
    )
)
def test_fallback_schedule_totality(reqs):
    schedule = fallback_schedule(reqs, DAY)
    assert len(schedule.slots) == 24
    for req in reqs:
        assert any(req.lower() in slot.lower() for slot in schedule.slots)
