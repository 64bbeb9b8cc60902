from __future__ import annotations

import json
from datetime import datetime, timedelta

import pytest

from storyloom.lm import ScriptedBackend
from storyloom.sim import Chat, Idle, Move, SimConfig, Simulation, load_sim_config
from storyloom.world import parse_address

ROOM_5 = "Frozen City:City Center:Tech Hub:Room 5"


def _none_script() -> ScriptedBackend:
    """Every persona plans, schedules, and idles; all prompts answered."""
    backend = ScriptedBackend([])
    backend.add("Plan the day", ["1. keep busy\n2. stay safe"], cycle=True)
    backend.add("hourly schedule", ["09:00 - keep busy\n10:00 - stay safe"], cycle=True)
    backend.add("Choose the next behavior", [json.dumps({"behavior": "none"})], cycle=True)
    backend.add("Continue the conversation", ["Fine."], cycle=True)
    return backend


def _sim(story1_tree, story1_personas, backend, **config_kwargs) -> Simulation:
    return Simulation(
        story1_tree,
        story1_personas,
        SimConfig(**config_kwargs),
        backend,
    )


# -- abnormal roll -----------------------------------------------------------------


def test_abnormal_factor_zero_never_fires(story1_tree, story1_personas):
    sim = _sim(story1_tree, story1_personas, _none_script(), abnormal_factor=0.0, rng_seed=1)
    for _ in range(4):
        sim.run_step()
    assert sim.abnormal_draws == 4 * 6
    assert sim.abnormal_hits == 0


def test_abnormal_factor_one_always_fires(story1_tree, story1_personas):
    sim = _sim(story1_tree, story1_personas, _none_script(), abnormal_factor=1.0, rng_seed=1)
    for _ in range(4):
        sim.run_step()
    assert sim.abnormal_hits == sim.abnormal_draws == 24


def test_abnormal_rate_near_factor_over_1000_draws(story1_tree, story1_personas):
    sim = _sim(story1_tree, story1_personas, _none_script(), abnormal_factor=0.3, rng_seed=11)
    for _ in range(167):  # 167 steps x 6 personas = 1002 draws
        sim.run_step()
    assert sim.abnormal_draws == 1002
    rate = sim.abnormal_hits / sim.abnormal_draws
    assert abs(rate - 0.3) <= 0.03


def test_abnormal_prompt_carries_license(story1_tree, story1_personas):
    backend = _none_script()
    sim = _sim(story1_tree, story1_personas, backend, abnormal_factor=1.0, rng_seed=1)
    sim.run_step()
    behavior_prompts = backend.prompts(containing="Choose the next behavior")
    assert behavior_prompts
    assert all("break from routine" in p for p in behavior_prompts)


# -- determinism --------------------------------------------------------------------


def _run_once(story1_tree, story1_personas, sim_backend, tmp_path, name):
    sim = Simulation(story1_tree, story1_personas, SimConfig(rng_seed=42), sim_backend)
    sim.run_days(1)
    path = tmp_path / name
    sim.store.export_log(path)
    return path.read_bytes()


def test_fixed_seed_reproduces_event_log_bytes(story1_tree, tmp_path, sim_backend):
    from storyloom import fixtures as fx
    from storyloom.lm import ScriptedBackend
    from storyloom.persona import parse_scratch

    runs = []
    for name in ("a.jsonl", "b.jsonl"):
        personas = parse_scratch(fx.story1_text("scratch.json"), world=story1_tree)
        backend = ScriptedBackend.from_file(fx.story1_path("sim_script.jsonl"))
        runs.append(_run_once(story1_tree, personas, backend, tmp_path, name))
    assert runs[0] == runs[1]


# -- run_days ------------------------------------------------------------------------


def test_run_days_counts(story1_tree, story1_personas):
    sim = _sim(story1_tree, story1_personas, _none_script(), rng_seed=5)
    report = sim.run_days(1)
    assert report.days == 1
    assert report.steps == 24
    assert report.events_recorded <= 6 * 24
    assert report.skipped_turns == 0


def test_run_days_rejects_zero(story1_tree, story1_personas):
    sim = _sim(story1_tree, story1_personas, _none_script())
    with pytest.raises(ValueError):
        sim.run_days(0)


def test_plan_history_grows_per_day(story1_tree, story1_personas):
    sim = _sim(story1_tree, story1_personas, _none_script(), rng_seed=5)
    sim.run_days(2)
    for persona in sim.personas:
        assert len(persona.plan_history) == 2


# -- chat ----------------------------------------------------------------------------


def test_run_chat_two_cycles_alternates(story1_tree, story1_personas):
    backend = ScriptedBackend.from_pairs(
        [("Continue the conversation", ["line 1", "line 2", "line 3", "line 4"])]
    )
    sim = _sim(story1_tree, story1_personas, backend, chat_cycles=2)
    a, b = sim.personas[0], sim.personas[4]
    transcript = sim.run_chat(a, b, "test scene")
    assert [s for s, _ in transcript.turns] == [a.name, b.name, a.name, b.name]
    assert len(transcript.turns) == 4


def test_run_chat_one_cycle(story1_tree, story1_personas):
    backend = ScriptedBackend.from_pairs([("Continue the conversation", ["hi", "hello"])])
    sim = _sim(story1_tree, story1_personas, backend, chat_cycles=1)
    transcript = sim.run_chat(sim.personas[0], sim.personas[1], "scene")
    assert len(transcript.turns) == 2


def test_run_chat_truncates_after_third_turn(story1_tree, story1_personas):
    backend = ScriptedBackend([])
    backend.add("Continue the conversation", ["one", "two", "three"] + ["  "] * 5, cycle=False)
    sim = _sim(story1_tree, story1_personas, backend, chat_cycles=2)
    transcript = sim.run_chat(sim.personas[0], sim.personas[1], "scene")
    assert len(transcript.turns) == 3


def test_truncated_chat_still_recorded_with_both_participants(story1_tree, story1_personas):
    backend = ScriptedBackend([])
    backend.add("Continue the conversation", ["one", "two", "three"] + ["  "] * 5)
    sim = _sim(story1_tree, story1_personas, backend, chat_cycles=2)
    claire, chris = sim.personas[0], sim.personas[4]
    sim.locations[claire.name] = parse_address(ROOM_5)
    ids = sim._execute(claire, Chat(partner=chris.name))
    event = sim.store.get(ids[0])
    assert set(event.participants) == {claire.name, chris.name}
    assert event.kind == "chat"
    assert event.detail.count("\n") == 2  # three transcript lines
    assert event.end_time - event.start_time == timedelta(minutes=45)


def test_chat_with_zero_turns_records_nothing(story1_tree, story1_personas):
    backend = ScriptedBackend([])
    backend.add("Continue the conversation", ["  "] * 10, cycle=True)
    sim = _sim(story1_tree, story1_personas, backend, chat_cycles=2)
    claire, chris = sim.personas[0], sim.personas[4]
    sim.locations[claire.name] = parse_address(ROOM_5)
    assert sim._execute(claire, Chat(partner=chris.name)) == []
    assert len(sim.store) == 0


# -- behavior selection ------------------------------------------------------------------


def _context(sim, persona):
    return sim._context_for(persona, unavailable=set())


def test_select_behavior_none(story1_tree, story1_personas):
    backend = ScriptedBackend.from_pairs(
        [("Choose the next behavior", [json.dumps({"behavior": "none"})])]
    )
    sim = _sim(story1_tree, story1_personas, backend)
    behavior = sim.select_behavior(sim.personas[0], _context(sim, sim.personas[0]), False)
    assert isinstance(behavior, Idle)


def test_select_behavior_valid_move(story1_tree, story1_personas):
    payload = json.dumps({"behavior": "move", "target": ROOM_5, "action": "run diagnostics"})
    backend = ScriptedBackend.from_pairs([("Choose the next behavior", [payload])])
    sim = _sim(story1_tree, story1_personas, backend)
    behavior = sim.select_behavior(sim.personas[0], _context(sim, sim.personas[0]), False)
    assert isinstance(behavior, Move)
    assert str(behavior.target) == ROOM_5
    assert behavior.action == "run diagnostics"


def test_select_behavior_retries_bad_target(story1_tree, story1_personas):
    bad = json.dumps({"behavior": "move", "target": "Frozen City:City Center:Tech Hub:Room 9"})
    good = json.dumps({"behavior": "none"})
    backend = ScriptedBackend.from_pairs([("Choose the next behavior", [bad, good])])
    sim = _sim(story1_tree, story1_personas, backend)
    behavior = sim.select_behavior(sim.personas[0], _context(sim, sim.personas[0]), False)
    assert isinstance(behavior, Idle)
    assert backend.call_count == 2


def test_select_behavior_rejects_unknown_move_outside_memory(story1_tree, story1_personas):
    from storyloom.persona import SpatialMemory

    # Claire only knows her own apartment; Room 5 resolves but is unknown to her.
    limited = SpatialMemory({})
    limited.add(parse_address("Frozen City:City Center:Highland Apartments:Room 704"))
    spatial = {p.name: SpatialMemory.from_world(story1_tree) for p in story1_personas}
    spatial["Claire Matthews"] = limited
    payload = json.dumps({"behavior": "move", "target": ROOM_5, "action": "visit"})
    backend = ScriptedBackend.from_pairs(
        [("Choose the next behavior", [payload, json.dumps({"behavior": "none"})])]
    )
    sim = Simulation(story1_tree, story1_personas, SimConfig(), backend, spatial=spatial)
    behavior = sim.select_behavior(sim.personas[0], _context(sim, sim.personas[0]), False)
    assert isinstance(behavior, Idle)


def test_select_behavior_rejects_distant_chat_partner(story1_tree, story1_personas):
    # Claire (Highland Apartments) to Reed (Suburbs): distance 6 > 2.
    chat = json.dumps({"behavior": "chat", "partner": "Dr. Harold Reed"})
    backend = ScriptedBackend.from_pairs(
        [("Choose the next behavior", [chat, json.dumps({"behavior": "none"})])]
    )
    sim = _sim(story1_tree, story1_personas, backend)
    behavior = sim.select_behavior(sim.personas[0], _context(sim, sim.personas[0]), False)
    assert isinstance(behavior, Idle)
    assert backend.call_count == 2


# -- step mechanics --------------------------------------------------------------------


def test_skipped_turns_counted_exactly(story1_tree, story1_personas):
    backend = ScriptedBackend([])
    backend.add("Plan the day", ["1. keep busy"], cycle=True)
    backend.add("hourly schedule", ["09:00 - keep busy"], cycle=True)
    # Reed's behavior prompt always fails to parse; everyone else idles.
    backend.add(
        "Choose the next behavior for Dr. Harold Reed", ["not json at all"], cycle=True
    )
    backend.add("Choose the next behavior", [json.dumps({"behavior": "none"})], cycle=True)
    sim = _sim(story1_tree, story1_personas, backend, rng_seed=2, max_parse_attempts=5)
    for _ in range(3):
        sim.run_step()
    assert sim.skipped_turns == 3
    assert all("Dr. Harold Reed" not in ev.participants for ev in sim.store)


def test_chat_consumes_partner_turn(story1_tree, story1_personas):
    backend = ScriptedBackend([])
    backend.add("Plan the day", ["1. keep busy"], cycle=True)
    backend.add("hourly schedule", ["09:00 - keep busy"], cycle=True)
    backend.add("Continue the conversation", ["a", "b", "c", "d"], cycle=True)
    # Claire moves to Chris's office, then chats him; Chris would otherwise idle.
    backend.add(
        "Choose the next behavior for Claire Matthews",
        [
            json.dumps({"behavior": "move", "target": ROOM_5, "action": "visit Chris"}),
            json.dumps({"behavior": "chat", "partner": "Chris Tanaka"}),
        ],
    )
    backend.add("Choose the next behavior", [json.dumps({"behavior": "none"})], cycle=True)
    sim = _sim(story1_tree, story1_personas, backend, rng_seed=2)
    sim.run_step()
    sim.run_step()
    chats = [ev for ev in sim.store if ev.kind == "chat"]
    assert len(chats) == 1
    assert set(chats[0].participants) == {"Claire Matthews", "Chris Tanaka"}
    # In the chat step Chris produced no separate event of his own.
    step2 = [ev for ev in sim.store if ev.start_time == datetime(2024, 9, 1, 1)]
    chris_events = [ev for ev in step2 if "Chris Tanaka" in ev.participants]
    assert chris_events == chats


def test_sequential_times_and_no_overlap(story1_tree, sim_backend):
    from storyloom import fixtures as fx
    from storyloom.persona import parse_scratch

    personas = parse_scratch(fx.story1_text("scratch.json"), world=story1_tree)
    sim = Simulation(story1_tree, personas, SimConfig(rng_seed=42), sim_backend)
    sim.run_days(1)
    events = list(sim.store)
    # ids assigned in processing order: start times never decrease.
    starts = [ev.start_time for ev in events]
    assert starts == sorted(starts)
    by_persona: dict[str, list] = {}
    for ev in events:
        for name in ev.participants:
            by_persona.setdefault(name, []).append(ev)
    for evs in by_persona.values():
        evs.sort(key=lambda e: e.start_time)
        for prev, nxt in zip(evs, evs[1:]):
            assert nxt.start_time >= prev.end_time


# -- config loading -----------------------------------------------------------------------


def test_load_sim_config_key_value(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text(
        "start_time=2024-09-01T00:00:00\nstep_hours=1\nabnormal_factor=0.5\n"
        "chat_cycles=3\nmax_parse_attempts=2\nrng_seed=99\n"
    )
    config = load_sim_config(path)
    assert config.start_time == datetime(2024, 9, 1)
    assert config.abnormal_factor == 0.5
    assert config.chat_cycles == 3
    assert config.max_parse_attempts == 2
    assert config.rng_seed == 99


def test_cli_flags_override_config_file(tmp_path):
    path = tmp_path / "sim.yaml"
    path.write_text("abnormal_factor: 0.5\nrng_seed: 1\n")
    config = load_sim_config(path, abnormal_factor=0.0, rng_seed=None)
    assert config.abnormal_factor == 0.0
    assert config.rng_seed == 1


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(abnormal_factor=1.5)
    with pytest.raises(ValueError):
        SimConfig(step=timedelta(0))
    with pytest.raises(ValueError):
        SimConfig(chat_cycles=0)
