"""Command-line entry points: init, simulate, tell, evaluate, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bootstrap as bootstrap_mod
from . import evaluation as eval_mod
from . import fixtures
from . import persona as persona_mod
from . import storyteller as st_mod
from .events import EventStore, HashEmbedder
from .lm import HttpBackend, ScriptedBackend
from .sim import SimConfig, Simulation, load_sim_config
from .world import parse_world


def _make_backend(args, default_script: str):
    if args.backend == "http":
        return HttpBackend()
    script = args.script or fixtures.story1_path(default_script)
    return ScriptedBackend.from_file(script)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="RNG seed")
    parser.add_argument("--config", default=None, help="config file (YAML or key=value)")
    parser.add_argument(
        "--backend", choices=("scripted", "http"), default="scripted", help="LM backend"
    )
    parser.add_argument("--script", default=None, help="script file for the scripted backend")


def cmd_init(args) -> int:
    setting = bootstrap_mod.StorySetting.from_json(Path(args.premise_file).read_text(encoding="utf-8"))
    backend = _make_backend(args, "init_script.jsonl")
    bundle = bootstrap_mod.generate_bundle(
        setting,
        example_world=fixtures.story1_text("world.yaml"),
        example_scratch=fixtures.story1_text("scratch.json"),
        example_spatial=fixtures.story1_text("spatial_memory.json"),
        lm=backend,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "world.yaml").write_text(bundle.world_yaml + "\n", encoding="utf-8")
    (out / "scratch.json").write_text(bundle.scratch_json + "\n", encoding="utf-8")
    (out / "spatial_memory.json").write_text(bundle.spatial_memory_json + "\n", encoding="utf-8")
    (out / "provenance.json").write_text(
        json.dumps({"backend": backend.name, "artifacts": bundle.provenance}, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"wrote sandbox bundle to {out}")
    return 0


def _load_sandbox(args):
    world_text = (
        Path(args.world).read_text(encoding="utf-8")
        if args.world
        else fixtures.story1_text("world.yaml")
    )
    scratch_text = (
        Path(args.scratch).read_text(encoding="utf-8")
        if args.scratch
        else fixtures.story1_text("scratch.json")
    )
    spatial_text = (
        Path(args.spatial).read_text(encoding="utf-8")
        if args.spatial
        else fixtures.story1_text("spatial_memory.json")
    )
    world = parse_world(world_text)
    personas = persona_mod.parse_scratch(scratch_text, world=world)
    shared = persona_mod.SpatialMemory.from_json(spatial_text)
    shared.validate_against(world)
    spatial = {p.name: shared for p in personas}
    return world, personas, spatial


def cmd_simulate(args) -> int:
    world, personas, spatial = _load_sandbox(args)
    config = load_sim_config(
        args.config,
        rng_seed=args.seed,
        abnormal_factor=args.abnormal_factor,
        chat_cycles=args.chat_cycles,
        max_parse_attempts=args.max_parse_attempts,
        start_time=args.start_time,
        step_hours=args.step_hours,
    )
    backend = _make_backend(args, "sim_script.jsonl")
    sim = Simulation(world, personas, config, backend, spatial=spatial)
    report = sim.run_days(args.days)
    sim.store.export_log(args.out)
    print(
        json.dumps(
            {
                "days": report.days,
                "steps": report.steps,
                "events_recorded": report.events_recorded,
                "skipped_turns": report.skipped_turns,
                "out": str(args.out),
            }
        )
    )
    return 0


def cmd_tell(args) -> int:
    events_path = Path(args.events)
    store = EventStore(embedder=HashEmbedder())
    if not events_path.exists():
        raise st_mod.StorytellerError(f"empty store: no event log at {events_path}")
    store.import_log(events_path)
    if len(store) == 0:
        raise st_mod.StorytellerError(f"empty store: {events_path} holds no events")

    scratch_text = (
        Path(args.scratch).read_text(encoding="utf-8")
        if args.scratch
        else fixtures.story1_text("scratch.json")
    )
    personas = persona_mod.parse_scratch(scratch_text)
    backend = _make_backend(args, "tell_script.jsonl")
    hyper = st_mod.StoryHyper(
        n_themes=args.themes,
        n_chapters=args.chapters,
        n_conflicts_per_chapter=args.conflicts,
        n_plot_points_per_chapter=args.plot_points,
    )
    overrides = {}
    if args.title:
        overrides["title"] = args.title
    if args.story_type:
        overrides["story_type"] = args.story_type
    document = st_mod.tell_story(
        store, [p.name for p in personas], backend, hyper, overrides
    )
    document.save(args.out)
    print(json.dumps({"title": document.title, "total_words": document.total_words, "out": str(args.out)}))
    return 0


def cmd_evaluate(args) -> int:
    plan = eval_mod.PairingPlan.load(args.plan)
    if args.judge == "auto":
        backend = _make_backend(args, "judge_script.jsonl")
        stories_dir = Path(args.stories_dir)
        verdicts = []
        for pair in plan.pairs:
            story_a = (stories_dir / pair.setting / f"{pair.presented_a}.txt").read_text(
                encoding="utf-8"
            )
            story_b = (stories_dir / pair.setting / f"{pair.presented_b}.txt").read_text(
                encoding="utf-8"
            )
            verdicts.append(eval_mod.judge_pair(story_a, story_b, backend, pair_id=pair.pair_id))
        eval_mod.save_verdicts(verdicts, args.verdicts)
    else:
        verdicts = eval_mod.load_verdicts(args.verdicts)
    rankings = eval_mod.aggregate(verdicts, plan)
    payload = eval_mod.rankings_to_dict(rankings)
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({"pairs_judged": len(verdicts), "out": str(args.out)}))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    plan = eval_mod.PairingPlan.load(args.plan)
    app = create_app(
        plan,
        stories_dir=args.stories_dir,
        credentials_path=args.credentials,
        verdicts_path=args.verdicts,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storyloom")
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="generate world/scratch/spatial-memory artifacts")
    _common_flags(p_init)
    p_init.add_argument("--premise-file", required=True, help="story setting JSON")
    p_init.add_argument("--out-dir", required=True)
    p_init.set_defaults(func=cmd_init)

    p_sim = sub.add_parser("simulate", help="run the sandbox and write events.jsonl")
    _common_flags(p_sim)
    p_sim.add_argument("--days", type=int, default=1)
    p_sim.add_argument("--out", default="events.jsonl")
    p_sim.add_argument("--world", default=None, help="world.yaml (default: bundled demo)")
    p_sim.add_argument("--scratch", default=None, help="scratch.json (default: bundled demo)")
    p_sim.add_argument("--spatial", default=None, help="spatial_memory.json (default: bundled demo)")
    p_sim.add_argument("--abnormal-factor", type=float, default=None)
    p_sim.add_argument("--chat-cycles", type=int, default=None)
    p_sim.add_argument("--max-parse-attempts", type=int, default=None)
    p_sim.add_argument("--start-time", default=None)
    p_sim.add_argument("--step-hours", type=float, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_tell = sub.add_parser("tell", help="turn an event log into a long-form story")
    _common_flags(p_tell)
    p_tell.add_argument("--events", default="events.jsonl")
    p_tell.add_argument("--out", default="story.json")
    p_tell.add_argument("--scratch", default=None)
    p_tell.add_argument("--themes", type=int, default=3)
    p_tell.add_argument("--chapters", type=int, default=5)
    p_tell.add_argument("--conflicts", type=int, default=2)
    p_tell.add_argument("--plot-points", type=int, default=3)
    p_tell.add_argument("--title", default=None, help="manual title override")
    p_tell.add_argument("--story-type", default=None, help="manual story type override")
    p_tell.set_defaults(func=cmd_tell)

    p_eval = sub.add_parser("evaluate", help="judge story pairs and rank methods")
    _common_flags(p_eval)
    p_eval.add_argument("--plan", required=True)
    p_eval.add_argument("--stories-dir", default="stories")
    p_eval.add_argument("--judge", choices=("auto", "human"), default="auto")
    p_eval.add_argument("--verdicts", default="verdicts.jsonl")
    p_eval.add_argument("--out", default="rankings.json")
    p_eval.set_defaults(func=cmd_evaluate)

    p_serve = sub.add_parser("serve", help="run the human-annotation HTTP service")
    _common_flags(p_serve)
    p_serve.add_argument("--plan", required=True)
    p_serve.add_argument("--stories-dir", required=True)
    p_serve.add_argument("--credentials", required=True)
    p_serve.add_argument("--verdicts", default="verdicts.jsonl")
    p_serve.add_argument("--static", default=None, help="static UI bundle directory")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error boundary
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
