from __future__ import annotations

import json

import pytest

from storyloom.cli import main


def test_simulate_smoke(tmp_path, capsys):
    out = tmp_path / "events.jsonl"
    code = main(["simulate", "--days", "1", "--seed", "42", "--backend", "scripted",
                 "--out", str(out)])
    assert code == 0
    assert out.exists()
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report["steps"] == 24
    lines = out.read_text().splitlines()
    assert json.loads(lines[0]) == {"schema_version": 1}
    assert len(lines) == report["events_recorded"] + 1


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_tell_without_events_exits_1(tmp_path, capsys):
    code = main(["tell", "--events", str(tmp_path / "missing.jsonl"),
                 "--out", str(tmp_path / "story.json")])
    assert code == 1
    stderr = capsys.readouterr().err
    payload = json.loads(stderr.strip())
    assert "empty store" in payload["message"]


def test_tell_on_empty_log_exits_1(tmp_path, capsys):
    log = tmp_path / "events.jsonl"
    log.write_text('{"schema_version": 1}\n')
    code = main(["tell", "--events", str(log), "--out", str(tmp_path / "story.json")])
    assert code == 1
    assert "empty store" in capsys.readouterr().err


def test_simulate_then_tell_pipeline(tmp_path, capsys):
    events = tmp_path / "events.jsonl"
    story = tmp_path / "story.json"
    assert main(["simulate", "--days", "1", "--seed", "7", "--out", str(events)]) == 0
    assert main(["tell", "--events", str(events), "--out", str(story)]) == 0
    doc = json.loads(story.read_text())
    assert doc["title"] == "Frozen Hours"
    assert len(doc["chapters"]) == 5
    assert doc["total_words"] > 0
    assert {"title", "story_type", "info", "chapters", "total_words"} <= set(doc)


def test_init_writes_bundle(tmp_path):
    from storyloom import fixtures as fx

    out_dir = tmp_path / "bundle"
    code = main([
        "init",
        "--premise-file", str(fx.story1_path("setting.json")),
        "--out-dir", str(out_dir),
        "--backend", "scripted",
    ])
    assert code == 0
    for name in ("world.yaml", "scratch.json", "spatial_memory.json", "provenance.json"):
        assert (out_dir / name).exists()
    provenance = json.loads((out_dir / "provenance.json").read_text())
    assert [a["attempts"] for a in provenance["artifacts"]] == [1, 1, 1]


def test_evaluate_auto_writes_rankings(tmp_path):
    from storyloom.evaluation import plan_pairings

    plan = plan_pairings(2, ["ours", "base"], annotators=["a"], seed=1)
    plan_path = tmp_path / "plan.json"
    plan.save(plan_path)
    stories = tmp_path / "stories"
    for setting in plan.settings:
        (stories / setting).mkdir(parents=True)
        (stories / setting / "ours.txt").write_text("alpha " * 50)
        (stories / setting / "base.txt").write_text("beta " * 40)
    rankings_path = tmp_path / "rankings.json"
    verdicts_path = tmp_path / "verdicts.jsonl"
    code = main([
        "evaluate", "--plan", str(plan_path), "--stories-dir", str(stories),
        "--judge", "auto", "--verdicts", str(verdicts_path), "--out", str(rankings_path),
    ])
    assert code == 0
    rankings = json.loads(rankings_path.read_text())
    assert "Plot" in rankings and "Overall" in rankings
    assert len(verdicts_path.read_text().splitlines()) == 2


def test_evaluate_human_mode_reads_verdicts(tmp_path):
    from storyloom.evaluation import ALL_DIMENSIONS, EvalVerdict, plan_pairings, save_verdicts

    plan = plan_pairings(1, 2, annotators=1, seed=1)
    plan.save(tmp_path / "plan.json")
    verdicts = [
        EvalVerdict(
            pair_id=plan.pairs[0].pair_id,
            choices={d: "Same" for d in ALL_DIMENSIONS},
            judge="human",
        )
    ]
    save_verdicts(verdicts, tmp_path / "verdicts.jsonl")
    code = main([
        "evaluate", "--plan", str(tmp_path / "plan.json"), "--judge", "human",
        "--verdicts", str(tmp_path / "verdicts.jsonl"), "--out", str(tmp_path / "rankings.json"),
    ])
    assert code == 0
    rankings = json.loads((tmp_path / "rankings.json").read_text())
    assert all(entry["score"] == 0.5 for entry in rankings["Plot"])


def test_config_file_with_flag_override(tmp_path, capsys):
    config = tmp_path / "sim.yaml"
    config.write_text("abnormal_factor: 0.9\nrng_seed: 5\n")
    out = tmp_path / "events.jsonl"
    code = main([
        "simulate", "--days", "1", "--config", str(config),
        "--abnormal-factor", "0.0", "--out", str(out),
    ])
    assert code == 0
