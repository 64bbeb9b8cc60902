"""Regenerate the bundled scripted-backend files for the demo scenario.

The scripted backend answers prompts by substring pattern; these files give
every CLI flow (simulate / tell / init / evaluate) a deterministic set of
responses so the whole pipeline runs offline.
"""

from __future__ import annotations

import json
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "storyloom" / "fixtures" / "story1"


def _rule(pattern: str, responses: list[str], cycle: bool = False) -> dict:
    return {"pattern": pattern, "responses": responses, "cycle": cycle}


def _write(name: str, rules: list[dict]) -> None:
    path = FIXTURES / name
    with open(path, "w", encoding="utf-8") as fh:
        for rule in rules:
            fh.write(json.dumps(rule, ensure_ascii=False) + "\n")
    print(f"wrote {path} ({len(rules)} rules)")


def _behavior(kind: str, **fields) -> str:
    return json.dumps({"behavior": kind, **fields})


PLANS = {
    "Claire Matthews": [
        "Analyze the frozen state phenomenon",
        "Conduct experiments on temporal mechanics",
        "Document findings",
        "Collaborate with Dr. Reed",
    ],
    "Dr. Harold Reed": [
        "Review Claire's experiments",
        "Research temporal theories",
        "Provide mentorship",
        "Maintain morale",
    ],
    "Tommy Harris": [
        "Scavenge supplies",
        "Explore the city",
        "Avoid danger",
        "Assist Claire occasionally",
    ],
    "Sophia Lutz": [
        "Patrol the city",
        "Ensure group safety",
        "Organize supplies",
        "Mediate conflicts",
    ],
    "Chris Tanaka": [
        "Diagnose tech systems",
        "Run diagnostics",
        "Set up communications",
        "Debate theories with Claire",
    ],
    "Maya Harrison": [
        "Assist with organization",
        "Reflect on personal issues",
        "Journal thoughts",
        "Seek emotional closure",
    ],
}

BEHAVIOR_CYCLES = {
    "Claire Matthews": [
        _behavior(
            "move",
            target="Frozen City:City Center:Highland Apartments:Room 704",
            action="analyze the frozen state phenomenon",
        ),
        _behavior(
            "move",
            target="Frozen City:City Center:Tech Hub:Room 5",
            action="compare data with Chris",
        ),
        _behavior("chat", partner="Chris Tanaka"),
        _behavior("none"),
    ],
    "Dr. Harold Reed": [
        _behavior(
            "move",
            target="Frozen City:City Center:Central Library:Research Section",
            action="research temporal theories",
        ),
        _behavior("none"),
        _behavior(
            "move",
            target="Frozen City:Suburbs:Elmwood House:Unit 12",
            action="review Claire's experiments",
        ),
        _behavior("none"),
    ],
    "Tommy Harris": [
        _behavior(
            "move",
            target="Frozen City:Industrial District:Old Factory:Production Floor",
            action="scavenge supplies",
        ),
        _behavior("none"),
        _behavior(
            "move",
            target="Frozen City:City Center:Abandoned Warehouse:Room 3",
            action="sort the day's findings",
        ),
        _behavior("none"),
    ],
    "Sophia Lutz": [
        _behavior(
            "move",
            target="Frozen City:City Center:Police Station:Office 2",
            action="organize supplies",
        ),
        _behavior("chat", partner="Maya Harrison"),
        _behavior(
            "move",
            target="Frozen City:City Center:City Park:Fountain Square",
            action="patrol the city",
        ),
        _behavior("none"),
    ],
    "Chris Tanaka": [
        _behavior(
            "move",
            target="Frozen City:City Center:Tech Hub:Room 5",
            action="run diagnostics",
        ),
        _behavior("none"),
        _behavior("none"),
    ],
    "Maya Harrison": [
        _behavior(
            "move",
            target="Frozen City:City Center:Police Station:Office 2",
            action="assist with organization",
        ),
        _behavior("none"),
        _behavior("none"),
    ],
}

CHAT_LINES = [
    "We need to compare notes on the anomaly.",
    "Agreed. The readings spiked again this morning.",
    "Then let's run a joint diagnostic before nightfall.",
    "I'll set everything up right away.",
]


def sim_script() -> list[dict]:
    rules = []
    for name, plan in PLANS.items():
        rules.append(
            _rule(
                f"Plan the day for {name}",
                ["\n".join(f"{i+1}. {item}" for i, item in enumerate(plan))],
                cycle=True,
            )
        )
    for name, plan in PLANS.items():
        hours = [9, 12, 15, 18]
        lines = [f"{h:02d}:00 - {task}" for h, task in zip(hours, plan)]
        rules.append(_rule(f"hourly schedule for {name}", ["\n".join(lines)], cycle=True))
    rules.append(_rule("Continue the conversation", CHAT_LINES, cycle=True))
    for name, cycle in BEHAVIOR_CYCLES.items():
        rules.append(_rule(f"Choose the next behavior for {name}", cycle, cycle=True))
    return rules


CHAPTER_BODY = (
    "The city held its breath. Frost glittered on every unmoving face as Claire "
    "crossed the plaza, her notebook pressed to her chest, rehearsing the numbers "
    "that refused to behave. In the Tech Hub the servers still hummed, indifferent "
    "to the stillness outside, and Chris bent over his screens muttering about "
    "timestamps that ran backwards. Sophia's patrol took her past the frozen "
    "fountain, where droplets hung like glass beads, and she counted the survivors "
    "the way she once counted patrol cars. Somewhere in the industrial district a "
    "door creaked under Tommy's careful hands, and the day's scavenging began. By "
    "evening they gathered at the station, trading findings and suspicions, each "
    "of them orbiting the same unspeakable question of whether the world could be "
    "restarted at all."
)


def tell_script() -> list[dict]:
    return [
        _rule(
            "Summarize what",
            [
                "Spent the day working through the group's priorities, moving "
                "between bases, and trading findings with the others before resting."
            ],
            cycle=True,
        ),
        _rule("You are condensing", ["5"], cycle=True),
        _rule(
            "Condense the following",
            [
                "The survivors settle into a rhythm: research in the Tech Hub, "
                "patrols from the police station, scavenging in the industrial "
                "district, and uneasy conversations about the frozen world."
            ],
            cycle=True,
        ),
        _rule("name the single story type", ["mystery"]),
        _rule("refining the title", ["Frozen Hours"]),
        _rule("refining the title", ["KEEP"], cycle=True),
        _rule("Rank the candidate titles", ["1"]),
        _rule(
            "Write the background",
            [
                "A modern city freezes mid-moment, leaving six strangers awake "
                "among statues and silence. They must learn why time stopped, and "
                "for whom."
            ],
        ),
        _rule(
            "main themes",
            ["1. Time and stasis\n2. Connection under isolation\n3. Science against the unknowable"],
        ),
        _rule(
            "chapter titles",
            [
                "1. The Silent Morning\n2. Signals in the Static\n3. Fault Lines\n"
                "4. The Experiment\n5. Thaw"
            ],
        ),
        _rule(
            "conflicts for chapter",
            [
                "1. Claire's temporal theory collides with Chris's glitch hypothesis\n"
                "2. Tommy's scavenging puts the group's trust at risk"
            ],
            cycle=True,
        ),
        _rule(
            "major plot points for chapter",
            [
                "1. A frozen fountain yields a physical clue\n"
                "2. The server rack holds impossible timestamps\n"
                "3. A confrontation at the police station forces a decision"
            ],
            cycle=True,
        ),
        _rule("You are writing chapter", [CHAPTER_BODY + "\n[END OF CHAPTER]"], cycle=True),
        _rule(
            "Summarize the finished chapter",
            [
                "The survivors push the investigation forward while frictions "
                "between science, order, and survival deepen."
            ],
            cycle=True,
        ),
    ]


def init_script() -> list[dict]:
    world = (FIXTURES / "world.yaml").read_text(encoding="utf-8")
    scratch = (FIXTURES / "scratch.json").read_text(encoding="utf-8")
    spatial = (FIXTURES / "spatial_memory.json").read_text(encoding="utf-8")
    return [
        _rule("Below is the world.yaml file needed", [f"```yaml\n{world}```"]),
        _rule("Below is the persona scratch.json file needed", [f"```json\n{scratch}```"]),
        _rule("Below is the spatial_memory.json file needed", [f"```json\n{spatial}```"]),
    ]


def judge_script() -> list[dict]:
    verdict = (
        "Story A builds its plot with steadier pacing, while both stories show "
        "comparable creativity. Story A's characters develop further; Story B's "
        "prose is more polished; conflict lands evenly in both.\n\n"
        "The better story for each dimension is:\n"
        "Plot: A\n"
        "Creativity: Same\n"
        "Character Development: A\n"
        "Language Use: B\n"
        "Conflict Quality: Same\n"
    )
    return [_rule("side-by-side evaluation", [verdict], cycle=True)]


if __name__ == "__main__":
    _write("sim_script.jsonl", sim_script())
    _write("tell_script.jsonl", tell_script())
    _write("init_script.jsonl", init_script())
    _write("judge_script.jsonl", judge_script())
