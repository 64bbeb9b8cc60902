"""End-to-end demo on the bundled scenario: init -> simulate -> tell.

Usage: python scripts/run_story1.py [OUT_DIR] [--days N] [--seed S]

Runs entirely offline against the bundled scripted backend and leaves
world.yaml / scratch.json / spatial_memory.json, events.jsonl, and
story.json in OUT_DIR (default ./story1_run).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from storyloom import fixtures as fx  # noqa: E402
from storyloom.cli import main as cli_main  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("out_dir", nargs="?", default="story1_run")
    parser.add_argument("--days", type=int, default=1)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    steps = [
        ["init", "--premise-file", str(fx.story1_path("setting.json")),
         "--out-dir", str(out / "bundle")],
        ["simulate", "--days", str(args.days), "--seed", str(args.seed),
         "--world", str(out / "bundle" / "world.yaml"),
         "--scratch", str(out / "bundle" / "scratch.json"),
         "--spatial", str(out / "bundle" / "spatial_memory.json"),
         "--out", str(out / "events.jsonl")],
        ["tell", "--events", str(out / "events.jsonl"),
         "--scratch", str(out / "bundle" / "scratch.json"),
         "--out", str(out / "story.json")],
    ]
    for argv in steps:
        print(f"$ storyloom {' '.join(argv)}")
        code = cli_main(argv)
        if code != 0:
            return code
    print(f"\nartifacts in {out}/: bundle/, events.jsonl, story.json")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
