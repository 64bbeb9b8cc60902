"""Scaffold a small evaluation workspace: plan.json, stories/, credentials.

Usage: python scripts/make_demo_eval.py OUT_DIR [--settings N] [--methods N]
       [--annotators a,b,...] [--password PW] [--seed S]

Creates one deterministic story file per (setting, method) so the evaluate
and serve subcommands can run immediately against OUT_DIR.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from storyloom.evaluation import plan_pairings  # noqa: E402
from storyloom.service import save_credentials  # noqa: E402

STORY_TEMPLATE = (
    "{method} tells the story of setting {setting}: a slow morning, a hard "
    "choice, and a quiet ending. The streets empty out while the narrator "
    "circles the same unanswered question, and by nightfall something small "
    "but irreversible has changed. "
)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("out_dir")
    parser.add_argument("--settings", type=int, default=3)
    parser.add_argument("--methods", type=int, default=2)
    parser.add_argument("--annotators", default="alice")
    parser.add_argument("--password", default="wonderland")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    annotators = [a.strip() for a in args.annotators.split(",") if a.strip()]

    plan = plan_pairings(args.settings, args.methods, annotators, seed=args.seed)
    plan.save(out / "plan.json")

    stories = out / "stories"
    for setting in plan.settings:
        (stories / setting).mkdir(parents=True, exist_ok=True)
        for i, method in enumerate(plan.methods):
            body = STORY_TEMPLATE.format(method=method, setting=setting) * (3 + i)
            (stories / setting / f"{method}.txt").write_text(body.strip() + "\n", encoding="utf-8")

    save_credentials([(a, args.password) for a in annotators], out / "credentials.json")
    print(f"wrote plan with {len(plan.pairs)} pairs, stories, and credentials to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
