"""Pairwise story evaluation: judge prompts, verdicts, plans, rankings.

Stories are compared side by side on five judged dimensions (plus Overall,
asked of humans directly and derived by majority in auto mode). Pairing
plans enumerate every unordered method pair per setting, randomize the
presentation order from a recorded seed, and rotate pairs across
annotators so loads stay within one of each other.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from enum import Enum

from . import lm as lm_mod
from . import prompts
from .lm import LMBackend, LMRequest, ParseError


class EvalError(Exception):
    pass


class MissingDimension(ParseError, EvalError):
    def __init__(self, dimension: str):
        self.dimension = dimension
        super().__init__(f"verdict is missing a line for {dimension!r}")


class AmbiguousChoice(ParseError, EvalError):
    def __init__(self, dimension: str, raw: str):
        self.dimension = dimension
        self.raw = raw
        super().__init__(f"choice for {dimension!r} is not A/B/Same: {raw!r}")


class UnknownMethodId(EvalError):
    pass


class EmptyInput(EvalError):
    pass


class EvalDimension(str, Enum):
    PLOT = "Plot"
    CREATIVITY = "Creativity"
    CHARACTER_DEVELOPMENT = "Character Development"
    LANGUAGE_USE = "Language Use"
    CONFLICT_QUALITY = "Conflict Quality"
    OVERALL = "Overall"


JUDGED_DIMENSIONS: tuple[EvalDimension, ...] = (
    EvalDimension.PLOT,
    EvalDimension.CREATIVITY,
    EvalDimension.CHARACTER_DEVELOPMENT,
    EvalDimension.LANGUAGE_USE,
    EvalDimension.CONFLICT_QUALITY,
)

ALL_DIMENSIONS: tuple[EvalDimension, ...] = JUDGED_DIMENSIONS + (EvalDimension.OVERALL,)

CHOICES = ("A", "B", "Same")


@dataclass
class EvalVerdict:
    pair_id: str
    choices: dict[EvalDimension, str]
    judge: str  # "human" | "auto"
    raw_text: str = ""

    def to_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "judge": self.judge,
            "choices": {dim.value: choice for dim, choice in self.choices.items()},
            "raw_sha256": _sha256(self.raw_text) if self.raw_text else "",
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EvalVerdict":
        return cls(
            pair_id=rec["pair_id"],
            choices={EvalDimension(d): c for d, c in rec["choices"].items()},
            judge=rec.get("judge", "auto"),
        )


def _sha256(text: str) -> str:
    import hashlib

    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def word_count(text: str) -> int:
    """Whitespace tokenization: any run of Unicode whitespace separates."""
    return len(text.split())


def avg_word_count(stories: list[str]) -> float:
    if not stories:
        raise EmptyInput("avg_word_count needs at least one story")
    return sum(word_count(s) for s in stories) / len(stories)


# -- verdict parsing ---------------------------------------------------------


def _normalize_choice(raw: str) -> str | None:
    cleaned = raw.strip().strip("[]").strip().rstrip(".").strip()
    lowered = cleaned.lower()
    if lowered == "a":
        return "A"
    if lowered == "b":
        return "B"
    if lowered == "same":
        return "Same"
    return None


def parse_verdict(text: str) -> dict[EvalDimension, str]:
    """Tolerant parse of "Dimension: A|B|Same" lines; first occurrence wins."""
    choices: dict[EvalDimension, str] = {}
    for dim in JUDGED_DIMENSIONS:
        pattern = re.compile(
            rf"^\s*\[?{re.escape(dim.value)}\]?\s*:\s*(.+?)\s*$",
            re.IGNORECASE | re.MULTILINE,
        )
        m = pattern.search(text)
        if m is None:
            raise MissingDimension(dim.value)
        choice = _normalize_choice(m.group(1))
        if choice is None:
            raise AmbiguousChoice(dim.value, m.group(1))
        choices[dim] = choice
    return choices


def derive_overall(choices: dict[EvalDimension, str]) -> str:
    """Auto-mode Overall: strict plurality over the judged dimensions, else Same."""
    counts = {"A": 0, "B": 0, "Same": 0}
    for dim in JUDGED_DIMENSIONS:
        counts[choices[dim]] += 1
    best = max(counts.values())
    winners = [c for c, n in counts.items() if n == best]
    return winners[0] if len(winners) == 1 else "Same"


def judge_pair(
    story_a: str,
    story_b: str,
    lm: LMBackend,
    pair_id: str = "",
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
    token_cap: int = lm_mod.DEFAULT_TOKEN_CAP,
) -> EvalVerdict:
    """LLM side-by-side comparison across the five judged dimensions."""
    if not story_a.strip() or not story_b.strip():
        raise EmptyInput("both stories must be non-empty")
    prompt = prompts.render("judge_pair", story_a=story_a, story_b=story_b)
    raw_holder: list[str] = []

    def extract(text: str) -> dict[EvalDimension, str]:
        raw_holder.append(text)
        return parse_verdict(text)

    choices, _ = lm_mod.complete_parsed(lm, LMRequest(prompt), extract, attempts, token_cap)
    choices[EvalDimension.OVERALL] = derive_overall(choices)
    return EvalVerdict(pair_id=pair_id, choices=choices, judge="auto", raw_text=raw_holder[-1])


# -- character behavior consistency -------------------------------------------


_NUMBER_RE = re.compile(r"(\d+(?:\.\d+)?)")


def cbc_score(
    iss: list[str],
    story: str,
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
    token_cap: int = lm_mod.DEFAULT_TOKEN_CAP,
) -> float:
    """0-10 consistency score of story characters against their identity set."""
    if not iss:
        raise EmptyInput("cbc_score needs at least one persona description")
    prompt = prompts.render("cbc", iss="\n\n".join(iss), story=story)

    def extract(text: str) -> float:
        m = _NUMBER_RE.search(text)
        if not m:
            raise ParseError("no numeric score in completion")
        return float(m.group(1))

    score, _ = lm_mod.complete_parsed(lm, LMRequest(prompt), extract, attempts, token_cap)
    return min(10.0, max(0.0, score))


# -- pairing plans --------------------------------------------------------------


@dataclass
class PlannedPair:
    pair_id: str
    setting: str
    method_a: str
    method_b: str
    swapped: bool  # True: method_b is presented as Story A
    annotator: str

    @property
    def presented_a(self) -> str:
        return self.method_b if self.swapped else self.method_a

    @property
    def presented_b(self) -> str:
        return self.method_a if self.swapped else self.method_b


@dataclass
class PairingPlan:
    settings: list[str]
    methods: list[str]
    annotators: list[str]
    seed: int
    pairs: list[PlannedPair] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.settings)

    @property
    def n(self) -> int:
        return len(self.methods)

    def pair(self, pair_id: str) -> PlannedPair:
        for p in self.pairs:
            if p.pair_id == pair_id:
                return p
        raise UnknownMethodId(f"pair {pair_id!r} not in plan")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "settings": self.settings,
            "methods": self.methods,
            "annotators": self.annotators,
            "seed": self.seed,
            "pairs": [
                {
                    "pair_id": p.pair_id,
                    "setting": p.setting,
                    "method_a": p.method_a,
                    "method_b": p.method_b,
                    "swapped": p.swapped,
                    "annotator": p.annotator,
                }
                for p in self.pairs
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PairingPlan":
        plan = cls(
            settings=list(raw["settings"]),
            methods=list(raw["methods"]),
            annotators=list(raw["annotators"]),
            seed=int(raw["seed"]),
        )
        plan.pairs = [
            PlannedPair(
                pair_id=p["pair_id"],
                setting=p["setting"],
                method_a=p["method_a"],
                method_b=p["method_b"],
                swapped=bool(p["swapped"]),
                annotator=p["annotator"],
            )
            for p in raw["pairs"]
        ]
        return plan

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2)

    @classmethod
    def load(cls, path) -> "PairingPlan":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def plan_pairings(
    m: int | list[str],
    n: int | list[str],
    annotators: int | list[str],
    seed: int = 0,
) -> PairingPlan:
    """Enumerate M*N*(N-1)/2 comparisons with randomized presentation order.

    Within each setting every unordered method pair appears exactly once.
    Pairs are dealt to annotators in a single rotation over the
    setting-grouped sequence, keeping per-annotator loads within 1.
    """
    settings = [f"setting-{i+1:02d}" for i in range(m)] if isinstance(m, int) else list(m)
    methods = [f"method-{i+1}" for i in range(n)] if isinstance(n, int) else list(n)
    names = (
        [f"annotator-{i+1}" for i in range(annotators)]
        if isinstance(annotators, int)
        else list(annotators)
    )
    if not settings or not methods or not names:
        raise ValueError("settings, methods, and annotators must be non-empty")

    rng = random.Random(seed)
    plan = PairingPlan(settings=settings, methods=methods, annotators=names, seed=seed)
    counter = 0
    for setting in settings:
        for i in range(len(methods)):
            for j in range(i + 1, len(methods)):
                swapped = rng.random() < 0.5
                plan.pairs.append(
                    PlannedPair(
                        pair_id=f"pair-{counter + 1:04d}",
                        setting=setting,
                        method_a=methods[i],
                        method_b=methods[j],
                        swapped=swapped,
                        annotator=names[counter % len(names)],
                    )
                )
                counter += 1
    return plan


# -- aggregation ------------------------------------------------------------------


@dataclass
class MethodScore:
    method: str
    wins: float
    ties: float
    played: int
    score: float
    rank: int


def aggregate(
    verdicts: list[EvalVerdict], plan: PairingPlan
) -> dict[str, list[MethodScore]]:
    """Per-dimension win-rate rankings: score = (wins + 0.5*ties) / played.

    Verdict choices are translated back through each pair's presentation
    order, so results are invariant under A/B swaps. Ties share a rank and
    are reported, never broken.
    """
    tallies: dict[str, dict[str, dict[str, float]]] = {}
    for verdict in verdicts:
        pair = plan.pair(verdict.pair_id)
        for dim, choice in verdict.choices.items():
            dim_tallies = tallies.setdefault(dim.value, {})
            for method in (pair.method_a, pair.method_b):
                dim_tallies.setdefault(method, {"wins": 0.0, "ties": 0.0, "played": 0})
            a_method = pair.presented_a
            b_method = pair.presented_b
            dim_tallies[a_method]["played"] += 1
            dim_tallies[b_method]["played"] += 1
            if choice == "A":
                dim_tallies[a_method]["wins"] += 1
            elif choice == "B":
                dim_tallies[b_method]["wins"] += 1
            else:
                dim_tallies[a_method]["ties"] += 1
                dim_tallies[b_method]["ties"] += 1

    rankings: dict[str, list[MethodScore]] = {}
    for dim_name, dim_tallies in tallies.items():
        scored = []
        for method, t in sorted(dim_tallies.items()):
            played = int(t["played"])
            score = (t["wins"] + 0.5 * t["ties"]) / played if played else 0.0
            scored.append(
                MethodScore(
                    method=method,
                    wins=t["wins"],
                    ties=t["ties"],
                    played=played,
                    score=score,
                    rank=0,
                )
            )
        scored.sort(key=lambda s: (-s.score, s.method))
        for entry in scored:
            entry.rank = 1 + sum(1 for other in scored if other.score > entry.score)
        rankings[dim_name] = scored
    return rankings


def rankings_to_dict(rankings: dict[str, list[MethodScore]]) -> dict:
    return {
        dim: [
            {
                "method": s.method,
                "score": round(s.score, 6),
                "wins": s.wins,
                "ties": s.ties,
                "played": s.played,
                "rank": s.rank,
            }
            for s in scores
        ]
        for dim, scores in rankings.items()
    }


def save_verdicts(verdicts: list[EvalVerdict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps(v.to_record(), ensure_ascii=False) + "\n")


def load_verdicts(path) -> list[EvalVerdict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(EvalVerdict.from_record(json.loads(line)))
    return out
