"""Hybrid bottom-up story pipeline: event log -> long-form story.

Stages: per-character daily summaries, LM-chosen windowing into digests,
story-type and iteratively refined title, structured story info (background,
themes, chapter scaffolds), then an iterative retrieval-augmented chapter
loop where each chapter prompt carries the summaries of all previous
chapters.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import date as Date
from typing import Callable

from . import lm as lm_mod
from . import prompts
from .events import EmptyIndex, Event, EventStore
from .evaluation import word_count
from .lm import BudgetExceeded, LMBackend, LMParseFailed, LMRequest, ParseError

logger = logging.getLogger(__name__)

COMPLETION_SENTINEL = "[END OF CHAPTER]"
PLACEHOLDER_SUMMARY = "(no reliable summary)"
DEFAULT_WINDOW_FALLBACK = 7

Retrieval = Callable[[str, int], list[tuple[Event, float]]]


class StorytellerError(Exception):
    pass


class ChapterGenerationFailed(StorytellerError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"no pass of chapter {index + 1} produced text")


@dataclass
class StoryHyper:
    """Knobs for story scope and depth."""

    n_themes: int = 3
    n_chapters: int = 5
    n_conflicts_per_chapter: int = 2
    n_plot_points_per_chapter: int = 3
    retrieval_k: int = 12
    passes_max: int = 4
    window_max: int = 14
    first_windows: int = 3
    token_cap: int = lm_mod.DEFAULT_TOKEN_CAP
    attempts: int = lm_mod.DEFAULT_ATTEMPTS

    def __post_init__(self) -> None:
        for name in ("n_themes", "n_chapters", "n_conflicts_per_chapter", "n_plot_points_per_chapter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class CharacterDaySummary:
    persona: str
    date: Date
    summary: str
    source_event_ids: list[int]


@dataclass
class WindowSummary:
    index: int
    covered: list[tuple[str, Date]]
    text: str
    window_size: int


@dataclass
class ChapterPlan:
    title: str
    conflicts: list[str]
    plot_points: list[str]


@dataclass
class StoryInfo:
    story_type: str
    title: str
    background: str
    themes: list[str]
    chapters: list[ChapterPlan]
    placeholder_fields: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "story_type": self.story_type,
            "title": self.title,
            "background": self.background,
            "themes": list(self.themes),
            "chapters": [
                {"title": c.title, "conflicts": list(c.conflicts), "plot_points": list(c.plot_points)}
                for c in self.chapters
            ],
            "placeholder_fields": list(self.placeholder_fields),
        }


@dataclass
class ChapterResult:
    title: str
    text: str
    source_event_ids: list[int]
    passes: int
    summary: str
    warnings: list[str] = field(default_factory=list)


@dataclass
class StoryDocument:
    title: str
    story_type: str
    info: StoryInfo
    chapters: list[ChapterResult]
    total_words: int

    def render_text(self) -> str:
        parts = []
        for i, ch in enumerate(self.chapters, start=1):
            parts.append(f"Chapter {i}: {ch.title}\n\n{ch.text}")
        return "\n\n".join(parts)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "story_type": self.story_type,
            "info": self.info.to_dict(),
            "chapters": [
                {"title": c.title, "text": c.text, "source_event_ids": list(c.source_event_ids)}
                for c in self.chapters
            ],
            "total_words": self.total_words,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2)


# -- event summarization -------------------------------------------------------


def summarize_by_character(
    store: EventStore,
    persona_names: list[str],
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
    token_cap: int = lm_mod.DEFAULT_TOKEN_CAP,
) -> list[CharacterDaySummary]:
    """One summary per (persona, day) with at least one event, chronological.

    Low-salience idle events are folded into a single clause of the prompt
    rather than listed one by one.
    """
    if len(store) == 0:
        raise StorytellerError("event store is empty")
    order = {name: i for i, name in enumerate(persona_names)}
    cells: dict[tuple[Date, str], list[Event]] = {}
    for ev in store:
        day = ev.start_time.date()
        for name in ev.participants:
            if name in order:
                cells.setdefault((day, name), []).append(ev)

    summaries: list[CharacterDaySummary] = []
    for (day, name) in sorted(cells, key=lambda k: (k[0], order[k[1]])):
        cell = cells[(day, name)]
        active = [ev for ev in cell if ev.kind != "none"]
        idle = [ev for ev in cell if ev.kind == "none"]
        lines = [
            f"- {ev.start_time.strftime('%H:%M')} {ev.description}: {ev.detail}" for ev in active
        ]
        if idle:
            hours = ", ".join(ev.start_time.strftime("%H:%M") for ev in idle)
            lines.append(f"- idle/resting at {hours}")
        prompt = prompts.render(
            "summarize_character_day",
            name=name,
            date=day.isoformat(),
            events="\n".join(lines),
        )
        try:
            text, _ = lm_mod.complete_parsed(
                lm, LMRequest(prompt), lm_mod.strip_text, attempts, token_cap
            )
        except LMParseFailed:
            text = PLACEHOLDER_SUMMARY
        summaries.append(
            CharacterDaySummary(
                persona=name,
                date=day,
                summary=text,
                source_event_ids=[ev.id for ev in cell],
            )
        )
    return summaries


def choose_window_size(
    remaining: list[CharacterDaySummary],
    lm: LMBackend,
    window_max: int = 14,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> int:
    """LM-chosen window size, clamped into [1, min(len(remaining), window_max)].

    Total by construction: out-of-range answers are clamped and parse
    failures fall back to a default of 7.
    """
    if not remaining:
        raise ValueError("remaining must be non-empty")
    upper = min(len(remaining), window_max)

    def extract(text: str) -> int:
        m = re.search(r"-?\d+", text)
        if not m:
            raise ParseError("no integer in completion")
        return int(m.group(0))

    preview = "\n".join(
        f"- {s.persona} {s.date.isoformat()}: {s.summary[:80]}" for s in remaining[:3]
    )
    prompt = prompts.render(
        "window_size",
        remaining=str(len(remaining)),
        preview=preview,
        maximum=str(upper),
    )
    try:
        size, _ = lm_mod.complete_parsed(lm, LMRequest(prompt), extract, attempts)
    except LMParseFailed:
        size = DEFAULT_WINDOW_FALLBACK
    return max(1, min(size, upper))


def summarize_windows(
    day_summaries: list[CharacterDaySummary],
    lm: LMBackend,
    hyper: StoryHyper | None = None,
) -> list[WindowSummary]:
    """Partition day summaries into LM-sized windows and condense each.

    Windows cover every summary exactly once, in order. A window whose
    combined prompt would bust the token budget is re-split; if a single
    summary still exceeds the budget the error propagates.
    """
    hyper = hyper or StoryHyper()
    windows: list[WindowSummary] = []
    pos = 0
    while pos < len(day_summaries):
        remaining = day_summaries[pos:]
        size = choose_window_size(remaining, lm, hyper.window_max, hyper.attempts)
        while True:
            chunk = remaining[:size]
            body = "\n".join(
                f"- {s.persona} on {s.date.isoformat()}: {s.summary}" for s in chunk
            )
            prompt = prompts.render("summarize_window", count=str(len(chunk)), summaries=body)
            if lm_mod.estimate_tokens(prompt) <= hyper.token_cap:
                break
            if size == 1:
                raise BudgetExceeded(
                    f"single day summary for {chunk[0].persona} exceeds the token cap"
                )
            size = max(1, size // 2)
        try:
            text, _ = lm_mod.complete_parsed(
                lm, LMRequest(prompt), lm_mod.strip_text, hyper.attempts, hyper.token_cap
            )
        except LMParseFailed:
            text = PLACEHOLDER_SUMMARY
        windows.append(
            WindowSummary(
                index=len(windows),
                covered=[(s.persona, s.date) for s in chunk],
                text=text,
                window_size=size,
            )
        )
        pos += size
    return windows


# -- story information ------------------------------------------------------------


def _windows_block(windows: list[WindowSummary]) -> str:
    return "\n".join(f"[{w.index + 1}] {w.text}" for w in windows)


def generate_story_type(
    first_windows: list[WindowSummary],
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> str:
    """A single story-type label; falls back to "narrative" when unparseable."""

    def extract(text: str) -> str:
        line = text.strip().splitlines()[0].strip() if text.strip() else ""
        if not line:
            raise ParseError("empty story type")
        return line

    prompt = prompts.render("story_type", windows=_windows_block(first_windows))
    try:
        label, _ = lm_mod.complete_parsed(lm, LMRequest(prompt), extract, attempts)
        return label
    except LMParseFailed:
        return "narrative"


def refine_title(
    current: str | None,
    window: WindowSummary,
    story_type: str,
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> tuple[str, bool]:
    """Retain or modify the title given one new window digest.

    The LM answers KEEP or a new title. On parse failure an existing title
    is kept; with no existing title the story type itself becomes the title.
    """

    def extract(text: str) -> str:
        line = text.strip().splitlines()[0].strip() if text.strip() else ""
        if not line:
            raise ParseError("empty title response")
        return line

    current_line = (
        f"Current title: {current}" if current else "There is no title yet; propose one."
    )
    prompt = prompts.render(
        "refine_title",
        story_type=story_type,
        current_line=current_line,
        window=window.text,
    )
    try:
        answer, _ = lm_mod.complete_parsed(lm, LMRequest(prompt), extract, attempts)
    except LMParseFailed:
        if current is not None:
            return current, False
        return story_type, True
    if current is not None and answer.strip().upper() == "KEEP":
        return current, False
    title = answer.strip().strip('"')
    if current is None and title.upper() == "KEEP":
        return story_type, True
    if current is not None and title == current:
        return current, False
    return title, True


def select_title(
    candidates: list[str],
    windows: list[WindowSummary],
    lm: LMBackend,
    attempts: int = lm_mod.DEFAULT_ATTEMPTS,
) -> str:
    """Pick exactly one existing candidate; never invents a new title."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if len(candidates) == 1:
        return candidates[0]

    def extract(text: str) -> str:
        answer = text.strip().splitlines()[0].strip() if text.strip() else ""
        if not answer:
            raise ParseError("empty selection")
        m = re.match(r"^\[?#?(\d+)\]?\.?$", answer)
        if m:
            idx = int(m.group(1))
            if 1 <= idx <= len(candidates):
                return candidates[idx - 1]
            raise ParseError(f"candidate index {idx} out of range")
        cleaned = answer.strip('"')
        for cand in candidates:
            if cand.lower() == cleaned.lower():
                return cand
        raise ParseError(f"answer {answer!r} names no candidate")

    prompt = prompts.render(
        "select_title",
        candidates="\n".join(f"{i+1}. {c}" for i, c in enumerate(candidates)),
        windows=_windows_block(windows),
    )
    try:
        choice, _ = lm_mod.complete_parsed(lm, LMRequest(prompt), extract, attempts)
        return choice
    except LMParseFailed:
        return candidates[-1]


def _lines_exactly(n: int):
    def extract(text: str) -> list[str]:
        items = lm_mod.numbered_lines(text)
        if len(items) < n:
            raise ParseError(f"expected {n} items, got {len(items)}")
        return items[:n]

    return extract


def generate_story_info(
    story_type: str,
    title: str,
    windows: list[WindowSummary],
    hyper: StoryHyper,
    manual_overrides: dict | None,
    lm: LMBackend,
) -> StoryInfo:
    """Assemble the story scaffold; manual elements pass through verbatim.

    Any sub-field that stays unparseable after retries is filled with a
    deterministic placeholder and flagged in placeholder_fields.
    """
    overrides = manual_overrides or {}
    placeholders: list[str] = []
    window_text = _windows_block(windows)

    def ask(template: str, n: int | None, fallback, flag: str, **values):
        if n is None:
            extractor = lm_mod.strip_text
        else:
            extractor = _lines_exactly(n)
        prompt = prompts.render(template, **values)
        try:
            value, _ = lm_mod.complete_parsed(
                lm, LMRequest(prompt), extractor, hyper.attempts, hyper.token_cap
            )
            return value
        except LMParseFailed:
            placeholders.append(flag)
            return fallback

    if "background" in overrides:
        background = overrides["background"]
    else:
        background = ask(
            "story_background",
            None,
            "(background unavailable)",
            "background",
            story_type=story_type,
            title=title,
            windows=window_text,
        )

    if "themes" in overrides:
        themes = list(overrides["themes"])
        if len(themes) != hyper.n_themes:
            raise ValueError("manual themes must match n_themes")
    else:
        themes = ask(
            "story_themes",
            hyper.n_themes,
            [f"theme {i+1}" for i in range(hyper.n_themes)],
            "themes",
            count=str(hyper.n_themes),
            story_type=story_type,
            title=title,
            windows=window_text,
        )

    if "chapter_titles" in overrides:
        chapter_titles = list(overrides["chapter_titles"])
        if len(chapter_titles) != hyper.n_chapters:
            raise ValueError("manual chapter_titles must match n_chapters")
    else:
        chapter_titles = ask(
            "chapter_titles",
            hyper.n_chapters,
            [f"Chapter {i+1}" for i in range(hyper.n_chapters)],
            "chapter_titles",
            count=str(hyper.n_chapters),
            story_type=story_type,
            title=title,
            background=background,
        )

    manual_conflicts = overrides.get("conflicts")
    manual_plot_points = overrides.get("plot_points")
    chapters: list[ChapterPlan] = []
    for i, chapter_title in enumerate(chapter_titles):
        if manual_conflicts is not None:
            conflicts = list(manual_conflicts[i])
        else:
            conflicts = ask(
                "chapter_conflicts",
                hyper.n_conflicts_per_chapter,
                [f"conflict {i+1}.{j+1}" for j in range(hyper.n_conflicts_per_chapter)],
                f"chapters[{i}].conflicts",
                count=str(hyper.n_conflicts_per_chapter),
                index=str(i + 1),
                chapter_title=chapter_title,
                title=title,
                background=background,
                themes="; ".join(themes),
            )
        if manual_plot_points is not None:
            plot_points = list(manual_plot_points[i])
        else:
            plot_points = ask(
                "chapter_plot_points",
                hyper.n_plot_points_per_chapter,
                [f"plot point {i+1}.{j+1}" for j in range(hyper.n_plot_points_per_chapter)],
                f"chapters[{i}].plot_points",
                count=str(hyper.n_plot_points_per_chapter),
                index=str(i + 1),
                chapter_title=chapter_title,
                title=title,
                background=background,
                conflicts="; ".join(conflicts),
            )
        chapters.append(ChapterPlan(title=chapter_title, conflicts=conflicts, plot_points=plot_points))

    return StoryInfo(
        story_type=story_type,
        title=title,
        background=background,
        themes=themes,
        chapters=chapters,
        placeholder_fields=placeholders,
    )


# -- chapter generation -------------------------------------------------------------


def generate_chapter(
    info: StoryInfo,
    index: int,
    history: list[str],
    retrieval: Retrieval,
    lm: LMBackend,
    hyper: StoryHyper | None = None,
) -> ChapterResult:
    """Generate chapter `index` in one or more passes.

    Each pass retrieves top-k events for the chapter's title, conflicts and
    plot points, and prompts with the story scaffold plus all previous
    chapter summaries. Passes stop at the completion sentinel or passes_max.
    """
    hyper = hyper or StoryHyper()
    if index != len(history):
        raise ValueError(f"chapters are generated in order: index {index} vs history {len(history)}")
    plan = info.chapters[index]
    warnings: list[str] = []

    query = " ".join([plan.title] + plan.conflicts + plan.plot_points)
    source_ids: set[int] = set()
    text = ""
    passes = 0
    parse_failures = 0
    done = False
    while passes < hyper.passes_max and not done:
        passes += 1
        try:
            hits = retrieval(query, hyper.retrieval_k)
        except EmptyIndex:
            hits = []
        if not hits and passes == 1:
            warnings.append("retrieval returned no events; generating from story info alone")
            logger.warning("chapter %d: %s", index + 1, warnings[-1])
        source_ids.update(ev.id for ev, _ in hits)
        event_block = "\n".join(f"- (event {ev.id}) {ev.detail}" for ev, _ in hits) or "(none)"
        history_block = (
            "\n".join(f"Chapter {j+1}: {s}" for j, s in enumerate(history)) or "(none yet)"
        )
        prompt = prompts.render(
            "chapter_pass",
            index=str(index + 1),
            chapter_title=plan.title,
            story_type=info.story_type,
            title=info.title,
            background=info.background,
            themes="; ".join(info.themes),
            conflicts="; ".join(plan.conflicts),
            plot_points="; ".join(plan.plot_points),
            history=history_block,
            events=event_block,
            so_far=text or "(empty)",
            sentinel=COMPLETION_SENTINEL,
        )
        try:
            segment, _ = lm_mod.complete_parsed(
                lm, LMRequest(prompt), lm_mod.strip_text, hyper.attempts, hyper.token_cap
            )
        except LMParseFailed:
            parse_failures += 1
            continue
        if COMPLETION_SENTINEL in segment:
            segment = segment.replace(COMPLETION_SENTINEL, "").strip()
            done = True
        text = f"{text}\n\n{segment}".strip() if text else segment

    if not text:
        raise ChapterGenerationFailed(index)

    summary_prompt = prompts.render("chapter_summary", chapter=text)
    try:
        summary, _ = lm_mod.complete_parsed(
            lm, LMRequest(summary_prompt), lm_mod.strip_text, hyper.attempts, hyper.token_cap
        )
    except LMParseFailed:
        summary = text[:200]
    return ChapterResult(
        title=plan.title,
        text=text,
        source_event_ids=sorted(source_ids),
        passes=passes,
        summary=summary,
        warnings=warnings,
    )


def assemble_story(info: StoryInfo, chapters: list[ChapterResult]) -> StoryDocument:
    """Concatenate chapters under headings; word total counts bodies only."""
    total = sum(word_count(ch.text) for ch in chapters)
    return StoryDocument(
        title=info.title,
        story_type=info.story_type,
        info=info,
        chapters=chapters,
        total_words=total,
    )


def tell_story(
    store: EventStore,
    persona_names: list[str],
    lm: LMBackend,
    hyper: StoryHyper | None = None,
    manual_overrides: dict | None = None,
) -> StoryDocument:
    """Run the full pipeline over a populated event store."""
    hyper = hyper or StoryHyper()
    overrides = manual_overrides or {}

    day_summaries = summarize_by_character(store, persona_names, lm, hyper.attempts, hyper.token_cap)
    windows = summarize_windows(day_summaries, lm, hyper)

    story_type = overrides.get("story_type") or generate_story_type(
        windows[: hyper.first_windows], lm, hyper.attempts
    )

    if "title" in overrides:
        title = overrides["title"]
    else:
        current: str | None = None
        candidates: list[str] = []
        for window in windows:
            current, _ = refine_title(current, window, story_type, lm, hyper.attempts)
            if current not in candidates:
                candidates.append(current)
        title = select_title(candidates, windows, lm, hyper.attempts)

    info = generate_story_info(story_type, title, windows, hyper, overrides, lm)

    if len(store) > 0 and store.embedder is not None:
        store.embed_all()
    history: list[str] = []
    chapters: list[ChapterResult] = []
    for i in range(len(info.chapters)):
        chapter = generate_chapter(info, i, history, store.retrieve, lm, hyper)
        history.append(chapter.summary)
        chapters.append(chapter)
    return assemble_story(info, chapters)
