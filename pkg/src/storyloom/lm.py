"""Language-model access: request shaping, retries, extractors, backends.

Every LM-dependent step in the engine goes through ``complete_parsed``,
which enforces a token budget pre-flight, retries unparseable completions
up to a fixed attempt cap, and reports how many attempts were consumed.
Tests run against ``ScriptedBackend``, which replays canned responses keyed
by prompt substrings and records every exchange.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Protocol, TypeVar

import requests

DEFAULT_TEMPERATURE = 0.8
DEFAULT_TIMEOUT_S = 60.0
DEFAULT_TOKEN_CAP = 102_400
DEFAULT_ATTEMPTS = 5

T = TypeVar("T")


class LMError(Exception):
    """Base class for language-model errors."""


class ParseError(LMError):
    """A completion could not be turned into the expected structure."""


class NoFenceFound(ParseError):
    pass


class TagMismatch(ParseError):
    pass


class LMParseFailed(LMError):
    """All parse attempts were exhausted."""

    def __init__(self, attempts: int, last_error: Exception | None):
        self.attempts = attempts
        self.last_error = last_error
        super().__init__(f"failed to parse after {attempts} attempts: {last_error}")


class BudgetExceeded(LMError):
    """Prompt token estimate exceeds the context cap; nothing was dispatched."""


class Timeout(LMError):
    """The backend did not answer within the request timeout."""


class ScriptMiss(LMError):
    """A scripted backend received a prompt no rule matches."""


@dataclass
class LMRequest:
    prompt: str
    temperature: float = DEFAULT_TEMPERATURE
    timeout: float = DEFAULT_TIMEOUT_S
    max_tokens: int | None = None


class LMBackend(Protocol):
    name: str

    def complete(self, request: LMRequest) -> str: ...


Extractor = Callable[[str], T]


def estimate_tokens(text: str) -> int:
    """Deterministic budget estimate: ceil(utf-8 byte length / 4)."""
    return math.ceil(len(text.encode("utf-8")) / 4)


def complete_parsed(
    backend: LMBackend,
    request: LMRequest,
    extractor: Extractor[T],
    attempts: int = DEFAULT_ATTEMPTS,
    token_cap: int = DEFAULT_TOKEN_CAP,
) -> tuple[T, int]:
    """Loop complete -> extract until success; returns (value, attempts used).

    Raises BudgetExceeded before dispatching anything whose estimate is over
    the cap, and LMParseFailed once the attempt budget is exhausted.
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    estimate = estimate_tokens(request.prompt)
    if estimate > token_cap:
        raise BudgetExceeded(f"prompt estimate {estimate} exceeds cap {token_cap}")
    last_error: Exception | None = None
    for attempt in range(1, attempts + 1):
        text = backend.complete(request)
        try:
            return extractor(text), attempt
        except ParseError as exc:
            last_error = exc
    raise LMParseFailed(attempts, last_error)


_FENCE_RE = re.compile(r"```([A-Za-z0-9_-]*)[ \t]*\n(.*?)```", re.DOTALL)


def extract_fenced(text: str, tag: str) -> str:
    """Content of the first code fence carrying ``tag``; tolerates prose."""
    fences = _FENCE_RE.findall(text)
    if not fences:
        raise NoFenceFound("no code fence in completion")
    for fence_tag, body in fences:
        if fence_tag.lower() == tag.lower():
            return body.strip("\n")
    raise TagMismatch(f"no ```{tag} fence (saw tags: {[t or '<none>' for t, _ in fences]})")


def strip_text(text: str) -> str:
    """Extractor: any non-empty completion, trimmed."""
    out = text.strip()
    if not out:
        raise ParseError("empty completion")
    return out


_LINE_PREFIX_RE = re.compile(r"^\s*(?:\d+[.)]|[-*])\s*")


def numbered_lines(text: str, at_most: int | None = None) -> list[str]:
    """Extractor: non-empty lines with list numbering/bullets stripped."""
    items = []
    for line in text.splitlines():
        cleaned = _LINE_PREFIX_RE.sub("", line).strip()
        if cleaned:
            items.append(cleaned)
    if not items:
        raise ParseError("no list items in completion")
    if at_most is not None:
        items = items[:at_most]
    return items


@dataclass
class ScriptRule:
    """Responses replayed when ``pattern`` occurs in the prompt."""

    pattern: str
    responses: list[str]
    cycle: bool = False
    served: int = 0

    def available(self) -> bool:
        return self.cycle or self.served < len(self.responses)

    def next_response(self) -> str:
        if self.cycle:
            response = self.responses[self.served % len(self.responses)]
        else:
            response = self.responses[self.served]
        self.served += 1
        return response


class ScriptedBackend:
    """Deterministic test backend: first matching rule answers the prompt.

    Rules match by substring, in declaration order; a rule is skipped once
    its response queue is exhausted unless it cycles. Unmatched prompts
    raise ScriptMiss so test gaps surface immediately.
    """

    name = "scripted"

    def __init__(self, rules: list[ScriptRule] | None = None):
        self.rules = rules or []
        self.history: list[tuple[str, str]] = []

    @classmethod
    def from_pairs(cls, pairs: list[tuple[str, list[str]]]) -> "ScriptedBackend":
        return cls([ScriptRule(pattern=p, responses=list(r)) for p, r in pairs])

    @classmethod
    def from_file(cls, path) -> "ScriptedBackend":
        rules = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                raw = json.loads(line)
                rules.append(
                    ScriptRule(
                        pattern=raw["pattern"],
                        responses=list(raw["responses"]),
                        cycle=bool(raw.get("cycle", False)),
                    )
                )
        return cls(rules)

    def add(self, pattern: str, responses: list[str], cycle: bool = False) -> None:
        self.rules.append(ScriptRule(pattern=pattern, responses=list(responses), cycle=cycle))

    @property
    def call_count(self) -> int:
        return len(self.history)

    def prompts(self, containing: str | None = None) -> list[str]:
        if containing is None:
            return [p for p, _ in self.history]
        return [p for p, _ in self.history if containing in p]

    def complete(self, request: LMRequest) -> str:
        for rule in self.rules:
            if rule.pattern in request.prompt and rule.available():
                response = rule.next_response()
                self.history.append((request.prompt, response))
                return response
        raise ScriptMiss(f"no scripted response for prompt: {request.prompt[:200]!r}...")


class HttpBackend:
    """Chat-completions-style HTTP backend.

    Wire format: POST {model, messages: [{role, content}], temperature,
    max_tokens?} -> {choices: [{message: {content}}]}. Endpoint, model and
    key come from STORYLOOM_LM_URL / STORYLOOM_LM_MODEL / STORYLOOM_LM_API_KEY
    unless given explicitly.
    """

    name = "http"

    def __init__(
        self,
        url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        session=None,
    ):
        import os

        self.url = url or os.environ.get("STORYLOOM_LM_URL", "")
        self.model = model or os.environ.get("STORYLOOM_LM_MODEL", "")
        self.api_key = api_key if api_key is not None else os.environ.get("STORYLOOM_LM_API_KEY", "")
        self.session = session or requests.Session()
        if not self.url:
            raise ValueError("no LM endpoint configured (STORYLOOM_LM_URL)")

    def complete(self, request: LMRequest) -> str:
        payload: dict = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self.session.post(
                self.url, json=payload, headers=headers, timeout=request.timeout
            )
        except requests.Timeout as exc:
            raise Timeout(f"LM request timed out after {request.timeout}s") from exc
        except requests.RequestException as exc:
            raise LMError(f"LM request failed: {exc}") from exc
        if resp.status_code != 200:
            raise LMError(f"LM endpoint returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise LMError(f"malformed LM response: {exc}") from exc
