"""HTTP service for the human-evaluation workflow.

Annotators log in with static credentials, pull their next assigned story
pair, and submit one verdict per pair across all six dimensions. Verdicts
are appended to verdicts.jsonl through a single serialized writer and
replayed on startup, so completed pairs survive restarts and duplicates
are rejected with 409.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException
from pydantic import BaseModel

from .evaluation import (
    ALL_DIMENSIONS,
    CHOICES,
    EvalDimension,
    EvalVerdict,
    PairingPlan,
    word_count,
)

API_VERSION = 1

CRITERIA = {
    "en": {
        "Plot": "Structural integrity and coherence: a clear beginning, middle, and end, with events unfolding in a logical, engaging sequence and no plot holes or abrupt transitions.",
        "Creativity": "Originality and imaginative strength: fresh ideas, vivid characters, and resonant themes that avoid clichés and formulaic tropes.",
        "Character Development": "Depth and progression of characters: motivations and decisions stay consistent with established personas while showing growth, transformation, or internal struggle.",
        "Language Use": "Richness, precision, and stylistic impact: varied sentence structures, purposeful word choices, and literary devices that vividly portray settings and sustain engagement.",
        "Conflict Quality": "Presence, intensity, and narrative function of conflict: meaningful tension and stakes that drive the plot, deepen character arcs, and highlight themes.",
        "Overall": "Taking all dimensions together, which story do you prefer overall.",
    },
    "zh": {
        "Plot": "情节:评估叙事结构的完整性与连贯性。优秀的情节有清晰的开端、发展与结局,事件按合乎逻辑且引人入胜的顺序展开,避免情节漏洞与突兀的转折。",
        "Creativity": "创意:衡量故事的原创性与想象力。有创意的故事提出新颖的构思、鲜活的人物和动人的主题,避免陈词滥调与套路化写法。",
        "Character Development": "人物塑造:评估人物的深度与成长轨迹。出色的人物塑造呈现动机明确、前后一致的多维人物,并展现成长、转变或内心挣扎。",
        "Language Use": "语言运用:评估语言的丰富性、准确性与风格感染力。句式多变、用词考究,并善用比喻与意象渲染气氛、刻画场景。",
        "Conflict Quality": "冲突质量:评估冲突的存在感、强度及其叙事作用。高质量的冲突推动情节发展、深化人物弧线,并通过有意义的张力凸显主题。",
        "Overall": "总体:综合以上各维度,你总体更喜欢哪篇故事。",
    },
}

LOCALES = tuple(CRITERIA.keys())


class ServiceError(Exception):
    pass


def hash_password(password: str, salt: str) -> str:
    return hashlib.sha256((salt + password).encode("utf-8")).hexdigest()


def make_credentials(entries: list[tuple[str, str]]) -> list[dict]:
    """Build a credential file payload from (annotator_id, password) pairs."""
    creds = []
    for annotator_id, password in entries:
        salt = secrets.token_hex(8)
        creds.append(
            {
                "id": annotator_id,
                "salt": salt,
                "password_sha256": hash_password(password, salt),
            }
        )
    return creds


def save_credentials(entries: list[tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(make_credentials(entries), fh, indent=2)


@dataclass
class AnnotatorSession:
    annotator_id: str
    token: str
    locale: str


class LoginRequest(BaseModel):
    annotator_id: str
    password: str
    locale: str = "en"


class VerdictRequest(BaseModel):
    pair_id: str
    choices: dict[str, str]


class EvalService:
    """All mutable state behind one lock; FastAPI routes delegate here."""

    def __init__(
        self,
        plan: PairingPlan,
        stories_dir: Path,
        credentials_path: Path,
        verdicts_path: Path,
    ):
        self.plan = plan
        self.stories_dir = Path(stories_dir)
        self.verdicts_path = Path(verdicts_path)
        self.lock = threading.Lock()
        self.sessions: dict[str, AnnotatorSession] = {}
        with open(credentials_path, encoding="utf-8") as fh:
            self.credentials = {c["id"]: c for c in json.load(fh)}
        self.completed: dict[str, set[str]] = {a: set() for a in plan.annotators}
        self._replay()

    def _replay(self) -> None:
        if not self.verdicts_path.exists():
            return
        with open(self.verdicts_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                annotator = rec.get("annotator_id")
                if annotator is not None:
                    self.completed.setdefault(annotator, set()).add(rec["pair_id"])

    def login(self, annotator_id: str, password: str, locale: str) -> AnnotatorSession:
        cred = self.credentials.get(annotator_id)
        if cred is None or hash_password(password, cred["salt"]) != cred["password_sha256"]:
            raise HTTPException(status_code=401, detail="invalid credentials")
        if locale not in LOCALES:
            locale = "en"
        session = AnnotatorSession(
            annotator_id=annotator_id, token=secrets.token_hex(16), locale=locale
        )
        with self.lock:
            self.sessions[session.token] = session
        return session

    def session_for(self, authorization: str | None) -> AnnotatorSession:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        session = self.sessions.get(token)
        if session is None:
            raise HTTPException(status_code=401, detail="unknown token")
        return session

    def _assigned(self, annotator_id: str):
        return [p for p in self.plan.pairs if p.annotator == annotator_id]

    def story_text(self, setting: str, method: str) -> str:
        path = self.stories_dir / setting / f"{method}.txt"
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise HTTPException(status_code=500, detail=f"story file missing: {exc}") from exc

    def next_pair(self, session: AnnotatorSession) -> dict:
        assigned = self._assigned(session.annotator_id)
        done = self.completed.get(session.annotator_id, set())
        pending = [p for p in assigned if p.pair_id not in done]
        if not pending:
            return {"done": True, "completed": len(done), "assigned": len(assigned)}
        pair = pending[0]
        story_a = self.story_text(pair.setting, pair.presented_a)
        story_b = self.story_text(pair.setting, pair.presented_b)
        return {
            "done": False,
            "pair_id": pair.pair_id,
            "setting": pair.setting,
            "story_a": {"text": story_a, "word_count": word_count(story_a)},
            "story_b": {"text": story_b, "word_count": word_count(story_b)},
            "criteria": CRITERIA[session.locale],
            "dimensions": [d.value for d in ALL_DIMENSIONS],
            "choices": list(CHOICES),
            "progress": {"completed": len(done), "assigned": len(assigned)},
        }

    def submit_verdict(self, session: AnnotatorSession, pair_id: str, choices: dict[str, str]) -> dict:
        try:
            pair = self.plan.pair(pair_id)
        except Exception:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id!r}")
        if pair.annotator != session.annotator_id:
            raise HTTPException(status_code=403, detail="pair assigned to another annotator")
        normalized: dict[str, str] = {}
        for dim in ALL_DIMENSIONS:
            if dim.value not in choices:
                raise HTTPException(status_code=422, detail=f"missing dimension {dim.value!r}")
            choice = choices[dim.value]
            if choice not in CHOICES:
                raise HTTPException(
                    status_code=422, detail=f"invalid choice {choice!r} for {dim.value!r}"
                )
            normalized[dim.value] = choice
        extra = set(choices) - {d.value for d in ALL_DIMENSIONS}
        if extra:
            raise HTTPException(status_code=422, detail=f"unknown dimensions {sorted(extra)}")

        with self.lock:
            done = self.completed.setdefault(session.annotator_id, set())
            if pair_id in done:
                raise HTTPException(status_code=409, detail=f"pair {pair_id!r} already evaluated")
            record = {
                "pair_id": pair_id,
                "annotator_id": session.annotator_id,
                "judge": "human",
                "choices": normalized,
            }
            with open(self.verdicts_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            done.add(pair_id)
        return {"accepted": True, "pair_id": pair_id}

    def progress(self, session: AnnotatorSession) -> dict:
        assigned = self._assigned(session.annotator_id)
        done = self.completed.get(session.annotator_id, set())
        return {
            "annotator_id": session.annotator_id,
            "completed": len(done),
            "assigned": len(assigned),
            "remaining": len(assigned) - len(done),
        }


def create_app(
    plan: PairingPlan,
    stories_dir,
    credentials_path,
    verdicts_path,
    static_dir=None,
) -> FastAPI:
    service = EvalService(plan, stories_dir, credentials_path, verdicts_path)
    app = FastAPI(title="story pair annotation service", version=str(API_VERSION))
    app.state.service = service

    @app.get("/health")
    def health():
        return {"status": "ok", "api_version": API_VERSION}

    @app.post("/login")
    def login(body: LoginRequest):
        session = service.login(body.annotator_id, body.password, body.locale)
        return {
            "token": session.token,
            "annotator_id": session.annotator_id,
            "locale": session.locale,
        }

    @app.get("/next")
    def next_pair(authorization: str | None = Header(default=None)):
        session = service.session_for(authorization)
        return service.next_pair(session)

    @app.post("/verdict")
    def verdict(body: VerdictRequest, authorization: str | None = Header(default=None)):
        session = service.session_for(authorization)
        return service.submit_verdict(session, body.pair_id, body.choices)

    @app.get("/progress")
    def progress(authorization: str | None = Header(default=None)):
        session = service.session_for(authorization)
        return service.progress(session)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def human_verdicts_to_eval(verdicts_path) -> list[EvalVerdict]:
    """Read service-written verdicts.jsonl into aggregate()-ready objects."""
    out: list[EvalVerdict] = []
    with open(verdicts_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                EvalVerdict(
                    pair_id=rec["pair_id"],
                    choices={EvalDimension(d): c for d, c in rec["choices"].items()},
                    judge=rec.get("judge", "human"),
                )
            )
    return out
