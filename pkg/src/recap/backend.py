"""Model backends: classify / rewrite / title behind one interface.

Two implementations ship: a deterministic stub (cue lexicon, pronoun
template, leading-words title) for offline tests and the CLI default, and
an HTTP client with timeout/retry policy for a real summarization
service. Callers never see transport details, only ``BackendResponse`` or
``BackendFailure``.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import httpx

from .transcript import estimate_tokens

CLASSIFY = "classify"
REWRITE = "rewrite"
TITLE = "title"

STYLE_TITLE = "title"
STYLE_SENTENCE = "sentence"


class BackendFailure(Exception):
    """Backend could not produce a usable response.

    ``kind`` is one of "timeout", "http", "malformed_response",
    "exhausted"; ``status`` carries the HTTP status for kind "http".
    """

    def __init__(self, kind: str, message: str, status: int | None = None):
        super().__init__(message)
        self.kind = kind
        self.status = status


@dataclass(frozen=True)
class BackendRequest:
    capability: str
    focus_text: str
    context_text: str
    token_budget: int
    style: str | None = None

    def __post_init__(self) -> None:
        if self.capability not in (CLASSIFY, REWRITE, TITLE):
            raise ValueError(f"unknown capability {self.capability!r}")
        if self.capability in (CLASSIFY, REWRITE) and not self.focus_text.strip():
            raise ValueError(f"{self.capability} requires non-empty focus_text")
        if estimate_tokens(self.context_text) > self.token_budget:
            raise ValueError(
                f"context of {estimate_tokens(self.context_text)} tokens exceeds budget {self.token_budget}"
            )


@dataclass(frozen=True)
class BackendResponse:
    key_point: float | None = None
    action_item: float | None = None
    text: str | None = None

    def __post_init__(self) -> None:
        for score in (self.key_point, self.action_item):
            if score is not None and not 0.0 <= score <= 1.0:
                raise ValueError(f"score {score} outside [0, 1]")


@dataclass(frozen=True)
class BackendPolicy:
    max_parallel: int = 4
    timeout_ms: int = 30000
    retries: int = 2
    backoff_base_ms: int = 500
    endpoint: str = ""
    auth_token_env_var: str = "RECAP_BACKEND_TOKEN"

    def __post_init__(self) -> None:
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")


@dataclass
class RequestJournal:
    """Append-only record of backend traffic.

    Default verbosity stores no transcript text — only timestamps,
    capability, token counts, and outcomes. ``verbose=True`` adds the
    focus text (used by tests asserting what reached the model).
    """

    verbose: bool = False
    path: str | None = None
    _entries: list[dict] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def record(self, capability: str, token_count: int, outcome: str, focus: str | None = None) -> None:
        entry = {
            "at": datetime.now(timezone.utc).isoformat(),
            "capability": capability,
            "token_count": token_count,
            "outcome": outcome,
        }
        if self.verbose and focus is not None:
            entry["focus"] = focus
        with self._lock:
            self._entries.append(entry)
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def entries(self) -> list[dict]:
        with self._lock:
            return list(self._entries)


def _journal(journal: RequestJournal | None, req: BackendRequest, outcome: str) -> None:
    if journal is not None:
        tokens = estimate_tokens(req.focus_text) + estimate_tokens(req.context_text)
        journal.record(req.capability, tokens, outcome, focus=req.focus_text)


# ---------------------------------------------------------------------------
# Stub backend
# ---------------------------------------------------------------------------

_WEEKDAYS = "monday|tuesday|wednesday|thursday|friday|saturday|sunday"

ACTION_CUES = [
    r"\bi will\b",
    r"\bi'll\b",
    r"\bwe will\b",
    r"\baction item\b",
    r"\btodo\b",
    rf"\bby (?:{_WEEKDAYS})\b",
    r"\bassigned to\b",
]

KEY_POINT_CUES = [
    r"\bwe decided\b",
    r"\bthe main point\b",
    r"\bimportantly\b",
    r"\bkey takeaway\b",
    r"\bagreed that\b",
]

_ACTION_RE = re.compile("|".join(ACTION_CUES))
_KEY_POINT_RE = re.compile("|".join(KEY_POINT_CUES))

CUE_HIT_SCORE = 0.9

_SPEAKER_PREFIX = re.compile(r"^\s*(?P<name>[^:\n]{1,80}?):\s*(?P<text>.*)$")

# First-person replacements; singular forms take the speaker's name on
# first use, "they" afterwards. Never introduces gendered pronouns.
_FIRST_PERSON_SINGULAR = {
    "i": "{name}",
    "i'll": "{name} will",
    "i'm": "{name} is",
    "i've": "{name} has",
    "i'd": "{name} would",
}
_FIRST_PERSON_SINGULAR_LATER = {
    "i": "they",
    "i'll": "they will",
    "i'm": "they are",
    "i've": "they have",
    "i'd": "they would",
}
_FIRST_PERSON_OTHER = {
    "my": "their",
    "mine": "theirs",
    "me": "them",
    "myself": "themselves",
    "we": "they",
    "we'll": "they will",
    "we're": "they are",
    "we've": "they have",
    "we'd": "they would",
    "our": "their",
    "ours": "theirs",
    "us": "them",
    "ourselves": "themselves",
}

_TRAILING_PUNCT = ".,;:!?"


def _split_focus_line(focus_text: str) -> tuple[str, str]:
    first_line = focus_text.strip().splitlines()[0]
    m = _SPEAKER_PREFIX.match(first_line)
    if m:
        return m.group("name").strip(), m.group("text").strip()
    return "", first_line.strip()


def _rewrite_third_person(speaker: str, text: str) -> str:
    out: list[str] = []
    used_name = False
    for token in text.split():
        core = token.strip(_TRAILING_PUNCT + "\"'()[]")
        prefix_len = len(token) - len(token.lstrip("\"'(["))
        suffix = token[len(token.rstrip(_TRAILING_PUNCT + "\"')]")):] if core else ""
        prefix = token[:prefix_len]
        low = core.lower()
        if low in _FIRST_PERSON_SINGULAR:
            table = _FIRST_PERSON_SINGULAR if not used_name else _FIRST_PERSON_SINGULAR_LATER
            replacement = table[low].format(name=speaker or "they")
            used_name = True
        elif low in _FIRST_PERSON_OTHER:
            replacement = _FIRST_PERSON_OTHER[low]
        else:
            out.append(token)
            continue
        out.append(f"{prefix}{replacement}{suffix}")
    rewritten = " ".join(out)
    if speaker and speaker.lower() not in rewritten.lower():
        rewritten = f"{speaker} noted that {rewritten}"
    rewritten = rewritten.strip()
    if rewritten:
        rewritten = rewritten[0].upper() + rewritten[1:]
        if rewritten[-1] not in ".!?":
            rewritten += "."
    return rewritten


def _leading_words(text: str, limit: int) -> str:
    words = text.split()[:limit]
    out = " ".join(words).rstrip(_TRAILING_PUNCT)
    return out[0].upper() + out[1:] if out else ""


class StubBackend:
    """Pure-function backend: same request, same response, any thread."""

    def __init__(self, journal: RequestJournal | None = None):
        self.journal = journal

    def invoke(self, req: BackendRequest) -> BackendResponse:
        if req.capability == CLASSIFY:
            _, text = _split_focus_line(req.focus_text)
            low = text.lower()
            resp = BackendResponse(
                key_point=CUE_HIT_SCORE if _KEY_POINT_RE.search(low) else 0.0,
                action_item=CUE_HIT_SCORE if _ACTION_RE.search(low) else 0.0,
            )
        elif req.capability == REWRITE:
            speaker, text = _split_focus_line(req.focus_text)
            resp = BackendResponse(text=_rewrite_third_person(speaker, text))
        else:
            limit = 6 if req.style != STYLE_SENTENCE else 12
            title = _leading_words(req.focus_text, limit)
            if req.style == STYLE_SENTENCE and title:
                title += "."
            resp = BackendResponse(text=title)
        _journal(self.journal, req, "ok")
        return resp


# ---------------------------------------------------------------------------
# HTTP backend
# ---------------------------------------------------------------------------

_TRANSIENT_STATUS = {429, 500, 502, 503, 504}


class HttpBackend:
    """POSTs requests to an external model service per ``BackendPolicy``.

    Transient failures (timeouts, connection errors, 429/5xx) are retried
    with exponential backoff; a malformed body or a hard HTTP status
    fails immediately. ``max_parallel`` is enforced with a process-wide
    semaphore.
    """

    def __init__(self, policy: BackendPolicy, journal: RequestJournal | None = None):
        if not policy.endpoint:
            raise ValueError("HTTP backend requires policy.endpoint")
        self.policy = policy
        self.journal = journal
        self._semaphore = threading.BoundedSemaphore(policy.max_parallel)
        self._client = httpx.Client(timeout=policy.timeout_ms / 1000.0)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.policy.auth_token_env_var, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post_once(self, req: BackendRequest) -> BackendResponse:
        body = {
            "capability": req.capability,
            "focus": req.focus_text,
            "context": req.context_text,
            "style": req.style,
            "budget": req.token_budget,
        }
        with self._semaphore:
            response = self._client.post(self.policy.endpoint, json=body, headers=self._headers())
        if response.status_code in _TRANSIENT_STATUS:
            raise BackendFailure("http", f"transient status {response.status_code}", status=response.status_code)
        if response.status_code >= 400:
            raise BackendFailure("http", f"status {response.status_code}", status=response.status_code)
        try:
            payload = response.json()
        except ValueError as exc:
            raise BackendFailure("malformed_response", f"non-JSON body: {exc}") from exc
        return self._parse_payload(req, payload)

    @staticmethod
    def _parse_payload(req: BackendRequest, payload: object) -> BackendResponse:
        if not isinstance(payload, dict):
            raise BackendFailure("malformed_response", "body is not an object")
        try:
            if req.capability == CLASSIFY:
                scores = payload["scores"]
                return BackendResponse(
                    key_point=float(scores["key_point"]),
                    action_item=float(scores["action_item"]),
                )
            text = payload["text"]
            if not isinstance(text, str):
                raise TypeError("text must be a string")
            return BackendResponse(text=text)
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendFailure("malformed_response", f"bad response shape: {exc}") from exc

    def invoke(self, req: BackendRequest) -> BackendResponse:
        attempts = self.policy.retries + 1
        last: BackendFailure | None = None
        for attempt in range(attempts):
            try:
                resp = self._post_once(req)
                _journal(self.journal, req, "ok")
                return resp
            except BackendFailure as failure:
                transient = failure.kind == "timeout" or (
                    failure.kind == "http" and failure.status in _TRANSIENT_STATUS
                )
                _journal(self.journal, req, failure.kind)
                if not transient:
                    raise
                last = failure
            except httpx.TimeoutException as exc:
                _journal(self.journal, req, "timeout")
                last = BackendFailure("timeout", str(exc))
            except httpx.HTTPError as exc:
                _journal(self.journal, req, "connect_error")
                last = BackendFailure("http", str(exc))
            if attempt < attempts - 1:
                time.sleep(self.policy.backoff_base_ms * (2**attempt) / 1000.0)
        raise BackendFailure("exhausted", f"gave up after {attempts} attempts: {last}")
