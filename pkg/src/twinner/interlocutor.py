"""Grounded natural-language conversations for agents.

Every conversation opens with a fixed system prompt and a role prompt
instantiated from the agent's name, its most informative role, the
environment, and the role's data rendered as sorted ``key: value`` lines.
Each user turn additionally carries a digest of the agent's recent actions.
Requests always go out at temperature 0.

Two backends implement the same ``complete(request)`` contract: an HTTP
chat-completion client, and a deterministic stub that answers lookup and
grade-aggregation questions straight from the role data (and otherwise
says it does not know), which makes grounding testable offline.
"""

from __future__ import annotations

import os
import re
import threading
from dataclasses import dataclass, field as dataclass_field
from typing import Any, Protocol

import httpx

from .engine import Engine, RoleBinding, UnknownBinding
from .errors import TwinnerError

SYSTEM_PROMPT = (
    "Be as concise as possible in your answers. "
    "If you do not know the answer to a question, simply answer as 'I do not know.'."
)

ROLE_PROMPT_TEMPLATE = (
    "As {owner_name}, your current role is {role_name} within the environment "
    "{environment}. You have access to {role_specific_data}. You are empowered "
    "to act directly as {role_name}. Analyze the user's question or request, "
    "leverage your knowledge and the provided data, and generate the best "
    "possible answer or solution. If you need additional reasoning steps, "
    "please outline them clearly. Then, finalize your response as {role_name}."
)

FALLBACK_ANSWER = "I do not know."

# Most informative role first; used to pick the binding a prompt speaks as.
ROLE_PROMPT_PRIORITY = ("school", "residence", "student", "resident", "experimenter", "interlocutor")

DEFAULT_DIGEST_ENTRIES = 20


class BackendUnavailable(TwinnerError):
    """Transport-level backend failure; the caller may retry."""


class EmptyUserText(TwinnerError):
    pass


class InvalidGradeRange(TwinnerError):
    pass


@dataclass
class ChatMessage:
    author: str  # system | user | assistant
    text: str
    turn_index: int


@dataclass
class Conversation:
    agent_id: int
    messages: list[ChatMessage] = dataclass_field(default_factory=list)
    created_day: int = 0

    def append(self, author: str, text: str) -> ChatMessage:
        message = ChatMessage(author, text, len(self.messages))
        self.messages.append(message)
        return message


@dataclass
class BackendRequest:
    """What a backend sees; temperature is pinned to 0."""

    messages: list[dict[str, str]]
    model_id: str
    temperature: float = dataclass_field(default=0.0, init=False)


class ChatBackend(Protocol):
    name: str

    def complete(self, request: BackendRequest) -> str: ...


def build_system_prompt() -> str:
    return SYSTEM_PROMPT


def render_role_data(role_data: dict[str, Any]) -> str:
    if not role_data:
        return "(no role data)"
    return "\n".join(f"{key}: {role_data[key]}" for key in sorted(role_data))


def role_display_name(role_name: str) -> str:
    return role_name.replace("_", " ").title().replace(" ", "")


def build_role_prompt(agent_name: str, binding: RoleBinding, environment_name: str) -> str:
    """Instantiate the role prompt; no placeholder braces survive."""
    return ROLE_PROMPT_TEMPLATE.format(
        owner_name=agent_name,
        role_name=role_display_name(binding.role_name),
        environment=environment_name,
        role_specific_data=render_role_data(binding.role_data),
    )


def aggregate_students(school_role_data: dict[str, Any], from_grade: int, to_grade: int) -> int:
    """Inclusive pupil-count sum over a grade range of a school's role data."""
    if not 1 <= from_grade <= to_grade <= 13:
        raise InvalidGradeRange(f"bad grade range {from_grade}..{to_grade}")
    return sum(int(school_role_data.get(f"g{g}", 0)) for g in range(from_grade, to_grade + 1))


def action_log_digest(engine: Engine, agent_id: int, max_entries: int = DEFAULT_DIGEST_ENTRIES) -> str:
    """Newest-first rendering of the agent's most recent event-log lines."""
    if max_entries < 0:
        raise ValueError("max_entries must be >= 0")
    events = engine.events_for(agent_id)[-max_entries:] if max_entries else []
    return "\n".join(f"day {e.day}: {e.event_type} {e.detail}" for e in reversed(events))


def prompt_binding_for(engine: Engine, agent_id: int) -> RoleBinding:
    """The binding a conversation speaks as: most informative role wins.

    When the agent plays the same role in several environments, the binding
    carrying the most role data wins; ties go to the lowest environment id.
    """
    bindings = engine.bindings_of(agent_id)
    for role_name in ROLE_PROMPT_PRIORITY:
        matching = [b for b in bindings if b.role_name == role_name]
        if matching:
            return max(matching, key=lambda b: (len(b.role_data), -b.environment_id))
    raise UnknownBinding(f"agent {agent_id} plays no role")


class Interlocutor:
    """Conversation manager for all agents of one engine."""

    def __init__(
        self,
        engine: Engine,
        backend: ChatBackend,
        model_id: str = "twinner",
        digest_entries: int = DEFAULT_DIGEST_ENTRIES,
        state_lock: threading.Lock | None = None,
    ):
        self.engine = engine
        self.backend = backend
        self.model_id = model_id
        self.digest_entries = digest_entries
        self._state_lock = state_lock
        self.conversations: dict[int, Conversation] = {}

    def conversation(self, agent_id: int) -> Conversation:
        """The agent's conversation, opened with system and role prompts."""
        existing = self.conversations.get(agent_id)
        if existing is not None:
            return existing
        agent = self.engine.agent(agent_id)
        binding = prompt_binding_for(self.engine, agent_id)
        environment = self.engine.environment(binding.environment_id)
        conversation = Conversation(agent_id, created_day=self.engine.clock.day)
        conversation.append("system", build_system_prompt())
        conversation.append("system", build_role_prompt(agent.name, binding, environment.name))
        self.conversations[agent_id] = conversation
        return conversation

    def _build_request(self, conversation: Conversation, agent_id: int) -> BackendRequest:
        messages = [{"role": m.author, "content": m.text} for m in conversation.messages]
        digest = action_log_digest(self.engine, agent_id, self.digest_entries)
        if digest:
            messages.insert(2, {"role": "system", "content": f"Recent actions:\n{digest}"})
        return BackendRequest(messages=messages, model_id=self.model_id)

    def converse(self, agent_id: int, user_text: str) -> ChatMessage:
        """One user turn: appends the user message and the backend's reply."""
        if not user_text or not user_text.strip():
            raise EmptyUserText("user message must be non-empty")
        lock = self._state_lock
        if lock is not None:
            with lock:
                conversation = self.conversation(agent_id)
                conversation.append("user", user_text)
                request = self._build_request(conversation, agent_id)
        else:
            conversation = self.conversation(agent_id)
            conversation.append("user", user_text)
            request = self._build_request(conversation, agent_id)
        # The backend call runs outside the engine lock on purpose: it only
        # sees the request snapshot built above.
        reply = self.backend.complete(request)
        return conversation.append("assistant", reply)


# ----------------------------------------------------------------------
# backends
# ----------------------------------------------------------------------

_GRADE_RANGE_RE = re.compile(
    r"grades?\s+(\d+)\s*(?:to|through|and|[-–])\s*(?:grades?\s+)?(\d+)", re.IGNORECASE
)
_GRADE_RE = re.compile(r"grade\s+(\d+)", re.IGNORECASE)
_ROLE_DATA_RE = re.compile(r"You have access to (.*?)\. You are empowered", re.DOTALL)


def _parse_role_data_from_prompt(messages: list[dict[str, str]]) -> dict[str, str]:
    for message in messages:
        match = _ROLE_DATA_RE.search(message.get("content", ""))
        if match:
            block = match.group(1)
            if block == "(no role data)":
                return {}
            data: dict[str, str] = {}
            for line in block.split("\n"):
                key, sep, value = line.partition(": ")
                if sep:
                    data[key] = value
            return data
    return {}


class StubBackend:
    """Deterministic offline backend grounded in the role-prompt data.

    Answers grade-range aggregations, single-grade lookups, and direct
    key lookups; everything else gets the fallback answer.
    """

    name = "stub"

    def complete(self, request: BackendRequest) -> str:
        data = _parse_role_data_from_prompt(request.messages)
        question = ""
        for message in reversed(request.messages):
            if message.get("role") == "user":
                question = message.get("content", "")
                break

        range_match = _GRADE_RANGE_RE.search(question)
        if range_match and any(re.fullmatch(r"g\d+", k) for k in data):
            lo, hi = int(range_match.group(1)), int(range_match.group(2))
            try:
                grades = {
                    int(k[1:]): int(v) for k, v in data.items() if re.fullmatch(r"g\d+", k)
                }
                total = aggregate_students(
                    {f"g{g}": c for g, c in grades.items()}, lo, hi
                )
            except (InvalidGradeRange, ValueError):
                return FALLBACK_ANSWER
            return str(total)

        grade_match = _GRADE_RE.search(question)
        if grade_match:
            key = f"g{int(grade_match.group(1))}"
            if key in data:
                return str(data[key])
            return FALLBACK_ANSWER

        tokens = set(re.findall(r"[\w.]+", question.lower()))
        for key in sorted(data):
            if key.lower() in tokens:
                return str(data[key])
        return FALLBACK_ANSWER


class HttpBackend:
    """Chat-completion client: JSON in, first assistant message out."""

    name = "http"

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.url = url or os.environ.get("TWINNER_LLM_URL", "")
        self.api_key = api_key if api_key is not None else os.environ.get("TWINNER_LLM_KEY")
        self.model = model or os.environ.get("TWINNER_LLM_MODEL")
        self.timeout = timeout
        self._transport = transport
        if not self.url:
            raise BackendUnavailable("no backend URL configured (set TWINNER_LLM_URL)")

    def _payload(self, request: BackendRequest) -> dict:
        return {
            "model": self.model or request.model_id,
            "temperature": int(request.temperature) if request.temperature == 0 else request.temperature,
            "messages": request.messages,
        }

    @staticmethod
    def _extract_reply(doc: dict) -> str | None:
        choices = doc.get("choices")
        if isinstance(choices, list):
            for choice in choices:
                message = (choice or {}).get("message") or {}
                if message.get("role") == "assistant" and message.get("content"):
                    return str(message["content"])
        messages = doc.get("messages")
        if isinstance(messages, list):
            for message in messages:
                if (message or {}).get("role") == "assistant" and message.get("content"):
                    return str(message["content"])
        return None

    def complete(self, request: BackendRequest) -> str:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            with httpx.Client(timeout=self.timeout, transport=self._transport) as client:
                response = client.post(self.url, json=self._payload(request), headers=headers)
                response.raise_for_status()
                doc = response.json()
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"backend request failed, retry later: {exc}") from exc
        except ValueError as exc:
            raise BackendUnavailable(f"backend returned invalid JSON: {exc}") from exc
        reply = self._extract_reply(doc)
        if reply is None:
            raise BackendUnavailable("backend response carries no assistant message")
        return reply


def make_backend(kind: str, **kwargs) -> ChatBackend:
    """Factory for the --llm flag: 'stub' or 'http'."""
    if kind == "stub":
        return StubBackend()
    if kind == "http":
        return HttpBackend(**kwargs)
    raise ValueError(f"unknown backend {kind!r}")
