"""Organizational simulation core: agents, environments, roles, messaging.

Agents play roles within environments (groups); two agents may exchange
messages only while they share at least one environment.  Time advances in
whole calendar days; per-day behaviors run in ascending agent-id order so
that runs are reproducible.  Every state change is appended to an
append-only event log, which doubles as the action history consumed by the
conversation layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import TwinnerError

AGENT_KINDS = ("person", "building", "twinner")
ENVIRONMENT_KINDS = ("geo", "network", "twinner")
ROLE_NAMES = ("resident", "school", "residence", "experimenter", "interlocutor", "student")

# Agent id 0 is reserved for the system and is never issued.
SYSTEM_ID = 0


class EmptyName(TwinnerError):
    pass


class UnknownAgent(TwinnerError):
    pass


class UnknownEnvironment(TwinnerError):
    pass


class DuplicateBinding(TwinnerError):
    pass


class UnknownBinding(TwinnerError):
    pass


class NoSharedEnvironment(TwinnerError):
    pass


class NoScenarioLoaded(TwinnerError):
    pass


@dataclass
class AgentRecord:
    id: int
    name: str
    kind: str


@dataclass
class EnvironmentRecord:
    id: int
    name: str
    kind: str


@dataclass
class RoleBinding:
    agent_id: int
    environment_id: int
    role_name: str
    role_data: dict[str, Any] = field(default_factory=dict)


@dataclass
class Message:
    sender_id: int
    receiver_id: int
    payload: dict[str, Any]
    tick: int


@dataclass
class EventLogEntry:
    day: int
    agent_id: int
    event_type: str
    detail: str


class SimClock:
    """Day counter with a weekday derived from the configured start weekday."""

    def __init__(self, start_weekday: int = 0):
        if not 0 <= int(start_weekday) <= 6:
            raise ValueError("start_weekday must be in 0..6")
        self.start_weekday = int(start_weekday)
        self.day = 0

    @property
    def weekday(self) -> int:
        return (self.start_weekday + self.day) % 7

    def weekday_of(self, day: int) -> int:
        return (self.start_weekday + day) % 7

    def advance(self) -> None:
        self.day += 1


# behavior(engine, agent_id, day, weekday) -> None; runs once per agent per day
Behavior = Callable[["Engine", int, int, int], None]


class Engine:
    """Holds all agents, environments, role bindings and the event log.

    Mutating calls are expected to be serialized by the caller (the HTTP
    service wraps them in one lock); reads may run against the current
    state at any point between mutations.
    """

    def __init__(self, start_weekday: int = 0):
        self.clock = SimClock(start_weekday)
        self.agents: dict[int, AgentRecord] = {}
        self.environments: dict[int, EnvironmentRecord] = {}
        self.events: list[EventLogEntry] = []
        self._members: dict[int, set[int]] = {}
        self._memberships: dict[int, set[int]] = {}
        self._bindings: dict[tuple[int, int, str], RoleBinding] = {}
        self._inboxes: dict[int, list[Message]] = {}
        self._behaviors: dict[int, Behavior] = {}
        self._next_agent_id = SYSTEM_ID + 1
        self._next_env_id = 1
        self._scenario: str | None = None

    # ------------------------------------------------------------------
    # agents and environments
    # ------------------------------------------------------------------

    def create_agent(self, name: str, kind: str) -> int:
        if not name:
            raise EmptyName("agent name must be non-empty")
        if kind not in AGENT_KINDS:
            raise ValueError(f"unknown agent kind {kind!r}")
        agent_id = self._next_agent_id
        self._next_agent_id += 1
        self.agents[agent_id] = AgentRecord(agent_id, name, kind)
        self._memberships[agent_id] = set()
        self._inboxes[agent_id] = []
        return agent_id

    def create_environment(self, name: str, kind: str) -> int:
        if not name:
            raise EmptyName("environment name must be non-empty")
        if kind not in ENVIRONMENT_KINDS:
            raise ValueError(f"unknown environment kind {kind!r}")
        env_id = self._next_env_id
        self._next_env_id += 1
        self.environments[env_id] = EnvironmentRecord(env_id, name, kind)
        self._members[env_id] = set()
        return env_id

    def agent(self, agent_id: int) -> AgentRecord:
        try:
            return self.agents[agent_id]
        except KeyError:
            raise UnknownAgent(f"no agent with id {agent_id}") from None

    def environment(self, environment_id: int) -> EnvironmentRecord:
        try:
            return self.environments[environment_id]
        except KeyError:
            raise UnknownEnvironment(f"no environment with id {environment_id}") from None

    # ------------------------------------------------------------------
    # roles and membership
    # ------------------------------------------------------------------

    def assume_role(
        self,
        agent_id: int,
        environment_id: int,
        role_name: str,
        role_data: dict[str, Any] | None = None,
    ) -> RoleBinding:
        agent = self.agent(agent_id)
        env = self.environment(environment_id)
        if role_name not in ROLE_NAMES:
            raise ValueError(f"unknown role {role_name!r}")
        key = (agent_id, environment_id, role_name)
        if key in self._bindings:
            raise DuplicateBinding(
                f"agent {agent_id} already plays {role_name!r} in environment {environment_id}"
            )
        binding = RoleBinding(agent_id, environment_id, role_name, dict(role_data or {}))
        self._bindings[key] = binding
        self._members[environment_id].add(agent_id)
        self._memberships[agent_id].add(environment_id)
        self.log_event(agent_id, "role_assumed", f"{role_name} in {env.name}")
        return binding

    def leave_role(self, agent_id: int, environment_id: int, role_name: str) -> RoleBinding:
        key = (agent_id, environment_id, role_name)
        binding = self._bindings.pop(key, None)
        if binding is None:
            raise UnknownBinding(
                f"agent {agent_id} does not play {role_name!r} in environment {environment_id}"
            )
        if not any(
            a == agent_id and e == environment_id for (a, e, _r) in self._bindings
        ):
            self._members[environment_id].discard(agent_id)
            self._memberships[agent_id].discard(environment_id)
        env = self.environments[environment_id]
        self.log_event(agent_id, "role_left", f"{role_name} in {env.name}")
        return binding

    def binding(self, agent_id: int, environment_id: int, role_name: str) -> RoleBinding:
        try:
            return self._bindings[(agent_id, environment_id, role_name)]
        except KeyError:
            raise UnknownBinding(
                f"agent {agent_id} does not play {role_name!r} in environment {environment_id}"
            ) from None

    def bindings_of(self, agent_id: int) -> list[RoleBinding]:
        self.agent(agent_id)
        return [b for b in self._bindings.values() if b.agent_id == agent_id]

    def agents_in_environment(self, environment_id: int) -> list[int]:
        self.environment(environment_id)
        return sorted(self._members[environment_id])

    def is_member(self, environment_id: int, agent_id: int) -> bool:
        self.environment(environment_id)
        return agent_id in self._members[environment_id]

    def environments_of(self, agent_id: int) -> set[int]:
        self.agent(agent_id)
        return set(self._memberships[agent_id])

    # ------------------------------------------------------------------
    # messaging
    # ------------------------------------------------------------------

    def send_message(self, sender_id: int, receiver_id: int, payload: dict[str, Any]) -> Message:
        """Deliver a message; legal only while the two agents share an environment."""
        self.agent(sender_id)
        self.agent(receiver_id)
        if not self._memberships[sender_id] & self._memberships[receiver_id]:
            raise NoSharedEnvironment(
                f"agents {sender_id} and {receiver_id} share no environment"
            )
        message = Message(sender_id, receiver_id, dict(payload), self.clock.day)
        self._inboxes[receiver_id].append(message)
        keys = ",".join(sorted(message.payload))
        self.log_event(sender_id, "message", f"to agent {receiver_id}: {keys}")
        return message

    def inbox(self, agent_id: int) -> list[Message]:
        self.agent(agent_id)
        return list(self._inboxes[agent_id])

    # ------------------------------------------------------------------
    # scheduling
    # ------------------------------------------------------------------

    def set_behavior(self, agent_id: int, behavior: Behavior) -> None:
        self.agent(agent_id)
        self._behaviors[agent_id] = behavior

    def load_scenario(self, name: str) -> None:
        self._scenario = name

    @property
    def scenario_name(self) -> str | None:
        return self._scenario

    def step(self) -> list[EventLogEntry]:
        """Run one day: behaviors in ascending agent-id order, then advance the clock.

        Behaviors observe the pre-advance day index, so the first step runs
        day 0 and leaves the clock at 1.
        """
        if self._scenario is None:
            raise NoScenarioLoaded("no scenario loaded")
        day = self.clock.day
        weekday = self.clock.weekday
        first_new = len(self.events)
        for agent_id in sorted(self._behaviors):
            self._behaviors[agent_id](self, agent_id, day, weekday)
        self.clock.advance()
        return self.events[first_new:]

    # ------------------------------------------------------------------
    # event log
    # ------------------------------------------------------------------

    def log_event(self, agent_id: int, event_type: str, detail: str) -> EventLogEntry:
        entry = EventLogEntry(self.clock.day, agent_id, event_type, detail)
        self.events.append(entry)
        return entry

    def events_for(self, agent_id: int) -> list[EventLogEntry]:
        return [e for e in self.events if e.agent_id == agent_id]
