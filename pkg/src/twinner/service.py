"""HTTP shell around the scenario: load, inspect, step, chat, metrics.

One scenario per process.  Mutating requests (load, step) serialize behind
a single lock; chat builds its prompt snapshot under that lock but calls
the language backend outside it.  With an API token configured, every
endpoint requires ``Authorization: Bearer <token>``.
"""

from __future__ import annotations

import threading
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .engine import ROLE_NAMES, AGENT_KINDS
from .errors import TwinnerError
from .ingest import IngestError
from .interlocutor import (
    BackendUnavailable,
    ChatBackend,
    EmptyUserText,
    Interlocutor,
    StubBackend,
)
from .population import InsufficientCapacity, InvalidMarginals
from .scenario import ConfigError, DropoutExperiment, InfeasibleScenario, ScenarioConfig


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "detail": detail})


class ServiceState:
    """Process-wide state: at most one experiment plus its conversations."""

    def __init__(self, backend: ChatBackend | None = None, api_token: str | None = None):
        self.lock = threading.RLock()
        self.backend = backend or StubBackend()
        self.api_token = api_token
        self.experiment: DropoutExperiment | None = None
        self.interlocutor: Interlocutor | None = None

    def load(self, config: ScenarioConfig) -> dict[str, int]:
        with self.lock:
            experiment = DropoutExperiment.setup(config)
            self.experiment = experiment
            self.interlocutor = Interlocutor(
                experiment.engine, self.backend, state_lock=self.lock
            )
            return {
                "agents": len(experiment.engine.agents),
                "students": len(experiment.students),
                "schools": len(experiment.schools),
            }

    def agent_summary(self, agent_id: int) -> dict[str, Any]:
        assert self.experiment is not None
        experiment = self.experiment
        agent = experiment.engine.agent(agent_id)
        summary: dict[str, Any] = {
            "id": agent.id,
            "name": agent.name,
            "kind": agent.kind,
            "roles": sorted({b.role_name for b in experiment.engine.bindings_of(agent_id)}),
        }
        position = experiment.geo_env.position_of(agent_id)
        if position is not None:
            summary["lat"] = position.lat
            summary["lon"] = position.lon
        state = experiment.students.get(agent_id)
        if state is not None:
            summary["flags"] = {"is_rural": state.is_rural, "dropped_out": state.dropped_out}
        return summary


def create_app(state: ServiceState | None = None, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="twinner", docs_url=None, redoc_url=None)
    app.state.service = state or ServiceState()

    def service() -> ServiceState:
        return app.state.service

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        token = service().api_token
        if token is not None:
            supplied = request.headers.get("Authorization", "")
            if supplied != f"Bearer {token}":
                return _error(401, "Unauthorized", "missing or invalid bearer token")
        return await call_next(request)

    @app.exception_handler(RequestValidationError)
    async def bad_body(_request: Request, exc: RequestValidationError):
        return _error(400, "BadRequest", str(exc))

    @app.exception_handler(TwinnerError)
    async def domain_error(_request: Request, exc: TwinnerError):
        return _error(500, type(exc).__name__, str(exc))

    def _require_experiment() -> DropoutExperiment:
        experiment = service().experiment
        if experiment is None:
            raise _NoScenario()
        return experiment

    class _NoScenario(Exception):
        pass

    @app.exception_handler(_NoScenario)
    async def no_scenario(_request: Request, _exc: _NoScenario):
        return _error(409, "NoScenario", "no scenario loaded")

    @app.get("/api/health")
    def health():
        return {"status": "ok", "scenario_loaded": service().experiment is not None}

    @app.post("/api/scenario")
    def load_scenario(body: dict):
        try:
            config = ScenarioConfig.from_dict(body)
        except ConfigError as exc:
            return _error(400, "ConfigError", str(exc))
        svc = service()
        if not svc.lock.acquire(blocking=False):
            return _error(409, "StepInProgress", "a mutation is in progress; retry")
        try:
            counts = svc.load(config)
        except (InsufficientCapacity, InfeasibleScenario) as exc:
            return _error(422, type(exc).__name__, str(exc))
        except (IngestError, InvalidMarginals, FileNotFoundError) as exc:
            return _error(422, type(exc).__name__, str(exc))
        finally:
            svc.lock.release()
        return counts

    @app.get("/api/agents")
    def list_agents(kind: str | None = None, role: str | None = None):
        experiment = _require_experiment()
        if kind is not None and kind not in AGENT_KINDS:
            return _error(400, "BadFilter", f"unknown kind {kind!r}")
        if role is not None and role not in ROLE_NAMES:
            return _error(400, "BadFilter", f"unknown role {role!r}")
        svc = service()
        with svc.lock:
            out = []
            for agent_id in sorted(experiment.engine.agents):
                summary = svc.agent_summary(agent_id)
                if kind is not None and summary["kind"] != kind:
                    continue
                if role is not None and role not in summary["roles"]:
                    continue
                out.append(summary)
            return out

    @app.get("/api/agents/{agent_id}")
    def get_agent(agent_id: int):
        experiment = _require_experiment()
        svc = service()
        with svc.lock:
            if agent_id not in experiment.engine.agents:
                return _error(404, "UnknownAgent", f"no agent with id {agent_id}")
            return svc.agent_summary(agent_id)

    @app.post("/api/agents/{agent_id}/chat")
    def chat(agent_id: int, body: dict):
        experiment = _require_experiment()
        svc = service()
        message = body.get("message", "")
        if not isinstance(message, str) or not message.strip():
            return _error(400, "EmptyUserText", "message must be a non-empty string")
        with svc.lock:
            if agent_id not in experiment.engine.agents:
                return _error(404, "UnknownAgent", f"no agent with id {agent_id}")
            has_interlocutor = any(
                b.role_name == "interlocutor"
                for b in experiment.engine.bindings_of(agent_id)
            )
            if not has_interlocutor:
                return _error(
                    404,
                    "NoInterlocutorRole",
                    f"agent {agent_id} does not hold the interlocutor role",
                )
        assert svc.interlocutor is not None
        try:
            reply = svc.interlocutor.converse(agent_id, message)
        except EmptyUserText as exc:
            return _error(400, "EmptyUserText", str(exc))
        except BackendUnavailable as exc:
            return _error(502, "BackendUnavailable", str(exc))
        return {"reply": reply.text, "turn_index": reply.turn_index}

    @app.post("/api/sim/step")
    def step(body: dict | None = None):
        experiment = _require_experiment()
        days = (body or {}).get("days", 1)
        if not isinstance(days, int) or isinstance(days, bool) or days < 1:
            return _error(400, "BadRequest", "days must be an integer >= 1")
        svc = service()
        with svc.lock:
            new_events = experiment.step_days(days)
            report = experiment.metrics()
            return {
                "day": report.day,
                "new_events": len(new_events),
                "dropouts_total": report.dropouts_total,
            }

    @app.get("/api/metrics")
    def metrics():
        experiment = _require_experiment()
        with service().lock:
            return experiment.metrics().to_dict()

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
