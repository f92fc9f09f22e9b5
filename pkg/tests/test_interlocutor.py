from pathlib import Path

import httpx
import pytest

from twinner.engine import Engine, RoleBinding, UnknownBinding
from twinner.interlocutor import (
    BackendRequest,
    BackendUnavailable,
    EmptyUserText,
    HttpBackend,
    Interlocutor,
    InvalidGradeRange,
    StubBackend,
    action_log_digest,
    aggregate_students,
    build_role_prompt,
    build_system_prompt,
    make_backend,
    prompt_binding_for,
)

DATA = Path(__file__).parent / "data"

EXPECTED_SYSTEM_PROMPT = (
    "Be as concise as possible in your answers. "
    "If you do not know the answer to a question, simply answer as 'I do not know.'."
)


def school_engine(grades: dict[str, int] | None = None):
    """Engine with one chat-ready school agent; returns (engine, agent_id)."""
    engine = Engine()
    geo = engine.create_environment("GeoEnvironment", "geo")
    twin = engine.create_environment("SocialDigitalTwinner", "twinner")
    agent = engine.create_agent("Kragerø High", "building")
    engine.assume_role(agent, geo, "school", grades if grades is not None else {"g11": 40})
    engine.assume_role(agent, twin, "interlocutor")
    return engine, agent


class TestSystemPrompt:
    def test_exact_text(self):
        assert build_system_prompt() == EXPECTED_SYSTEM_PROMPT

    def test_pure(self):
        assert build_system_prompt() == build_system_prompt()

    def test_no_placeholders(self):
        assert "{" not in build_system_prompt() and "}" not in build_system_prompt()


class TestRolePrompt:
    def test_single_key_golden(self):
        binding = RoleBinding(1, 1, "school", {"g11": 40})
        prompt = build_role_prompt("Kragerø High", binding, "GeoEnvironment")
        golden = (DATA / "role_prompt_single.golden.txt").read_text(encoding="utf-8")
        assert prompt == golden

    def test_multi_key_golden_sorted_lines(self):
        binding = RoleBinding(1, 1, "school", {"kind": "high_school", "g12": 38, "g11": 40})
        prompt = build_role_prompt("Kragerø High", binding, "GeoEnvironment")
        golden = (DATA / "role_prompt_multi.golden.txt").read_text(encoding="utf-8")
        assert prompt == golden

    def test_empty_role_data(self):
        binding = RoleBinding(1, 1, "resident", {})
        prompt = build_role_prompt("Per", binding, "GeoEnvironment")
        assert "You have access to (no role data)." in prompt

    def test_no_unreplaced_braces(self):
        binding = RoleBinding(1, 1, "student", {"school_id": 4})
        prompt = build_role_prompt("Person 12", binding, "NetworkEnvironment")
        assert "{" not in prompt and "}" not in prompt

    def test_injective_in_agent_name(self):
        binding = RoleBinding(1, 1, "resident", {"age": 30})
        a = build_role_prompt("Person 1", binding, "GeoEnvironment")
        b = build_role_prompt("Person 2", binding, "GeoEnvironment")
        assert a != b

    def test_prompt_binding_priority(self):
        engine, agent = school_engine()
        assert prompt_binding_for(engine, agent).role_name == "school"

    def test_prompt_binding_requires_some_role(self):
        engine = Engine()
        loner = engine.create_agent("Loner", "person")
        with pytest.raises(UnknownBinding):
            prompt_binding_for(engine, loner)


class TestAggregateStudents:
    def test_hand_summed_range(self):
        data = {"g2": 5, "g3": 7, "g4": 0, "g5": 3}
        assert aggregate_students(data, 2, 5) == 15  # 5+7+0+3

    def test_all_zero(self):
        assert aggregate_students({f"g{g}": 0 for g in range(1, 14)}, 1, 13) == 0

    def test_reversed_range_rejected(self):
        with pytest.raises(InvalidGradeRange):
            aggregate_students({"g2": 5}, 6, 2)

    def test_out_of_bounds_rejected(self):
        with pytest.raises(InvalidGradeRange):
            aggregate_students({"g2": 5}, 0, 2)
        with pytest.raises(InvalidGradeRange):
            aggregate_students({"g2": 5}, 2, 14)

    def test_missing_grades_count_zero(self):
        assert aggregate_students({"g11": 40}, 11, 13) == 40


class TestActionLogDigest:
    def test_empty_for_quiet_agent(self):
        engine = Engine()
        agent = engine.create_agent("Quiet", "person")
        assert action_log_digest(engine, agent) == ""

    def test_truncates_to_newest(self):
        engine = Engine()
        agent = engine.create_agent("Busy", "person")
        for i in range(5):
            engine.log_event(agent, "acted", f"step {i}")
        digest = action_log_digest(engine, agent, max_entries=3)
        lines = digest.splitlines()
        assert lines == ["day 0: acted step 4", "day 0: acted step 3", "day 0: acted step 2"]

    def test_lines_match_event_log(self):
        engine = Engine()
        agent = engine.create_agent("Busy", "person")
        engine.log_event(agent, "placed", "58.870000,9.410000")
        assert action_log_digest(engine, agent) == "day 0: placed 58.870000,9.410000"

    def test_zero_entries(self):
        engine = Engine()
        agent = engine.create_agent("Busy", "person")
        engine.log_event(agent, "acted", "x")
        assert action_log_digest(engine, agent, max_entries=0) == ""


class RecordingBackend:
    """Captures every request; replies with a constant."""

    name = "recording"

    def __init__(self):
        self.requests: list[BackendRequest] = []

    def complete(self, request: BackendRequest) -> str:
        self.requests.append(request)
        return "ok"


class TestConversation:
    def test_opens_with_system_then_role_prompt(self):
        engine, agent = school_engine()
        chat = Interlocutor(engine, StubBackend())
        conversation = chat.conversation(agent)
        assert conversation.messages[0].text == EXPECTED_SYSTEM_PROMPT
        assert conversation.messages[1].text.startswith("As Kragerø High, your current role is School")

    def test_grounded_grade_lookup(self):
        engine, agent = school_engine({"g11": 40})
        chat = Interlocutor(engine, StubBackend())
        reply = chat.converse(agent, "How many students in grade 11?")
        assert reply.text == "40"

    def test_unknown_question_falls_back(self):
        engine, agent = school_engine({"g11": 40})
        chat = Interlocutor(engine, StubBackend())
        reply = chat.converse(agent, "What is the meaning of life?")
        assert reply.text == "I do not know."

    def test_grade_range_aggregation(self):
        grades = {"g2": 5, "g3": 7, "g4": 0, "g5": 3}
        engine, agent = school_engine(grades)
        chat = Interlocutor(engine, StubBackend())
        reply = chat.converse(
            agent, "What is the total number of students enrolled between Grade 2 and Grade 5?"
        )
        assert reply.text == str(aggregate_students(grades, 2, 5)) == "15"

    def test_history_grows_by_two_per_call(self):
        engine, agent = school_engine()
        chat = Interlocutor(engine, StubBackend())
        conversation = chat.conversation(agent)
        for i in range(3):
            before = len(conversation.messages)
            chat.converse(agent, f"question {i}")
            assert len(conversation.messages) == before + 2

    def test_turn_indexes_strictly_increase(self):
        engine, agent = school_engine()
        chat = Interlocutor(engine, StubBackend())
        first = chat.converse(agent, "one")
        second = chat.converse(agent, "two")
        assert second.turn_index > first.turn_index

    def test_empty_user_text_rejected(self):
        engine, agent = school_engine()
        chat = Interlocutor(engine, StubBackend())
        with pytest.raises(EmptyUserText):
            chat.converse(agent, "   ")

    def test_temperature_always_zero(self):
        engine, agent = school_engine()
        backend = RecordingBackend()
        chat = Interlocutor(engine, backend)
        for i in range(4):
            chat.converse(agent, f"q{i}")
        assert backend.requests and all(r.temperature == 0.0 for r in backend.requests)

    def test_temperature_not_settable_at_construction(self):
        with pytest.raises(TypeError):
            BackendRequest(messages=[], model_id="m", temperature=1.0)  # type: ignore[call-arg]

    def test_prefix_stability(self):
        engine, agent = school_engine()
        chat = Interlocutor(engine, StubBackend())
        chat.converse(agent, "one")
        snapshot = [(m.author, m.text) for m in chat.conversation(agent).messages]
        chat.converse(agent, "two")
        after = [(m.author, m.text) for m in chat.conversation(agent).messages]
        assert after[: len(snapshot)] == snapshot

    def test_digest_included_in_request_not_history(self):
        engine, agent = school_engine()
        engine.log_event(agent, "role_assumed", "school in GeoEnvironment")
        backend = RecordingBackend()
        chat = Interlocutor(engine, backend)
        chat.converse(agent, "hello")
        request = backend.requests[0]
        assert any(m["content"].startswith("Recent actions:") for m in request.messages)
        assert all(
            not m.text.startswith("Recent actions:") for m in chat.conversation(agent).messages
        )


class TestStubLookups:
    def test_direct_key_lookup(self):
        engine = Engine()
        geo = engine.create_environment("GeoEnvironment", "geo")
        agent = engine.create_agent("Building 7", "building")
        engine.assume_role(agent, geo, "residence", {"building_type": "garage", "dwelling_units": 0})
        chat = Interlocutor(engine, StubBackend())
        assert chat.converse(agent, "What is your building_type?").text == "garage"

    def test_grade_question_without_grades(self):
        engine = Engine()
        geo = engine.create_environment("GeoEnvironment", "geo")
        agent = engine.create_agent("Per", "person")
        engine.assume_role(agent, geo, "resident", {"age": 33})
        chat = Interlocutor(engine, StubBackend())
        assert chat.converse(agent, "How many students in grade 11?").text == "I do not know."


def _mock_transport(handler):
    return httpx.MockTransport(handler)


class TestHttpBackend:
    def make_request(self):
        return BackendRequest(
            messages=[{"role": "system", "content": "s"}, {"role": "user", "content": "q"}],
            model_id="m",
        )

    def test_wire_format_and_reply(self):
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            import json

            seen.update(json.loads(request.content))
            seen["auth"] = request.headers.get("Authorization")
            return httpx.Response(
                200,
                json={"choices": [{"message": {"role": "assistant", "content": "hi"}}]},
            )

        backend = HttpBackend(
            url="http://llm.test/v1/chat", api_key="secret", model="m",
            transport=_mock_transport(handler),
        )
        assert backend.complete(self.make_request()) == "hi"
        assert seen["model"] == "m"
        assert seen["temperature"] == 0
        assert seen["messages"][0] == {"role": "system", "content": "s"}
        assert seen["auth"] == "Bearer secret"

    def test_messages_style_response(self):
        def handler(_request: httpx.Request) -> httpx.Response:
            return httpx.Response(
                200, json={"messages": [{"role": "assistant", "content": "from messages"}]}
            )

        backend = HttpBackend(url="http://llm.test", transport=_mock_transport(handler))
        assert backend.complete(self.make_request()) == "from messages"

    def test_transport_failure_raises_backend_unavailable(self):
        def handler(_request: httpx.Request) -> httpx.Response:
            raise httpx.ConnectError("refused")

        backend = HttpBackend(url="http://llm.test", transport=_mock_transport(handler))
        with pytest.raises(BackendUnavailable):
            backend.complete(self.make_request())

    def test_http_error_status(self):
        def handler(_request: httpx.Request) -> httpx.Response:
            return httpx.Response(500, json={"error": "boom"})

        backend = HttpBackend(url="http://llm.test", transport=_mock_transport(handler))
        with pytest.raises(BackendUnavailable):
            backend.complete(self.make_request())

    def test_no_assistant_message(self):
        def handler(_request: httpx.Request) -> httpx.Response:
            return httpx.Response(200, json={"choices": []})

        backend = HttpBackend(url="http://llm.test", transport=_mock_transport(handler))
        with pytest.raises(BackendUnavailable):
            backend.complete(self.make_request())

    def test_missing_url_fails_fast(self, monkeypatch):
        monkeypatch.delenv("TWINNER_LLM_URL", raising=False)
        with pytest.raises(BackendUnavailable):
            HttpBackend()


class TestBackendFactory:
    def test_stub(self):
        assert make_backend("stub").name == "stub"

    def test_unknown(self):
        with pytest.raises(ValueError):
            make_backend("telepathy")
