import concurrent.futures
import json

import pytest
from fastapi.testclient import TestClient

from twinner.scenario import ScenarioConfig, run_experiment
from twinner.service import ServiceState, create_app

from conftest import make_scenario_dict


@pytest.fixture
def client() -> TestClient:
    return TestClient(create_app(ServiceState()))


@pytest.fixture
def loaded_client(client: TestClient, small_scenario: dict) -> TestClient:
    response = client.post("/api/scenario", json=small_scenario)
    assert response.status_code == 200, response.text
    return client


class TestHealth:
    def test_health(self, client):
        body = client.get("/api/health").json()
        assert body["status"] == "ok" and body["scenario_loaded"] is False


class TestLoadScenario:
    def test_valid_config_returns_counts(self, client, small_scenario):
        response = client.post("/api/scenario", json=small_scenario)
        assert response.status_code == 200
        counts = response.json()
        assert counts["agents"] > 0 and counts["students"] > 0 and counts["schools"] == 5

    def test_missing_field_names_it(self, client, small_scenario):
        del small_scenario["schools_path"]
        response = client.post("/api/scenario", json=small_scenario)
        assert response.status_code == 400
        assert "schools_path" in response.json()["detail"]

    def test_insufficient_capacity_maps_to_422(self, client, small_scenario):
        small_scenario["population_size"] = 100_000
        response = client.post("/api/scenario", json=small_scenario)
        assert response.status_code == 422
        assert response.json()["error"] == "InsufficientCapacity"

    def test_malformed_json_body(self, client):
        response = client.post(
            "/api/scenario", content="{not json", headers={"Content-Type": "application/json"}
        )
        assert response.status_code == 400

    def test_load_rejected_while_mutation_in_progress(self, small_scenario):
        state = ServiceState()
        client = TestClient(create_app(state))
        assert client.post("/api/scenario", json=small_scenario).status_code == 200
        state.lock.acquire()  # someone else is mid-step
        try:
            response = client.post("/api/scenario", json=small_scenario)
            assert response.status_code == 409
            assert response.json()["error"] == "StepInProgress"
        finally:
            state.lock.release()


class TestListAgents:
    def test_requires_scenario(self, client):
        assert client.get("/api/agents").status_code == 409

    def test_all_agents_match_census(self, loaded_client):
        agents = loaded_client.get("/api/agents").json()
        health_counts = loaded_client.get("/api/health").json()
        assert health_counts["scenario_loaded"]
        ids = [a["id"] for a in agents]
        assert ids == sorted(ids)
        # every placed agent carries coordinates
        placed = [a for a in agents if "lat" in a]
        assert placed and all("lon" in a for a in placed)

    def test_school_filter(self, loaded_client):
        schools = loaded_client.get("/api/agents", params={"kind": "building", "role": "school"}).json()
        assert len(schools) == 5
        assert all("school" in a["roles"] and a["kind"] == "building" for a in schools)

    def test_unknown_filter_value(self, loaded_client):
        assert loaded_client.get("/api/agents", params={"kind": "alien"}).status_code == 400
        assert loaded_client.get("/api/agents", params={"role": "wizard"}).status_code == 400

    def test_agent_detail(self, loaded_client):
        first = loaded_client.get("/api/agents").json()[0]
        detail = loaded_client.get(f"/api/agents/{first['id']}")
        assert detail.status_code == 200 and detail.json() == first

    def test_agent_detail_unknown(self, loaded_client):
        response = loaded_client.get("/api/agents/999999")
        assert response.status_code == 404
        assert response.json()["error"] == "UnknownAgent"


class TestStep:
    def test_requires_scenario(self, client):
        assert client.post("/api/sim/step", json={"days": 1}).status_code == 409

    def test_single_step(self, loaded_client):
        body = loaded_client.post("/api/sim/step", json={"days": 1}).json()
        assert body["day"] == 1

    def test_zero_days_rejected(self, loaded_client):
        assert loaded_client.post("/api/sim/step", json={"days": 0}).status_code == 400

    def test_two_single_steps_equal_one_double(self, small_scenario):
        def run(schedule):
            client = TestClient(create_app(ServiceState()))
            assert client.post("/api/scenario", json=small_scenario).status_code == 200
            for days in schedule:
                client.post("/api/sim/step", json={"days": days})
            return client.get("/api/metrics").json()

        assert run([1, 1]) == run([2])

    def test_default_body_steps_one_day(self, loaded_client):
        body = loaded_client.post("/api/sim/step", json={}).json()
        assert body["day"] == 1


class TestChat:
    def school_agent_id(self, client) -> int:
        schools = client.get("/api/agents", params={"role": "school"}).json()
        return schools[0]["id"]

    def test_grounded_grade_reply(self, loaded_client):
        agent_id = self.school_agent_id(loaded_client)
        response = loaded_client.post(
            f"/api/agents/{agent_id}/chat", json={"message": "How many students in grade 1?"}
        )
        assert response.status_code == 200
        assert response.json()["reply"].isdigit()

    def test_conversation_persists_across_calls(self, loaded_client):
        agent_id = self.school_agent_id(loaded_client)
        first = loaded_client.post(f"/api/agents/{agent_id}/chat", json={"message": "hi"}).json()
        second = loaded_client.post(f"/api/agents/{agent_id}/chat", json={"message": "again"}).json()
        assert second["turn_index"] > first["turn_index"]

    def test_unknown_agent(self, loaded_client):
        response = loaded_client.post("/api/agents/999999/chat", json={"message": "hi"})
        assert response.status_code == 404

    def test_empty_message(self, loaded_client):
        agent_id = self.school_agent_id(loaded_client)
        response = loaded_client.post(f"/api/agents/{agent_id}/chat", json={"message": " "})
        assert response.status_code == 400


class TestMetrics:
    def test_requires_scenario(self, client):
        assert client.get("/api/metrics").status_code == 409

    def test_fresh_scenario_zero_dropouts(self, loaded_client):
        body = loaded_client.get("/api/metrics").json()
        assert body["dropouts_total"] == 0 and body["day"] == 0

    def test_per_school_counts_sum_to_total(self, loaded_client):
        loaded_client.post("/api/sim/step", json={"days": 21})
        body = loaded_client.get("/api/metrics").json()
        assert sum(g["dropouts"] for g in body["by_school"].values()) == body["dropouts_total"]
        assert sum(g["students"] for g in body["by_school"].values()) == body["students_total"]

    def test_api_metrics_match_headless_run(self, small_scenario):
        client = TestClient(create_app(ServiceState()))
        assert client.post("/api/scenario", json=small_scenario).status_code == 200
        client.post("/api/sim/step", json={"days": 21})
        api_metrics = client.get("/api/metrics").json()
        headless = run_experiment(ScenarioConfig.from_dict(small_scenario)).metrics.to_dict()
        assert json.dumps(api_metrics, sort_keys=True) == json.dumps(headless, sort_keys=True)


class TestAuth:
    def test_all_endpoints_reject_without_token(self, small_scenario):
        client = TestClient(create_app(ServiceState(api_token="hush")))
        probes = [
            ("get", "/api/health", None),
            ("post", "/api/scenario", small_scenario),
            ("get", "/api/agents", None),
            ("get", "/api/agents/1", None),
            ("post", "/api/agents/1/chat", {"message": "hi"}),
            ("post", "/api/sim/step", {"days": 1}),
            ("get", "/api/metrics", None),
        ]
        for method, url, body in probes:
            response = getattr(client, method)(url, json=body) if body else getattr(client, method)(url)
            assert response.status_code == 401, url
            assert response.json()["error"] == "Unauthorized"

    def test_bearer_token_admits(self, small_scenario):
        client = TestClient(create_app(ServiceState(api_token="hush")))
        headers = {"Authorization": "Bearer hush"}
        assert client.get("/api/health", headers=headers).status_code == 200
        assert client.post("/api/scenario", json=small_scenario, headers=headers).status_code == 200

    def test_wrong_token_rejected(self):
        client = TestClient(create_app(ServiceState(api_token="hush")))
        response = client.get("/api/health", headers={"Authorization": "Bearer loud"})
        assert response.status_code == 401


class TestConcurrency:
    def test_parallel_steps_never_lose_days(self, small_scenario):
        app = create_app(ServiceState())
        client = TestClient(app)
        assert client.post("/api/scenario", json=small_scenario).status_code == 200

        def hit():
            with TestClient(app) as local:
                return local.post("/api/sim/step", json={"days": 1}).status_code

        with concurrent.futures.ThreadPoolExecutor(max_workers=4) as pool:
            statuses = list(pool.map(lambda _: hit(), range(8)))
        assert all(s == 200 for s in statuses)
        assert client.get("/api/metrics").json()["day"] == 8
