import pytest
from fastapi.testclient import TestClient

from experiments.runner import ExperimentRunner
from experiments.server import create_app

PAIR_SNAPSHOT = "......\n..><..\n......\n......\n"


@pytest.fixture
def client() -> TestClient:
    return TestClient(create_app(ExperimentRunner()))


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["service"] == "swarm-scenario-server"


def test_scenario_listing(client):
    body = client.get("/scenarios").json()
    assert [s["name"] for s in body["scenarios"]] == ["evolve", "rerun", "damage", "noise-sweep", "classify", "stats"]
    assert "baseline-15" in {p["name"] for p in body["presets"]}
    assert "lattice-C" in {a["name"] for a in body["areas"]}
    assert "kind" in body["schema"]["properties"]


def test_classify_snapshot(client):
    response = client.post("/classify", json={"snapshot": PAIR_SNAPSHOT})
    assert response.status_code == 200
    assert response.json()["report"]["winner"] == "pair"


def test_malformed_snapshot_is_a_client_error(client):
    response = client.post("/classify", json={"snapshot": "..\n...\n"})
    assert response.status_code == 400


def test_unknown_scenario_is_a_client_error(client):
    response = client.post("/scenarios/run", json={"name": "teleport", "arguments": {}})
    assert response.status_code == 400
    assert "teleport" in response.json()["detail"]


def test_run_scenario(client, tmp_path):
    arguments = {"config": {"population_size": 2, "generations": 1, "eval_length": 4, "evals_per_genome": 1,
                            "width": 5, "height": 5, "swarm_size": 4, "seed": 2},
                 "out": str(tmp_path)}
    response = client.post("/scenarios/run", json={"name": "evolve", "arguments": arguments})
    assert response.status_code == 200
    body = response.json()
    assert body["scenario"] == "evolve"
    assert (tmp_path / "best_genome.json").exists()
    stats = client.post("/scenarios/run", json={"name": "stats", "arguments": {"run_dir": str(tmp_path)}})
    assert stats.json()["result"]["consistent"]


def test_missing_run_directory_is_a_client_error(client, tmp_path):
    response = client.post("/scenarios/run", json={"name": "stats", "arguments": {"run_dir": str(tmp_path)}})
    assert response.status_code == 400
