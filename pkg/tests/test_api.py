"""
Tests for the HTTP API
"""
import subprocess
import sys
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from app.config import get_settings
from app.main import app
from app.services.manifests import list_presets


ROOT = Path(__file__).resolve().parents[1]
API_KEY = get_settings().api_secret_key

SMALL_RUN = {
    "num_journals": 2,
    "issues_per_year": 12,
    "articles_per_issue": 2,
    "years": 4,
    "avg_refs": 10,
    "warmup_months": 12,
    "kernel": {"alpha": 100, "beta": 30, "gamma": 10, "delta": 10},
    "seed": 3,
}


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert "ieee-tac" in body["presets"]


def test_root(client):
    body = client.get("/").json()
    assert body["status"] == "running"
    assert body["endpoints"]["simulate"] == "/api/simulate"


def test_presets(client):
    presets = {p["name"]: p for p in client.get("/api/presets").json()}
    assert presets["alpha-beta-fast-review"]["kind"] == "sweep"
    assert presets["laa"]["kind"] == "calibrate"
    assert sorted(presets) == [p.name for p in list_presets()]


def test_api_does_not_load_the_command_line_module():
    code = "import sys, app.main; sys.exit(1 if 'app.cli' in sys.modules else 0)"
    completed = subprocess.run([sys.executable, "-c", code], cwd=ROOT, capture_output=True)
    assert completed.returncode == 0, completed.stderr.decode()


def test_curves(client):
    response = client.post("/api/curves", json={
        "params": {"alpha": 100, "beta": 30, "gamma": 10, "delta": 0},
        "n_max": 10,
        "t_min": -100,
    })
    assert response.status_code == 200
    body = response.json()
    assert body["count_curve"][0] == [0, 0.0]
    assert len(body["count_curve"]) == 11
    assert body["age_curve"][0][0] == -100
    assert body["age_curve"][0][1] == pytest.approx(0.5)


class TestSimulate:
    def test_missing_api_key(self, client):
        response = client.post("/api/simulate", json=SMALL_RUN)
        assert response.status_code == 401
        assert response.json()["status"] == "error"

    def test_wrong_api_key(self, client):
        response = client.post("/api/simulate", json=SMALL_RUN, headers={"x-api-key": "nope"})
        assert response.status_code == 403
        assert response.json()["message"] == "Invalid API key"

    def test_success(self, client):
        response = client.post("/api/simulate", json=SMALL_RUN, headers={"x-api-key": API_KEY})
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "success"
        assert body["total_articles"] == 2 * 12 * 2 * 4
        assert set(body["impact_factors"]) == {"1", "2"}
        assert body["impact_factors"]["1"][:2] == [1.0, 1.0]
        assert body["mean_average_if"] is not None

    def test_deterministic(self, client):
        headers = {"x-api-key": API_KEY}
        first = client.post("/api/simulate", json=SMALL_RUN, headers=headers).json()
        second = client.post("/api/simulate", json=SMALL_RUN, headers=headers).json()
        assert first["impact_factors"] == second["impact_factors"]
        assert first["citation_edges"] == second["citation_edges"]

    def test_too_large(self, client):
        response = client.post("/api/simulate", json={"num_journals": 20}, headers={"x-api-key": API_KEY})
        assert response.status_code == 400
        assert "articles requested" in response.json()["message"]

    def test_invalid_kernel(self, client):
        payload = dict(SMALL_RUN, kernel={"beta": 0})
        response = client.post("/api/simulate", json=payload, headers={"x-api-key": API_KEY})
        assert response.status_code == 422
        assert response.json()["message"].startswith("kernel.beta")


def test_openapi_describes_preset_summary(client):
    schemas = client.get("/openapi.json").json()["components"]["schemas"]
    assert schemas["PresetSummary"]["description"] == "One shipped run manifest"
