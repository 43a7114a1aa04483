"""HTTP API: endpoints, error envelope, config loading, request logging."""

import json
import logging

import pytest
from fastapi.testclient import TestClient

from conftest import make_record
from retirelab.dataio import save_roster
from retirelab.errors import SchemaError
from retirelab.service import (
    ServiceConfig,
    create_app,
    load_config,
)

PROJECTION_BODY = {
    "age": 30,
    "retirement_age": 65,
    "salary_cents": 20_000_000,
    "balance_cents": 7_000_000,
    "rate": 0.075,
}


@pytest.fixture
def client(tmp_path):
    cfg = ServiceConfig(scenario_store=str(tmp_path / "scenarios.jsonl"))
    return TestClient(create_app(cfg))


@pytest.fixture(scope="session")
def roster_csv(default_roster, tmp_path_factory):
    p = tmp_path_factory.mktemp("svc") / "roster.csv"
    save_roster(default_roster, p)
    return p.read_text()


def envelope(resp):
    err = resp.json()["error"]
    assert set(err) == {"code", "message", "field_errors"}
    return err


def error_paths(resp):
    return [fe["path"] for fe in envelope(resp)["field_errors"]]


class TestConfig:
    def test_defaults(self):
        cfg = load_config(env={})
        assert cfg == ServiceConfig()

    def test_file_values(self, tmp_path):
        p = tmp_path / "svc.conf"
        p.write_text(
            "# comment\n"
            "\n"
            "HOST=0.0.0.0\n"
            "PORT = 9001\n"
            "SCENARIO_STORE=/tmp/x.jsonl\n"
            "CORS_ORIGINS=http://a.example, http://b.example\n"
            "MAX_UPLOAD_BYTES=2048\n"
        )
        cfg = load_config(str(p), env={})
        assert cfg.host == "0.0.0.0"
        assert cfg.port == 9001
        assert cfg.scenario_store == "/tmp/x.jsonl"
        assert cfg.cors_origins == ("http://a.example", "http://b.example")
        assert cfg.max_upload_bytes == 2048

    def test_env_overrides_file(self, tmp_path):
        p = tmp_path / "svc.conf"
        p.write_text("PORT=9001\n")
        cfg = load_config(str(p), env={"RETIRELAB_PORT": "7777", "RETIRELAB_HOST": "h"})
        assert cfg.port == 7777
        assert cfg.host == "h"

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "svc.conf"
        p.write_text("COLOUR=blue\n")
        with pytest.raises(SchemaError, match="unknown key"):
            load_config(str(p), env={})

    def test_missing_equals(self, tmp_path):
        p = tmp_path / "svc.conf"
        p.write_text("JUSTAKEY\n")
        with pytest.raises(SchemaError, match="KEY=VALUE"):
            load_config(str(p), env={})

    @pytest.mark.parametrize("line", ["PORT=abc", "MAX_UPLOAD_BYTES=many"])
    def test_non_integer_values(self, tmp_path, line):
        p = tmp_path / "svc.conf"
        p.write_text(line + "\n")
        with pytest.raises(SchemaError, match="must be an integer"):
            load_config(str(p), env={})

    def test_empty_cors_falls_back_to_wildcard(self, tmp_path):
        p = tmp_path / "svc.conf"
        p.write_text("CORS_ORIGINS= , \n")
        assert load_config(str(p), env={}).cors_origins == ("*",)


class TestHealthAndLogging:
    def test_health(self, client):
        resp = client.get("/api/v1/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert "version" in body

    def test_requests_logged_as_json(self, client):
        captured = []

        class Capture(logging.Handler):
            def emit(self, record):
                captured.append(record.getMessage())

        handler = Capture()
        logger = logging.getLogger("retirelab.service")
        logger.addHandler(handler)
        try:
            client.get("/api/v1/health")
        finally:
            logger.removeHandler(handler)
        entry = json.loads(captured[-1])
        assert entry["method"] == "GET"
        assert entry["path"] == "/api/v1/health"
        assert entry["status"] == 200
        assert entry["ms"] >= 0


class TestCors:
    def test_allowed_origin_is_echoed(self, tmp_path):
        cfg = ServiceConfig(
            scenario_store=str(tmp_path / "s.jsonl"),
            cors_origins=("http://allowed.example",),
        )
        client = TestClient(create_app(cfg))
        resp = client.get(
            "/api/v1/health", headers={"Origin": "http://allowed.example"}
        )
        assert resp.headers.get("access-control-allow-origin") == "http://allowed.example"
        other = client.get(
            "/api/v1/health", headers={"Origin": "http://other.example"}
        )
        assert "access-control-allow-origin" not in other.headers


class TestProjectionEndpoint:
    def test_happy_path(self, client):
        resp = client.post("/api/v1/projection", json=PROJECTION_BODY)
        assert resp.status_code == 200
        body = resp.json()
        assert body["results"]["income_low"] == pytest.approx(51032.39, abs=0.01)
        assert body["results"]["income_high"] == pytest.approx(78536.10, abs=0.01)
        assert body["display"]["replacement_low_pct"] == 26
        assert body["display"]["replacement_high_pct"] == 39

    def test_monthly_compounding_changes_the_answer(self, client):
        annual = client.post("/api/v1/projection", json=PROJECTION_BODY).json()
        monthly = client.post(
            "/api/v1/projection", json={**PROJECTION_BODY, "monthly": True}
        ).json()
        assert monthly["results"]["fund_low"] != annual["results"]["fund_low"]

    def test_validation_envelope_lists_every_field(self, client):
        resp = client.post(
            "/api/v1/projection", json={"age": 900, "rate": 5.0}
        )
        assert resp.status_code == 422
        err = envelope(resp)
        assert err["code"] == "validation"
        got = error_paths(resp)
        for want in ("age", "rate", "retirement_age", "salary_cents"):
            assert want in got

    def test_malformed_json_body(self, client):
        resp = client.post(
            "/api/v1/projection",
            content=b"{nope",
            headers={"Content-Type": "application/json"},
        )
        assert resp.status_code == 422
        assert envelope(resp)["field_errors"][0]["message"] == "body must be valid JSON"

    def test_oversized_plain_body(self, client, monkeypatch):
        import retirelab.service as service_mod

        monkeypatch.setattr(service_mod, "PLAIN_BODY_LIMIT", 64)
        resp = client.post(
            "/api/v1/projection", json={**PROJECTION_BODY, "pad": "x" * 200}
        )
        assert resp.status_code == 413
        assert envelope(resp)["code"] == "validation"


class TestRequiredRateEndpoint:
    def test_reference_rate(self, client):
        resp = client.post(
            "/api/v1/required-rate",
            json={"replacement": 0.75, "drawdown": 0.04, "annual_return": 0.05, "years": 40},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["rate"] == pytest.approx(0.15521552186315596, abs=1e-12)
        assert body["rate_pct"] == pytest.approx(15.5216, abs=1e-3)
        assert body["capped"] is False

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_capped_flag(self, client):
        resp = client.post(
            "/api/v1/required-rate",
            json={"replacement": 0.75, "drawdown": 0.04, "annual_return": 0.05, "years": 10},
        )
        assert resp.json()["capped"] is True

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_with_balance_lowers_rate(self, client):
        base = {"replacement": 0.75, "drawdown": 0.04, "annual_return": 0.05, "years": 30}
        plain = client.post("/api/v1/required-rate", json=base).json()["rate"]
        funded = client.post(
            "/api/v1/required-rate",
            json={**base, "salary_cents": 20_000_000, "balance_cents": 50_000_000},
        ).json()["rate"]
        assert funded < plain

    def test_validation(self, client):
        resp = client.post("/api/v1/required-rate", json={"drawdown": 0.04})
        assert resp.status_code == 422
        assert set(error_paths(resp)) == {"replacement", "annual_return", "years"}


class TestWhatifEndpoint:
    def test_rate_bump_raises_income(self, client):
        resp = client.post(
            "/api/v1/whatif", json={**PROJECTION_BODY, "changes": {"rate": 0.15}}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["alt"]["results"]["income_low"] > body["base"]["results"]["income_low"]
        assert body["base"]["display"]["replacement_low_pct"] == 26

    def test_changes_required(self, client):
        resp = client.post("/api/v1/whatif", json=PROJECTION_BODY)
        assert resp.status_code == 422
        assert "changes" in error_paths(resp)


class TestScenarioEndpoints:
    def test_save_list_get_cycle(self, client):
        resp = client.post(
            "/api/v1/scenarios", json={"name": "plan", "inputs": PROJECTION_BODY}
        )
        assert resp.status_code == 201
        rec = resp.json()
        assert rec["name"] == "plan"
        assert rec["results"]["income_low"] == pytest.approx(51032.39, abs=0.01)

        listing = client.get("/api/v1/scenarios")
        assert listing.status_code == 200
        assert [s["id"] for s in listing.json()["scenarios"]] == [rec["id"]]

        got = client.get(f"/api/v1/scenarios/{rec['id']}")
        assert got.status_code == 200
        assert got.json() == rec

    def test_missing_scenario_is_404(self, client):
        resp = client.get("/api/v1/scenarios/does-not-exist")
        assert resp.status_code == 404
        assert envelope(resp)["code"] == "not_found"

    def test_invalid_payload(self, client):
        resp = client.post(
            "/api/v1/scenarios", json={"name": "x", "inputs": {"age": 10}}
        )
        assert resp.status_code == 422
        assert any(p.startswith("inputs.") for p in error_paths(resp))

    def test_corrupt_store_is_internal_error(self, client, tmp_path):
        client.post(
            "/api/v1/scenarios", json={"name": "x", "inputs": PROJECTION_BODY}
        )
        # The store path came from the client fixture's config.
        store_path = tmp_path / "scenarios.jsonl"
        store_path.write_text("garbage\n")
        resp = client.get("/api/v1/scenarios")
        assert resp.status_code == 500
        assert envelope(resp)["code"] == "internal"


class TestAnalyzeEndpoint:
    def test_itt(self, client, roster_csv):
        resp = client.post(
            "/api/v1/analyze", json={"csv": roster_csv, "estimator": "itt"}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["estimator"] == "itt"
        assert body["result"]["n"] == 765
        assert "email" in body["result"]["coefficients"]
        assert "email_phone" in body["result"]["coefficients"]
        assert body["cleaning"]["rows"] == 775
        assert body["warnings"] == []

    def test_late_reports_first_stage(self, client, roster_csv):
        resp = client.post(
            "/api/v1/analyze", json={"csv": roster_csv, "estimator": "late"}
        )
        body = resp.json()
        assert body["result"]["first_stage_f"] > 10
        assert "clicked" in body["result"]["coefficients"]

    def test_het_needs_group(self, client, roster_csv):
        resp = client.post(
            "/api/v1/analyze", json={"csv": roster_csv, "estimator": "het"}
        )
        assert resp.status_code == 422
        assert "group" in error_paths(resp)
        ok = client.post(
            "/api/v1/analyze",
            json={"csv": roster_csv, "estimator": "het", "group": "male"},
        )
        assert ok.status_code == 200
        assert "email:male" in ok.json()["result"]["coefficients"]

    def test_bootstrap_requires_seed_and_is_deterministic(self, client, roster_csv):
        missing = client.post(
            "/api/v1/analyze", json={"csv": roster_csv, "estimator": "bootstrap"}
        )
        assert missing.status_code == 422
        assert "seed" in error_paths(missing)

        req = {"csv": roster_csv, "estimator": "bootstrap", "seed": 7, "draws": 1000}
        first = client.post("/api/v1/analyze", json=req)
        second = client.post("/api/v1/analyze", json=req)
        assert first.status_code == 200
        assert first.json() == second.json()
        result = first.json()["result"]
        assert set(result) == {"email", "email_phone"}
        for arm in result.values():
            assert arm["ci95"][0] <= arm["estimate"] <= arm["ci95"][1]
            assert arm["draws"] == 1000

    def test_draws_floor(self, client, roster_csv):
        resp = client.post(
            "/api/v1/analyze",
            json={"csv": roster_csv, "estimator": "bootstrap", "seed": 1, "draws": 500},
        )
        assert resp.status_code == 422
        assert "draws" in error_paths(resp)

    def test_unknown_estimator_and_outcome(self, client, roster_csv):
        resp = client.post(
            "/api/v1/analyze",
            json={"csv": roster_csv, "estimator": "magic", "outcome": "vibes"},
        )
        assert resp.status_code == 422
        assert {"estimator", "outcome"} <= set(error_paths(resp))

    def test_bad_csv_is_a_field_error(self, client):
        resp = client.post(
            "/api/v1/analyze", json={"csv": "id,age\n1,2\n", "estimator": "itt"}
        )
        assert resp.status_code == 422
        assert error_paths(resp) == ["csv"]

    def test_statistical_warnings_are_returned(self, client, tmp_path):
        # Two clickers among fifty email records: a weak first stage.
        recs = []
        for i in range(100):
            recs.append(make_record(i, treatment="control", post_rate=9.0 + (i % 3) * 0.1))
        for i in range(50):
            recs.append(
                make_record(
                    100 + i,
                    treatment="email",
                    clicked=i < 2,
                    post_rate=9.0 + (i % 4) * 0.1 + (0.5 if i < 2 else 0.0),
                )
            )
        p = tmp_path / "weak.csv"
        save_roster(recs, p)
        resp = client.post(
            "/api/v1/analyze", json={"csv": p.read_text(), "estimator": "late"}
        )
        assert resp.status_code == 200
        assert any("first-stage F" in w for w in resp.json()["warnings"])

    def test_upload_cap_applies_to_analyze(self, tmp_path, roster_csv):
        cfg = ServiceConfig(
            scenario_store=str(tmp_path / "s.jsonl"), max_upload_bytes=1024
        )
        client = TestClient(create_app(cfg))
        resp = client.post(
            "/api/v1/analyze", json={"csv": roster_csv, "estimator": "itt"}
        )
        assert resp.status_code == 413

    def test_non_object_body(self, client):
        resp = client.post(
            "/api/v1/analyze",
            content=b"[1,2,3]",
            headers={"Content-Type": "application/json"},
        )
        assert resp.status_code == 422
