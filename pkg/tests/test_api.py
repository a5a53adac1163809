"""HTTP service contract tests."""

import base64
import hashlib
import hmac
import json
import threading

import pytest
from fastapi.testclient import TestClient

from depgate.api import create_app
from depgate.config import ServiceConfig, WebhookTarget
from depgate.store import DrdStore

from corpus import seed_parser_corpus

T0 = "2024-03-01T12:00:00Z"


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


@pytest.fixture
def client(fixtures_dir):
    config = ServiceConfig(
        db_path=":memory:",
        internal_group_prefixes=["com.acme."],
        feeds_dir=str(fixtures_dir / "feeds"),
        fixture_registries_dir=str(fixtures_dir / "registries"),
    )
    store = DrdStore(":memory:")
    app = create_app(config, store=store)
    with TestClient(app) as test_client:
        test_client.app_store = store
        yield test_client
    store.close()


def gate_payload(table3_pom, now=T0, app="claims-portal"):
    return {
        "application": app,
        "commit": "a1b2c3d",
        "now": now,
        "manifests": [{"path": "pom.xml", "kind": "maven_pom", "content_base64": b64(table3_pom)}],
    }


class TestGateEndpoint:
    def test_fresh_drd_warns_with_eight_new_findings(self, client, table3_pom):
        response = client.post("/v1/gate", json=gate_payload(table3_pom))
        assert response.status_code == 200
        decision = response.json()
        assert decision["verdict"] == "warn"
        assert len(decision["findings"]) == 8
        assert {f["rule"] for f in decision["findings"]} == {"not_reviewed_new"}
        assert all(f["deadline"] == "2024-03-31T12:00:00Z" for f in decision["findings"])

    def test_pass_after_committee_approves_all(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom))
        rows = client.get("/v1/dependencies", params={"status": "NotReviewed"}).json()["rows"]
        assert len(rows) == 8
        for row in rows:
            approved = client.post(
                f"/v1/dependencies/{row['dependency_id']}/versions/{row['version']}/status",
                json={"status": "Approved", "actor": "committee", "now": "2024-03-02T12:00:00Z"},
            )
            assert approved.status_code == 200, approved.text
        second = client.post("/v1/gate", json=gate_payload(table3_pom, now="2024-03-03T12:00:00Z"))
        assert second.json()["verdict"] == "pass"

    def test_missing_application_is_400(self, client, table3_pom):
        payload = gate_payload(table3_pom)
        del payload["application"]
        response = client.post("/v1/gate", json=payload)
        assert response.status_code == 400
        assert response.json()["code"] == "bad_request"

    def test_both_manifests_and_sbom_is_400(self, client, table3_pom):
        payload = gate_payload(table3_pom)
        payload["sbom"] = {"application": "x", "commit": "c", "captured_at": T0, "dependencies": []}
        assert client.post("/v1/gate", json=payload).status_code == 400

    def test_all_manifests_malformed_is_422(self, client):
        payload = {
            "application": "app",
            "commit": "c",
            "now": T0,
            "manifests": [
                {"path": "pom.xml", "kind": "maven_pom", "content_base64": b64(b"<oops")},
                {"path": "package.json", "kind": "npm_package", "content_base64": b64(b"{nope")},
            ],
        }
        response = client.post("/v1/gate", json=payload)
        assert response.status_code == 422
        assert response.json()["code"] == "all_manifests_malformed"

    def test_sbom_body_variant(self, client, table3_pom):
        scan = gate_payload(table3_pom)
        client.post("/v1/gate", json=scan)
        sbom = client.get("/v1/sbom/claims-portal").json()
        replay = {
            "application": "claims-portal",
            "commit": "deadbee",
            "now": "2024-03-05T12:00:00Z",
            "sbom": sbom,
        }
        response = client.post("/v1/gate", json=replay)
        assert response.status_code == 200
        assert len(response.json()["findings"]) == 8


class TestSbomRoutes:
    def test_latest_snapshot_round_trip(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom))
        sbom = client.get("/v1/sbom/claims-portal").json()
        coords = [f"{d['ecosystem']}:{d['group']}:{d['name']}:{d['version']}" for d in sbom["dependencies"]]
        assert len(coords) == 8 and coords == sorted(coords)

    def test_unknown_application_404(self, client):
        response = client.get("/v1/sbom/ghost")
        assert response.status_code == 404
        assert response.json()["code"] == "not_found"

    def test_two_gates_latest_wins(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom, now="2024-03-01T12:00:00Z"))
        later = gate_payload(table3_pom, now="2024-04-01T12:00:00Z")
        later["commit"] = "eeeeeee"
        client.post("/v1/gate", json=later)
        sbom = client.get("/v1/sbom/claims-portal").json()
        assert sbom["commit"] == "eeeeeee"
        assert sbom["captured_at"] == "2024-04-01T12:00:00Z"


class TestDependencyRoutes:
    def test_bad_status_filter_400(self, client):
        assert client.get("/v1/dependencies", params={"status": "Sideways"}).status_code == 400

    def test_bad_has_vulns_400(self, client):
        assert client.get("/v1/dependencies", params={"has_vulns": "maybe"}).status_code == 400

    def test_has_vulns_after_fixture_sync(self, client):
        seed_parser_corpus(client.app_store)
        response = client.post("/v1/sync/run", json={"now": T0})
        assert response.status_code == 200, response.text
        rows = client.get("/v1/dependencies", params={"has_vulns": "true", "limit": 1000}).json()["rows"]
        names = {(r["group"], r["name"]) for r in rows}
        assert len(names) == 10  # 8 XML + 2 JSON libraries carry advisories

    def test_status_transition_conflict_is_409(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom))
        row = client.get("/v1/dependencies").json()["rows"][0]
        url = f"/v1/dependencies/{row['dependency_id']}/versions/{row['version']}/status"
        assert client.post(url, json={"status": "Approved", "actor": "c"}).status_code == 200
        response = client.post(url, json={"status": "NotReviewed", "actor": "c"})
        assert response.status_code == 409
        assert response.json()["code"] == "illegal_transition"

    def test_reject_without_justification_is_422(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom))
        row = client.get("/v1/dependencies").json()["rows"][0]
        url = f"/v1/dependencies/{row['dependency_id']}/versions/{row['version']}/status"
        response = client.post(url, json={"status": "Rejected", "actor": "c"})
        assert response.status_code == 422
        assert response.json()["code"] == "missing_justification"

    def test_unknown_version_404(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom))
        row = client.get("/v1/dependencies").json()["rows"][0]
        url = f"/v1/dependencies/{row['dependency_id']}/versions/9.9.9-nope/status"
        assert client.post(url, json={"status": "Approved"}).status_code == 404

    def test_category_flow(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom))
        category = client.post("/v1/categories", json={"name": "JSON Parser"}).json()
        row = next(
            r for r in client.get("/v1/dependencies").json()["rows"] if r["name"] == "json"
        )
        response = client.put(
            f"/v1/dependencies/{row['dependency_id']}/category",
            json={"category_id": category["id"], "actor": "committee"},
        )
        assert response.status_code == 200
        assert response.json()["category"] == "JSON Parser"
        breakdown = client.get("/v1/reports/categories").json()["rows"]
        assert {"category": "JSON Parser", "distinct_libraries": 1} in breakdown

    def test_waiver_route(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom))
        row = client.get("/v1/dependencies").json()["rows"][0]
        response = client.post(
            "/v1/waivers",
            json={
                "application": "claims-portal",
                "dependency_version_id": row["dependency_version_id"],
                "expires": "2030-01-01T00:00:00Z",
                "justification": "migration scheduled for Q3",
                "approver": "secops",
                "now": T0,
            },
        )
        assert response.status_code == 200
        expired = client.post(
            "/v1/waivers",
            json={
                "application": "claims-portal",
                "dependency_version_id": row["dependency_version_id"],
                "expires": "2020-01-01T00:00:00Z",
                "justification": "too late",
                "now": T0,
            },
        )
        assert expired.status_code == 422


class TestReportFormats:
    def test_table_format_on_report_routes(self, client):
        seed_parser_corpus(client.app_store)
        client.post("/v1/sync/run", json={"now": T0})
        response = client.get(
            "/v1/reports/vulnerabilities", params={"category": "XML Parser", "format": "table"}
        )
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/plain")
        lines = response.text.splitlines()
        assert lines[0].split() == ["Library", "#", "Vulns", "#", "Versions"]
        assert lines[2].startswith("xmlsec")
        assert client.get("/v1/reports/stats", params={"format": "xml"}).status_code == 400

    def test_json_is_default(self, client):
        response = client.get("/v1/reports/categories")
        assert response.headers["content-type"].startswith("application/json")


class TestSyncAndEvents:
    def test_sync_totals_and_conflict(self, client):
        seed_parser_corpus(client.app_store)
        report = client.post("/v1/sync/run", json={"now": T0}).json()
        assert report["advisories_ingested"] == 23
        assert report["new_vulns_linked"] > 0
        client.app_store.acquire_sync_lease("held-elsewhere")
        blocked = client.post("/v1/sync/run", json={"now": T0})
        assert blocked.status_code == 409
        client.app_store.release_sync_lease("held-elsewhere")

    def test_events_stream_gapless_and_resumable(self, client, table3_pom):
        client.post("/v1/gate", json=gate_payload(table3_pom))
        events = client.get("/v1/events", params={"since_seq": 0}).json()["events"]
        seqs = [e["seq"] for e in events]
        assert seqs == list(range(1, len(seqs) + 1))
        tail = client.get("/v1/events", params={"since_seq": seqs[3]}).json()["events"]
        assert [e["seq"] for e in tail] == seqs[4:]


class TestAuth:
    @pytest.fixture
    def secured(self, table3_pom):
        config = ServiceConfig(db_path=":memory:", api_token="sekret")
        store = DrdStore(":memory:")
        app = create_app(config, store=store)
        with TestClient(app) as test_client:
            yield test_client
        store.close()

    def test_mutation_requires_token(self, secured, table3_pom):
        response = secured.post("/v1/gate", json=gate_payload(table3_pom))
        assert response.status_code == 401
        ok = secured.post(
            "/v1/gate",
            json=gate_payload(table3_pom),
            headers={"Authorization": "Bearer sekret"},
        )
        assert ok.status_code == 200

    def test_reads_stay_open(self, secured):
        assert secured.get("/v1/dependencies").status_code == 200
        assert secured.get("/v1/reports/categories").status_code == 200


class TestWebhooks:
    def test_signed_delivery_and_failure_recording(self, table3_pom, free_port_pair):
        import http.server

        received = []

        class Receiver(http.server.BaseHTTPRequestHandler):
            def do_POST(self):
                body = self.rfile.read(int(self.headers["Content-Length"]))
                received.append((self.headers.get("X-Depgate-Signature"), body))
                self.send_response(200)
                self.end_headers()

            def log_message(self, *args):
                pass

        good_port, dead_port = free_port_pair
        server = http.server.HTTPServer(("127.0.0.1", good_port), Receiver)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            config = ServiceConfig(
                db_path=":memory:",
                webhooks=[
                    WebhookTarget(url=f"http://127.0.0.1:{good_port}/hook", secret="topsecret"),
                    WebhookTarget(url=f"http://127.0.0.1:{dead_port}/hook", secret="x"),
                ],
            )
            store = DrdStore(":memory:")
            app = create_app(config, store=store)
            with TestClient(app) as client:
                client.post("/v1/gate", json=gate_payload(table3_pom))
            signature, body = received[0]
            expected = "sha256=" + hmac.new(b"topsecret", body, hashlib.sha256).hexdigest()
            assert signature == expected
            payload = json.loads(body)
            assert any(e["action"] == "observed" for e in payload["events"])
            failures = [e for e in store.events(stream="webhook")]
            assert len(failures) == 1 and failures[0].action == "delivery_failed"
            store.close()
        finally:
            server.shutdown()
