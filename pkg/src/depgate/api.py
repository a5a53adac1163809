"""HTTP surface: gate endpoint for CI, queries and vetting mutations for the
console, report endpoints, sync trigger and the event stream.

Every body is UTF-8 JSON with ISO-8601 UTC timestamps; every non-2xx
response carries a stable ``{"code", "message"}`` pair. When an API token
is configured, mutation routes require ``Authorization: Bearer <token>``;
read routes stay open.
"""

from __future__ import annotations

import base64
import binascii
import json
from pathlib import Path

from fastapi import Body, Depends, FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from . import reports
from .reports import render_table
from .config import ServiceConfig
from .errors import (
    ConfigError,
    DepgateError,
    IllegalTransition,
    MissingDrdEntry,
    MissingEndDate,
    MissingJustification,
    NotFound,
    StorageFailure,
    SyncLeaseHeld,
    UnknownCategory,
)
from .manifests import ManifestFile, ManifestKind, SbomSnapshot, build_sbom, detect_kind
from .model import Status, parse_ts, utc_now
from .service import build_registries, deliver_webhooks, run_gate_flow
from .store import DrdStore
from .vulnsync import load_alias_map, load_feed_documents, run_sync


class ApiError(Exception):
    """Stable machine-readable error envelope."""

    def __init__(self, http_status: int, code: str, message: str):
        self.http_status = http_status
        self.code = code
        self.message = message
        super().__init__(message)


_ERROR_STATUS = {
    NotFound: (404, "not_found"),
    IllegalTransition: (409, "illegal_transition"),
    SyncLeaseHeld: (409, "sync_lease_held"),
    MissingJustification: (422, "missing_justification"),
    MissingEndDate: (422, "missing_end_date"),
    UnknownCategory: (404, "unknown_category"),
    MissingDrdEntry: (500, "missing_drd_entry"),
    StorageFailure: (500, "storage_failure"),
    ConfigError: (500, "config_error"),
}


def _translate(exc: DepgateError) -> ApiError:
    for kind, (status, code) in _ERROR_STATUS.items():
        if isinstance(exc, kind):
            return ApiError(status, code, str(exc))
    return ApiError(500, "internal_error", str(exc))


def _bad_request(message: str) -> ApiError:
    return ApiError(400, "bad_request", message)


def create_app(config: ServiceConfig, store: DrdStore | None = None) -> FastAPI:
    app = FastAPI(title="depgate", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.store = store if store is not None else DrdStore(config.db_path)

    def get_store() -> DrdStore:
        return app.state.store

    def require_token(request: Request):
        if not config.api_token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.api_token}":
            raise ApiError(401, "unauthorized", "this route requires a valid bearer token")

    @app.exception_handler(ApiError)
    async def handle_api_error(_request, exc: ApiError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message},
        )

    @app.exception_handler(DepgateError)
    async def handle_domain_error(_request, exc: DepgateError):
        translated = _translate(exc)
        return JSONResponse(
            status_code=translated.http_status,
            content={"code": translated.code, "message": translated.message},
        )

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    # -- gate -----------------------------------------------------------------

    @app.post("/v1/gate")
    def gate(payload: dict = Body(...), _auth=Depends(require_token)):
        application = payload.get("application")
        commit = payload.get("commit")
        if not application or not isinstance(application, str):
            raise _bad_request("body requires a non-empty 'application'")
        if not isinstance(commit, str) or not commit:
            raise _bad_request("body requires a non-empty 'commit'")
        manifests = payload.get("manifests")
        sbom_payload = payload.get("sbom")
        if (manifests is None) == (sbom_payload is None):
            raise _bad_request("provide exactly one of 'manifests' or 'sbom'")
        now = parse_ts(payload["now"]) if "now" in payload else utc_now()

        if sbom_payload is not None:
            try:
                sbom = SbomSnapshot.from_dict(sbom_payload)
            except DepgateError as exc:
                raise _bad_request(f"invalid sbom payload: {exc}")
            sbom = SbomSnapshot(application, commit, now, sbom.dependencies)
        else:
            if not isinstance(manifests, list) or not manifests:
                raise _bad_request("'manifests' must be a non-empty list")
            files = []
            for entry in manifests:
                try:
                    path = entry["path"]
                    raw = base64.b64decode(entry["content_base64"], validate=True)
                except (KeyError, TypeError, binascii.Error) as exc:
                    raise _bad_request(f"unusable manifest entry: {exc}")
                kind_name = entry.get("kind")
                try:
                    kind = (
                        ManifestKind.parse(kind_name)
                        if kind_name
                        else detect_kind(path.rsplit("/", 1)[-1])
                    )
                except ValueError as exc:
                    raise _bad_request(str(exc))
                if kind is None:
                    raise _bad_request(f"cannot detect manifest kind for {path!r}")
                files.append(ManifestFile(path, kind, raw))
            sbom, warnings = build_sbom(
                application,
                commit,
                files,
                internal_group_prefixes=config.internal_group_prefixes,
                now=now,
            )
            malformed = [w for w in warnings if w.code == "malformed_manifest"]
            if files and len(malformed) == len(files):
                raise ApiError(422, "all_manifests_malformed", "; ".join(w.render() for w in malformed))

        store = get_store()
        decision = run_gate_flow(store, sbom, config.policy, now)
        _deliver_new_events(app, store)
        return decision.to_dict()

    # -- reads ----------------------------------------------------------------

    @app.get("/v1/sbom/{application}")
    def latest_sbom(application: str):
        snapshot = get_store().latest_snapshot(application)
        if snapshot is None:
            raise ApiError(404, "not_found", f"no SBOM recorded for {application!r}")
        return snapshot

    @app.get("/v1/decisions/{application}")
    def decisions(application: str):
        history = get_store().decisions_for(application)
        if not history:
            raise ApiError(404, "not_found", f"no gate decisions recorded for {application!r}")
        return {"application": application, "decisions": history}

    @app.get("/v1/dependencies")
    def dependencies(
        status: str | None = None,
        category: str | None = None,
        application: str | None = None,
        has_vulns: str | None = None,
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ):
        parsed_status = None
        if status is not None:
            try:
                parsed_status = Status.parse(status)
            except ValueError as exc:
                raise _bad_request(str(exc))
        parsed_vulns = None
        if has_vulns is not None:
            lowered = has_vulns.lower()
            if lowered not in ("true", "false"):
                raise _bad_request("has_vulns must be 'true' or 'false'")
            parsed_vulns = lowered == "true"
        rows = get_store().query(
            status=parsed_status,
            category=category,
            application=application,
            has_vulns=parsed_vulns,
            limit=limit,
            offset=offset,
        )
        return {"rows": [r.to_dict() for r in rows], "limit": limit, "offset": offset}

    @app.get("/v1/categories")
    def categories():
        return {
            "categories": [
                {"id": c.id, "name": c.name, "description": c.description}
                for c in get_store().categories()
            ]
        }

    @app.get("/v1/events")
    def events(since_seq: int = Query(default=0, ge=0)):
        return {"events": [e.to_dict() for e in get_store().events(since_seq=since_seq)]}

    # -- vetting mutations ------------------------------------------------------

    def _find_version_row(store, dependency_id: int, version: str):
        dep = store.get_dependency(dependency_id)  # raises NotFound
        for row in store.versions_for(dep.id):
            if row.version == version:
                return row
        raise NotFound(f"version {version!r} not tracked for dependency {dependency_id}")

    @app.post("/v1/dependencies/{dependency_id}/versions/{version}/status")
    def set_status(
        dependency_id: int,
        version: str,
        payload: dict = Body(...),
        _auth=Depends(require_token),
    ):
        store = get_store()
        row = _find_version_row(store, dependency_id, version)
        try:
            new_status = Status.parse(payload["status"])
        except (KeyError, ValueError) as exc:
            raise _bad_request(f"invalid status: {exc}")
        actor = payload.get("actor") or "console"
        end_date = parse_ts(payload["end_date"]) if payload.get("end_date") else None
        now = parse_ts(payload["now"]) if "now" in payload else utc_now()
        updated = store.set_status(
            row.id,
            new_status,
            actor=actor,
            now=now,
            justification=payload.get("justification"),
            end_date=end_date,
        )
        return _version_row_dict(store, updated)

    @app.post("/v1/dependencies/{dependency_id}/versions/{version}/blacklist")
    def blacklist(
        dependency_id: int,
        version: str,
        payload: dict = Body(...),
        _auth=Depends(require_token),
    ):
        store = get_store()
        row = _find_version_row(store, dependency_id, version)
        reason = payload.get("reason", "")
        now = parse_ts(payload["now"]) if "now" in payload else utc_now()
        updated = store.set_blacklist(row.id, reason, actor=payload.get("actor") or "console", now=now)
        return _version_row_dict(store, updated)

    @app.post("/v1/categories")
    def create_category(payload: dict = Body(...), _auth=Depends(require_token)):
        name = payload.get("name", "")
        if not isinstance(name, str) or not name.strip():
            raise _bad_request("category requires a non-empty name")
        row = get_store().create_category(name, payload.get("description"))
        return {"id": row.id, "name": row.name, "description": row.description}

    @app.put("/v1/dependencies/{dependency_id}/category")
    def assign_category(dependency_id: int, payload: dict = Body(...), _auth=Depends(require_token)):
        store = get_store()
        category_id = payload.get("category_id")
        if not isinstance(category_id, int):
            raise _bad_request("body requires integer 'category_id'")
        now = parse_ts(payload["now"]) if "now" in payload else utc_now()
        dep = store.assign_category(
            dependency_id, category_id, actor=payload.get("actor") or "console", now=now
        )
        return {
            "id": dep.id,
            "ecosystem": dep.ecosystem.value,
            "group": dep.group,
            "name": dep.name,
            "category": dep.category,
        }

    @app.post("/v1/waivers")
    def create_waiver(payload: dict = Body(...), _auth=Depends(require_token)):
        store = get_store()
        try:
            application = payload["application"]
            version_id = int(payload["dependency_version_id"])
            expires = parse_ts(payload["expires"])
            justification = payload["justification"]
            approver = payload.get("approver", "console")
        except (KeyError, TypeError, ValueError) as exc:
            raise _bad_request(f"unusable waiver body: {exc}")
        now = parse_ts(payload["now"]) if "now" in payload else utc_now()
        try:
            waiver = store.create_waiver(application, version_id, expires, justification, approver, now)
        except ValueError as exc:
            raise ApiError(422, "invalid_waiver", str(exc))
        return {
            "id": waiver.id,
            "application": waiver.application,
            "dependency_version_id": waiver.dependency_version_id,
            "expires": payload["expires"],
            "justification": waiver.justification,
            "approver": waiver.approver,
        }

    # -- reports ----------------------------------------------------------------

    def _tabular(format_, headers, rows, payload):
        if format_ == "table":
            return PlainTextResponse(render_table(headers, rows))
        if format_ != "json":
            raise _bad_request("format must be 'json' or 'table'")
        return payload

    @app.get("/v1/reports/categories")
    def report_categories(format: str = "json"):
        rows = reports.category_breakdown(get_store())
        return _tabular(
            format,
            ["Library Domain", "# of Different Libraries"],
            [(r.category, r.distinct_libraries) for r in rows],
            {"rows": [r.to_dict() for r in rows]},
        )

    @app.get("/v1/reports/vulnerabilities")
    def report_vulnerabilities(category: str, format: str = "json"):
        rows = reports.vuln_summary(get_store(), category)
        return _tabular(
            format,
            ["Library", "# Vulns", "# Versions"],
            [(r.library, r.vuln_count, r.version_count) for r in rows],
            {"rows": [r.to_dict() for r in rows]},
        )

    @app.get("/v1/reports/stats")
    def report_stats(window_days: int = Query(default=7, ge=1), format: str = "json"):
        stats = reports.ecosystem_stats(get_store(), window_days).to_dict()
        return _tabular(
            format,
            ["Metric", "Value"],
            sorted((k, v) for k, v in stats.items()),
            stats,
        )

    @app.get("/v1/reports/duplication")
    def report_duplication(threshold: int = Query(default=5, ge=1), format: str = "json"):
        flagged = reports.duplication_report(get_store(), threshold)
        table_rows = [
            (c.category, m.library, m.vuln_count, m.latest_version, ",".join(m.statuses))
            for c in flagged
            for m in c.members
        ]
        return _tabular(
            format,
            ["Category", "Library", "# Vulns", "Latest", "Statuses"],
            table_rows,
            {"rows": [c.to_dict() for c in flagged]},
        )

    # -- sync ---------------------------------------------------------------------

    @app.post("/v1/sync/run")
    def sync_run(payload: dict = Body(default={}), _auth=Depends(require_token)):
        store = get_store()
        now = parse_ts(payload["now"]) if "now" in payload else utc_now()
        feeds = load_feed_documents(config.feeds_dir) if config.feeds_dir else []
        aliases = {}
        if config.aliases_path:
            aliases = load_alias_map(json.loads(Path(config.aliases_path).read_text("utf-8")))
        report = run_sync(store, build_registries(config), feeds, aliases, now)
        _deliver_new_events(app, store)
        return report.to_dict()

    # -- static console -----------------------------------------------------------

    if config.ui_dir and Path(config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app


def _version_row_dict(store, row) -> dict:
    from .model import format_ts

    return {
        "dependency_version_id": row.id,
        "dependency_id": row.dependency_id,
        "coordinate": store.coordinate_of(row.id),
        "version": row.version,
        "status": row.status.value,
        "introduced_date": format_ts(row.introduced_date),
        "effective_date": format_ts(row.effective_date),
        "end_date": format_ts(row.end_date) if row.end_date else None,
        "justification": row.justification,
        "blacklisted": row.blacklist_reason is not None,
    }


def _deliver_new_events(app, store):
    """Push events appended since the last delivery to the configured webhooks."""
    config = app.state.config
    if not config.webhooks:
        return
    last = getattr(app.state, "webhook_seq", 0)
    fresh = store.events(since_seq=last)
    if not fresh:
        return
    app.state.webhook_seq = fresh[-1].seq

    def record_failure(target, error):
        store.record_webhook_failure(utc_now(), target.url, error)

    deliver_webhooks(config.webhooks, fresh, record_failure)
