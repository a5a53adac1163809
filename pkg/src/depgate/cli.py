"""Operator and CI entry point.

Commands: scan (emit an SBOM), gate (evaluate a build), sync (refresh the
reference database), report (aggregations), serve (run the HTTP service).

Exit codes: 0 success (Pass, or Warn without --warn-as-error), 1 operational
error, 2 policy failure. stdout carries only the machine-readable payload;
diagnostics go to stderr. DEPGATE_DB overrides --db.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import load_policy, load_service_config
from .errors import ConfigError, DepgateError
from .gate import decide_exit_code
from .manifests import ManifestFile, SbomSnapshot, build_sbom, detect_build_types
from .model import parse_ts, utc_now
from .service import run_gate_flow
from .store import DrdStore
from .vulnsync import (
    FixtureRegistryAdapter,
    MavenCentralAdapter,
    NpmRegistryAdapter,
    load_alias_map,
    load_feed_documents,
    run_sync,
)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _emit(payload: str, out: str | None):
    if out:
        Path(out).write_text(payload, "utf-8")
    else:
        sys.stdout.write(payload)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _now_from(args):
    return parse_ts(args.now) if args.now else utc_now()


def _collect_manifests(root: Path) -> list:
    tree = [
        str(p.relative_to(root)).replace(os.sep, "/")
        for p in root.rglob("*")
        if p.is_file()
    ]
    manifests = []
    for kind, rel in sorted(detect_build_types(tree), key=lambda m: m[1]):
        manifests.append(ManifestFile(rel, kind, (root / rel).read_bytes()))
    return manifests


def _scan_to_sbom(args):
    root = Path(args.path)
    if not root.is_dir():
        raise ConfigError(f"not a scannable directory: {args.path}")
    manifests = _collect_manifests(root)
    sbom, warnings = build_sbom(
        args.app,
        args.commit,
        manifests,
        internal_group_prefixes=tuple(args.internal_prefix or ()),
        now=_now_from(args),
    )
    for warning in warnings:
        print(f"warning: {warning.render()}", file=sys.stderr)
    return sbom


def cmd_scan(args) -> int:
    sbom = _scan_to_sbom(args)
    _emit(_dump(sbom.to_dict()), args.out)
    return 0


def _open_store(args) -> DrdStore:
    db_path = os.environ.get("DEPGATE_DB") or args.db
    if not db_path:
        raise ConfigError("a database is required: pass --db or set DEPGATE_DB")
    return DrdStore(db_path)


def cmd_gate(args) -> int:
    if bool(args.path) == bool(args.sbom):
        raise ConfigError("pass either a scan path or --sbom, not both")
    now = _now_from(args)
    if args.sbom:
        payload = json.loads(Path(args.sbom).read_text("utf-8"))
        sbom = SbomSnapshot.from_dict(payload)
        sbom = SbomSnapshot(args.app, args.commit, now, sbom.dependencies)
    else:
        sbom = _scan_to_sbom(args)

    if args.server:
        import requests

        body = {
            "application": args.app,
            "commit": args.commit,
            "sbom": sbom.to_dict(),
            "now": args.now,
        }
        if not args.now:
            body.pop("now")
        headers = {}
        token = os.environ.get("DEPGATE_TOKEN")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        response = requests.post(f"{args.server.rstrip('/')}/v1/gate", json=body, headers=headers, timeout=30)
        if response.status_code != 200:
            raise ConfigError(f"gate endpoint returned {response.status_code}: {response.text}")
        decision_dict = response.json()
        sys.stdout.write(_dump(decision_dict))
        verdict = decision_dict.get("verdict")
        if verdict == "fail":
            return 2
        if verdict == "warn" and args.warn_as_error:
            return 2
        return 0

    store = _open_store(args)
    try:
        policy = load_policy(args.policy)
        decision = run_gate_flow(store, sbom, policy, now)
    finally:
        store.close()
    sys.stdout.write(_dump(decision.to_dict()))
    return decide_exit_code(decision, args.warn_as_error)


def cmd_sync(args) -> int:
    if not args.feeds and not args.registries and not args.fixture_registries:
        raise ConfigError("sync needs --feeds and/or a registry source")
    registries = []
    if args.fixture_registries:
        registries.append(FixtureRegistryAdapter(args.fixture_registries))
    if args.registries:
        registry_config = json.loads(Path(args.registries).read_text("utf-8"))
        if registry_config.get("maven"):
            registries.append(MavenCentralAdapter(registry_config["maven"]))
        if registry_config.get("npm"):
            registries.append(NpmRegistryAdapter(registry_config["npm"]))
    feeds = load_feed_documents(args.feeds) if args.feeds else []
    aliases = {}
    if args.aliases:
        aliases = load_alias_map(json.loads(Path(args.aliases).read_text("utf-8")))
    store = _open_store(args)
    try:
        report = run_sync(store, registries, feeds, aliases, _now_from(args))
    finally:
        store.close()
    sys.stdout.write(_dump(report.to_dict()))
    return 0


def cmd_report(args) -> int:
    from . import reports
    from .reports import render_table

    store = _open_store(args)
    try:
        if args.kind == "categories":
            rows = reports.category_breakdown(store)
            payload = [r.to_dict() for r in rows]
            table = render_table(
                ["Library Domain", "# of Different Libraries"],
                [(r.category, r.distinct_libraries) for r in rows],
            )
        elif args.kind == "vulns":
            if not args.category:
                raise ConfigError("report vulns requires --category")
            rows = reports.vuln_summary(store, args.category)
            payload = [r.to_dict() for r in rows]
            table = render_table(
                ["Library", "# Vulns", "# Versions"],
                [(r.library, r.vuln_count, r.version_count) for r in rows],
            )
        elif args.kind == "stats":
            stats = reports.ecosystem_stats(store, args.window)
            payload = stats.to_dict()
            table = render_table(
                ["Metric", "Value"], sorted((k, v) for k, v in payload.items())
            )
        else:  # duplication
            flagged = reports.duplication_report(store, args.threshold)
            payload = [c.to_dict() for c in flagged]
            table_rows = []
            for category in flagged:
                for member in category.members:
                    table_rows.append(
                        (
                            category.category,
                            member.library,
                            member.vuln_count,
                            member.latest_version,
                            ",".join(member.statuses),
                        )
                    )
            table = render_table(
                ["Category", "Library", "# Vulns", "Latest", "Statuses"], table_rows
            )
    finally:
        store.close()
    sys.stdout.write(table if args.format == "table" else _dump(payload))
    return 0


def cmd_serve(args) -> int:
    import signal

    import uvicorn

    from .api import create_app

    config = load_service_config(args.config)
    app = create_app(config)
    print(f"serving on {config.host}:{config.port} (db: {config.db_path})", file=sys.stderr)
    # uvicorn re-raises the termination signal after its graceful shutdown;
    # park it on a no-op so an orderly SIGTERM/SIGINT stop exits 0.
    for sig in (signal.SIGTERM, signal.SIGINT):
        signal.signal(sig, lambda _sig, _frame: None)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    except SystemExit as exc:  # uvicorn startup failure (e.g. port in use)
        if exc.code not in (0, None):
            return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        app.state.store.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depgate",
        description="Direct-dependency governance: scan, gate, sync, report, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="emit the direct-dependency SBOM of a repo tree")
    scan.add_argument("path")
    scan.add_argument("--app", required=True)
    scan.add_argument("--commit", required=True)
    scan.add_argument("--out")
    scan.add_argument("--now")
    scan.add_argument("--internal-prefix", action="append")
    scan.set_defaults(func=cmd_scan)

    gate = sub.add_parser("gate", help="evaluate a build against the reference database")
    gate.add_argument("path", nargs="?")
    gate.add_argument("--sbom")
    gate.add_argument("--app", required=True)
    gate.add_argument("--commit", required=True)
    gate.add_argument("--db")
    gate.add_argument("--server")
    gate.add_argument("--policy")
    gate.add_argument("--warn-as-error", action="store_true")
    gate.add_argument("--now")
    gate.add_argument("--internal-prefix", action="append")
    gate.set_defaults(func=cmd_gate)

    sync = sub.add_parser("sync", help="refresh versions and advisories")
    sync.add_argument("--db")
    sync.add_argument("--feeds")
    sync.add_argument("--registries")
    sync.add_argument("--fixture-registries")
    sync.add_argument("--aliases")
    sync.add_argument("--now")
    sync.set_defaults(func=cmd_sync)

    report = sub.add_parser("report", help="run an aggregation report")
    report.add_argument("kind", choices=["categories", "vulns", "stats", "duplication"])
    report.add_argument("--db")
    report.add_argument("--category")
    report.add_argument("--window", type=int, default=7)
    report.add_argument("--threshold", type=int, default=5)
    report.add_argument("--format", choices=["json", "table"], default="json")
    report.set_defaults(func=cmd_report)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DepgateError as exc:
        return _fail(str(exc))
    except FileNotFoundError as exc:
        return _fail(str(exc))
    except json.JSONDecodeError as exc:
        return _fail(f"unreadable JSON input: {exc}")


if __name__ == "__main__":
    sys.exit(main())
