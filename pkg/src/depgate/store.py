"""The Dependency Reference Database (DRD).

SQLite-backed inventory of every observed direct dependency: groups,
categories, dependencies, versions with lifecycle status, application usage
links, vulnerability records with version-range matches, waivers and a
single append-only event log (audit actions and sync notifications share
one gapless sequence).

Rules enforced here:
  * status transitions follow the vetting matrix (see LEGAL_TRANSITIONS);
  * Rejected requires a justification, Deprecated an end date;
  * nothing is ever deleted — deprecation and rejection are statuses;
  * every timestamp is an injected parameter, never a wall-clock read.

Concurrency: single writer, multi reader. All access serializes through one
lock, so a handle can be shared between threads and callers never observe a
torn multi-row update.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime

from .errors import (
    IllegalTransition,
    MissingEndDate,
    MissingJustification,
    NotFound,
    StorageFailure,
)
from .manifests import SbomSnapshot
from .model import (
    Ecosystem,
    Severity,
    Status,
    format_ts,
    parse_ts,
)

SCHEMA_VERSION = 1

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS dependency_group (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    ecosystem TEXT NOT NULL,
    name TEXT NOT NULL,
    UNIQUE (ecosystem, name)
);
CREATE TABLE IF NOT EXISTS category (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL UNIQUE,
    description TEXT
);
CREATE TABLE IF NOT EXISTS dependency (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    ecosystem TEXT NOT NULL,
    group_id INTEGER NOT NULL REFERENCES dependency_group(id),
    name TEXT NOT NULL,
    category_id INTEGER REFERENCES category(id),
    latest_registry_version TEXT,
    UNIQUE (ecosystem, group_id, name)
);
CREATE TABLE IF NOT EXISTS dependency_version (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    dependency_id INTEGER NOT NULL REFERENCES dependency(id),
    version TEXT NOT NULL,
    introduced_date TEXT NOT NULL,
    status TEXT NOT NULL,
    effective_date TEXT NOT NULL,
    end_date TEXT,
    justification TEXT,
    blacklist_reason TEXT,
    UNIQUE (dependency_id, version)
);
CREATE TABLE IF NOT EXISTS application (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL UNIQUE
);
CREATE TABLE IF NOT EXISTS application_dependency (
    application_id INTEGER NOT NULL REFERENCES application(id),
    dependency_version_id INTEGER NOT NULL REFERENCES dependency_version(id),
    first_seen TEXT NOT NULL,
    last_seen TEXT NOT NULL,
    first_seen_commit TEXT NOT NULL,
    PRIMARY KEY (application_id, dependency_version_id)
);
CREATE TABLE IF NOT EXISTS vulnerability (
    id TEXT PRIMARY KEY,
    source TEXT NOT NULL,
    score REAL NOT NULL,
    summary TEXT NOT NULL,
    published TEXT NOT NULL,
    recorded_at TEXT NOT NULL,
    matches_json TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS vulnerability_link (
    vulnerability_id TEXT NOT NULL REFERENCES vulnerability(id),
    dependency_version_id INTEGER NOT NULL REFERENCES dependency_version(id),
    PRIMARY KEY (vulnerability_id, dependency_version_id)
);
CREATE TABLE IF NOT EXISTS waiver (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    application_id INTEGER NOT NULL REFERENCES application(id),
    dependency_version_id INTEGER NOT NULL REFERENCES dependency_version(id),
    expires TEXT NOT NULL,
    justification TEXT NOT NULL,
    approver TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS event (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    at TEXT NOT NULL,
    actor TEXT NOT NULL,
    stream TEXT NOT NULL,
    action TEXT NOT NULL,
    subject TEXT NOT NULL,
    detail TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sbom_snapshot (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    application_id INTEGER NOT NULL REFERENCES application(id),
    commit_id TEXT NOT NULL,
    captured_at TEXT NOT NULL,
    payload TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS gate_decision (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    application_id INTEGER NOT NULL REFERENCES application(id),
    commit_id TEXT NOT NULL,
    evaluated_at TEXT NOT NULL,
    verdict TEXT NOT NULL,
    payload TEXT NOT NULL
);
"""

#: Vetting lifecycle: NotReviewed is decided once, Approved can later be
#: phased out or pulled, Deprecated can be pulled or reinstated, Rejected can
#: be reinstated after a successful appeal. Self-transitions are illegal.
LEGAL_TRANSITIONS = {
    Status.NOT_REVIEWED: frozenset({Status.APPROVED, Status.REJECTED}),
    Status.APPROVED: frozenset({Status.DEPRECATED, Status.REJECTED}),
    Status.DEPRECATED: frozenset({Status.REJECTED, Status.APPROVED}),
    Status.REJECTED: frozenset({Status.APPROVED}),
}

AUDIT_STREAM = "audit"
NOTIFICATION_STREAM = "notification"
WEBHOOK_STREAM = "webhook"


@dataclass(frozen=True)
class DependencyRow:
    id: int
    ecosystem: Ecosystem
    group_id: int
    group: str
    name: str
    category_id: int | None
    category: str | None
    latest_registry_version: str | None


@dataclass(frozen=True)
class DependencyVersionRow:
    id: int
    dependency_id: int
    version: str
    introduced_date: datetime
    status: Status
    effective_date: datetime
    end_date: datetime | None
    justification: str | None
    blacklist_reason: str | None


@dataclass(frozen=True)
class CategoryRow:
    id: int
    name: str
    description: str | None


@dataclass(frozen=True)
class ApplicationDependencyRow:
    application_id: int
    application: str
    dependency_version_id: int
    first_seen: datetime
    last_seen: datetime
    first_seen_commit: str


@dataclass(frozen=True)
class WaiverRow:
    id: int
    application_id: int
    application: str
    dependency_version_id: int
    expires: datetime
    justification: str
    approver: str


@dataclass(frozen=True)
class EventRow:
    seq: int
    at: datetime
    actor: str
    stream: str
    action: str
    subject: str
    detail: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "at": format_ts(self.at),
            "actor": self.actor,
            "stream": self.stream,
            "action": self.action,
            "subject": self.subject,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class QueryRow:
    """One dependency version with its governance context, as shown in the console."""

    dependency_id: int
    dependency_version_id: int
    ecosystem: Ecosystem
    group: str
    name: str
    version: str
    status: Status
    category: str | None
    introduced_date: datetime
    effective_date: datetime
    end_date: datetime | None
    justification: str | None
    blacklisted: bool
    vulnerability_ids: tuple
    applications: tuple

    def canonical(self) -> str:
        return f"{self.ecosystem.value}:{self.group}:{self.name}:{self.version}"

    def to_dict(self) -> dict:
        return {
            "dependency_id": self.dependency_id,
            "dependency_version_id": self.dependency_version_id,
            "coordinate": self.canonical(),
            "ecosystem": self.ecosystem.value,
            "group": self.group,
            "name": self.name,
            "version": self.version,
            "status": self.status.value,
            "category": self.category,
            "introduced_date": format_ts(self.introduced_date),
            "effective_date": format_ts(self.effective_date),
            "end_date": format_ts(self.end_date) if self.end_date else None,
            "justification": self.justification,
            "blacklisted": self.blacklisted,
            "vulnerability_ids": list(self.vulnerability_ids),
            "applications": list(self.applications),
        }


@dataclass(frozen=True)
class DrdViewEntry:
    """Per-coordinate slice of the DRD handed to the gate engine."""

    dependency_version_id: int
    status: Status
    introduced_date: datetime
    effective_date: datetime
    end_date: datetime | None
    first_seen: datetime
    blacklist_reason: str | None
    vulnerabilities: tuple  # of (advisory id, Severity)


def _opt_ts(value):
    return parse_ts(value) if value else None


class DrdStore:
    """Embedded relational store behind the governance operations."""

    def __init__(self, path: str = ":memory:"):
        self._lock = threading.RLock()
        try:
            self._conn = sqlite3.connect(path, check_same_thread=False)
            self._conn.execute("PRAGMA foreign_keys = ON")
            self._init_schema()
        except sqlite3.Error as exc:
            raise StorageFailure(f"cannot open store at {path}: {exc}") from exc

    def _init_schema(self):
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)
            row = self._conn.execute(
                "SELECT value FROM meta WHERE key = 'schema_version'"
            ).fetchone()
            if row is None:
                self._conn.execute(
                    "INSERT INTO meta (key, value) VALUES ('schema_version', ?)",
                    (str(SCHEMA_VERSION),),
                )
            elif int(row[0]) > SCHEMA_VERSION:
                raise StorageFailure(
                    f"store schema version {row[0]} is newer than supported {SCHEMA_VERSION}"
                )

    def close(self):
        with self._lock:
            self._conn.close()

    # -- event log ----------------------------------------------------------

    def _append_event(self, at, actor, stream, action, subject, detail=""):
        self._conn.execute(
            "INSERT INTO event (at, actor, stream, action, subject, detail) VALUES (?, ?, ?, ?, ?, ?)",
            (format_ts(at), actor, stream, action, subject, detail),
        )

    def append_notification(self, at, kind: str, subject: str, detail: str = ""):
        with self._lock, self._conn:
            self._append_event(at, "sync", NOTIFICATION_STREAM, kind, subject, detail)

    def append_audit(self, at, actor: str, action: str, subject: str, detail: str = ""):
        with self._lock, self._conn:
            self._append_event(at, actor, AUDIT_STREAM, action, subject, detail)

    def record_webhook_failure(self, at, url: str, error: str):
        with self._lock, self._conn:
            self._append_event(at, "webhook", WEBHOOK_STREAM, "delivery_failed", url, error)

    def events(self, since_seq: int = 0, stream: str | None = None) -> list:
        with self._lock:
            sql = "SELECT seq, at, actor, stream, action, subject, detail FROM event WHERE seq > ?"
            params = [since_seq]
            if stream is not None:
                sql += " AND stream = ?"
                params.append(stream)
            rows = self._conn.execute(sql + " ORDER BY seq", params).fetchall()
        return [
            EventRow(seq, parse_ts(at), actor, stream_, action, subject, detail)
            for seq, at, actor, stream_, action, subject, detail in rows
        ]

    def audit_events(self, action: str | None = None) -> list:
        return [
            e
            for e in self.events(stream=AUDIT_STREAM)
            if action is None or e.action == action
        ]

    # -- observation --------------------------------------------------------

    def upsert_observation(self, sbom: SbomSnapshot, now: datetime) -> list:
        """Record every coordinate of one SBOM; returns the version rows created.

        New versions enter as NotReviewed with introduced = effective = now.
        Re-observations only advance the application link's last_seen.
        """
        created = []
        with self._lock, self._conn:
            app_id = self._ensure_application(sbom.application)
            for coordinate in sorted(sbom.dependencies, key=lambda c: c.canonical()):
                group_id = self._ensure_group(coordinate.ecosystem, coordinate.group)
                dep_id = self._ensure_dependency(coordinate.ecosystem, group_id, coordinate.name)
                version_row = self._find_version(dep_id, coordinate.version)
                if version_row is None:
                    cursor = self._conn.execute(
                        "INSERT INTO dependency_version"
                        " (dependency_id, version, introduced_date, status, effective_date)"
                        " VALUES (?, ?, ?, ?, ?)",
                        (
                            dep_id,
                            coordinate.version,
                            format_ts(now),
                            Status.NOT_REVIEWED.value,
                            format_ts(now),
                        ),
                    )
                    version_id = cursor.lastrowid
                    self._append_event(
                        now, sbom.application, AUDIT_STREAM, "observed", coordinate.canonical()
                    )
                    created.append(self.get_version(version_id))
                else:
                    version_id = version_row.id
                link = self._conn.execute(
                    "SELECT first_seen FROM application_dependency"
                    " WHERE application_id = ? AND dependency_version_id = ?",
                    (app_id, version_id),
                ).fetchone()
                if link is None:
                    self._conn.execute(
                        "INSERT INTO application_dependency"
                        " (application_id, dependency_version_id, first_seen, last_seen, first_seen_commit)"
                        " VALUES (?, ?, ?, ?, ?)",
                        (app_id, version_id, format_ts(now), format_ts(now), sbom.commit),
                    )
                else:
                    self._conn.execute(
                        "UPDATE application_dependency SET last_seen = ?"
                        " WHERE application_id = ? AND dependency_version_id = ?",
                        (format_ts(now), app_id, version_id),
                    )
        return created

    def _ensure_application(self, name: str) -> int:
        row = self._conn.execute("SELECT id FROM application WHERE name = ?", (name,)).fetchone()
        if row:
            return row[0]
        return self._conn.execute("INSERT INTO application (name) VALUES (?)", (name,)).lastrowid

    def _ensure_group(self, ecosystem: Ecosystem, name: str) -> int:
        row = self._conn.execute(
            "SELECT id FROM dependency_group WHERE ecosystem = ? AND name = ?",
            (ecosystem.value, name),
        ).fetchone()
        if row:
            return row[0]
        return self._conn.execute(
            "INSERT INTO dependency_group (ecosystem, name) VALUES (?, ?)",
            (ecosystem.value, name),
        ).lastrowid

    def _ensure_dependency(self, ecosystem: Ecosystem, group_id: int, name: str) -> int:
        row = self._conn.execute(
            "SELECT id FROM dependency WHERE ecosystem = ? AND group_id = ? AND name = ?",
            (ecosystem.value, group_id, name),
        ).fetchone()
        if row:
            return row[0]
        return self._conn.execute(
            "INSERT INTO dependency (ecosystem, group_id, name) VALUES (?, ?, ?)",
            (ecosystem.value, group_id, name),
        ).lastrowid

    def _find_version(self, dependency_id: int, version: str):
        row = self._conn.execute(
            "SELECT id FROM dependency_version WHERE dependency_id = ? AND version = ?",
            (dependency_id, version),
        ).fetchone()
        return self.get_version(row[0]) if row else None

    # -- lifecycle ----------------------------------------------------------

    def get_version(self, version_id: int) -> DependencyVersionRow:
        row = self._conn.execute(
            "SELECT id, dependency_id, version, introduced_date, status, effective_date,"
            " end_date, justification, blacklist_reason"
            " FROM dependency_version WHERE id = ?",
            (version_id,),
        ).fetchone()
        if row is None:
            raise NotFound(f"dependency version {version_id} not found")
        return DependencyVersionRow(
            id=row[0],
            dependency_id=row[1],
            version=row[2],
            introduced_date=parse_ts(row[3]),
            status=Status.parse(row[4]),
            effective_date=parse_ts(row[5]),
            end_date=_opt_ts(row[6]),
            justification=row[7],
            blacklist_reason=row[8],
        )

    def set_status(
        self,
        dependency_version_id: int,
        new_status: Status,
        actor: str,
        now: datetime,
        justification: str | None = None,
        end_date: datetime | None = None,
    ) -> DependencyVersionRow:
        """Apply one vetting decision; illegal transitions never mutate."""
        with self._lock, self._conn:
            row = self.get_version(dependency_version_id)
            if new_status not in LEGAL_TRANSITIONS[row.status]:
                raise IllegalTransition(f"{row.status} -> {new_status} is not allowed")
            if new_status is Status.REJECTED and not (justification or "").strip():
                raise MissingJustification("rejection requires a justification")
            if new_status is Status.DEPRECATED:
                if end_date is None:
                    raise MissingEndDate("deprecation requires an end date")
                if end_date < now:
                    raise MissingEndDate("deprecation end date must not precede its effective date")
            keep_end = end_date if new_status is Status.DEPRECATED else None
            keep_justification = justification if justification else row.justification
            if new_status is Status.REJECTED:
                keep_justification = justification
            # Blacklist flags only attach to Rejected versions; leaving
            # Rejected clears the flag.
            keep_blacklist = row.blacklist_reason if new_status is Status.REJECTED else None
            self._conn.execute(
                "UPDATE dependency_version SET status = ?, effective_date = ?, end_date = ?,"
                " justification = ?, blacklist_reason = ? WHERE id = ?",
                (
                    new_status.value,
                    format_ts(now),
                    format_ts(keep_end) if keep_end else None,
                    keep_justification,
                    keep_blacklist,
                    dependency_version_id,
                ),
            )
            self._append_event(
                now,
                actor,
                AUDIT_STREAM,
                "status_changed",
                self.coordinate_of(dependency_version_id),
                f"{row.status} -> {new_status}",
            )
            return self.get_version(dependency_version_id)

    def set_blacklist(self, dependency_version_id: int, reason: str, actor: str, now: datetime) -> DependencyVersionRow:
        """Flag a rejected version for immediate build failure (no reprieve)."""
        with self._lock, self._conn:
            row = self.get_version(dependency_version_id)
            if row.status is not Status.REJECTED:
                raise IllegalTransition("only Rejected versions can be blacklisted")
            if not reason.strip():
                raise MissingJustification("blacklisting requires a reason")
            self._conn.execute(
                "UPDATE dependency_version SET blacklist_reason = ? WHERE id = ?",
                (reason, dependency_version_id),
            )
            self._append_event(
                now, actor, AUDIT_STREAM, "blacklisted", self.coordinate_of(dependency_version_id), reason
            )
            return self.get_version(dependency_version_id)

    def coordinate_of(self, dependency_version_id: int) -> str:
        row = self._conn.execute(
            "SELECT d.ecosystem, g.name, d.name, v.version"
            " FROM dependency_version v"
            " JOIN dependency d ON d.id = v.dependency_id"
            " JOIN dependency_group g ON g.id = d.group_id"
            " WHERE v.id = ?",
            (dependency_version_id,),
        ).fetchone()
        if row is None:
            raise NotFound(f"dependency version {dependency_version_id} not found")
        return f"{row[0]}:{row[1]}:{row[2]}:{row[3]}"

    # -- categories ---------------------------------------------------------

    def create_category(self, name: str, description: str | None = None) -> CategoryRow:
        if not name.strip():
            raise ValueError("category name must be non-empty")
        with self._lock, self._conn:
            existing = self._conn.execute(
                "SELECT id, name, description FROM category WHERE name = ?", (name,)
            ).fetchone()
            if existing:
                return CategoryRow(*existing)
            cursor = self._conn.execute(
                "INSERT INTO category (name, description) VALUES (?, ?)", (name, description)
            )
            return CategoryRow(cursor.lastrowid, name, description)

    def categories(self) -> list:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, name, description FROM category ORDER BY name"
            ).fetchall()
        return [CategoryRow(*row) for row in rows]

    def assign_category(self, dependency_id: int, category_id: int, actor: str, now: datetime) -> DependencyRow:
        with self._lock, self._conn:
            dep = self.get_dependency(dependency_id)
            category = self._conn.execute(
                "SELECT id, name FROM category WHERE id = ?", (category_id,)
            ).fetchone()
            if category is None:
                raise NotFound(f"category {category_id} not found")
            if dep.category_id == category_id:
                return dep  # idempotent no-op, no audit event
            self._conn.execute(
                "UPDATE dependency SET category_id = ? WHERE id = ?", (category_id, dependency_id)
            )
            self._append_event(
                now,
                actor,
                AUDIT_STREAM,
                "categorized",
                f"{dep.ecosystem.value}:{dep.group}:{dep.name}",
                category[1],
            )
            return self.get_dependency(dependency_id)

    def get_dependency(self, dependency_id: int) -> DependencyRow:
        row = self._conn.execute(
            "SELECT d.id, d.ecosystem, d.group_id, g.name, d.name, d.category_id, c.name,"
            " d.latest_registry_version"
            " FROM dependency d"
            " JOIN dependency_group g ON g.id = d.group_id"
            " LEFT JOIN category c ON c.id = d.category_id"
            " WHERE d.id = ?",
            (dependency_id,),
        ).fetchone()
        if row is None:
            raise NotFound(f"dependency {dependency_id} not found")
        return DependencyRow(
            id=row[0],
            ecosystem=Ecosystem.parse(row[1]),
            group_id=row[2],
            group=row[3],
            name=row[4],
            category_id=row[5],
            category=row[6],
            latest_registry_version=row[7],
        )

    def dependencies(self) -> list:
        with self._lock:
            rows = self._conn.execute("SELECT id FROM dependency ORDER BY id").fetchall()
            return [self.get_dependency(row[0]) for row in rows]

    def find_dependency(self, ecosystem: Ecosystem, group: str, name: str) -> DependencyRow | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT d.id FROM dependency d JOIN dependency_group g ON g.id = d.group_id"
                " WHERE d.ecosystem = ? AND g.name = ? AND d.name = ?",
                (ecosystem.value, group, name),
            ).fetchone()
            return self.get_dependency(row[0]) if row else None

    def versions_for(self, dependency_id: int) -> list:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id FROM dependency_version WHERE dependency_id = ? ORDER BY id",
                (dependency_id,),
            ).fetchall()
            return [self.get_version(row[0]) for row in rows]

    def set_latest_registry_version(self, dependency_id: int, version: str):
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE dependency SET latest_registry_version = ? WHERE id = ?",
                (version, dependency_id),
            )

    # -- vulnerabilities ----------------------------------------------------

    def record_vulnerability(self, advisory, now: datetime) -> str:
        """Idempotent by advisory id; returns 'created', 'updated' or 'unchanged'."""
        matches_json = json.dumps(advisory.matches_payload(), sort_keys=True)
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT source, score, summary, published, matches_json FROM vulnerability WHERE id = ?",
                (advisory.id,),
            ).fetchone()
            if row is None:
                self._conn.execute(
                    "INSERT INTO vulnerability (id, source, score, summary, published, recorded_at, matches_json)"
                    " VALUES (?, ?, ?, ?, ?, ?, ?)",
                    (
                        advisory.id,
                        advisory.source,
                        advisory.severity.score,
                        advisory.summary,
                        format_ts(advisory.published),
                        format_ts(now),
                        matches_json,
                    ),
                )
                self._append_event(now, "sync", AUDIT_STREAM, "vuln_recorded", advisory.id, "created")
                return "created"
            unchanged = (
                row[0] == advisory.source
                and float(row[1]) == advisory.severity.score
                and row[2] == advisory.summary
                and row[3] == format_ts(advisory.published)
                and row[4] == matches_json
            )
            if unchanged:
                return "unchanged"
            self._conn.execute(
                "UPDATE vulnerability SET source = ?, score = ?, summary = ?, published = ?, matches_json = ?"
                " WHERE id = ?",
                (
                    advisory.source,
                    advisory.severity.score,
                    advisory.summary,
                    format_ts(advisory.published),
                    matches_json,
                    advisory.id,
                ),
            )
            self._append_event(now, "sync", AUDIT_STREAM, "vuln_recorded", advisory.id, "updated")
            return "updated"

    def vulnerability_ids(self) -> list:
        with self._lock:
            return [r[0] for r in self._conn.execute("SELECT id FROM vulnerability ORDER BY id")]

    def get_vulnerability(self, advisory_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT id, source, score, summary, published, recorded_at, matches_json"
                " FROM vulnerability WHERE id = ?",
                (advisory_id,),
            ).fetchone()
        if row is None:
            return None
        return {
            "id": row[0],
            "source": row[1],
            "score": row[2],
            "summary": row[3],
            "published": row[4],
            "recorded_at": row[5],
            "matches": json.loads(row[6]),
        }

    def add_vulnerability_link(self, advisory_id: str, dependency_version_id: int) -> bool:
        """Link an advisory to a tracked version; returns True when newly created."""
        with self._lock, self._conn:
            existing = self._conn.execute(
                "SELECT 1 FROM vulnerability_link WHERE vulnerability_id = ? AND dependency_version_id = ?",
                (advisory_id, dependency_version_id),
            ).fetchone()
            if existing:
                return False
            self._conn.execute(
                "INSERT INTO vulnerability_link (vulnerability_id, dependency_version_id) VALUES (?, ?)",
                (advisory_id, dependency_version_id),
            )
            return True

    def links_for_version(self, dependency_version_id: int) -> list:
        with self._lock:
            rows = self._conn.execute(
                "SELECT l.vulnerability_id, v.score FROM vulnerability_link l"
                " JOIN vulnerability v ON v.id = l.vulnerability_id"
                " WHERE l.dependency_version_id = ? ORDER BY l.vulnerability_id",
                (dependency_version_id,),
            ).fetchall()
        return [(vid, Severity(score)) for vid, score in rows]

    # -- waivers ------------------------------------------------------------

    def create_waiver(
        self,
        application: str,
        dependency_version_id: int,
        expires: datetime,
        justification: str,
        approver: str,
        now: datetime,
    ) -> WaiverRow:
        if not justification.strip():
            raise MissingJustification("a waiver requires a justification")
        if expires <= now:
            raise ValueError("waiver expiry must be strictly in the future")
        with self._lock, self._conn:
            self.get_version(dependency_version_id)  # referential check
            app_id = self._ensure_application(application)
            cursor = self._conn.execute(
                "INSERT INTO waiver (application_id, dependency_version_id, expires, justification, approver)"
                " VALUES (?, ?, ?, ?, ?)",
                (app_id, dependency_version_id, format_ts(expires), justification, approver),
            )
            self._append_event(
                now,
                approver,
                AUDIT_STREAM,
                "waiver_granted",
                self.coordinate_of(dependency_version_id),
                f"{application} until {format_ts(expires)}",
            )
            return WaiverRow(
                id=cursor.lastrowid,
                application_id=app_id,
                application=application,
                dependency_version_id=dependency_version_id,
                expires=expires,
                justification=justification,
                approver=approver,
            )

    def waivers_for(self, application: str) -> list:
        with self._lock:
            rows = self._conn.execute(
                "SELECT w.id, w.application_id, a.name, w.dependency_version_id, w.expires,"
                " w.justification, w.approver"
                " FROM waiver w JOIN application a ON a.id = w.application_id"
                " WHERE a.name = ? ORDER BY w.id",
                (application,),
            ).fetchall()
        return [
            WaiverRow(r[0], r[1], r[2], r[3], parse_ts(r[4]), r[5], r[6]) for r in rows
        ]

    # -- queries ------------------------------------------------------------

    def query(
        self,
        status: Status | None = None,
        category: str | None = None,
        application: str | None = None,
        has_vulns: bool | None = None,
        limit: int | None = None,
        offset: int = 0,
    ) -> list:
        """Filterable view over dependency versions; filters compose with AND.

        Ordering is deterministic: canonical coordinate, ascending.
        """
        with self._lock:
            rows = self._conn.execute(
                "SELECT v.id, v.dependency_id, d.ecosystem, g.name, d.name, v.version, v.status,"
                " c.name, v.introduced_date, v.effective_date, v.end_date, v.justification,"
                " v.blacklist_reason"
                " FROM dependency_version v"
                " JOIN dependency d ON d.id = v.dependency_id"
                " JOIN dependency_group g ON g.id = d.group_id"
                " LEFT JOIN category c ON c.id = d.category_id",
            ).fetchall()
            results = []
            for row in rows:
                vulns = tuple(vid for vid, _ in self.links_for_version(row[0]))
                apps = tuple(
                    r[0]
                    for r in self._conn.execute(
                        "SELECT a.name FROM application_dependency ad"
                        " JOIN application a ON a.id = ad.application_id"
                        " WHERE ad.dependency_version_id = ? ORDER BY a.name",
                        (row[0],),
                    ).fetchall()
                )
                results.append(
                    QueryRow(
                        dependency_id=row[1],
                        dependency_version_id=row[0],
                        ecosystem=Ecosystem.parse(row[2]),
                        group=row[3],
                        name=row[4],
                        version=row[5],
                        status=Status.parse(row[6]),
                        category=row[7],
                        introduced_date=parse_ts(row[8]),
                        effective_date=parse_ts(row[9]),
                        end_date=_opt_ts(row[10]),
                        justification=row[11],
                        blacklisted=row[12] is not None,
                        vulnerability_ids=vulns,
                        applications=apps,
                    )
                )
        if status is not None:
            results = [r for r in results if r.status is status]
        if category is not None:
            if category == "(uncategorized)":
                results = [r for r in results if r.category is None]
            else:
                results = [r for r in results if r.category == category]
        if application is not None:
            results = [r for r in results if application in r.applications]
        if has_vulns is not None:
            results = [r for r in results if bool(r.vulnerability_ids) == has_vulns]
        results.sort(key=lambda r: r.canonical())
        if offset:
            results = results[offset:]
        if limit is not None:
            results = results[:limit]
        return results

    def get_drd_view(self, application: str, coordinates) -> dict:
        """Gate-engine view: one entry per coordinate found in the store."""
        view = {}
        with self._lock:
            for coordinate in coordinates:
                dep = self.find_dependency(coordinate.ecosystem, coordinate.group, coordinate.name)
                if dep is None:
                    continue
                version = self._find_version(dep.id, coordinate.version)
                if version is None:
                    continue
                link = self._conn.execute(
                    "SELECT ad.first_seen FROM application_dependency ad"
                    " JOIN application a ON a.id = ad.application_id"
                    " WHERE a.name = ? AND ad.dependency_version_id = ?",
                    (application, version.id),
                ).fetchone()
                first_seen = parse_ts(link[0]) if link else version.introduced_date
                view[coordinate.canonical()] = DrdViewEntry(
                    dependency_version_id=version.id,
                    status=version.status,
                    introduced_date=version.introduced_date,
                    effective_date=version.effective_date,
                    end_date=version.end_date,
                    first_seen=first_seen,
                    blacklist_reason=version.blacklist_reason,
                    vulnerabilities=tuple(self.links_for_version(version.id)),
                )
        return view

    # -- snapshots and decisions ---------------------------------------------

    def save_snapshot(self, sbom: SbomSnapshot):
        with self._lock, self._conn:
            app_id = self._ensure_application(sbom.application)
            self._conn.execute(
                "INSERT INTO sbom_snapshot (application_id, commit_id, captured_at, payload)"
                " VALUES (?, ?, ?, ?)",
                (
                    app_id,
                    sbom.commit,
                    format_ts(sbom.captured_at),
                    json.dumps(sbom.to_dict(), sort_keys=True),
                ),
            )

    def latest_snapshot(self, application: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT s.payload FROM sbom_snapshot s JOIN application a ON a.id = s.application_id"
                " WHERE a.name = ? ORDER BY s.captured_at DESC, s.id DESC LIMIT 1",
                (application,),
            ).fetchone()
        return json.loads(row[0]) if row else None

    def save_decision(self, application: str, commit: str, evaluated_at: datetime, verdict: str, payload: dict):
        with self._lock, self._conn:
            app_id = self._ensure_application(application)
            self._conn.execute(
                "INSERT INTO gate_decision (application_id, commit_id, evaluated_at, verdict, payload)"
                " VALUES (?, ?, ?, ?, ?)",
                (app_id, commit, format_ts(evaluated_at), verdict, json.dumps(payload, sort_keys=True)),
            )

    def decisions_for(self, application: str) -> list:
        with self._lock:
            rows = self._conn.execute(
                "SELECT d.payload FROM gate_decision d JOIN application a ON a.id = d.application_id"
                " WHERE a.name = ? ORDER BY d.evaluated_at, d.id",
                (application,),
            ).fetchall()
        return [json.loads(r[0]) for r in rows]

    def applications(self) -> list:
        with self._lock:
            return [r[0] for r in self._conn.execute("SELECT name FROM application ORDER BY name")]

    # -- sync lease ----------------------------------------------------------

    def acquire_sync_lease(self, token: str) -> bool:
        with self._lock, self._conn:
            held = self._conn.execute(
                "SELECT value FROM meta WHERE key = 'sync_lease'"
            ).fetchone()
            if held is not None:
                return False
            self._conn.execute(
                "INSERT INTO meta (key, value) VALUES ('sync_lease', ?)", (token,)
            )
            return True

    def release_sync_lease(self, token: str):
        with self._lock, self._conn:
            self._conn.execute(
                "DELETE FROM meta WHERE key = 'sync_lease' AND value = ?", (token,)
            )

    # -- test support ---------------------------------------------------------

    def snapshot_state(self, exclude_sync_completed_events: bool = False) -> dict:
        """Full table dump for idempotence and referential-integrity checks."""
        tables = [
            "dependency_group",
            "category",
            "dependency",
            "dependency_version",
            "application",
            "application_dependency",
            "vulnerability",
            "vulnerability_link",
            "waiver",
            "sbom_snapshot",
            "gate_decision",
        ]
        state = {}
        with self._lock:
            for table in tables:
                state[table] = self._conn.execute(
                    f"SELECT * FROM {table} ORDER BY 1, 2"
                ).fetchall()
            events = self._conn.execute("SELECT * FROM event ORDER BY seq").fetchall()
        if exclude_sync_completed_events:
            events = [e for e in events if e[4] != "sync_completed"]
        state["event"] = events
        return state

    def raw_rows(self, table: str) -> list:
        with self._lock:
            return self._conn.execute(f"SELECT * FROM {table}").fetchall()
