"""Asynchronous reference service: registry version checks and advisory feeds.

One sync run pulls every known dependency from the store, asks the registry
adapters for the latest published versions, ingests advisory feeds (a native
JSON-lines format plus a documented subset of the NVD CVE JSON), matches
advisories to tracked versions through version-range constraints, and emits
notification events for anything new. Re-running with identical inputs emits
nothing new.

Statuses are never changed here: a critical advisory against an approved
version only raises a ``status_auto_flag`` suggestion for the committee.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime

from .errors import MalformedFeed, RegistryUnavailable, SyncLeaseHeld
from .model import (
    Ecosystem,
    Severity,
    SeverityBand,
    Status,
    compare_versions,
    format_ts,
    parse_ts,
    version_key,
)
from .store import DrdStore

_COMPARATORS = ("<=", ">=", "==", "!=", "<", ">")


@dataclass(frozen=True)
class VersionConstraint:
    op: str
    version: str

    def __post_init__(self):
        if self.op not in _COMPARATORS:
            raise ValueError(f"unknown comparator: {self.op!r}")

    def holds(self, version: str) -> bool:
        order = compare_versions(version, self.version)
        if self.op == "<":
            return order < 0
        if self.op == "<=":
            return order <= 0
        if self.op == ">":
            return order > 0
        if self.op == ">=":
            return order >= 0
        if self.op == "==":
            return order == 0
        return order != 0  # !=


@dataclass(frozen=True)
class VersionRange:
    """Conjunction of comparator constraints; a contradictory range matches nothing."""

    constraints: tuple

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("a version range needs at least one constraint")

    @classmethod
    def from_payload(cls, payload) -> "VersionRange":
        return cls(tuple(VersionConstraint(c["op"], str(c["version"])) for c in payload))

    def to_payload(self) -> list:
        return [{"op": c.op, "version": c.version} for c in self.constraints]


def match_range(version: str, version_range: VersionRange) -> bool:
    """True iff every constraint holds under the shared version ordering."""
    return all(constraint.holds(version) for constraint in version_range.constraints)


@dataclass(frozen=True)
class CoordinatePattern:
    """Advisory target: a (ecosystem, group, name) triple plus affected range."""

    ecosystem: Ecosystem
    group: str
    name: str
    range: VersionRange

    def to_payload(self) -> dict:
        return {
            "ecosystem": self.ecosystem.value,
            "group": self.group,
            "name": self.name,
            "range": self.range.to_payload(),
        }


@dataclass(frozen=True)
class VulnerabilityAdvisory:
    id: str
    source: str
    severity: Severity
    summary: str
    published: datetime
    matches: tuple  # of CoordinatePattern

    def __post_init__(self):
        if not self.matches:
            raise ValueError("an advisory needs at least one match entry")

    def matches_payload(self) -> list:
        return [m.to_payload() for m in self.matches]


@dataclass(frozen=True)
class FeedDocument:
    format: str  # "native" | "nvd"
    raw: bytes
    name: str = "<feed>"


@dataclass(frozen=True)
class UnmatchedAdvisory:
    id: str
    product_key: str
    reason: str


@dataclass
class IngestResult:
    advisories: list = field(default_factory=list)
    unmatched: list = field(default_factory=list)
    malformed: list = field(default_factory=list)  # (position, message)


def load_alias_map(payload: dict) -> dict:
    """AliasMap: external "vendor:product" keys to coordinate patterns."""
    aliases = {}
    for key, target in payload.items():
        aliases[key] = (
            Ecosystem.parse(target["ecosystem"]),
            target["group"],
            target["name"],
        )
    return aliases


# ---------------------------------------------------------------------------
# Feed parsing
# ---------------------------------------------------------------------------

def _native_advisory(record: dict) -> VulnerabilityAdvisory:
    matches = []
    for match in record["matches"]:
        matches.append(
            CoordinatePattern(
                ecosystem=Ecosystem.parse(match["ecosystem"]),
                group=match["group"],
                name=match["name"],
                range=VersionRange.from_payload(match["range"]),
            )
        )
    return VulnerabilityAdvisory(
        id=record["id"],
        source="native_feed",
        severity=Severity(float(record["severity"])),
        summary=record.get("summary", ""),
        published=parse_ts(record["published"]),
        matches=tuple(matches),
    )


def _ingest_native(raw: bytes) -> IngestResult:
    result = IngestResult()
    text = raw.decode("utf-8", errors="replace")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            result.advisories.append(_native_advisory(record))
        except (ValueError, KeyError, TypeError) as exc:
            result.malformed.append((lineno, f"{exc}"))
    return result


def _cpe_product_key(criteria: str) -> tuple:
    # cpe:2.3:part:vendor:product:version:... -- we need vendor, product and
    # the explicit version component (if pinned).
    parts = criteria.split(":")
    if len(parts) < 6 or parts[0] != "cpe":
        raise ValueError(f"unsupported CPE criteria: {criteria!r}")
    vendor, product, version = parts[3], parts[4], parts[5]
    return f"{vendor}:{product}", version


def _cpe_range(entry: dict, explicit_version: str):
    constraints = []
    if explicit_version not in ("*", "-", ""):
        constraints.append(VersionConstraint("==", explicit_version))
    if "versionStartIncluding" in entry:
        constraints.append(VersionConstraint(">=", str(entry["versionStartIncluding"])))
    if "versionStartExcluding" in entry:
        constraints.append(VersionConstraint(">", str(entry["versionStartExcluding"])))
    if "versionEndIncluding" in entry:
        constraints.append(VersionConstraint("<=", str(entry["versionEndIncluding"])))
    if "versionEndExcluding" in entry:
        constraints.append(VersionConstraint("<", str(entry["versionEndExcluding"])))
    if not constraints:
        # No version information: the advisory applies to every version.
        constraints.append(VersionConstraint(">=", "0"))
    return VersionRange(tuple(constraints))


def _iter_cpe_matches(cve: dict):
    configurations = cve.get("configurations", [])
    if isinstance(configurations, dict):  # legacy feed shape
        configurations = [configurations]
    for configuration in configurations:
        for node in configuration.get("nodes", []):
            for entry in node.get("cpeMatch", []):
                if entry.get("vulnerable", True):
                    yield entry


def _ingest_nvd(raw: bytes, aliases: dict) -> IngestResult:
    result = IngestResult()
    try:
        document = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedFeed(f"invalid NVD JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedFeed("NVD document must be a JSON object")
    for position, item in enumerate(document.get("vulnerabilities", []), start=1):
        try:
            cve = item["cve"]
            advisory_id = cve["id"]
            metrics = cve.get("metrics", {}).get("cvssMetricV31", [])
            score = float(metrics[0]["cvssData"]["baseScore"]) if metrics else 0.0
            published = parse_ts(cve.get("published", "1970-01-01T00:00:00Z"))
            summary = ""
            for description in cve.get("descriptions", []):
                if description.get("lang") == "en":
                    summary = description.get("value", "")
                    break
            matches = []
            misses = []
            for entry in _iter_cpe_matches(cve):
                product_key, explicit_version = _cpe_product_key(entry["criteria"])
                target = aliases.get(product_key)
                if target is None:
                    misses.append(product_key)
                    continue
                ecosystem, group, name = target
                matches.append(
                    CoordinatePattern(ecosystem, group, name, _cpe_range(entry, explicit_version))
                )
            if matches:
                result.advisories.append(
                    VulnerabilityAdvisory(
                        id=advisory_id,
                        source="nvd",
                        severity=Severity(score),
                        summary=summary,
                        published=published,
                        matches=tuple(matches),
                    )
                )
            else:
                reason = "no alias mapping" if misses else "no vulnerable CPE entries"
                result.unmatched.append(
                    UnmatchedAdvisory(advisory_id, ",".join(sorted(set(misses))), reason)
                )
        except (KeyError, TypeError, ValueError) as exc:
            result.malformed.append((position, f"{exc}"))
    return result


def ingest_feed(doc: FeedDocument, aliases: dict | None = None) -> IngestResult:
    """Parse one feed document into advisories plus unmatched/malformed records.

    Nothing is silently dropped: every record lands in exactly one of the
    three result buckets.
    """
    if doc.format == "native":
        return _ingest_native(doc.raw)
    if doc.format == "nvd":
        return _ingest_nvd(doc.raw, aliases or {})
    raise MalformedFeed(f"unknown feed format: {doc.format!r}")


# ---------------------------------------------------------------------------
# Registry adapters
# ---------------------------------------------------------------------------

class FixtureRegistryAdapter:
    """Directory-backed registry: one ``ecosystem_group_name.json`` per dependency."""

    ecosystems = None  # serves every ecosystem

    def __init__(self, directory):
        from pathlib import Path

        self.directory = Path(directory)

    def list_versions(self, ecosystem: Ecosystem, group: str, name: str) -> list:
        path = self.directory / f"{ecosystem.value}_{group}_{name}.json"
        if not path.exists():
            raise RegistryUnavailable(f"no fixture registry entry at {path.name}")
        try:
            payload = json.loads(path.read_text("utf-8"))
            versions = payload["versions"]
        except (ValueError, KeyError) as exc:
            raise RegistryUnavailable(f"broken fixture {path.name}: {exc}") from exc
        if not versions:
            raise RegistryUnavailable(f"fixture {path.name} lists no versions")
        unique = sorted(set(str(v) for v in versions), key=version_key)
        return unique


class MavenCentralAdapter:
    """Live adapter for the Maven Central metadata XML endpoint."""

    ecosystems = frozenset({Ecosystem.MAVEN})

    def __init__(self, base_url="https://repo1.maven.org/maven2", timeout=10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def list_versions(self, ecosystem: Ecosystem, group: str, name: str) -> list:
        import xml.etree.ElementTree as ET

        import requests

        url = f"{self.base_url}/{group.replace('.', '/')}/{name}/maven-metadata.xml"
        try:
            response = requests.get(url, timeout=self.timeout)
            response.raise_for_status()
            root = ET.fromstring(response.content)
        except Exception as exc:
            raise RegistryUnavailable(f"maven metadata fetch failed for {group}:{name}: {exc}") from exc
        versions = sorted(
            {el.text.strip() for el in root.iter("version") if el.text},
            key=version_key,
        )
        if not versions:
            raise RegistryUnavailable(f"maven metadata lists no versions for {group}:{name}")
        return versions


class NpmRegistryAdapter:
    """Live adapter for the npm registry version listing."""

    ecosystems = frozenset({Ecosystem.NPM})

    def __init__(self, base_url="https://registry.npmjs.org", timeout=10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def list_versions(self, ecosystem: Ecosystem, group: str, name: str) -> list:
        import requests

        try:
            response = requests.get(f"{self.base_url}/{name}", timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
        except Exception as exc:
            raise RegistryUnavailable(f"npm registry fetch failed for {name}: {exc}") from exc
        versions = sorted(payload.get("versions", {}).keys(), key=version_key)
        if not versions:
            raise RegistryUnavailable(f"npm registry lists no versions for {name}")
        return versions


def _adapter_for(registries, ecosystem: Ecosystem):
    for adapter in registries:
        served = getattr(adapter, "ecosystems", None)
        if served is None or ecosystem in served:
            return adapter
    return None


def find_latest_versions(dependencies, registries):
    """Newest published version per dependency under the shared ordering.

    Returns (latest_by_dependency_id, errors); a dependency whose adapter
    fails is reported, never guessed.
    """
    latest = {}
    errors = {}
    for dep in dependencies:
        adapter = _adapter_for(registries, dep.ecosystem)
        if adapter is None:
            errors[dep.id] = f"no registry adapter for ecosystem {dep.ecosystem.value}"
            continue
        try:
            versions = adapter.list_versions(dep.ecosystem, dep.group, dep.name)
            if not versions:
                raise RegistryUnavailable(f"registry listed no versions for {dep.group}:{dep.name}")
        except RegistryUnavailable as exc:
            errors[dep.id] = str(exc)
            continue
        latest[dep.id] = max(versions, key=version_key)
    return latest, errors


# ---------------------------------------------------------------------------
# Sync run
# ---------------------------------------------------------------------------

@dataclass
class SyncReport:
    started_at: str
    versions_checked: int = 0
    advisories_ingested: int = 0
    new_vulns_linked: int = 0
    events_emitted: int = 0
    unmatched_advisories: list = field(default_factory=list)
    registry_errors: list = field(default_factory=list)
    feed_errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "started_at": self.started_at,
            "versions_checked": self.versions_checked,
            "advisories_ingested": self.advisories_ingested,
            "new_vulns_linked": self.new_vulns_linked,
            "events_emitted": self.events_emitted,
            "unmatched_advisories": self.unmatched_advisories,
            "registry_errors": self.registry_errors,
            "feed_errors": self.feed_errors,
        }


def _notify(store, now, kind, subject, detail, report):
    store.append_notification(now, kind, subject, detail)
    report.events_emitted += 1


def run_sync(store: DrdStore, registries, feeds, aliases, now: datetime) -> SyncReport:
    """One full refresh pass over the reference database.

    Holds the store's exclusive sync lease for the duration; a concurrent
    run is refused. Idempotent: a second run with identical inputs changes
    nothing but the closing audit entry.
    """
    token = uuid.uuid4().hex
    if not store.acquire_sync_lease(token):
        raise SyncLeaseHeld("another sync run holds the lease")
    report = SyncReport(started_at=format_ts(now))
    try:
        dependencies = store.dependencies()

        # Step 1: registry versions.
        latest, errors = find_latest_versions(dependencies, registries)
        for dep in dependencies:
            if dep.id in errors:
                report.registry_errors.append(
                    {"coordinate": f"{dep.ecosystem.value}:{dep.group}:{dep.name}", "error": errors[dep.id]}
                )
                continue
            report.versions_checked += 1
            newest = latest[dep.id]
            stored = store.versions_for(dep.id)
            highest_stored = max((v.version for v in stored), key=version_key, default=None)
            previously_recorded = dep.latest_registry_version
            is_news = (
                highest_stored is not None
                and compare_versions(newest, highest_stored) > 0
                and (
                    previously_recorded is None
                    or compare_versions(newest, previously_recorded) > 0
                )
            )
            if is_news:
                _notify(
                    store,
                    now,
                    "new_version_available",
                    f"{dep.ecosystem.value}:{dep.group}:{dep.name}:{newest}",
                    f"latest registry version {newest} exceeds tracked {highest_stored}",
                    report,
                )
            if previously_recorded != newest:
                store.set_latest_registry_version(dep.id, newest)

        # Step 2: advisory feeds.
        for doc in feeds:
            try:
                ingested = ingest_feed(doc, aliases)
            except MalformedFeed as exc:
                report.feed_errors.append({"feed": doc.name, "error": str(exc)})
                continue
            for position, message in ingested.malformed:
                report.feed_errors.append(
                    {"feed": doc.name, "record": position, "error": message}
                )
            for unmatched in ingested.unmatched:
                report.unmatched_advisories.append(
                    {"id": unmatched.id, "product": unmatched.product_key, "reason": unmatched.reason}
                )
            for advisory in ingested.advisories:
                report.advisories_ingested += 1
                store.record_vulnerability(advisory, now)
                for pattern in advisory.matches:
                    dep = store.find_dependency(pattern.ecosystem, pattern.group, pattern.name)
                    if dep is None:
                        continue
                    for version_row in store.versions_for(dep.id):
                        if not match_range(version_row.version, pattern.range):
                            continue
                        if store.add_vulnerability_link(advisory.id, version_row.id):
                            report.new_vulns_linked += 1
                            coordinate = f"{dep.ecosystem.value}:{dep.group}:{dep.name}:{version_row.version}"
                            _notify(
                                store,
                                now,
                                "new_vulnerability",
                                coordinate,
                                f"{advisory.id} (score {advisory.severity.score}) affects {version_row.version}",
                                report,
                            )
                            if (
                                advisory.severity.band is SeverityBand.CRITICAL
                                and version_row.status is Status.APPROVED
                            ):
                                _notify(
                                    store,
                                    now,
                                    "status_auto_flag",
                                    coordinate,
                                    f"critical advisory {advisory.id} on an approved version;"
                                    " committee review suggested",
                                    report,
                                )

        store.append_audit(
            now,
            "sync",
            "sync_completed",
            "sync",
            json.dumps(
                {
                    "versions_checked": report.versions_checked,
                    "advisories_ingested": report.advisories_ingested,
                    "new_vulns_linked": report.new_vulns_linked,
                    "events_emitted": report.events_emitted,
                },
                sort_keys=True,
            ),
        )
    finally:
        store.release_sync_lease(token)
    return report


def load_feed_documents(directory) -> list:
    """Read a feeds directory: ``*.jsonl`` native documents, ``*.json`` NVD."""
    from pathlib import Path

    docs = []
    for path in sorted(Path(directory).iterdir()):
        if path.suffix == ".jsonl":
            docs.append(FeedDocument(format="native", raw=path.read_bytes(), name=path.name))
        elif path.suffix == ".json":
            docs.append(FeedDocument(format="nvd", raw=path.read_bytes(), name=path.name))
    return docs
