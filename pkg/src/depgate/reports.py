"""Read-only aggregation over the reference database.

Per-category library redundancy, per-library vulnerability/version
summaries, ecosystem-wide statistics, and the duplication report the
governance committee uses to shrink same-purpose library sets. Every
operation is a deterministic recount of store rows; repeated calls yield
identical serialized output.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

from .errors import UnknownCategory
from .model import parse_ts, version_key
from .store import DrdStore

UNCATEGORIZED = "(uncategorized)"


@dataclass(frozen=True)
class CategoryBreakdownRow:
    category: str
    distinct_libraries: int

    def to_dict(self) -> dict:
        return {"category": self.category, "distinct_libraries": self.distinct_libraries}


@dataclass(frozen=True)
class LibraryVulnSummaryRow:
    library: str
    group: str
    vuln_count: int
    version_count: int

    def to_dict(self) -> dict:
        return {
            "library": self.library,
            "group": self.group,
            "vuln_count": self.vuln_count,
            "version_count": self.version_count,
        }


@dataclass(frozen=True)
class EcosystemStats:
    repositories_total: int
    repositories_by_ecosystem: dict
    distinct_library_versions: int
    total_open_vulnerabilities: int
    new_vulns_per_day: float

    def to_dict(self) -> dict:
        return {
            "repositories_total": self.repositories_total,
            "repositories_by_ecosystem": dict(sorted(self.repositories_by_ecosystem.items())),
            "distinct_library_versions": self.distinct_library_versions,
            "total_open_vulnerabilities": self.total_open_vulnerabilities,
            "new_vulns_per_day": self.new_vulns_per_day,
        }


def _dependency_index(store: DrdStore) -> dict:
    """dependency_id -> (row, version rows) for every dependency with >= 1 version."""
    index = {}
    for dep in store.dependencies():
        versions = store.versions_for(dep.id)
        if versions:
            index[dep.id] = (dep, versions)
    return index


def category_breakdown(store: DrdStore) -> list:
    """Distinct observed libraries per category, largest first.

    Libraries without a category land in "(uncategorized)" so nothing
    observed is invisible to governance.
    """
    counts = {}
    for dep, _versions in _dependency_index(store).values():
        category = dep.category or UNCATEGORIZED
        counts[category] = counts.get(category, 0) + 1
    rows = [CategoryBreakdownRow(name, count) for name, count in counts.items()]
    rows.sort(key=lambda r: (-r.distinct_libraries, r.category))
    return rows


def vuln_summary(store: DrdStore, category: str) -> list:
    """Per-library advisory and version counts for one category.

    An advisory counts once per library even when it hits several of its
    versions; libraries with no advisories are listed with a zero count.
    Sorted by vulnerability count descending, then library name.
    """
    known = {c.name for c in store.categories()}
    if category != UNCATEGORIZED and category not in known:
        raise UnknownCategory(f"category {category!r} does not exist")
    rows = []
    for dep, versions in _dependency_index(store).values():
        dep_category = dep.category or UNCATEGORIZED
        if dep_category != category:
            continue
        advisories = set()
        for version in versions:
            advisories.update(vid for vid, _severity in store.links_for_version(version.id))
        rows.append(
            LibraryVulnSummaryRow(
                library=dep.name,
                group=dep.group,
                vuln_count=len(advisories),
                version_count=len(versions),
            )
        )
    rows.sort(key=lambda r: (-r.vuln_count, r.library, r.group))
    return rows


def _classify_application(ecosystem_counts: dict) -> str:
    """Bucket one repository by the dominant ecosystem of its dependencies.

    Internal libraries exist in every stack, so they only decide the bucket
    when a repository holds nothing else. Ties break alphabetically.
    """
    external = {k: v for k, v in ecosystem_counts.items() if k != "internal"}
    pool = external or ecosystem_counts
    if not pool:
        return "(none)"
    return min(pool, key=lambda k: (-pool[k], k))


def ecosystem_stats(store: DrdStore, window_days: int, now: datetime | None = None) -> EcosystemStats:
    """Corpus-wide totals plus the advisory arrival rate over a trailing window.

    The window anchors at ``now`` when given, otherwise at the newest
    recorded advisory so replayed fixtures stay deterministic.
    """
    if window_days < 1:
        raise ValueError("window_days must be >= 1")
    index = _dependency_index(store)

    app_names = {}
    for app_id, name in store.raw_rows("application"):
        app_names[app_id] = name
    version_to_eco = {}
    for dep, versions in index.values():
        for version in versions:
            version_to_eco[version.id] = dep.ecosystem.value
    usage_counts = {}
    for app_id, version_id, _first, _last, _commit in store.raw_rows("application_dependency"):
        eco = version_to_eco.get(version_id)
        if eco is None:
            continue
        usage_counts.setdefault(app_id, {})
        usage_counts[app_id][eco] = usage_counts[app_id].get(eco, 0) + 1

    by_ecosystem = {}
    for app_id in app_names:
        bucket = _classify_application(usage_counts.get(app_id, {}))
        by_ecosystem[bucket] = by_ecosystem.get(bucket, 0) + 1

    distinct_versions = sum(len(versions) for _dep, versions in index.values())
    linked = {row[0] for row in store.raw_rows("vulnerability_link")}

    recorded = [parse_ts(row[5]) for row in store.raw_rows("vulnerability")]
    anchor = now if now is not None else (max(recorded) if recorded else None)
    if anchor is None:
        rate = 0.0
    else:
        cutoff = anchor - timedelta(days=window_days)
        in_window = [ts for ts in recorded if cutoff < ts <= anchor]
        rate = len(in_window) / window_days

    return EcosystemStats(
        repositories_total=len(app_names),
        repositories_by_ecosystem=by_ecosystem,
        distinct_library_versions=distinct_versions,
        total_open_vulnerabilities=len(linked),
        new_vulns_per_day=rate,
    )


@dataclass(frozen=True)
class DuplicationMember:
    library: str
    group: str
    statuses: tuple
    vuln_count: int
    latest_version: str

    def to_dict(self) -> dict:
        return {
            "library": self.library,
            "group": self.group,
            "statuses": list(self.statuses),
            "vuln_count": self.vuln_count,
            "latest_version": self.latest_version,
        }


@dataclass(frozen=True)
class DuplicationCategory:
    category: str
    distinct_libraries: int
    members: tuple

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "distinct_libraries": self.distinct_libraries,
            "members": [m.to_dict() for m in self.members],
        }


def duplication_report(store: DrdStore, threshold: int) -> list:
    """Categories carrying more than ``threshold`` libraries, consolidation-first.

    Members sort least-vulnerable first (then freshest latest version), so the
    best candidates to standardize on surface at the top.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    by_category = {}
    for dep, versions in _dependency_index(store).values():
        by_category.setdefault(dep.category or UNCATEGORIZED, []).append((dep, versions))
    flagged = []
    for category, members in sorted(by_category.items()):
        if len(members) <= threshold:
            continue
        rendered = []
        for dep, versions in members:
            advisories = set()
            statuses = set()
            for version in versions:
                statuses.add(version.status.value)
                advisories.update(vid for vid, _sev in store.links_for_version(version.id))
            latest = max((v.version for v in versions), key=version_key)
            rendered.append(
                DuplicationMember(
                    library=dep.name,
                    group=dep.group,
                    statuses=tuple(sorted(statuses)),
                    vuln_count=len(advisories),
                    latest_version=latest,
                )
            )
        rendered.sort(key=lambda m: (m.vuln_count, _descending_version(m.latest_version), m.library))
        flagged.append(
            DuplicationCategory(
                category=category,
                distinct_libraries=len(members),
                members=tuple(rendered),
            )
        )
    flagged.sort(key=lambda c: (-c.distinct_libraries, c.category))
    return flagged


class _descending_version:
    """Inverts the version order inside a mixed ascending sort key."""

    def __init__(self, version: str):
        self.key = version_key(version)

    def __lt__(self, other):
        return self.key > other.key

    def __eq__(self, other):
        return self.key == other.key

def render_table(headers, rows) -> str:
    """Aligned plain-text table used by the CLI and API report surfaces."""
    widths = [len(h) for h in headers]
    rendered = [[str(cell) for cell in row] for row in rows]
    for row in rendered:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))).rstrip(),
    ]
    for row in rendered:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"
