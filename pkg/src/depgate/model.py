"""Core domain types shared by every other module.

Coordinates identify one direct dependency occurrence as
``ecosystem:group:name:version``. Statuses follow the vetting lifecycle
(NotReviewed is "under evaluation", Approved is allowed, Rejected is
disallowed, Deprecated is being phased out). Version ordering, severity
bands and the Pass/Warn/Fail verdict lattice live here too.

All types are immutable values; they are safe to share between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from functools import total_ordering


class Ecosystem(Enum):
    MAVEN = "maven"
    NPM = "npm"
    PYPI = "pypi"
    NUGET = "nuget"
    INTERNAL = "internal"

    @classmethod
    def parse(cls, text: str) -> "Ecosystem":
        """Strict lookup: unknown ecosystem strings are rejected, never coerced."""
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown ecosystem: {text!r}")

    def __str__(self) -> str:
        return self.value


#: Group used for ecosystems that have no group concept (npm, pypi).
DEFAULT_GROUP = "(default)"

#: Ecosystems whose coordinates must carry the default group.
GROUPLESS_ECOSYSTEMS = frozenset({Ecosystem.NPM, Ecosystem.PYPI})


class Status(Enum):
    NOT_REVIEWED = "NotReviewed"
    APPROVED = "Approved"
    DEPRECATED = "Deprecated"
    REJECTED = "Rejected"

    @classmethod
    def parse(cls, text: str) -> "Status":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown status: {text!r}")

    @property
    def gate_rank(self) -> int:
        """Severity order used by gate monotonicity: Approved < NotReviewed < Deprecated < Rejected."""
        return _STATUS_RANK[self]

    def __str__(self) -> str:
        return self.value


_STATUS_RANK = {
    Status.APPROVED: 0,
    Status.NOT_REVIEWED: 1,
    Status.DEPRECATED: 2,
    Status.REJECTED: 3,
}


class Verdict(Enum):
    PASS = "pass"
    WARN = "warn"
    FAIL = "fail"

    @classmethod
    def parse(cls, text: str) -> "Verdict":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown verdict: {text!r}")

    @property
    def rank(self) -> int:
        return _VERDICT_RANK[self]

    def __str__(self) -> str:
        return self.value


_VERDICT_RANK = {Verdict.PASS: 0, Verdict.WARN: 1, Verdict.FAIL: 2}


def worst_verdict(verdicts) -> Verdict:
    """Maximum over the Pass < Warn < Fail lattice; Pass for an empty input."""
    worst = Verdict.PASS
    for v in verdicts:
        if v.rank > worst.rank:
            worst = v
    return worst


class SeverityBand(Enum):
    NONE = "none"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"

    @classmethod
    def parse(cls, text: str) -> "SeverityBand":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown severity band: {text!r}")

    @property
    def rank(self) -> int:
        return _BAND_RANK[self]

    def __str__(self) -> str:
        return self.value


_BAND_RANK = {
    SeverityBand.NONE: 0,
    SeverityBand.LOW: 1,
    SeverityBand.MEDIUM: 2,
    SeverityBand.HIGH: 3,
    SeverityBand.CRITICAL: 4,
}


@dataclass(frozen=True)
class Severity:
    """CVSS base score 0.0-10.0, banded by the v3 cutoffs."""

    score: float

    def __post_init__(self):
        rounded = round(float(self.score), 1)
        if not 0.0 <= rounded <= 10.0:
            raise ValueError(f"CVSS score out of range: {self.score!r}")
        object.__setattr__(self, "score", rounded)

    @property
    def band(self) -> SeverityBand:
        if self.score == 0.0:
            return SeverityBand.NONE
        if self.score < 4.0:
            return SeverityBand.LOW
        if self.score < 7.0:
            return SeverityBand.MEDIUM
        if self.score < 9.0:
            return SeverityBand.HIGH
        return SeverityBand.CRITICAL


# ---------------------------------------------------------------------------
# Version ordering
# ---------------------------------------------------------------------------

#: Trailing tokens that mark a prerelease: they sort *below* the unqualified
#: version with the same numeric base. Any other trailing token stays in the
#: base and sorts above numerically-equal bases.
PRERELEASE_QUALIFIERS = frozenset({"snapshot", "alpha", "beta", "rc", "m", "pre"})

_SEPARATORS = re.compile(r"[._-]")
_RUNS = re.compile(r"\d+|\D+")


@total_ordering
@dataclass(frozen=True)
class NormalizedVersion:
    """Comparable form of a version string.

    Normalization: split on '.', '-', '_' and at digit/non-digit boundaries;
    numeric runs compare numerically, other runs compare case-insensitively
    and sort above numbers; missing trailing segments pad as zero. A trailing
    prerelease qualifier (optionally numbered, e.g. "rc1") is carried
    separately and sorts below the bare base.
    """

    segments: tuple
    qualifier: tuple | None  # (token, number) or None

    @classmethod
    def parse(cls, text: str) -> "NormalizedVersion":
        segments = []
        for part in _SEPARATORS.split(text.strip().lower()):
            for run in _RUNS.findall(part):
                segments.append(int(run) if run.isdigit() else run)
        qualifier = None
        if segments and isinstance(segments[-1], str) and segments[-1] in PRERELEASE_QUALIFIERS:
            qualifier = (segments[-1], 0)
            segments = segments[:-1]
        elif (
            len(segments) >= 2
            and isinstance(segments[-1], int)
            and isinstance(segments[-2], str)
            and segments[-2] in PRERELEASE_QUALIFIERS
        ):
            qualifier = (segments[-2], segments[-1])
            segments = segments[:-2]
        return cls(tuple(segments), qualifier)

    def sort_key(self):
        # Trailing zero segments are trimmed so "1.0" == "1.0.0"; strings sort
        # above integers via the type rank in the encoded pairs.
        base = list(self.segments)
        while base and base[-1] == 0:
            base.pop()
        encoded = tuple(
            (0, seg, "") if isinstance(seg, int) else (1, 0, seg) for seg in base
        )
        qualifier = (1, "", 0) if self.qualifier is None else (0,) + self.qualifier
        return (encoded, qualifier)

    def __eq__(self, other):
        if not isinstance(other, NormalizedVersion):
            return NotImplemented
        return self.sort_key() == other.sort_key()

    def __lt__(self, other):
        if not isinstance(other, NormalizedVersion):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __hash__(self):
        return hash(self.sort_key())


def compare_versions(a: str, b: str) -> int:
    """Total order over version strings: -1 (less), 0 (equal), 1 (greater).

    Every string normalizes; garbage compares lexically under the same scheme.
    """
    ka = NormalizedVersion.parse(a).sort_key()
    kb = NormalizedVersion.parse(b).sort_key()
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


def version_key(text: str):
    """Sort key for ordering plain version strings."""
    return NormalizedVersion.parse(text).sort_key()


# ---------------------------------------------------------------------------
# Coordinates
# ---------------------------------------------------------------------------

_WHITESPACE = re.compile(r"\s")


@dataclass(frozen=True)
class Coordinate:
    """One direct dependency occurrence: ecosystem, group, name, version.

    ``scope`` is recorded but never part of the identity. ``spec`` keeps the
    verbatim range declaration when the manifest pinned a range rather than a
    version (``version`` then holds the range's floor). ``packaging`` keeps a
    Maven type token; ``flags`` carry parser warnings such as
    ``unresolved_property``.
    """

    ecosystem: Ecosystem
    group: str
    name: str
    version: str
    scope: str | None = None
    spec: str | None = None
    packaging: str | None = None
    flags: tuple = ()

    def __post_init__(self):
        for label, value in (("group", self.group), ("name", self.name), ("version", self.version)):
            if not value:
                raise ValueError(f"coordinate {label} must be non-empty")
            if _WHITESPACE.search(value):
                raise ValueError(f"coordinate {label} contains whitespace: {value!r}")
        # ':' is the canonical-form separator; group and name must not carry it
        # or round-tripping the canonical string would be lossy.
        if ":" in self.group or ":" in self.name:
            raise ValueError("coordinate group/name must not contain ':'")
        if self.ecosystem in GROUPLESS_ECOSYSTEMS and self.group != DEFAULT_GROUP:
            raise ValueError(
                f"{self.ecosystem} coordinates use the literal group {DEFAULT_GROUP!r}"
            )

    def canonical(self) -> str:
        return f"{self.ecosystem.value}:{self.group}:{self.name}:{self.version}"

    @classmethod
    def parse(cls, text: str) -> "Coordinate":
        parts = text.split(":", 3)
        if len(parts) != 4:
            raise ValueError(f"not a canonical coordinate: {text!r}")
        ecosystem, group, name, version = parts
        return cls(Ecosystem.parse(ecosystem), group, name, version)


def canonical_coordinate(coordinate: Coordinate) -> str:
    return coordinate.canonical()


# ---------------------------------------------------------------------------
# Timestamps
# ---------------------------------------------------------------------------


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def parse_ts(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive inputs are taken as UTC."""
    cleaned = text.strip()
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1] + "+00:00"
    parsed = datetime.fromisoformat(cleaned)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_ts(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def days(count: float) -> timedelta:
    return timedelta(days=count)
