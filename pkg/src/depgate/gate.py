"""Build-gate policy engine.

Pure, deterministic evaluation: an SBOM, the matching reference-database
view, the application's waivers, a policy configuration and an injected
"now" go in; a Pass/Warn/Fail decision with one finding per dependency
comes out. No clock reads, no store access.

Policy shape per status (defaults in parentheses):
  * Approved passes; open vulnerabilities at or above the warn threshold
    (high) downgrade to Warn without failing the pipeline.
  * NotReviewed warns with a migration deadline and fails once the reprieve
    (30 days from introduction) expires; "notify" warns forever, "fail"
    fails immediately.
  * Rejected gets a reprieve (14 days) anchored at the later of the
    rejection and the application's first sighting, so a newly adopting
    application still gets its migration window; blacklisted versions fail
    immediately.
  * Deprecated warns until its end date, then fails.
  * An unexpired waiver for (application, version) softens any Fail to Warn.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from .errors import ConfigError, MissingDrdEntry
from .manifests import SbomSnapshot
from .model import (
    Coordinate,
    SeverityBand,
    Status,
    Verdict,
    days,
    format_ts,
    worst_verdict,
)


class Mode(Enum):
    NOTIFY = "notify"
    REPRIEVE = "reprieve"
    FAIL = "fail"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        for member in cls:
            if member.value == text:
                return member
        raise ConfigError(f"unknown policy mode: {text!r}")


class Rule(Enum):
    APPROVED_OK = "approved_ok"
    NOT_REVIEWED_NEW = "not_reviewed_new"
    NOT_REVIEWED_PENDING = "not_reviewed_pending"
    NOT_REVIEWED_EXPIRED = "not_reviewed_expired"
    REJECTED_IN_REPRIEVE = "rejected_in_reprieve"
    REJECTED_EXPIRED = "rejected_expired"
    REJECTED_BLACKLISTED = "rejected_blacklisted"
    DEPRECATED_ACTIVE = "deprecated_active"
    DEPRECATED_EXPIRED = "deprecated_expired"
    WAIVED = "waived"
    VULNERABLE_APPROVED = "vulnerable_approved"


#: Rules that may carry a deadline. Expired and immediate-fail rules never do.
DEADLINE_RULES = frozenset(
    {Rule.NOT_REVIEWED_NEW, Rule.NOT_REVIEWED_PENDING, Rule.REJECTED_IN_REPRIEVE, Rule.DEPRECATED_ACTIVE}
)


@dataclass(frozen=True)
class PolicyConfig:
    not_reviewed_mode: Mode = Mode.REPRIEVE
    not_reviewed_reprieve_days: int = 30
    rejected_mode: Mode = Mode.REPRIEVE
    rejected_reprieve_days: int = 14
    blacklist_fails_immediately: bool = True
    deprecated_warn_before_end_date: bool = True
    vuln_warn_threshold: SeverityBand = SeverityBand.HIGH

    def __post_init__(self):
        if self.not_reviewed_reprieve_days < 1 or self.rejected_reprieve_days < 1:
            raise ConfigError("reprieve day counts must be >= 1")

    @classmethod
    def from_dict(cls, payload: dict) -> "PolicyConfig":
        known = {
            "not_reviewed_mode",
            "not_reviewed_reprieve_days",
            "rejected_mode",
            "rejected_reprieve_days",
            "blacklist_fails_immediately",
            "deprecated_warn_before_end_date",
            "vuln_warn_threshold",
        }
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown policy keys: {sorted(unknown)}")
        kwargs = dict(payload)
        if "not_reviewed_mode" in kwargs:
            kwargs["not_reviewed_mode"] = Mode.parse(kwargs["not_reviewed_mode"])
        if "rejected_mode" in kwargs:
            kwargs["rejected_mode"] = Mode.parse(kwargs["rejected_mode"])
        if "vuln_warn_threshold" in kwargs:
            kwargs["vuln_warn_threshold"] = SeverityBand.parse(kwargs["vuln_warn_threshold"])
        for key in ("not_reviewed_reprieve_days", "rejected_reprieve_days"):
            if key in kwargs and not isinstance(kwargs[key], int):
                raise ConfigError(f"{key} must be an integer")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "not_reviewed_mode": self.not_reviewed_mode.value,
            "not_reviewed_reprieve_days": self.not_reviewed_reprieve_days,
            "rejected_mode": self.rejected_mode.value,
            "rejected_reprieve_days": self.rejected_reprieve_days,
            "blacklist_fails_immediately": self.blacklist_fails_immediately,
            "deprecated_warn_before_end_date": self.deprecated_warn_before_end_date,
            "vuln_warn_threshold": self.vuln_warn_threshold.value,
        }


@dataclass(frozen=True)
class Finding:
    coordinate: Coordinate
    status: Status
    rule: Rule
    verdict_contribution: Verdict
    deadline: datetime | None
    vulnerabilities: tuple
    message: str

    def __post_init__(self):
        if self.deadline is not None and self.rule not in DEADLINE_RULES:
            raise ValueError(f"rule {self.rule} must not carry a deadline")

    def to_dict(self) -> dict:
        entry = {
            "coordinate": self.coordinate.canonical(),
            "status": self.status.value,
            "rule": self.rule.value,
            "verdict": self.verdict_contribution.value,
            "vulnerabilities": list(self.vulnerabilities),
            "message": self.message,
        }
        if self.deadline is not None:
            entry["deadline"] = format_ts(self.deadline)
        return entry


@dataclass(frozen=True)
class GateDecision:
    application: str
    commit: str
    evaluated_at: datetime
    verdict: Verdict
    findings: tuple

    def to_dict(self) -> dict:
        return {
            "application": self.application,
            "commit": self.commit,
            "evaluated_at": format_ts(self.evaluated_at),
            "verdict": self.verdict.value,
            "findings": [f.to_dict() for f in self.findings],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _vulnerability_ids(entry) -> tuple:
    return tuple(advisory_id for advisory_id, _severity in entry.vulnerabilities)


def _approved_finding(coordinate, entry, policy):
    flagged = [
        advisory_id
        for advisory_id, severity in entry.vulnerabilities
        if severity.band.rank >= policy.vuln_warn_threshold.rank
    ]
    if flagged:
        return Finding(
            coordinate=coordinate,
            status=entry.status,
            rule=Rule.VULNERABLE_APPROVED,
            verdict_contribution=Verdict.WARN,
            deadline=None,
            vulnerabilities=_vulnerability_ids(entry),
            message=f"approved but carries {len(flagged)} advisory(ies) at or above "
            f"{policy.vuln_warn_threshold.value}: {', '.join(flagged)}",
        )
    return Finding(
        coordinate=coordinate,
        status=entry.status,
        rule=Rule.APPROVED_OK,
        verdict_contribution=Verdict.PASS,
        deadline=None,
        vulnerabilities=_vulnerability_ids(entry),
        message="approved",
    )


def _not_reviewed_finding(coordinate, entry, policy, now):
    vulns = _vulnerability_ids(entry)
    is_new = entry.introduced_date == now
    rule = Rule.NOT_REVIEWED_NEW if is_new else Rule.NOT_REVIEWED_PENDING
    if policy.not_reviewed_mode is Mode.FAIL:
        return Finding(
            coordinate, entry.status, Rule.NOT_REVIEWED_EXPIRED, Verdict.FAIL, None, vulns,
            "not reviewed and policy fails unvetted dependencies immediately",
        )
    if policy.not_reviewed_mode is Mode.NOTIFY:
        return Finding(
            coordinate, entry.status, rule, Verdict.WARN, None, vulns,
            "not reviewed; the vetting committee has been notified",
        )
    deadline = entry.introduced_date + days(policy.not_reviewed_reprieve_days)
    if now < deadline:
        return Finding(
            coordinate, entry.status, rule, Verdict.WARN, deadline, vulns,
            f"awaiting review; approve or replace before {format_ts(deadline)}",
        )
    return Finding(
        coordinate, entry.status, Rule.NOT_REVIEWED_EXPIRED, Verdict.FAIL, None, vulns,
        f"review reprieve expired {format_ts(deadline)}",
    )


def _rejected_finding(coordinate, entry, policy, now):
    vulns = _vulnerability_ids(entry)
    if entry.blacklist_reason is not None and policy.blacklist_fails_immediately:
        return Finding(
            coordinate, entry.status, Rule.REJECTED_BLACKLISTED, Verdict.FAIL, None, vulns,
            f"blacklisted: {entry.blacklist_reason}",
        )
    if policy.rejected_mode is Mode.FAIL:
        return Finding(
            coordinate, entry.status, Rule.REJECTED_EXPIRED, Verdict.FAIL, None, vulns,
            "rejected and policy fails rejected dependencies immediately",
        )
    if policy.rejected_mode is Mode.NOTIFY:
        return Finding(
            coordinate, entry.status, Rule.REJECTED_IN_REPRIEVE, Verdict.WARN, None, vulns,
            "rejected; replace this dependency",
        )
    anchor = max(entry.effective_date, entry.first_seen)
    deadline = anchor + days(policy.rejected_reprieve_days)
    if now < deadline:
        return Finding(
            coordinate, entry.status, Rule.REJECTED_IN_REPRIEVE, Verdict.WARN, deadline, vulns,
            f"rejected; migrate away before {format_ts(deadline)}",
        )
    return Finding(
        coordinate, entry.status, Rule.REJECTED_EXPIRED, Verdict.FAIL, None, vulns,
        f"rejection reprieve expired {format_ts(deadline)}",
    )


def _deprecated_finding(coordinate, entry, policy, now):
    vulns = _vulnerability_ids(entry)
    if entry.end_date is None:
        raise MissingDrdEntry(
            f"deprecated entry without end date for {coordinate.canonical()}"
        )
    if now >= entry.end_date:
        return Finding(
            coordinate, entry.status, Rule.DEPRECATED_EXPIRED, Verdict.FAIL, None, vulns,
            f"deprecated; usage window ended {format_ts(entry.end_date)}",
        )
    verdict = Verdict.WARN if policy.deprecated_warn_before_end_date else Verdict.PASS
    return Finding(
        coordinate, entry.status, Rule.DEPRECATED_ACTIVE, verdict, entry.end_date, vulns,
        f"deprecated; usable until {format_ts(entry.end_date)}",
    )


def evaluate(sbom: SbomSnapshot, drd_view: dict, waivers, policy: PolicyConfig, now: datetime) -> GateDecision:
    """Produce one finding per SBOM dependency and the worst-case verdict.

    Every coordinate must already have a DRD view entry (observations are
    upserted before gating); a missing entry raises MissingDrdEntry because
    it signals an integration bug, never a policy outcome.
    """
    waived_version_ids = {
        w.dependency_version_id
        for w in waivers
        if w.application == sbom.application and w.expires > now
    }
    findings = []
    for coordinate in sbom.dependencies:
        canonical = coordinate.canonical()
        entry = drd_view.get(canonical)
        if entry is None:
            raise MissingDrdEntry(f"no reference entry for {canonical}")
        if entry.status is Status.APPROVED:
            finding = _approved_finding(coordinate, entry, policy)
        elif entry.status is Status.NOT_REVIEWED:
            finding = _not_reviewed_finding(coordinate, entry, policy, now)
        elif entry.status is Status.REJECTED:
            finding = _rejected_finding(coordinate, entry, policy, now)
        else:
            finding = _deprecated_finding(coordinate, entry, policy, now)
        if (
            finding.verdict_contribution is Verdict.FAIL
            and entry.dependency_version_id in waived_version_ids
        ):
            finding = Finding(
                coordinate=coordinate,
                status=finding.status,
                rule=Rule.WAIVED,
                verdict_contribution=Verdict.WARN,
                deadline=None,
                vulnerabilities=finding.vulnerabilities,
                message=f"waived ({finding.rule.value}): {finding.message}",
            )
        findings.append(finding)
    findings.sort(key=lambda f: (-f.verdict_contribution.rank, f.coordinate.canonical()))
    return GateDecision(
        application=sbom.application,
        commit=sbom.commit,
        evaluated_at=now,
        verdict=worst_verdict(f.verdict_contribution for f in findings),
        findings=tuple(findings),
    )


def decide_exit_code(decision: GateDecision, warn_as_error: bool = False) -> int:
    """CI contract: Pass -> 0, Warn -> 0 (2 with warn_as_error), Fail -> 2."""
    if decision.verdict is Verdict.FAIL:
        return 2
    if decision.verdict is Verdict.WARN and warn_as_error:
        return 2
    return 0
