"""Reference-database lifecycle, audit trail and query behavior."""

import itertools
import random

import pytest

from depgate.errors import (
    IllegalTransition,
    MissingEndDate,
    MissingJustification,
    NotFound,
    StorageFailure,
)
from depgate.manifests import ManifestFile, ManifestKind, build_sbom
from depgate.model import Coordinate, Ecosystem, Severity, Status, days, parse_ts
from depgate.store import LEGAL_TRANSITIONS, DrdStore
from depgate.vulnsync import (
    CoordinatePattern,
    VersionRange,
    VulnerabilityAdvisory,
)

T0 = parse_ts("2024-03-01T12:00:00Z")


def make_sbom(app="claims-portal", commit="a1b2c3d", coords=None, now=T0):
    if coords is None:
        coords = [
            Coordinate(Ecosystem.MAVEN, "org.json", "json", "20160807"),
            Coordinate(Ecosystem.MAVEN, "junit", "junit", "4.12", scope="test"),
        ]
    from depgate.manifests import SbomSnapshot, _dedupe_sorted

    return SbomSnapshot(app, commit, now, _dedupe_sorted(coords))


def table3_sbom(table3_pom, app="claims-portal", now=T0):
    sbom, _ = build_sbom(
        app,
        "a1b2c3d",
        [ManifestFile("pom.xml", ManifestKind.MAVEN_POM, table3_pom)],
        internal_group_prefixes=("com.acme.",),
        now=now,
    )
    return sbom


def advisory(advisory_id="CVE-2024-0001", score=7.5, group="org.json", name="json", op="<=", version="20160807"):
    return VulnerabilityAdvisory(
        id=advisory_id,
        source="native_feed",
        severity=Severity(score),
        summary="test advisory",
        published=T0,
        matches=(
            CoordinatePattern(
                Ecosystem.MAVEN,
                group,
                name,
                VersionRange.from_payload([{"op": op, "version": version}]),
            ),
        ),
    )


def check_referential_integrity(store):
    deps = {row[0] for row in store.raw_rows("dependency")}
    groups = {row[0] for row in store.raw_rows("dependency_group")}
    versions = {row[0] for row in store.raw_rows("dependency_version")}
    apps = {row[0] for row in store.raw_rows("application")}
    for row in store.raw_rows("dependency"):
        assert row[2] in groups
    for row in store.raw_rows("dependency_version"):
        assert row[1] in deps
    for row in store.raw_rows("application_dependency"):
        assert row[0] in apps and row[1] in versions
    for row in store.raw_rows("vulnerability_link"):
        assert row[1] in versions


class TestUpsertObservation:
    def test_fresh_store_creates_eight_not_reviewed_rows(self, store, table3_pom):
        created = store.upsert_observation(table3_sbom(table3_pom), T0)
        assert len(created) == 8
        assert all(r.status is Status.NOT_REVIEWED for r in created)
        assert all(r.introduced_date == T0 and r.effective_date == T0 for r in created)
        assert len(store.audit_events("observed")) == 8
        check_referential_integrity(store)

    def test_second_observation_is_idempotent_except_last_seen(self, store, table3_pom):
        store.upsert_observation(table3_sbom(table3_pom), T0)
        later = T0 + days(3)
        created = store.upsert_observation(table3_sbom(table3_pom, now=later), later)
        assert created == []
        links = store.raw_rows("application_dependency")
        assert all(parse_ts(first) == T0 and parse_ts(last) == later for _, _, first, last, _ in links)
        assert len(store.audit_events("observed")) == 8

    def test_two_apps_one_version_row_two_links(self, store):
        store.upsert_observation(make_sbom(app="app-one"), T0)
        store.upsert_observation(make_sbom(app="app-two", commit="ffff"), T0)
        assert len(store.raw_rows("dependency_version")) == 2
        assert len(store.raw_rows("application_dependency")) == 4
        check_referential_integrity(store)

    def test_repeat_observation_table_state_identical(self, store, table3_pom):
        store.upsert_observation(table3_sbom(table3_pom), T0)
        reference = store.snapshot_state()
        for _ in range(3):
            store.upsert_observation(table3_sbom(table3_pom), T0)
        assert store.snapshot_state() == reference


class TestStatusLifecycle:
    def _one_version(self, store):
        created = store.upsert_observation(make_sbom(), T0)
        return created[0]

    def test_approve(self, store):
        row = self._one_version(store)
        updated = store.set_status(row.id, Status.APPROVED, actor="committee", now=T0 + days(1))
        assert updated.status is Status.APPROVED
        assert updated.effective_date == T0 + days(1)

    def test_reject_requires_justification(self, store):
        row = self._one_version(store)
        with pytest.raises(MissingJustification):
            store.set_status(row.id, Status.REJECTED, actor="committee", now=T0)

    def test_deprecate_requires_end_date(self, store):
        row = self._one_version(store)
        store.set_status(row.id, Status.APPROVED, actor="committee", now=T0)
        with pytest.raises(MissingEndDate):
            store.set_status(row.id, Status.DEPRECATED, actor="committee", now=T0 + days(1))

    def test_unknown_row(self, store):
        with pytest.raises(NotFound):
            store.set_status(999, Status.APPROVED, actor="x", now=T0)

    def test_transition_matrix_exhaustive(self, store):
        # All 16 ordered pairs, fresh row per pair; illegal ones never mutate.
        statuses = list(Status)
        for index, (start, target) in enumerate(itertools.product(statuses, statuses)):
            coord = Coordinate(Ecosystem.MAVEN, "matrix", f"lib{index}", "1.0")
            row = store.upsert_observation(
                make_sbom(app=f"matrix-app-{index}", coords=[coord]), T0
            )[0]
            row = self._drive_to(store, row, start)
            legal = target in LEGAL_TRANSITIONS[row.status]
            kwargs = {"justification": "because", "end_date": T0 + days(90)}
            if legal:
                updated = store.set_status(row.id, target, actor="committee", now=T0 + days(5), **kwargs)
                assert updated.status is target
            else:
                before = store.get_version(row.id)
                with pytest.raises(IllegalTransition):
                    store.set_status(row.id, target, actor="committee", now=T0 + days(5), **kwargs)
                assert store.get_version(row.id) == before

    @staticmethod
    def _drive_to(store, row, status):
        """Walk a fresh NotReviewed row to the requested starting status legally."""
        path = {
            Status.NOT_REVIEWED: [],
            Status.APPROVED: [Status.APPROVED],
            Status.REJECTED: [Status.REJECTED],
            Status.DEPRECATED: [Status.APPROVED, Status.DEPRECATED],
        }[status]
        for step in path:
            row = store.set_status(
                row.id,
                step,
                actor="setup",
                now=T0 + days(1),
                justification="setup rejection" if step is Status.REJECTED else None,
                end_date=T0 + days(60) if step is Status.DEPRECATED else None,
            )
        return row

    def test_rejected_then_reinstated_clears_blacklist(self, store):
        row = self._one_version(store)
        row = store.set_status(row.id, Status.REJECTED, actor="c", now=T0, justification="bad")
        row = store.set_blacklist(row.id, "actively exploited", actor="c", now=T0)
        assert row.blacklist_reason == "actively exploited"
        row = store.set_status(row.id, Status.APPROVED, actor="c", now=T0 + days(2))
        assert row.blacklist_reason is None

    def test_blacklist_only_on_rejected(self, store):
        row = self._one_version(store)
        with pytest.raises(IllegalTransition):
            store.set_blacklist(row.id, "nope", actor="c", now=T0)

    def test_audit_completeness_over_random_sequences(self, store):
        rng = random.Random(42)
        rows = store.upsert_observation(
            make_sbom(
                coords=[
                    Coordinate(Ecosystem.MAVEN, "g", f"lib{i}", "1.0") for i in range(6)
                ]
            ),
            T0,
        )
        successful = 0
        for step in range(120):
            row = store.get_version(rng.choice(rows).id)
            target = rng.choice(list(Status))
            try:
                store.set_status(
                    row.id,
                    target,
                    actor="fuzz",
                    now=T0 + days(step),
                    justification="fuzz rejection",
                    end_date=T0 + days(step + 30),
                )
                successful += 1
            except (IllegalTransition, MissingJustification, MissingEndDate):
                pass
        assert len(store.audit_events("status_changed")) == successful
        check_referential_integrity(store)

    def test_event_seq_gapless(self, store, table3_pom):
        store.upsert_observation(table3_sbom(table3_pom), T0)
        events = store.events()
        assert [e.seq for e in events] == list(range(1, len(events) + 1))


class TestCategories:
    def test_assign_and_audit(self, store):
        created = store.upsert_observation(
            make_sbom(coords=[Coordinate(Ecosystem.MAVEN, "com.google.code.gson", "gson", "2.8.9")]),
            T0,
        )
        dep_id = created[0].dependency_id
        category = store.create_category("JSON Parser")
        updated = store.assign_category(dep_id, category.id, actor="committee", now=T0)
        assert updated.category == "JSON Parser"
        assert len(store.audit_events("categorized")) == 1

    def test_reassign_same_category_is_noop(self, store):
        created = store.upsert_observation(make_sbom(), T0)
        dep_id = created[0].dependency_id
        category = store.create_category("JSON Parser")
        store.assign_category(dep_id, category.id, actor="a", now=T0)
        store.assign_category(dep_id, category.id, actor="a", now=T0)
        assert len(store.audit_events("categorized")) == 1

    def test_unknown_category(self, store):
        created = store.upsert_observation(make_sbom(), T0)
        with pytest.raises(NotFound):
            store.assign_category(created[0].dependency_id, 999, actor="a", now=T0)


class TestVulnerabilities:
    def test_create_then_unchanged(self, store):
        assert store.record_vulnerability(advisory(), T0) == "created"
        assert store.record_vulnerability(advisory(), T0 + days(1)) == "unchanged"
        assert len(store.audit_events("vuln_recorded")) == 1

    def test_update_replaces_severity(self, store):
        store.record_vulnerability(advisory(score=5.0), T0)
        assert store.record_vulnerability(advisory(score=9.1), T0) == "updated"
        assert store.get_vulnerability("CVE-2024-0001")["score"] == 9.1
        assert len(store.audit_events("vuln_recorded")) == 2


class TestWaivers:
    def test_expiry_must_be_future(self, store):
        row = store.upsert_observation(make_sbom(), T0)[0]
        with pytest.raises(ValueError):
            store.create_waiver("claims-portal", row.id, T0, "needed", "secops", T0)

    def test_waiver_recorded(self, store):
        row = store.upsert_observation(make_sbom(), T0)[0]
        waiver = store.create_waiver("claims-portal", row.id, T0 + days(10), "migration underway", "secops", T0)
        assert store.waivers_for("claims-portal") == [waiver]
        assert len(store.audit_events("waiver_granted")) == 1


class TestQuery:
    def test_fresh_ingest_vetting_queue(self, store, table3_pom):
        store.upsert_observation(table3_sbom(table3_pom), T0)
        rows = store.query(status=Status.NOT_REVIEWED)
        assert len(rows) == 8
        canonicals = [r.canonical() for r in rows]
        assert canonicals == sorted(canonicals)

    def test_empty_store(self, store):
        assert store.query() == []

    def test_filters_compose_with_and(self, store, table3_pom):
        store.upsert_observation(table3_sbom(table3_pom), T0)
        store.record_vulnerability(advisory(), T0)
        dep = store.find_dependency(Ecosystem.MAVEN, "org.json", "json")
        version = store.versions_for(dep.id)[0]
        store.add_vulnerability_link("CVE-2024-0001", version.id)
        both = store.query(status=Status.NOT_REVIEWED, has_vulns=True)
        assert [r.name for r in both] == ["json"]
        none = store.query(status=Status.APPROVED, has_vulns=True)
        assert none == []

    def test_pagination_stable(self, store, table3_pom):
        store.upsert_observation(table3_sbom(table3_pom), T0)
        page1 = store.query(limit=3, offset=0)
        page2 = store.query(limit=3, offset=3)
        assert len(page1) == 3 and len(page2) == 3
        assert {r.dependency_version_id for r in page1} & {r.dependency_version_id for r in page2} == set()

    def test_no_deletes_anywhere(self, store, table3_pom):
        store.upsert_observation(table3_sbom(table3_pom), T0)
        row = store.query()[0]
        store.set_status(row.dependency_version_id, Status.REJECTED, actor="c", now=T0, justification="x")
        assert len(store.query()) == 8  # rejection is a status, not a removal


class TestSchemaGuard:
    def test_refuses_newer_schema(self, tmp_path):
        path = tmp_path / "drd.sqlite"
        s = DrdStore(str(path))
        s._conn.execute("UPDATE meta SET value = '99' WHERE key = 'schema_version'")
        s._conn.commit()
        s.close()
        with pytest.raises(StorageFailure):
            DrdStore(str(path))

    def test_reopens_existing(self, tmp_path, table3_pom):
        path = tmp_path / "drd.sqlite"
        s = DrdStore(str(path))
        s.upsert_observation(table3_sbom(table3_pom), T0)
        s.close()
        s2 = DrdStore(str(path))
        assert len(s2.query()) == 8
        s2.close()

    def test_sync_lease_exclusive(self, store):
        assert store.acquire_sync_lease("a") is True
        assert store.acquire_sync_lease("b") is False
        store.release_sync_lease("a")
        assert store.acquire_sync_lease("b") is True
