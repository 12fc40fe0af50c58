"""Store-level behavior: constraints, referential integrity, audit trail."""

import datetime as dt
import threading

import pytest

from uclog.errors import ConstraintViolation, ReferentialIntegrity
from uclog.store import AuditEntry, IncidentStore
from uclog.timeutil import UTC


def _refs(store):
    host = store.upsert_host("a.b.c.d", ip="10.0.0.1")
    itype = store.upsert_type("scan", "port scan")
    mail = store.insert_email(dt.date(2004, 3, 1))
    return host, itype, mail


class TestUpsertHost:
    def test_idempotent_on_name(self, store):
        first = store.upsert_host("a.b.c.d", ip="10.0.0.1")
        second = store.upsert_host("a.b.c.d", ip="10.0.0.1")
        assert first.host_id == second.host_id

    def test_too_few_dots_rejected(self, store):
        with pytest.raises(ConstraintViolation):
            store.upsert_host("badname")
        with pytest.raises(ConstraintViolation):
            store.upsert_host("two.dots.only")

    def test_name_too_long_rejected(self, store):
        with pytest.raises(ConstraintViolation):
            store.upsert_host("x" * 27 + ".a.b.c")  # 33 chars

    def test_dotted_quad_literal_accepted_as_name(self, store):
        host = store.upsert_host("10.1.2.3")
        assert host.name == "10.1.2.3"

    def test_hundred_distinct_names_distinct_ids(self, store):
        for i in range(100):
            store.upsert_host(f"h{i:03d}.x.y.z")
        # brute-force uniqueness scan over the store dump
        dump = store.hosts()
        assert len(dump) == 100
        assert len({h.host_id for h in dump}) == 100
        assert len({h.name for h in dump}) == 100

    def test_fills_missing_ip_once_known(self, store):
        store.upsert_host("a.b.c.d")
        updated = store.upsert_host("a.b.c.d", ip="10.0.0.9")
        assert updated.ip == "10.0.0.9"
        # an existing ip is never overwritten
        again = store.upsert_host("a.b.c.d", ip="10.0.0.250")
        assert again.ip == "10.0.0.9"

    def test_bad_ip_rejected(self, store):
        with pytest.raises(ConstraintViolation):
            store.upsert_host("a.b.c.d", ip="999.1.1.1")

    def test_ids_monotonic_in_creation_order(self, store):
        ids = [store.upsert_host(f"m{i}.x.y.z").host_id for i in range(20)]
        assert ids == sorted(ids)
        assert len(set(ids)) == len(ids)


class TestInsertIncident:
    def test_round_trip(self, store):
        host, itype, mail = _refs(store)
        when = dt.datetime(2004, 3, 1, 2, 5, tzinfo=UTC)
        incident = store.insert_incident(when, host.host_id, itype.type_id,
                                         mail.email_id, comments="hello")
        loaded = store.get_incident(incident.incident_id)
        assert loaded == incident
        assert loaded.date == "2004-03-01T02:05:00Z"
        assert loaded.comments == "hello"

    def test_dangling_reference_rejected(self, store):
        host, itype, mail = _refs(store)
        with pytest.raises(ReferentialIntegrity):
            store.insert_incident("2004-03-01T00:00:00Z", 9999,
                                  itype.type_id, mail.email_id)
        with pytest.raises(ReferentialIntegrity):
            store.insert_incident("2004-03-01T00:00:00Z", host.host_id,
                                  9999, mail.email_id)
        with pytest.raises(ReferentialIntegrity):
            store.insert_incident("2004-03-01T00:00:00Z", host.host_id,
                                  itype.type_id, 9999)

    def test_fifty_inserts_fifty_audit_entries(self, store):
        host, itype, mail = _refs(store)
        before = sum(1 for e in store.audit_entries()
                     if e.action == "insert" and e.entity.startswith("incident:"))
        for i in range(50):
            store.insert_incident(f"2004-03-01T00:{i:02d}:00Z", host.host_id,
                                  itype.type_id, mail.email_id)
        after = sum(1 for e in store.audit_entries()
                    if e.action == "insert" and e.entity.startswith("incident:"))
        assert after - before == 50

    def test_naive_datetime_treated_as_utc(self, store):
        host, itype, mail = _refs(store)
        incident = store.insert_incident(dt.datetime(2004, 3, 1, 2, 5),
                                         host.host_id, itype.type_id,
                                         mail.email_id)
        assert incident.date == "2004-03-01T02:05:00Z"


class TestGetIncidents:
    def test_empty_store(self, store):
        assert store.get_incidents() == []

    def test_filters_match_linear_scan(self, store):
        host, itype, mail = _refs(store)
        other = store.upsert_host("w.x.y.z")
        for i in range(10):
            store.insert_incident(
                f"2004-03-{i + 1:02d}T00:00:00Z",
                (other if i % 3 == 0 else host).host_id,
                itype.type_id, mail.email_id)
        rows = store.get_incidents(host="w.x.y.z")
        assert len(rows) == 4
        assert [r.host for r in rows] == ["w.x.y.z"] * 4
        assert [r.date for r in rows] == sorted(r.date for r in rows)

    def test_no_filters_every_incident_once(self, store):
        host, itype, mail = _refs(store)
        for i in range(7):
            store.insert_incident(f"2004-03-01T0{i}:00:00Z", host.host_id,
                                  itype.type_id, mail.email_id)
        rows = store.get_incidents()
        assert len(rows) == store.incident_count() == 7
        assert len({r.incident_id for r in rows}) == 7

    def test_time_range_inclusive_exclusive(self, store):
        host, itype, mail = _refs(store)
        for hour in (1, 2, 3):
            store.insert_incident(f"2004-03-01T0{hour}:00:00Z", host.host_id,
                                  itype.type_id, mail.email_id)
        rows = store.get_incidents(since="2004-03-01T02:00:00Z",
                                   until="2004-03-01T03:00:00Z")
        assert [r.date for r in rows] == ["2004-03-01T02:00:00Z"]


class TestAudit:
    def test_read_back_order_equals_append_order(self, store):
        entries = [AuditEntry(f"2004-03-01T00:00:0{i}Z", "tester", "search",
                              f"thing:{i}", f"step {i}") for i in range(3)]
        for entry in entries:
            store.record_audit(entry)
        read = [e for e in store.audit_entries() if e.actor == "tester"]
        assert read == entries

    def test_append_only_no_mutation_surface(self, store):
        # no delete/update for audit entries exists on the repository
        surface = [name for name in dir(store)
                   if "audit" in name and not name.startswith("_")]
        assert sorted(surface) == ["audit_count", "audit_entries",
                                   "audit_tail", "record_audit"]

    def test_unknown_action_rejected(self, store):
        with pytest.raises(ConstraintViolation):
            store.record_audit(AuditEntry("2004-03-01T00:00:00Z", "x",
                                          "mutate", "y", "z"))

    def test_concurrent_appends_none_lost(self, store):
        def writer(worker: int):
            for i in range(250):
                store.record_audit(AuditEntry(
                    "2004-03-01T00:00:00Z", f"w{worker}", "search",
                    f"item:{worker}:{i}", ""))

        threads = [threading.Thread(target=writer, args=(w,)) for w in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        entries = [e for e in store.audit_entries() if e.action == "search"]
        assert len(entries) == 1000
        assert len({e.entity for e in entries}) == 1000


class TestUsersAndSchema:
    def test_user_round_trip_and_duplicate(self, store):
        store.add_user("alice", "digest", "admin")
        assert store.get_user("alice").role == "admin"
        with pytest.raises(ConstraintViolation):
            store.add_user("alice", "other", "normal")

    def test_schema_dump_names_all_tables(self, store):
        dump = store.schema_dump()
        for table in ("hosts", "emails", "types", "incidents", "audit_log",
                      "users"):
            assert table in dump

    def test_durable_across_reopen(self, tmp_path):
        path = str(tmp_path / "s.db")
        first = IncidentStore(path)
        host = first.upsert_host("a.b.c.d", ip="10.0.0.1")
        first.close()
        second = IncidentStore(path)
        assert second.get_host_by_name("a.b.c.d").host_id == host.host_id
