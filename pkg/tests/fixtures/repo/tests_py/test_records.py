from textlib import Record, RecordStore, TimedRecord


def test_record_revisions():
    r = Record("size", 10)
    r.update(11)
    r.update(12)
    assert r.revision == 3
    assert r.describe() == "size=12"


def test_timed_record_inherits():
    t = TimedRecord("size", 10, 7)
    assert isinstance(t, Record)
    assert t.age(9) == 2
    assert t.describe() == "size=10 @7"


def test_store_roundtrip():
    store = RecordStore(default=-1)
    store.add("a", 1)
    store.add("b", 2)
    assert store.get("a") == 1
    assert store.get("missing") == -1
    assert store.size() == 2


def test_store_remove():
    store = RecordStore()
    store.add("a", 1)
    assert store.remove("a") is True
    assert store.remove("a") is False
    assert store.get("a") is None
