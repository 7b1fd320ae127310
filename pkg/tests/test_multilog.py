import numpy as np
import pytest

from loggraph.errors import ConfigError, ContractViolation
from loggraph.multilog import (
    LogManifest,
    MultiLog,
    RecordFormat,
    presort_page,
    read_log_records,
    vid_to_interval,
)
from loggraph.pager import PAGE_HEADER, StoreRegistry, pack_page

FMT16 = RecordFormat([("val", "<u8")])  # 4+4+8 = 16-byte records


def make_mlog(tmp_path, bounds=(0, 3, 6), page_size=256, budget_pages=None, presort=False):
    reg = StoreRegistry(page_size)
    n_int = len(bounds) - 1
    budget = (budget_pages if budget_pages is not None else 4 * n_int) * page_size
    return MultiLog(list(bounds), FMT16, reg, str(tmp_path / "logs"), budget, presort=presort)


def test_vid_to_interval_boundaries():
    bounds = [0, 3, 6]
    assert vid_to_interval(bounds, 0) == 0
    assert vid_to_interval(bounds, 3) == 1  # boundary belongs to the right interval
    assert vid_to_interval(bounds, 5) == 1


def test_capacity_from_page_size(tmp_path):
    mlog = make_mlog(tmp_path)
    assert mlog.capacity == (256 - PAGE_HEADER) // 16 == 15


def test_single_message_stays_in_top_page(tmp_path):
    mlog = make_mlog(tmp_path)
    mlog.send(1, 0, 7)
    assert mlog.logs[0].message_count == 1
    assert mlog.logs[0].fill == 1
    assert not mlog.logs[0].chain  # nothing written to storage yet


def test_overflow_closes_page_capacity_plus_one(tmp_path):
    mlog = make_mlog(tmp_path)
    cap = mlog.capacity
    for i in range(cap + 1):
        mlog.send(0, 0, i)
    log = mlog.logs[0]
    assert len(log.closed) == 1  # one full page buffered
    assert log.fill == 1  # one record in the fresh top page
    assert log.message_count == cap + 1


def test_two_intervals_two_chains(tmp_path):
    mlog = make_mlog(tmp_path)
    mlog.send(0, 0, 1)
    mlog.send(5, 0, 2)
    manifest = mlog.seal()
    assert manifest.handles[0].message_count == 1
    assert manifest.handles[1].message_count == 1
    assert manifest.handles[0].store is not manifest.handles[1].store


def test_routing_correctness(tmp_path):
    mlog = make_mlog(tmp_path)
    rng = np.random.default_rng(0)
    for d in rng.integers(0, 6, 200):
        mlog.send(int(d), 0, 0)
    manifest = mlog.seal()
    for k, handle in enumerate(manifest.handles):
        recs, _ = read_log_records(handle, FMT16)
        if len(recs):
            assert all(vid_to_interval([0, 3, 6], int(d)) == k for d in recs["dest"])


def test_evict_noop_below_budget(tmp_path):
    mlog = make_mlog(tmp_path, budget_pages=8)
    mlog.send(0, 0, 1)
    assert mlog.evict_if_needed() == 0


def test_evict_flushes_full_pages_then_tops_to_watermark(tmp_path):
    # budget: 4 pages across 2 intervals; overfill interval 0 with closed pages
    mlog = make_mlog(tmp_path, bounds=(0, 3, 6), budget_pages=4)
    cap = mlog.capacity
    for i in range(3 * cap + 1):  # 3 closed pages + 1 record in top
        mlog.send(0, 0, i)
    mlog.send(5, 0, 0)
    # send() auto-evicts on overflow; residency must sit at/below the watermark
    assert mlog.resident_bytes <= int(0.9 * mlog.budget)
    manifest = mlog.seal()
    recs, _ = read_log_records(manifest.handles[0], FMT16)
    assert recs["val"].tolist() == list(range(3 * cap + 1))  # order survives eviction


def test_adversarial_spray_evicts_to_watermark(tmp_path):
    # fill 64 intervals under a loose budget, then shrink it to 64 pages and
    # evict: full pages go first, then the fullest tops, down to 90%
    mlog = make_mlog(tmp_path, bounds=tuple(range(0, 65)), budget_pages=256, page_size=256)
    cap = mlog.capacity
    for k in range(64):
        for i in range(cap):
            mlog.send(k, 0, i)
    assert mlog.resident_bytes == 64 * 256  # all tops full
    for k in range(64):
        mlog.send(k, 0, 99)  # one more record everywhere: 64 closed + 64 tops
    assert mlog.resident_bytes == 128 * 256
    mlog.budget = 64 * 256
    mlog.watermark = int(0.9 * mlog.budget)
    evicted = mlog.evict_if_needed()
    assert mlog.resident_bytes // 256 <= 58  # watermark arithmetic on 64 pages
    assert evicted == 128 - mlog.resident_bytes // 256
    # closed pages were flushed before any top: no closed pages remain
    assert all(not log.closed for log in mlog.logs)


def test_budget_below_one_page_per_interval_rejected(tmp_path):
    reg = StoreRegistry(256)
    with pytest.raises(ConfigError):
        MultiLog([0, 3, 6], FMT16, reg, str(tmp_path / "logs"), 256)


def test_seal_empty_interval_has_empty_chain(tmp_path):
    mlog = make_mlog(tmp_path)
    manifest = mlog.seal()
    assert manifest.handles[0].ordinals == []
    assert manifest.handles[0].message_count == 0
    recs, _ = read_log_records(manifest.handles[0], FMT16)
    assert len(recs) == 0


def test_seal_partial_top_page_record_count(tmp_path):
    mlog = make_mlog(tmp_path)
    for i in range(5):
        mlog.send(0, i, i)
    handle = mlog.seal_interval(0)
    page = handle.store.read_page(handle.ordinals[0])
    assert page.record_count == 5
    recs, _ = read_log_records(handle, FMT16)
    assert recs["val"].tolist() == [0, 1, 2, 3, 4]


def test_double_seal_rejected(tmp_path):
    mlog = make_mlog(tmp_path)
    mlog.seal_interval(0)
    with pytest.raises(ContractViolation):
        mlog.seal_interval(0)


def test_send_after_seal_rejected(tmp_path):
    mlog = make_mlog(tmp_path)
    mlog.seal()
    with pytest.raises(ContractViolation):
        mlog.send(0, 0, 1)


def test_message_count_always_matches_parseable_records(tmp_path):
    mlog = make_mlog(tmp_path, budget_pages=2 * 2)
    rng = np.random.default_rng(1)
    sent = 0
    for d in rng.integers(0, 6, 123):
        mlog.send(int(d), 1, sent)
        sent += 1
    manifest = mlog.seal()
    total = 0
    for h in manifest.handles:
        recs, _ = read_log_records(h, FMT16)
        assert len(recs) == h.message_count
        total += len(recs)
    assert total == sent


def test_presort_page_stable_by_dest():
    fmt = FMT16
    raw = b"".join(fmt.struct.pack(d, s, v) for d, s, v in [(5, 0, 0), (2, 0, 1), (2, 0, 2), (9, 0, 3)])
    data = bytearray(pack_page(256, raw, 4))
    presort_page(data, fmt)
    recs = np.frombuffer(bytes(data[PAGE_HEADER : PAGE_HEADER + 4 * 16]), fmt.dtype)
    assert recs["dest"].tolist() == [2, 2, 5, 9]
    assert recs["val"].tolist() == [1, 2, 0, 3]  # equal dests keep arrival order
    assert data[0] == 1


def test_presort_sorted_page_only_sets_bit():
    fmt = FMT16
    raw = b"".join(fmt.struct.pack(d, 0, i) for i, d in enumerate([1, 2, 3]))
    data = bytearray(pack_page(256, raw, 3))
    before = bytes(data[PAGE_HEADER:])
    presort_page(data, fmt)
    assert bytes(data[PAGE_HEADER:]) == before
    assert data[0] == 1


def test_presort_disabled_leaves_pages_unsorted(tmp_path):
    mlog = make_mlog(tmp_path, presort=False)
    for d in [5, 2, 2, 1]:
        mlog.send(d, 0, 0)
    handle = mlog.seal_interval(0)
    page = handle.store.read_page(0)
    assert not page.presorted
    recs = np.frombuffer(page.records(16), FMT16.dtype)
    assert recs["dest"].tolist() == [2, 2, 1]  # interval 0 only, arrival order


def test_presort_enabled_sets_bit_and_sorts_flushed_pages(tmp_path):
    mlog = make_mlog(tmp_path, presort=True)
    for d in [2, 0, 1, 0]:
        mlog.send(d, 0, 0)
    handle = mlog.seal_interval(0)
    page = handle.store.read_page(0)
    assert page.presorted
    recs = np.frombuffer(page.records(16), FMT16.dtype)
    assert recs["dest"].tolist() == sorted(recs["dest"].tolist())


def test_exactly_once_multiset_property(tmp_path):
    rng = np.random.default_rng(42)
    for trial in range(20):
        mlog = make_mlog(tmp_path / f"t{trial}", bounds=(0, 4, 8, 12), budget_pages=6)
        n_msgs = int(rng.integers(1, 400))
        dests = rng.integers(0, 12, n_msgs)
        vals = rng.integers(0, 1 << 30, n_msgs)
        for d, v in zip(dests, vals):
            mlog.send(int(d), 7, int(v))
        manifest = mlog.seal()
        got = []
        for h in manifest.handles:
            recs, _ = read_log_records(h, FMT16)
            got.extend(zip(recs["dest"].tolist(), recs["val"].tolist()))
        assert sorted(got) == sorted(zip(dests.tolist(), vals.tolist()))


def test_memory_bound_after_evictions(tmp_path):
    mlog = make_mlog(tmp_path, bounds=(0, 2, 4, 6), budget_pages=3)
    rng = np.random.default_rng(3)
    for d in rng.integers(0, 6, 1000):
        mlog.send(int(d), 0, 0)
        assert mlog.post_evict_peak <= mlog.budget
    assert mlog.resident_bytes <= mlog.budget
