import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsort.clusterer import ClusterSet, assign, nearest
from lsort.core import ClusterMerge
from lsort.errors import NoClusters


def centroid(cs, i):
    return next(c.centroid for c in cs.table() if c.id == i)


def test_first_spike_creates_cluster_zero():
    cs = ClusterSet(25.0)
    assert assign(cs, (0.0, 0.0)) == (0, [])


def test_running_mean_update():
    cs = ClusterSet(20.0)
    cs.add((0.0, 0.0))
    assert assign(cs, (0.0, 10.0)) == (0, [])
    assert centroid(cs, 0) == (0.0, 5.0)
    assert cs.table()[0].count == 2


def test_update_then_merge():
    cs = ClusterSet(20.0)
    cs.add((0.0, 0.0))
    cs.add((0.0, 18.0))
    cid, merges = assign(cs, (0.0, 10.0))
    assert cid == 1
    assert merges == [ClusterMerge(0, 1)]
    (only,) = cs.table()
    assert only.id == 0 and only.count == 3
    assert only.centroid[0] == 0.0
    assert abs(only.centroid[1] - 28 / 3) < 1 / 256


def test_nearest_examples():
    cs = ClusterSet(25.0)
    cs.add((5.0, 5.0))
    assert nearest(cs, (0.0, 0.0))[0] == 0
    cs2 = ClusterSet(25.0)
    for i in range(4):
        cs2.add((0.0, 10.0) if i in (0, 3) else (500.0, 500.0))
    cs2.table()
    # ids 0 and 3 are equidistant from p; the lower id wins
    assert nearest(cs2, (0.0, 0.0))[0] == 0
    cs3 = ClusterSet(25.0)
    cs3.add((0.0, 0.0))
    cs3.add((0.0, 100.0))
    assert nearest(cs3, (0.0, 30.0)) == (0, 900.0)


def test_nearest_requires_a_cluster():
    with pytest.raises(NoClusters):
        nearest(ClusterSet(), (0.0, 0.0))


def test_capacity_fallback_counts_and_reuses_nearest():
    cs = ClusterSet(10.0, max_clusters=2)
    assign(cs, (0.0, 0.0))
    assign(cs, (0.0, 100.0))
    cid, _ = assign(cs, (0.0, 300.0))
    assert cid == 1
    assert cs.capacity_overflows == 1
    assert cs.next_id == 2


def test_strict_hardware_does_one_merge():
    # A and B are 12 apart, C is 10.8 from each; pulling A toward B lands the
    # merged centroid within T of C as well
    def build(strict):
        cs = ClusterSet(10.0, strict_hardware=strict)
        for c in ((0.0, 0.0), (0.0, 12.0), (9.0, 6.0)):
            cs.add(c)
        return cs

    _, full = assign(build(False), (0.0, 6.0))
    _, one = assign(build(True), (0.0, 6.0))
    assert full == [ClusterMerge(0, 1), ClusterMerge(0, 2)]
    assert one == [ClusterMerge(0, 1)]


points = st.lists(
    st.tuples(st.integers(0, 200).map(lambda v: v / 4), st.integers(0, 800).map(lambda v: v / 4)),
    min_size=1,
    max_size=120,
)


@settings(max_examples=150, deadline=None)
@given(points, st.sampled_from([5.0, 25.0, 40.0]))
def test_clusterer_invariants(ps, T):
    cs = ClusterSet(T)
    last_new = -1
    alive_ids = set()
    removed = set()
    for p in ps:
        before = cs.next_id
        cid, merges = assign(cs, p)
        assert cid not in removed
        if cs.next_id > before:
            assert cid == before > last_new
            last_new = cid
        for m in merges:
            assert m.kept < m.removed
            removed.add(m.removed)
        tbl = cs.table()
        alive_ids = {c.id for c in tbl}
        assert not alive_ids & removed
        # every alive pair is farther apart than T after assign returns
        for i, a in enumerate(tbl):
            for b in tbl[i + 1 :]:
                assert math.dist(a.centroid, b.centroid) > T - 1e-9
        assert sum(c.count for c in tbl) == cs.assigned
    assert len(cs) == len(alive_ids)
