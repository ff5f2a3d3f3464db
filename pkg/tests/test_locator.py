import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsort.core import LocalizationMode, Peak, PipelineConfig, ProbeGeometry, SpikeEvent
from lsort.errors import UnknownChannel, ZeroMass
from lsort.locator import SpikeBank, feed_peak, localize_central, localize_com, tick

GEO = ProbeGeometry.neuropixels(384)
FIG6_BANK = [(2216, 89, 231), (2221, 317, 142), (2232, 255, 94), (2233, 64, 124)]


def make_bank(mode=LocalizationMode.CENTRAL_CHANNEL, entries=(), **kw):
    cfg = PipelineConfig(num_channels=384, localization_mode=mode, **kw)
    bank = SpikeBank(cfg, GEO)
    for ts, ch, amp in entries:
        assert feed_peak(bank, Peak(ch, ts, amp)) is None
    return bank


def rows(bank):
    return [e.as_tuple() for e in bank.entries]


class TestFig6Trace:
    def test_case1_unmatched_peak_opens_new_entry(self):
        bank = make_bank(entries=FIG6_BANK)
        assert feed_peak(bank, Peak(147, 2234, 127)) is None
        assert rows(bank) == FIG6_BANK + [(2234, 147, 127)]

    def test_case2_weaker_peak_leaves_entry_unchanged(self):
        bank = make_bank(entries=FIG6_BANK + [(2234, 147, 127)])
        assert feed_peak(bank, Peak(254, 2235, 63)) is None
        assert rows(bank) == FIG6_BANK + [(2234, 147, 127)]

    def test_case3_head_emitted_at_gap_20(self):
        bank = make_bank(entries=FIG6_BANK + [(2234, 147, 127)])
        assert tick(bank, 2235) is None
        ev = tick(bank, 2236)
        assert ev == SpikeEvent(2216, 89, 231, localize_central(89, GEO))
        assert rows(bank)[0] == (2221, 317, 142)

    def test_geometry_places_the_fig6_channels(self):
        assert GEO[147] == (16.0, 1460.0)
        near = GEO.proximity(100.0)
        assert near[254, 255]
        assert not any(near[147, ch] for _, ch, _ in FIG6_BANK)


def test_tick_before_gap_is_quiet():
    bank = make_bank(entries=[(2216, 89, 231)])
    assert tick(bank, 2230) is None


def test_tick_on_empty_bank():
    assert tick(make_bank(), 10_000) is None


def test_first_peak_goes_to_index_zero():
    bank = make_bank()
    assert feed_peak(bank, Peak(3, 7, 50)) is None
    assert rows(bank) == [(7, 3, 50)]


def test_stronger_peak_overwrites():
    bank = make_bank(entries=[(100, 10, 50)])
    feed_peak(bank, Peak(12, 103, 80))
    assert rows(bank) == [(103, 12, 80)]


def test_equal_amplitude_keeps_first_arrival():
    bank = make_bank(entries=[(100, 10, 50)])
    feed_peak(bank, Peak(12, 103, 50))
    assert rows(bank) == [(100, 10, 50)]


def test_match_window_boundary():
    bank = make_bank(entries=[(100, 10, 50)])
    feed_peak(bank, Peak(11, 116, 40))  # dt = 16 joins
    assert len(bank) == 1
    feed_peak(bank, Peak(11, 117, 40))  # dt = 17 starts a new spike
    assert len(bank) == 2


def test_oldest_matching_entry_wins():
    bank = make_bank(entries=[(100, 10, 50), (101, 20, 60)])
    feed_peak(bank, Peak(14, 104, 90))  # near both
    assert rows(bank) == [(104, 14, 90), (101, 20, 60)]


def test_seventeenth_spike_forces_one_early_emission():
    bank = make_bank()
    far = [c for c in range(0, 384, 24)][:16]
    for i, ch in enumerate(far):
        assert feed_peak(bank, Peak(ch, 1000 + i % 2, 100)) is None
    ev = feed_peak(bank, Peak(383, 1001, 100))
    assert ev is not None and ev.central_channel == far[0]
    assert len(bank) == 16
    assert bank.early_emissions == 1


def test_flush_drains_oldest_first():
    bank = make_bank(entries=[(5, 0, 10), (6, 200, 20)])
    out = bank.flush()
    assert [e.timestep for e in out] == [5, 6]
    assert bank.flush() == []


def test_unknown_channel():
    with pytest.raises(UnknownChannel):
        feed_peak(make_bank(), Peak(384, 0, 10))
    with pytest.raises(UnknownChannel):
        localize_central(999, GEO)


def test_localize_central_lookup():
    assert localize_central(147, GEO) == (16.0, 1460.0)
    assert localize_central(0, ProbeGeometry([(0.0, 0.0)])) == (0.0, 0.0)


@pytest.mark.parametrize(
    "sums, expected",
    [
        ((0.0, 1 * 0 + 1 * 20, 2), (0.0, 10.0)),
        ((0.0, 3 * 0 + 1 * 40, 4), (0.0, 10.0)),
        ((16.0 * 7, 1460.0 * 7, 7), (16.0, 1460.0)),
    ],
)
def test_localize_com(sums, expected):
    assert localize_com(*sums) == expected


def test_localize_com_rounds_to_quarter_micron():
    assert localize_com(0.0, 10.0, 3) == (0.0, 3.25)


def test_localize_com_zero_mass():
    with pytest.raises(ZeroMass):
        localize_com(0.0, 0.0, 0)


def test_com_accumulates_even_without_overwrite():
    bank = make_bank(LocalizationMode.PEAK_COM, entries=[(100, 0, 90)])
    feed_peak(bank, Peak(2, 101, 30))
    e = bank.entries[0]
    assert e.sum_a == 120 and e.as_tuple() == (100, 0, 90)


peaks = st.lists(
    st.tuples(st.integers(0, 3), st.integers(0, 47), st.integers(1, 2047)), min_size=1, max_size=80
)


def model_run(raw, cfg, geo):
    """Independent bank model that remembers every member peak of every entry."""
    near = geo.proximity(cfg.match_radius_um)
    entries, out, ts, created = [], [], 0, 0
    for dt, ch, amp in raw:
        ts += dt
        while entries and ts - entries[0]["ts"] > cfg.emit_gap:
            out.append(entries.pop(0))
        for e in entries:
            if ts - e["ts"] <= cfg.match_window and near[ch, e["ch"]]:
                e["members"].append((ch, amp))
                if amp > e["amp"]:
                    e.update(ts=ts, ch=ch, amp=amp)
                break
        else:
            if len(entries) == cfg.bank_capacity:
                out.append(entries.pop(0))
            entries.append(dict(ts=ts, ch=ch, amp=amp, members=[(ch, amp)], order=created))
            created += 1
    return out + entries


@settings(max_examples=150, deadline=None)
@given(peaks, st.sampled_from(list(LocalizationMode)))
def test_bank_against_model(raw, mode):
    geo = ProbeGeometry.neuropixels(48)
    cfg = PipelineConfig(num_channels=48, localization_mode=mode)
    bank = SpikeBank(cfg, geo)
    got, ts = [], 0
    for dt, ch, amp in raw:
        ts += dt
        while (ev := bank.tick(ts)) is not None:
            got.append(ev)
        if (ev := bank.feed_peak(Peak(ch, ts, amp))) is not None:
            got.append(ev)
        assert len(bank) <= 16
    got += bank.flush()
    want = model_run(raw, cfg, geo)
    assert [(e.timestep, e.central_channel, e.amplitude) for e in got] == [
        (w["ts"], w["ch"], w["amp"]) for w in want
    ]
    orders = [w["order"] for w in want]
    assert orders == sorted(orders)  # FIFO
    for ev, w in zip(got, want):
        amps = [a for _, a in w["members"]]
        assert ev.amplitude == max(amps)
        assert w["members"][amps.index(max(amps))][0] == ev.central_channel
        xs = [geo[c][0] for c, _ in w["members"]]
        zs = [geo[c][1] for c, _ in w["members"]]
        x, z = ev.position
        assert min(xs) <= x <= max(xs) and min(zs) <= z <= max(zs)
