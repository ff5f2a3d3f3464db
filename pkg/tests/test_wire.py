import io
import random
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lsort.clusterer import Cluster
from lsort.core import ClusterMerge, ProbeGeometry, Sample, SortedSpike
from lsort.errors import DuplicateChannel, FieldOverflow, MissingChannel, ParseError, TruncatedFrame, TruncatedFrameWarning
from lsort.wire import (
    RecordingReader,
    decode_events,
    encode_events,
    format_clusters_csv,
    format_events_csv,
    format_geometry,
    pack_bits,
    parse_events_csv,
    read_geometry,
    read_recording,
    unpack_bits,
    write_recording,
)


def bits(s):
    return [int(c) for c in s.replace(" ", "")]


def test_little_endian_and_saturation():
    r = RecordingReader(bytes([0x34, 0x12]), 1)
    assert list(r.samples()) == [Sample(0, 0, 2047)]
    assert r.saturated == 1


def test_interleave_order():
    raw = np.array([1, 2, 3, 4], dtype="<i2").tobytes()
    assert [(s.channel, s.timestep) for s in read_recording(raw, 2)] == [(0, 0), (1, 0), (0, 1), (1, 1)]


def test_negative_one():
    assert list(read_recording(b"\xff\xff", 1)) == [Sample(0, 0, -1)]


def test_truncated_frame_warns_and_drops():
    raw = np.array([1, 2, 3], dtype="<i2").tobytes()
    with pytest.warns(TruncatedFrameWarning):
        r = RecordingReader(raw, 2)
    assert r.num_frames == 1


def test_reader_accepts_path_and_file(tmp_path):
    frames = np.arange(-6, 6, dtype=np.int16).reshape(4, 3)
    path = tmp_path / "rec.bin"
    assert write_recording([frames[:2], frames[2:]], path) == 4
    from_path = np.concatenate(list(RecordingReader(path, 3).chunks(3)))
    with open(path, "rb") as fh:
        from_file = np.concatenate(list(RecordingReader(fh, 3).chunks()))
    assert np.array_equal(from_path, frames) and np.array_equal(from_file, frames)


def test_reader_is_deterministic():
    raw = np.random.default_rng(1).integers(-3000, 3000, 600).astype("<i2").tobytes()
    assert list(read_recording(raw, 6)) == list(read_recording(io.BytesIO(raw), 6))


def test_geometry_parse():
    geo = read_geometry("0 0 0\n1 32 0")
    assert geo.num_channels == 2 and geo[1] == (32.0, 0.0)


@pytest.mark.parametrize(
    "text, exc", [("0 0 0\n0 1 1", DuplicateChannel), ("1 0 0", MissingChannel), ("0 x 0", ParseError), ("", ParseError)]
)
def test_geometry_errors(text, exc):
    with pytest.raises(exc):
        read_geometry(text)


def test_geometry_roundtrip():
    geo = ProbeGeometry.neuropixels(20)
    assert read_geometry(format_geometry(geo)) == geo


def test_empty_stream_is_one_idle_bit():
    assert encode_events([]) == [1]


def test_spike_frame_layout():
    out = encode_events([SortedSpike(5, 3)], ts_bits=8, cluster_bits=4)
    assert out == bits("0 1 00000101 0011") + [1]


def test_merge_frame_layout():
    out = encode_events([ClusterMerge(0, 7)], cluster_bits=4)
    assert out == bits("0 0 0000 0111") + [1]


def test_all_idle_decodes_to_nothing():
    assert decode_events([1] * 100) == []


def test_truncated_payload():
    stream = encode_events([SortedSpike(5, 3)], ts_bits=8, cluster_bits=4)[:-4]
    with pytest.raises(TruncatedFrame):
        decode_events(stream, ts_bits=8, cluster_bits=4)


def test_field_overflow():
    with pytest.raises(FieldOverflow):
        encode_events([SortedSpike(256, 0)], ts_bits=8)
    with pytest.raises(FieldOverflow):
        encode_events([ClusterMerge(0, 512)])


events_st = st.lists(
    st.one_of(
        st.builds(SortedSpike, st.integers(0, 2**32 - 1), st.integers(0, 511)),
        st.builds(ClusterMerge, st.integers(0, 511), st.integers(0, 511)),
    ),
    max_size=30,
)


@given(events_st)
def test_codec_roundtrip(events):
    assert decode_events(encode_events(events)) == events


@given(events_st, st.integers(0, 20))
def test_extra_idle_bits_are_ignored(events, pad):
    stream = [1] * pad + encode_events(events) + [1] * pad
    assert decode_events(stream) == events


@given(st.lists(st.integers(0, 1), max_size=200))
def test_pack_bits_pads_with_idle(bs):
    packed = pack_bits(bs)
    back = unpack_bits(packed)
    assert back[: len(bs)] == bs
    assert all(b == 1 for b in back[len(bs) :])
    assert len(packed) == (len(bs) + 7) // 8


def test_pack_is_msb_first():
    assert pack_bits(bits("0100 0001")) == b"A"


def test_events_csv_roundtrip():
    evs = [SortedSpike(10, 2, (16.0, 20.25)), ClusterMerge(0, 2), SortedSpike(11, 0, (0.0, 0.0))]
    text = format_events_csv(evs)
    assert text.splitlines()[0] == "type,ts,cluster,x_um,z_um"
    assert text.splitlines()[2] == "merge,0,2,,"
    back = parse_events_csv(text)
    assert back == evs
    assert [e.position for e in back if isinstance(e, SortedSpike)] == [(16.0, 20.25), (0.0, 0.0)]


def test_events_csv_bad_row():
    with pytest.raises(ParseError):
        parse_events_csv("type,ts,cluster\nbogus,1,2\n")


def test_clusters_csv():
    text = format_clusters_csv([Cluster(0, (1.5, 2.0), 3, True)])
    assert text == "id,x_um,z_um,count\n0,1.5,2.0,3\n"


def test_random_byte_streams_never_crash_reader():
    rng = random.Random(0)
    for _ in range(50):
        n = rng.randrange(0, 40)
        raw = bytes(rng.randrange(256) for _ in range(n))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncatedFrameWarning)
            for s in read_recording(raw, 3):
                assert -2048 <= s.value <= 2047
