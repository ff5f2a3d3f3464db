import random

from hypothesis import given
from hypothesis import strategies as st

from lsort.core import MedianMode, Peak
from lsort.detector import ChannelDetectState, detect, threshold


def warm_state(median_value, mode=MedianMode.EXACT_SORT):
    s = ChannelDetectState(3, mode)
    for t in range(25):
        assert detect(s, t, median_value, 6.0) is None
    return s


def test_threshold_truncates():
    assert threshold(24, 10) == 60
    assert threshold(25, 3) == 18  # 75 / 4 = 18.75


def test_negative_sample_above_threshold_fires():
    s = warm_state(10)
    # the new sample joins the window but leaves its median at 10
    assert detect(s, 25, -61, 6.0) == Peak(3, 25, 61)


def test_sample_below_threshold_is_quiet():
    s = warm_state(10)
    assert detect(s, 25, 59, 6.0) is None
    assert s.last_threshold == 60


def test_blind_during_warmup():
    s = ChannelDetectState(0)
    for t in range(24):
        assert detect(s, t, 2047, 6.0) is None
    assert not s.warm


@given(st.integers(0, 400), st.integers(0, 2047), st.integers(0, 2047))
def test_monotone_in_amplitude(med, a, b):
    lo, hi = sorted((a, b))
    s1, s2 = warm_state(med), warm_state(med)
    if detect(s1, 25, lo, 6.0) is not None:
        assert detect(s2, 25, hi, 6.0) is not None


def test_exact_and_incremental_detect_identically():
    rng = random.Random(4)
    a = ChannelDetectState(0, MedianMode.EXACT_SORT)
    b = ChannelDetectState(0, MedianMode.INCREMENTAL_EXACT)
    for t in range(20_000):
        y = int(rng.gauss(0, 40)) if rng.random() > 0.01 else rng.choice((-600, 600))
        assert detect(a, t, y, 6.0) == detect(b, t, y, 6.0)
