"""Sliding-window median estimators over per-channel magnitude streams.

Four calculators share one interface, ``push(v) -> estimate``:

* :class:`ExactWindow` keeps samples in arrival order and sorts on every push.
* :class:`IncrementalWindow` keeps the previous N-1 samples sorted by value,
  each tagged with an age counter, and finds the new median with one linear
  scan (remove the age-0 entry, insert the new sample).
* :class:`DisjointMoMWindow` returns the median of the five block medians of
  the trailing 25 samples.
* :class:`ApproxMoMState` chains two four-entry incremental buffers: the first
  tracks the five most recent samples, the second receives the first stage's
  median once every five pushes and holds its output in between.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

from .core import MedianMode
from .errors import EmptyInput, WrongLength
from .fixedpoint import pack_fields, unpack_fields

MAG_BITS = 11  # magnitudes saturate at 2047 before entering a window
MAG_MAX = (1 << MAG_BITS) - 1


def magnitude(y: int) -> int:
    return min(abs(y), MAG_MAX)


def oracle_median(values: Sequence[int]) -> int:
    """The ceil(n/2)-th smallest value, by full sort."""
    if len(values) == 0:
        raise EmptyInput("median of an empty sequence")
    return sorted(values)[(len(values) + 1) // 2 - 1]


def oracle_mom25(values: Sequence[int]) -> int:
    """Median of the medians of five consecutive disjoint blocks of five."""
    if len(values) != 25:
        raise WrongLength(f"expected 25 values, got {len(values)}")
    return oracle_median([oracle_median(values[i : i + 5]) for i in range(0, 25, 5)])


class ExactWindow:
    def __init__(self, size: int = 25):
        self.size = size
        self.ring: deque[int] = deque(maxlen=size)

    @property
    def fill(self) -> int:
        return len(self.ring)

    def push(self, v: int) -> int:
        self.ring.append(v)
        return oracle_median(self.ring)


class _SortedAgedBuffer:
    """Values kept in ascending order, each with an age counter (0 = oldest).

    Equal values are inserted after existing equals, so among equal values the
    older entry always sits first.
    """

    __slots__ = ("values", "ages", "capacity", "comparisons")

    def __init__(self, capacity: int, prefill: int | None = None):
        self.capacity = capacity
        if prefill is None:
            self.values: list[int] = []
            self.ages: list[int] = []
        else:
            self.values = [prefill] * capacity
            self.ages = list(range(capacity))
        self.comparisons = 0

    @property
    def fill(self) -> int:
        return len(self.values)

    def insert_rank(self, v: int) -> int:
        """Count of stored values <= v; one comparison per entry."""
        r = 0
        for stored in self.values:
            if stored <= v:
                r += 1
        self.comparisons += len(self.values)
        return r

    def kth_with(self, v: int, rank: int, k: int) -> int:
        """k-th smallest (1-based) of the stored values plus ``v`` at ``rank``."""
        if k <= rank:
            return self.values[k - 1]
        if k == rank + 1:
            return v
        return self.values[k - 2]

    def replace_oldest(self, v: int, rank: int) -> None:
        """Evict the age-0 entry (if full) and insert ``v`` as the newest."""
        vals, ages = self.values, self.ages
        if self.capacity == 0:
            return
        if len(vals) < self.capacity:
            new_age = len(vals)
            vals.insert(rank, v)
            ages.insert(rank, new_age)
            return
        oldest = ages.index(0)
        if oldest < rank:
            rank -= 1
        del vals[oldest]
        del ages[oldest]
        for i in range(len(ages)):
            ages[i] -= 1
        vals.insert(rank, v)
        ages.insert(rank, self.capacity - 1)

    def push(self, v: int) -> int:
        """Median of stored values plus ``v``, then store ``v``."""
        rank = self.insert_rank(v)
        n = len(self.values) + 1
        med = self.kth_with(v, rank, (n + 1) // 2)
        self.replace_oldest(v, rank)
        return med

    def in_age_order(self) -> list[int]:
        return [v for _, v in sorted(zip(self.ages, self.values))]

    def load_age_order(self, values: Sequence[int]) -> None:
        pairs = sorted((v, age) for age, v in enumerate(values))
        self.values = [v for v, _ in pairs]
        self.ages = [a for _, a in pairs]


class IncrementalWindow:
    """Exact sliding median over ``size`` samples using N-1 stored entries."""

    def __init__(self, size: int = 25):
        self.size = size
        self.buf = _SortedAgedBuffer(size - 1)
        self.comparisons = 0  # value comparisons made by the last push

    @property
    def fill(self) -> int:
        return self.buf.fill

    @property
    def values(self) -> list[int]:
        return self.buf.values

    @property
    def ages(self) -> list[int]:
        return self.buf.ages

    @property
    def age_bits(self) -> int:
        return max(1, (self.size - 2).bit_length())

    def push(self, v: int) -> int:
        before = self.buf.comparisons
        med = self.buf.push(v)
        self.comparisons = self.buf.comparisons - before
        return med


class DisjointMoMWindow:
    def __init__(self, size: int = 25):
        if size != 25:
            raise WrongLength("median-of-median window is fixed at 25")
        self.ring: deque[int] = deque(maxlen=25)

    @property
    def fill(self) -> int:
        return len(self.ring)

    def push(self, v: int) -> int:
        self.ring.append(v)
        if len(self.ring) < 25:
            return oracle_median(self.ring)
        return oracle_mom25(list(self.ring))


class ApproxMoMState:
    """Two-stage incremental approximate median-of-median for a 25-sample window.

    Both stages start zero-filled, as after a memory reset. The second stage
    and the held output change only on every fifth push.
    """

    STAGE = 4
    PERIOD = 5
    PHASE_BITS = 3

    def __init__(self):
        self.stage1 = _SortedAgedBuffer(self.STAGE, prefill=0)
        self.stage2 = _SortedAgedBuffer(self.STAGE, prefill=0)
        self.phase = 0
        self.latest_output = 0
        self.comparisons = 0

    def push(self, v: int) -> int:
        c0 = self.stage1.comparisons + self.stage2.comparisons
        m1 = self.stage1.push(v)
        self.phase = (self.phase + 1) % self.PERIOD
        if self.phase == 0:
            self.latest_output = self.stage2.push(m1)
        self.comparisons = self.stage1.comparisons + self.stage2.comparisons - c0
        return self.latest_output

    @property
    def updated(self) -> bool:
        """True when the last push refreshed the second stage."""
        return self.phase == 0

    # Each stage is stored as four magnitudes in age order; the sorted layout
    # and age counters are recovered from that order on load.
    _WIDTHS = (MAG_BITS,) * 8 + (MAG_BITS, PHASE_BITS)

    @classmethod
    def state_bits(cls) -> int:
        return sum(cls._WIDTHS)

    def pack(self) -> int:
        vals = self.stage1.in_age_order() + self.stage2.in_age_order()
        fields = [(v, MAG_BITS) for v in vals]
        fields += [(self.latest_output, MAG_BITS), (self.phase, self.PHASE_BITS)]
        return pack_fields(fields)

    @classmethod
    def unpack(cls, word: int) -> "ApproxMoMState":
        parts = unpack_fields(word, cls._WIDTHS)
        s = cls()
        s.stage1.load_age_order(parts[0:4])
        s.stage2.load_age_order(parts[4:8])
        s.latest_output, s.phase = parts[8], parts[9]
        return s


def make_window(mode: MedianMode, size: int = 25):
    mode = MedianMode(mode)
    if mode is MedianMode.EXACT_SORT:
        return ExactWindow(size)
    if mode is MedianMode.INCREMENTAL_EXACT:
        return IncrementalWindow(size)
    if mode is MedianMode.DISJOINT_MOM:
        return DisjointMoMWindow(size)
    if size != 25:
        raise WrongLength("median-of-median window is fixed at 25")
    return ApproxMoMState()


# aliases matching the operation names used throughout the docs
def push_exact(w: ExactWindow, v: int) -> int:
    return w.push(v)


def push_incremental(w: IncrementalWindow, v: int) -> int:
    return w.push(v)


def push_approx_mom(s: ApproxMoMState, v: int) -> int:
    return s.push(v)


def median_trace(values: Sequence[int], mode: MedianMode, size: int = 25):
    """Yield (index, estimate, oracle) for each push of ``values``.

    The oracle is the full-sort median of the trailing window for the exact
    modes and the disjoint median of medians for the MoM modes. For the
    approximate mode it is taken at the last second-stage update, with the
    history before the first sample read as zeros (the reset state).
    """
    mode = MedianMode(mode)
    w = make_window(mode, size)
    vals = list(values)
    padded = [0] * 24 + vals
    for i, v in enumerate(vals):
        est = w.push(v)
        if mode is MedianMode.INCREMENTAL_APPROX_MOM:
            u = (i + 1) // 5 * 5
            ref = oracle_mom25(padded[u - 1 : u + 24]) if u else 0
        elif mode is MedianMode.DISJOINT_MOM and i + 1 >= 25:
            ref = oracle_mom25(vals[i - 24 : i + 1])
        else:
            ref = oracle_median(vals[max(0, i + 1 - size) : i + 1])
        yield i, est, ref
