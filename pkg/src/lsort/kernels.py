"""Compiled filter + detect kernels over blocks of channel-interleaved frames.

These are the throughput path. Each kernel mirrors the pure-Python reference
in ``filter``, ``median`` and ``detector`` exactly; equivalence is covered by
the test suite.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .core import MedianMode
from .filter import HP_STATE_BITS, LP_STATE_BITS, FilterCoeffs
from .median import MAG_MAX

HP_LO, HP_HI = -(1 << (HP_STATE_BITS - 1)), (1 << (HP_STATE_BITS - 1)) - 1
LP_LO, LP_HI = -(1 << (LP_STATE_BITS - 1)), (1 << (LP_STATE_BITS - 1)) - 1


@njit(inline="always")
def _rs10(v):
    if v >= 0:
        return (v + 512) >> 10
    return -((-v + 512) >> 10)


@njit(inline="always")
def _clip(v, lo, hi):
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


@njit(inline="always")
def _filter(x, c, hp, lp, b0, b1, a1, c0, c1, d1):
    """One band-pass step; returns (y, saturation events)."""
    h = hp[c]
    wf = _rs10((x << 10) - a1 * h)
    w = _clip(wf, HP_LO, HP_HI)
    yf = _rs10(b0 * w + b1 * h)
    y = _clip(yf, -2048, 2047)
    ns = (w != wf) + (y != yf)
    hp[c] = w
    q = lp[c]
    wf = _rs10((y << 10) - d1 * q)
    w = _clip(wf, LP_LO, LP_HI)
    yf = _rs10(c0 * w + c1 * q)
    y2 = _clip(yf, -2048, 2047)
    ns += (w != wf) + (y2 != yf)
    lp[c] = w
    return y2, ns


@njit(inline="always")
def _sorted_push(vals, ages, r, fill, cap, v):
    """Median of vals[r, :fill] plus v; then store v (evicting age 0 when full).

    Mirrors ``median._SortedAgedBuffer.push`` on row ``r`` of the state arrays.
    """
    rank = 0
    for i in range(fill):
        if vals[r, i] <= v:
            rank += 1
    k = (fill + 2) // 2
    if k <= rank:
        med = vals[r, k - 1]
    elif k == rank + 1:
        med = v
    else:
        med = vals[r, k - 2]
    if cap == 0:
        return med
    if fill < cap:
        for i in range(fill, rank, -1):
            vals[r, i] = vals[r, i - 1]
            ages[r, i] = ages[r, i - 1]
        vals[r, rank] = v
        ages[r, rank] = fill
        return med
    o = 0
    for i in range(cap):
        if ages[r, i] == 0:
            o = i
    if o < rank:
        rank -= 1
    for i in range(o, cap - 1):
        vals[r, i] = vals[r, i + 1]
        ages[r, i] = ages[r, i + 1] - 1
    for i in range(o):
        ages[r, i] -= 1
    for i in range(cap - 1, rank, -1):
        vals[r, i] = vals[r, i - 1]
        ages[r, i] = ages[r, i - 1]
    vals[r, rank] = v
    ages[r, rank] = cap - 1
    return med


@njit(inline="always")
def _kth_sorted(tmp, n, k):
    for i in range(1, n):
        v = tmp[i]
        j = i - 1
        while j >= 0 and tmp[j] > v:
            tmp[j + 1] = tmp[j]
            j -= 1
        tmp[j + 1] = v
    return tmp[k - 1]


@njit(inline="always")
def _emit(t, start, C, c, amp, out_cycle, out_amp, n):
    out_cycle[n] = (t - start) * C + c
    out_amp[n] = amp
    return n + 1


@njit(inline="always")
def _shadow_push(ring, srt, r, pos, fill, size, m):
    """Ring in arrival order plus a sorted copy; swap the evicted value for ``m``."""
    if fill == size:
        old = ring[r, pos]
        i = 0
        while srt[r, i] != old:
            i += 1
        # close the gap, then open one at the insertion point
        while i + 1 < size and srt[r, i + 1] < m:
            srt[r, i] = srt[r, i + 1]
            i += 1
        while i > 0 and srt[r, i - 1] > m:
            srt[r, i] = srt[r, i - 1]
            i -= 1
        srt[r, i] = m
    else:
        i = fill
        while i > 0 and srt[r, i - 1] > m:
            srt[r, i] = srt[r, i - 1]
            i -= 1
        srt[r, i] = m
    ring[r, pos] = m


@njit(cache=True)
def _run_exact(frames, start, hp, lp, co, sat, warm, size, nth, ring, srt, ring_pos, out_cycle, out_amp):
    T, C = frames.shape
    cap = out_cycle.shape[0]
    n = 0
    nsat = 0
    b0, b1, a1, c0, c1, d1 = co[0], co[1], co[2], co[3], co[4], co[5]
    t = start
    while t < T and n + C <= cap:
        for c in range(C):
            y, ns = _filter(np.int64(frames[t, c]), c, hp, lp, b0, b1, a1, c0, c1, d1)
            nsat += ns
            amp = y if y >= 0 else -y
            m = amp if amp < MAG_MAX else MAG_MAX
            f = warm[c]
            p = ring_pos[c]
            _shadow_push(ring, srt, c, p, f, size, m)
            p += 1
            ring_pos[c] = 0 if p == size else p
            if f < size:
                warm[c] = f + 1
            if f + 1 >= size and amp > ((nth * srt[c, (size - 1) // 2]) >> 2):
                n = _emit(t, start, C, c, amp, out_cycle, out_amp, n)
        t += 1
    sat[0] += nsat
    return t - start, n


@njit(cache=True)
def _run_incremental(frames, start, hp, lp, co, sat, warm, size, nth, svals, sages, out_cycle, out_amp):
    T, C = frames.shape
    cap = out_cycle.shape[0]
    n = 0
    nsat = 0
    b0, b1, a1, c0, c1, d1 = co[0], co[1], co[2], co[3], co[4], co[5]
    t = start
    while t < T and n + C <= cap:
        for c in range(C):
            y, ns = _filter(np.int64(frames[t, c]), c, hp, lp, b0, b1, a1, c0, c1, d1)
            nsat += ns
            amp = y if y >= 0 else -y
            m = amp if amp < MAG_MAX else MAG_MAX
            f = warm[c]
            stored = f if f < size - 1 else size - 1
            med = _sorted_push(svals, sages, c, stored, size - 1, m)
            if f < size:
                warm[c] = f + 1
            if f + 1 >= size and amp > ((nth * med) >> 2):
                n = _emit(t, start, C, c, amp, out_cycle, out_amp, n)
        t += 1
    sat[0] += nsat
    return t - start, n


@njit(cache=True)
def _run_disjoint(frames, start, hp, lp, co, sat, warm, nth, ring, ring_pos, out_cycle, out_amp):
    T, C = frames.shape
    cap = out_cycle.shape[0]
    n = 0
    nsat = 0
    b0, b1, a1, c0, c1, d1 = co[0], co[1], co[2], co[3], co[4], co[5]
    tmp = np.empty(10, np.int64)
    t = start
    while t < T and n + C <= cap:
        for c in range(C):
            y, ns = _filter(np.int64(frames[t, c]), c, hp, lp, b0, b1, a1, c0, c1, d1)
            nsat += ns
            amp = y if y >= 0 else -y
            m = amp if amp < MAG_MAX else MAG_MAX
            p = ring_pos[c]
            ring[c, p] = m
            p = 0 if p == 24 else p + 1
            ring_pos[c] = p
            f = warm[c]
            if f < 25:
                warm[c] = f + 1
            if f + 1 >= 25:
                for b in range(5):
                    for i in range(5):
                        tmp[i] = ring[c, (p + 5 * b + i) % 25]
                    tmp[5 + b] = _kth_sorted(tmp, 5, 3)
                for i in range(5):
                    tmp[i] = tmp[5 + i]
                med = _kth_sorted(tmp, 5, 3)
                if amp > ((nth * med) >> 2):
                    n = _emit(t, start, C, c, amp, out_cycle, out_amp, n)
        t += 1
    sat[0] += nsat
    return t - start, n


@njit(inline="always")
def _med5(a, b, c, d, e):
    """Branch-free median of five."""
    f = max(min(a, b), min(c, d))
    g = min(max(a, b), max(c, d))
    return max(min(e, f), min(max(e, f), g))


@njit(cache=True)
def _run_approx(frames, start, hp, lp, co, sat, warm, nth, r1, p1, r2, p2, phase, held, out_cycle, out_amp):
    # Each stage's four stored entries are simply the four previous inputs, so
    # rings plus a median-of-5 network give the same outputs as the aged
    # sorted buffers of ``median.ApproxMoMState``.
    T, C = frames.shape
    cap = out_cycle.shape[0]
    n = 0
    nsat = 0
    b0, b1, a1, c0, c1, d1 = co[0], co[1], co[2], co[3], co[4], co[5]
    t = start
    while t < T and n + C <= cap:
        for c in range(C):
            y, ns = _filter(np.int64(frames[t, c]), c, hp, lp, b0, b1, a1, c0, c1, d1)
            nsat += ns
            amp = y if y >= 0 else -y
            m = amp if amp < MAG_MAX else MAG_MAX
            m1 = _med5(r1[c, 0], r1[c, 1], r1[c, 2], r1[c, 3], m)
            k = p1[c]
            r1[c, k] = m
            p1[c] = (k + 1) & 3
            ph = phase[c] + 1
            if ph == 5:
                ph = 0
                held[c] = _med5(r2[c, 0], r2[c, 1], r2[c, 2], r2[c, 3], m1)
                k = p2[c]
                r2[c, k] = m1
                p2[c] = (k + 1) & 3
            phase[c] = ph
            f = warm[c]
            if f < 25:
                warm[c] = f + 1
            if f + 1 >= 25 and amp > ((nth * held[c]) >> 2):
                n = _emit(t, start, C, c, amp, out_cycle, out_amp, n)
        t += 1
    sat[0] += nsat
    return t - start, n


class KernelState:
    """Array-backed per-channel filter and detector state for the block kernels."""

    def __init__(self, num_channels: int, mode: MedianMode, size: int, coeffs: FilterCoeffs, n_th_raw: int):
        C = num_channels
        self.C = C
        self.mode = MedianMode(mode)
        self.size = size
        self.nth = n_th_raw
        self.co = np.array(coeffs.highpass + coeffs.lowpass, dtype=np.int64)
        self.hp = np.zeros(C, np.int64)
        self.lp = np.zeros(C, np.int64)
        self.sat = np.zeros(1, np.int64)
        self.warm = np.zeros(C, np.int64)
        if self.mode is MedianMode.EXACT_SORT:
            self.ring = np.zeros((C, size), np.int64)
            self.srt = np.zeros((C, size), np.int64)
            self.ring_pos = np.zeros(C, np.int64)
        elif self.mode is MedianMode.INCREMENTAL_EXACT:
            self.svals = np.zeros((C, size - 1), np.int64)
            self.sages = np.zeros((C, size - 1), np.int64)
        elif self.mode is MedianMode.DISJOINT_MOM:
            self.ring = np.zeros((C, 25), np.int64)
            self.ring_pos = np.zeros(C, np.int64)
        else:
            self.r1 = np.zeros((C, 4), np.int64)
            self.p1 = np.zeros(C, np.int64)
            self.r2 = np.zeros((C, 4), np.int64)
            self.p2 = np.zeros(C, np.int64)
            self.phase = np.zeros(C, np.int64)
            self.held = np.zeros(C, np.int64)
        self._cap = max(1 << 16, 4 * C)
        self._out_cycle = np.empty(self._cap, np.int64)
        self._out_amp = np.empty(self._cap, np.int64)

    def _call(self, frames, start):
        common = (frames, start, self.hp, self.lp, self.co, self.sat, self.warm)
        out = (self._out_cycle, self._out_amp)
        m = self.mode
        if m is MedianMode.EXACT_SORT:
            return _run_exact(*common, self.size, self.nth, self.ring, self.srt, self.ring_pos, *out)
        if m is MedianMode.INCREMENTAL_EXACT:
            return _run_incremental(*common, self.size, self.nth, self.svals, self.sages, *out)
        if m is MedianMode.DISJOINT_MOM:
            return _run_disjoint(*common, self.nth, self.ring, self.ring_pos, *out)
        return _run_approx(*common, self.nth, self.r1, self.p1, self.r2, self.p2,
                           self.phase, self.held, *out)

    def run(self, frames: np.ndarray) -> list[tuple[int, np.ndarray, np.ndarray]]:
        """Filter and detect a (T, C) block.

        Returns batches of (first frame, cycle offsets, amplitudes).
        """
        T = frames.shape[0]
        start = 0
        batches = []
        while start < T:
            used, n = self._call(frames, start)
            batches.append((start, self._out_cycle[:n].copy(), self._out_amp[:n].copy()))
            start += used
        return batches


@njit(cache=True)
def nearest_alive(cx, cz, alive, px, pz, exclude):
    """Lowest-id alive cluster at minimum squared distance; (-1, 0) if none."""
    best = -1
    bd = 0
    for i in range(cx.shape[0]):
        if not alive[i] or i == exclude:
            continue
        dx = cx[i] - px
        dz = cz[i] - pz
        d = dx * dx + dz * dz
        if best < 0 or d < bd:
            best = i
            bd = d
    return best, bd


@njit(inline="always")
def _bank_pop(b, nb, out, no):
    for j in range(6):
        out[no, j] = b[0, j]
    for i in range(nb - 1):
        for j in range(6):
            b[i, j] = b[i + 1, j]
    return nb - 1, no + 1


@njit(cache=True)
def bank_run(cycles, amps, base, g_end, C, state, b, near, gx, gz, cap, mwin, gap, out):
    """Spike bank over one batch of peaks at global cycles ``base + cycles``.

    ``state`` holds [next cycle, bank fill, early emissions]; bank rows are
    (timestep, channel, amplitude, sum a*gx, sum a*gz, sum a). Emitted rows go
    to ``out`` in emission order; returns how many.
    """
    cur = state[0]
    nb = state[1]
    no = 0
    n = cycles.shape[0]
    for p in range(n + 1):
        g = base + cycles[p] if p < n else g_end
        # idle cycles before g: at most one head emission per cycle
        while nb > 0:
            due = (b[0, 0] + gap + 1) * C
            k = cur if cur > due else due
            if k >= g:
                break
            nb, no = _bank_pop(b, nb, out, no)
            cur = k + 1
        if cur < g:
            cur = g
        if p == n:
            break
        ts = g // C
        ch = g - ts * C
        a = amps[p]
        hit = False
        for i in range(nb):
            if ts - b[i, 0] <= mwin and near[ch, b[i, 1]]:
                b[i, 3] += a * gx[ch]
                b[i, 4] += a * gz[ch]
                b[i, 5] += a
                if a > b[i, 2]:
                    b[i, 0] = ts
                    b[i, 1] = ch
                    b[i, 2] = a
                hit = True
                break
        if not hit:
            if nb >= cap:
                nb, no = _bank_pop(b, nb, out, no)
                state[2] += 1
            b[nb, 0] = ts
            b[nb, 1] = ch
            b[nb, 2] = a
            b[nb, 3] = a * gx[ch]
            b[nb, 4] = a * gz[ch]
            b[nb, 5] = a
            nb += 1
        cur = g + 1
    state[0] = cur
    state[1] = nb
    return no
