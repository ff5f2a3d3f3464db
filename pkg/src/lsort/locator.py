"""Spike bank: groups peaks into spikes and localizes them."""

from __future__ import annotations

import numpy as np

from .core import (
    POSITION_SCALE,
    LocalizationMode,
    Peak,
    PipelineConfig,
    ProbeGeometry,
    SpikeEvent,
)
from .errors import UnknownChannel, ZeroMass
from .fixedpoint import round_div, round_half_away
from .kernels import bank_run


class SpikeBankEntry:
    __slots__ = ("timestep", "channel", "amplitude", "sum_ax", "sum_az", "sum_a")

    def __init__(self, peak: Peak, gx: int = 0, gz: int = 0):
        self.timestep = peak.timestep
        self.channel = peak.channel
        self.amplitude = peak.amplitude
        # amplitude-weighted sums on the quarter-micrometre grid
        self.sum_ax = peak.amplitude * gx
        self.sum_az = peak.amplitude * gz
        self.sum_a = peak.amplitude

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.timestep, self.channel, self.amplitude)

    def __repr__(self):
        return f"SpikeBankEntry{self.as_tuple()}"


def localize_central(channel: int, geometry: ProbeGeometry) -> tuple[float, float]:
    return geometry[channel]


def localize_com(sum_ax: float, sum_az: float, sum_a: float) -> tuple[float, float]:
    """Amplitude-weighted centre of mass, rounded to the quarter-micrometre grid.

    The sums are in micrometre units (sum of amp*x, sum of amp*z, sum of amp).
    """
    if sum_a <= 0:
        raise ZeroMass("centre of mass needs positive total amplitude")
    if all(float(v).is_integer() for v in (sum_ax * POSITION_SCALE, sum_az * POSITION_SCALE, sum_a)):
        a = int(sum_a)
        x = round_div(int(sum_ax * POSITION_SCALE), a)
        z = round_div(int(sum_az * POSITION_SCALE), a)
    else:
        x = round_half_away(sum_ax * POSITION_SCALE / sum_a)
        z = round_half_away(sum_az * POSITION_SCALE / sum_a)
    return x / POSITION_SCALE, z / POSITION_SCALE


class SpikeBank:
    """FIFO of ongoing spikes, oldest first, capped at ``cfg.bank_capacity``."""

    def __init__(self, cfg: PipelineConfig, geometry: ProbeGeometry):
        self.capacity = cfg.bank_capacity
        self.match_window = cfg.match_window
        self.emit_gap = cfg.emit_gap
        self.com = cfg.localization_mode is LocalizationMode.PEAK_COM
        self.geometry = geometry
        self.grid = [tuple(int(v) for v in row) for row in geometry.grid]
        self.near = geometry.proximity(cfg.match_radius_um).tolist()
        self.entries: list[SpikeBankEntry] = []
        self.early_emissions = 0

    def __len__(self):
        return len(self.entries)

    def _event(self, e: SpikeBankEntry) -> SpikeEvent:
        if self.com:
            a = e.sum_a
            pos = (round_div(e.sum_ax, a) / POSITION_SCALE, round_div(e.sum_az, a) / POSITION_SCALE)
        else:
            gx, gz = self.grid[e.channel]
            pos = (gx / POSITION_SCALE, gz / POSITION_SCALE)
        return SpikeEvent(e.timestep, e.channel, e.amplitude, pos)

    def feed_peak(self, p: Peak) -> SpikeEvent | None:
        if not 0 <= p.channel < len(self.grid):
            raise UnknownChannel(p.channel)
        near_row = self.near[p.channel]
        for e in self.entries:
            if p.timestep - e.timestep <= self.match_window and near_row[e.channel]:
                if self.com:
                    gx, gz = self.grid[p.channel]
                    e.sum_ax += p.amplitude * gx
                    e.sum_az += p.amplitude * gz
                    e.sum_a += p.amplitude
                if p.amplitude > e.amplitude:
                    e.timestep, e.channel, e.amplitude = p.timestep, p.channel, p.amplitude
                return None
        out = None
        if len(self.entries) >= self.capacity:
            out = self._event(self.entries.pop(0))
            self.early_emissions += 1
        gx, gz = self.grid[p.channel]
        self.entries.append(SpikeBankEntry(p, gx, gz))
        return out

    def due_at(self) -> int | None:
        """First timestep at which ``tick`` would emit the head, if any."""
        if not self.entries:
            return None
        return self.entries[0].timestep + self.emit_gap + 1

    def tick(self, now: int) -> SpikeEvent | None:
        if self.entries and now - self.entries[0].timestep > self.emit_gap:
            return self._event(self.entries.pop(0))
        return None

    def flush(self) -> list[SpikeEvent]:
        out = [self._event(e) for e in self.entries]
        self.entries.clear()
        return out


def feed_peak(bank: SpikeBank, p: Peak) -> SpikeEvent | None:
    return bank.feed_peak(p)


def tick(bank: SpikeBank, now: int) -> SpikeEvent | None:
    return bank.tick(now)


class BlockBank:
    """Array-backed spike bank for the block path; same emissions as ``SpikeBank``."""

    def __init__(self, cfg: PipelineConfig, geometry: ProbeGeometry):
        self.capacity = cfg.bank_capacity
        self.match_window = cfg.match_window
        self.emit_gap = cfg.emit_gap
        self.com = cfg.localization_mode is LocalizationMode.PEAK_COM
        self.num_channels = geometry.num_channels
        self.near = np.ascontiguousarray(geometry.proximity(cfg.match_radius_um))
        self.gx = np.ascontiguousarray(geometry.grid[:, 0], dtype=np.int64)
        self.gz = np.ascontiguousarray(geometry.grid[:, 1], dtype=np.int64)
        self._grid = [tuple(int(v) for v in row) for row in geometry.grid]
        self._rows = np.zeros((self.capacity, 6), dtype=np.int64)
        self._state = np.zeros(3, dtype=np.int64)  # next cycle, fill, early emissions
        self._out = np.zeros((0, 6), dtype=np.int64)

    def __len__(self):
        return int(self._state[1])

    @property
    def early_emissions(self) -> int:
        return int(self._state[2])

    @property
    def entries(self) -> list[tuple[int, int, int]]:
        return [tuple(r) for r in self._rows[: len(self), :3].tolist()]

    def _events(self, rows) -> list[SpikeEvent]:
        out = []
        for ts, ch, amp, sx, sz, sa in rows:
            if self.com:
                pos = (round_div(sx, sa) / POSITION_SCALE, round_div(sz, sa) / POSITION_SCALE)
            else:
                gx, gz = self._grid[ch]
                pos = (gx / POSITION_SCALE, gz / POSITION_SCALE)
            out.append(SpikeEvent(ts, ch, amp, pos))
        return out

    def run(self, cycles: np.ndarray, amps: np.ndarray, base: int, end: int) -> list[SpikeEvent]:
        """Feed peaks at global cycles ``base + cycles`` and tick every idle cycle before ``end``."""
        need = len(cycles) + self.capacity
        if self._out.shape[0] < need:
            self._out = np.zeros((max(need, 2 * self._out.shape[0]), 6), dtype=np.int64)
        n = bank_run(
            cycles, amps, base, end, self.num_channels, self._state, self._rows,
            self.near, self.gx, self.gz, self.capacity, self.match_window, self.emit_gap, self._out,
        )
        return self._events(self._out[:n].tolist())

    def flush(self) -> list[SpikeEvent]:
        rows = self._rows[: len(self)].tolist()
        self._state[1] = 0
        return self._events(rows)
