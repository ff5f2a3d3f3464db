"""Filter -> detector -> locator -> clusterer over a channel-interleaved stream."""

from __future__ import annotations

import time

import numpy as np

from .clusterer import ClusterSet
from .core import (
    ClusterMerge,
    Peak,
    PipelineConfig,
    ProbeGeometry,
    Sample,
    SortedSpike,
    SpikeEvent,
)
from .detector import ChannelDetectState
from .errors import ConfigMismatch, OutOfOrderInput
from .filter import FilterState, default_coeffs, filter_step
from .kernels import KernelState
from .locator import BlockBank, SpikeBank


class Pipeline:
    """One sorting run. Feed either single samples (``process_sample``, the
    reference path) or whole frame blocks (``process_block``, compiled); the
    two produce identical events but cannot be mixed on one instance.
    """

    def __init__(self, config: PipelineConfig, geometry: ProbeGeometry):
        if geometry.num_channels != config.num_channels:
            raise ConfigMismatch(
                f"config has {config.num_channels} channels, geometry has {geometry.num_channels}"
            )
        config.validate()
        self.config = config
        self.geometry = geometry
        self.coeffs = default_coeffs(config.sampling_rate_hz, config.f_lo_hz, config.f_hi_hz)
        self.bank = SpikeBank(config, geometry)
        self.clusters = ClusterSet(
            config.cluster_threshold_um, config.max_clusters, config.strict_hardware_merge
        )
        self._nth = config.n_th_raw
        self._path: str | None = None
        self._filter: FilterState | None = None
        self._detectors: list[ChannelDetectState] | None = None
        self._kernel: KernelState | None = None
        # stream position
        self._next_channel = 0
        self._frame_ts: int | None = None
        self._last_ts = -1
        self.n_samples = 0
        self.n_peaks = 0
        self.n_spikes = 0
        self.n_merges = 0
        self.timing = {"filter_detect": 0.0, "locate": 0.0, "cluster": 0.0}

    @property
    def num_channels(self) -> int:
        return self.config.num_channels

    def _use(self, path: str):
        if self._path is None:
            self._path = path
            if path == "sample":
                C = self.num_channels
                self._filter = FilterState(C)
                self._detectors = [
                    ChannelDetectState(c, self.config.median_mode, self.config.median_window)
                    for c in range(C)
                ]
            else:
                self.bank = BlockBank(self.config, self.geometry)
                self._kernel = KernelState(
                    self.num_channels, self.config.median_mode,
                    self.config.median_window, self.coeffs, self._nth,
                )
        elif self._path != path:
            raise RuntimeError("process_sample and process_block cannot be mixed on one pipeline")

    def _classify(self, ev: SpikeEvent) -> list:
        t0 = time.perf_counter()
        cid, merges = self.clusters.assign(ev.position)
        self.timing["cluster"] += time.perf_counter() - t0
        self.n_spikes += 1
        self.n_merges += len(merges)
        return [SortedSpike(ev.timestep, cid, ev.position, ev.central_channel, ev.amplitude), *merges]

    def process_sample(self, s: Sample) -> list:
        self._use("sample")
        ch, ts, value = s
        if ch != self._next_channel:
            raise OutOfOrderInput(f"expected channel {self._next_channel}, got {ch}")
        if ch == 0:
            if ts <= self._last_ts:
                raise OutOfOrderInput(f"timestep {ts} does not advance past {self._last_ts}")
            self._frame_ts = ts
        elif ts != self._frame_ts:
            raise OutOfOrderInput(f"channel {ch} carries timestep {ts}, frame is {self._frame_ts}")
        self._next_channel = (ch + 1) % self.num_channels
        self._last_ts = ts
        self.n_samples += 1

        y = filter_step(self._filter, ch, value, self.coeffs)
        peak = self._detectors[ch].detect(ts, y, self._nth)
        if peak is not None:
            self.n_peaks += 1
            ev = self.bank.feed_peak(peak)
        else:
            ev = self.bank.tick(ts)
        return self._classify(ev) if ev is not None else []

    def process_block(self, frames: np.ndarray) -> list:
        """Process consecutive whole frames, shape (T, C), starting at the next timestep."""
        self._use("block")
        frames = np.asarray(frames)
        if frames.ndim != 2 or frames.shape[1] != self.num_channels:
            raise ConfigMismatch(f"expected (T, {self.num_channels}) frames, got {frames.shape}")
        if self._next_channel != 0:
            raise OutOfOrderInput("block must start on a frame boundary")
        C = self.num_channels
        ts0 = self._last_ts + 1
        T = frames.shape[0]

        t0 = time.perf_counter()
        batches = self._kernel.run(frames)
        t1 = time.perf_counter()
        self.timing["filter_detect"] += t1 - t0

        events: list = []
        c0 = self.timing["cluster"]
        end = (ts0 + T) * C
        for k, (start, cycles, amps) in enumerate(batches):
            stop = (ts0 + batches[k + 1][0]) * C if k + 1 < len(batches) else end
            for ev in self.bank.run(cycles, amps, (ts0 + start) * C, stop):
                events.extend(self._classify(ev))
            self.n_peaks += len(cycles)
        self._last_ts = ts0 + T - 1
        self.n_samples += T * C
        self.timing["locate"] += time.perf_counter() - t1 - (self.timing["cluster"] - c0)
        return events

    def flush(self) -> list:
        events: list = []
        for ev in self.bank.flush():
            events.extend(self._classify(ev))
        return events

    def run(self, chunks, flush: bool = True) -> list:
        """Process an iterable of (T, C) blocks and optionally flush."""
        events: list = []
        for chunk in chunks:
            events.extend(self.process_block(chunk))
        if flush:
            events.extend(self.flush())
        return events

    @property
    def filter_saturations(self) -> int:
        if self._kernel is not None:
            return int(self._kernel.sat[0])
        if self._filter is not None:
            return self._filter.saturations
        return 0

    def stats(self) -> dict:
        return {
            "samples": self.n_samples,
            "peaks": self.n_peaks,
            "spikes": self.n_spikes,
            "merges": self.n_merges,
            "filter_saturations": self.filter_saturations,
            "bank_early_emissions": self.bank.early_emissions,
            "clusters_created": self.clusters.next_id,
            "clusters_alive": len(self.clusters),
            "cluster_capacity_overflows": self.clusters.capacity_overflows,
        }


def new_pipeline(config: PipelineConfig, geometry: ProbeGeometry) -> Pipeline:
    return Pipeline(config, geometry)


def process_sample(state: Pipeline, s: Sample) -> list:
    return state.process_sample(s)


def flush(state: Pipeline) -> list:
    return state.flush()


def is_spike(ev) -> bool:
    return isinstance(ev, SortedSpike)


def is_merge(ev) -> bool:
    return isinstance(ev, ClusterMerge)
