"""Synthetic multichannel recordings with ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import ProbeGeometry
from .errors import ParseError

TEMPLATE_LEN = 30
TROUGH_INDEX = 6
CHUNK_FRAMES = 30000  # noise is drawn in fixed-size chunks so output is seed-stable


@dataclass(frozen=True)
class Unit:
    x: float
    z: float
    amplitude: float
    rate_hz: float


@dataclass(frozen=True)
class SynthConfig:
    units: tuple[Unit, ...] = ()
    decay_um: float = 25.0
    noise_sigma: float = 30.0
    duration_s: float = 1.0
    sampling_rate_hz: float = 30000.0
    num_channels: int = 384
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        if self.noise_sigma < 0 or any(u.rate_hz < 0 for u in self.units):
            raise ValueError("rates and noise sigma must be non-negative")

    @property
    def num_frames(self) -> int:
        return int(round(self.duration_s * self.sampling_rate_hz))

    def dumps(self) -> str:
        lines = [
            f"decay_um={self.decay_um}",
            f"noise_sigma={self.noise_sigma}",
            f"duration_s={self.duration_s}",
            f"sampling_rate_hz={self.sampling_rate_hz}",
            f"num_channels={self.num_channels}",
            f"seed={self.seed}",
        ]
        lines += [f"unit={u.x} {u.z} {u.amplitude} {u.rate_hz}" for u in self.units]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SynthConfig":
        """key=value lines; ``unit=x z amplitude rate`` may repeat."""
        kw: dict = {}
        units = []
        casts = {"decay_um": float, "noise_sigma": float, "duration_s": float,
                 "sampling_rate_hz": float, "num_channels": int, "seed": int}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            try:
                if not sep:
                    raise ValueError
                if key == "unit":
                    x, z, a, r = (float(v) for v in value.replace(",", " ").split())
                    units.append(Unit(x, z, a, r))
                elif key in casts:
                    kw[key] = casts[key](value)
                else:
                    raise ParseError(f"line {lineno}: unknown key {key!r}")
            except ValueError:
                raise ParseError(f"line {lineno}: cannot parse {line!r}") from None
        return cls(units=tuple(units), **kw)


@dataclass(eq=False)
class GroundTruth:
    """Firings sorted by timestep (the template trough)."""

    units: np.ndarray
    timesteps: np.ndarray
    unit_positions: list[tuple[float, float]] = field(default_factory=list)

    def __len__(self):
        return len(self.timesteps)

    def __eq__(self, other):
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return (
            np.array_equal(self.units, other.units)
            and np.array_equal(self.timesteps, other.timesteps)
            and list(self.unit_positions) == list(other.unit_positions)
        )

    def to_csv(self) -> str:
        lines = ["unit,ts,x_um,z_um"]
        for u, t in zip(self.units.tolist(), self.timesteps.tolist()):
            x, z = self.unit_positions[u]
            lines.append(f"{u},{t},{x!r},{z!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "GroundTruth":
        rows = [r.split(",") for r in text.strip().splitlines()]
        if not rows or rows[0][:2] != ["unit", "ts"]:
            raise ParseError("ground truth CSV must start with 'unit,ts,x_um,z_um'")
        units, ts, pos = [], [], {}
        for r in rows[1:]:
            u, t = int(r[0]), int(r[1])
            units.append(u)
            ts.append(t)
            pos[u] = (float(r[2]), float(r[3]))
        n = max(pos) + 1 if pos else 0
        positions = [pos.get(u, (math.nan, math.nan)) for u in range(n)]
        return cls(np.array(units, dtype=np.int64), np.array(ts, dtype=np.int64), positions)


def template() -> np.ndarray:
    """1 ms biphasic waveform: sharp trough of -1 then a broader +0.4 lobe."""
    k = np.arange(TEMPLATE_LEN, dtype=np.float64)
    neg = 2 * TROUGH_INDEX
    w = np.where(
        k < neg,
        -np.sin(np.pi * k / neg),
        0.4 * np.sin(np.pi * (k - neg) / (TEMPLATE_LEN - neg)),
    )
    return w


def channel_scales(cfg: SynthConfig, geometry: ProbeGeometry) -> np.ndarray:
    """(units, C) peak contribution A * exp(-d / decay) of each unit on each channel."""
    if not cfg.units:
        return np.zeros((0, geometry.num_channels))
    pos = np.array([(u.x, u.z) for u in cfg.units])
    amp = np.array([u.amplitude for u in cfg.units])
    d = np.linalg.norm(pos[:, None, :] - geometry.positions[None, :, :], axis=-1)
    return amp[:, None] * np.exp(-d / cfg.decay_um)


def spike_trains(cfg: SynthConfig) -> GroundTruth:
    """Poisson trains per unit; the whole template must fit inside the recording."""
    T = cfg.num_frames
    ss = np.random.SeedSequence(cfg.seed)
    unit_rngs = [np.random.default_rng(s) for s in ss.spawn(len(cfg.units) + 1)[1:]]
    units, times = [], []
    lo, hi = TROUGH_INDEX, T - (TEMPLATE_LEN - TROUGH_INDEX)
    for i, (u, rng) in enumerate(zip(cfg.units, unit_rngs)):
        if hi <= lo or u.rate_hz == 0:
            continue
        n = rng.poisson(u.rate_hz * (hi - lo) / cfg.sampling_rate_hz)
        t = np.sort(rng.integers(lo, hi, size=n))
        units.append(np.full(n, i))
        times.append(t)
    if times:
        t = np.concatenate(times)
        un = np.concatenate(units)
        order = np.lexsort((un, t))
        t, un = t[order], un[order]
    else:
        t = un = np.zeros(0, dtype=np.int64)
    return GroundTruth(un.astype(np.int64), t.astype(np.int64), [(u.x, u.z) for u in cfg.units])


def quantize(x: np.ndarray) -> np.ndarray:
    """Round half away from zero and saturate to 12-bit signed, as int16."""
    r = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return np.clip(r, -2048, 2047).astype(np.int16)


def iter_chunks(cfg: SynthConfig, geometry: ProbeGeometry, gt: GroundTruth | None = None) -> Iterator[np.ndarray]:
    """Yield the recording as (frames, C) int16 blocks of ``CHUNK_FRAMES``."""
    if geometry.num_channels != cfg.num_channels:
        raise ValueError("geometry and synth config disagree on channel count")
    if gt is None:
        gt = spike_trains(cfg)
    C = geometry.num_channels
    T = cfg.num_frames
    noise_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(len(cfg.units) + 1)[0])
    scales = channel_scales(cfg, geometry)
    tpl = template()
    onsets = gt.timesteps - TROUGH_INDEX
    j0 = 0
    for a in range(0, T, CHUNK_FRAMES):
        b = min(a + CHUNK_FRAMES, T)
        if cfg.noise_sigma > 0:
            buf = noise_rng.normal(0.0, cfg.noise_sigma, size=(b - a, C))
        else:
            buf = np.zeros((b - a, C))
        while j0 < len(onsets) and onsets[j0] + TEMPLATE_LEN <= a:
            j0 += 1
        j = j0
        while j < len(onsets) and onsets[j] < b:
            s = onsets[j]
            k0, k1 = max(a - s, 0), min(b - s, TEMPLATE_LEN)
            buf[s + k0 - a : s + k1 - a] += tpl[k0:k1, None] * scales[gt.units[j]][None, :]
            j += 1
        yield quantize(buf)


def synthesize(cfg: SynthConfig, geometry: ProbeGeometry) -> tuple[bytes, GroundTruth]:
    gt = spike_trains(cfg)
    data = b"".join(np.ascontiguousarray(c, dtype="<i2").tobytes() for c in iter_chunks(cfg, geometry, gt))
    return data, gt


ACCEPTANCE_CHANNELS = (40, 91, 140, 191, 240, 291, 340)
ACCEPTANCE_RATES = (6.0, 8.0, 10.0, 12.0, 7.0, 9.0, 5.0)


def acceptance_config(
    seed: int = 2024, duration_s: float = 60.0, offset_um: tuple[float, float] = (0.0, 0.0)
) -> SynthConfig:
    """Seven units, A=500, decay 25 um, sigma 30 LSB on a 384-channel probe.

    Each unit sits on a recording site (shifted by ``offset_um``); the sites
    are about 500 um apart so units never overlap.
    """
    geo = ProbeGeometry.neuropixels(384)
    units = tuple(
        Unit(float(geo[c][0]) + offset_um[0], float(geo[c][1]) + offset_um[1], 500.0, r)
        for c, r in zip(ACCEPTANCE_CHANNELS, ACCEPTANCE_RATES)
    )
    return SynthConfig(units=units, decay_um=25.0, noise_sigma=30.0, duration_s=duration_s,
                       num_channels=384, seed=seed)
