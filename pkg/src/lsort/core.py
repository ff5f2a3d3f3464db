"""Domain types and pipeline configuration."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple, Union

import numpy as np

from .errors import InvalidConfig, UnknownChannel
from .fixedpoint import round_half_away

# Spike positions live on a 2-fraction-bit grid (quarter micrometres).
POSITION_FRAC_BITS = 2
POSITION_SCALE = 1 << POSITION_FRAC_BITS


class MedianMode(str, enum.Enum):
    EXACT_SORT = "ExactSort"
    INCREMENTAL_EXACT = "IncrementalExact"
    DISJOINT_MOM = "DisjointMoM"
    INCREMENTAL_APPROX_MOM = "IncrementalApproxMoM"

    @property
    def is_mom(self) -> bool:
        return self in (MedianMode.DISJOINT_MOM, MedianMode.INCREMENTAL_APPROX_MOM)


class LocalizationMode(str, enum.Enum):
    CENTRAL_CHANNEL = "CentralChannel"
    PEAK_COM = "PeakCoM"


class Sample(NamedTuple):
    channel: int
    timestep: int
    value: int


class Peak(NamedTuple):
    channel: int
    timestep: int
    amplitude: int


class SpikeEvent(NamedTuple):
    timestep: int
    central_channel: int
    amplitude: int
    position: tuple[float, float]


@dataclass(frozen=True)
class SortedSpike:
    """A spike attributed to a cluster.

    ``position``, ``channel`` and ``amplitude`` ride along for evaluation and
    CSV output; they are not carried on the serial line and take no part in
    equality.
    """

    timestep: int
    cluster: int
    position: tuple[float, float] | None = field(default=None, compare=False)
    channel: int | None = field(default=None, compare=False)
    amplitude: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ClusterMerge:
    kept: int
    removed: int


SortEvent = Union[SortedSpike, ClusterMerge]


class ProbeGeometry:
    """Channel index to (x, z) position in micrometres."""

    def __init__(self, positions):
        pos = np.asarray(positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise InvalidConfig("geometry needs a (C, 2) array with C >= 1")
        self.positions = pos
        self.positions.setflags(write=False)
        # quarter-micrometre integer grid used by the locator
        self.grid = np.array(
            [[_to_grid(x), _to_grid(z)] for x, z in pos], dtype=np.int64
        )

    @property
    def num_channels(self) -> int:
        return self.positions.shape[0]

    def __len__(self):
        return self.num_channels

    def __getitem__(self, channel: int) -> tuple[float, float]:
        if not 0 <= channel < self.num_channels:
            raise UnknownChannel(channel)
        x, z = self.positions[channel]
        return float(x), float(z)

    def __eq__(self, other):
        return isinstance(other, ProbeGeometry) and np.array_equal(
            self.positions, other.positions
        )

    def proximity(self, radius_um: float) -> np.ndarray:
        """Boolean (C, C) matrix: True where sites are within ``radius_um``."""
        g = self.grid
        d2 = ((g[:, None, :] - g[None, :, :]) ** 2).sum(axis=-1)
        r = radius_um * POSITION_SCALE
        return d2 <= r * r

    @classmethod
    def neuropixels(cls, num_channels: int = 384) -> "ProbeGeometry":
        """Staggered four-column layout with 20 um row pitch (Neuropixels 1.0 style)."""
        xs = (32.0, 0.0, 48.0, 16.0)
        return cls([(xs[c % 4], 20.0 * (c // 2)) for c in range(num_channels)])

    @classmethod
    def linear(cls, num_channels: int, pitch_um: float = 20.0) -> "ProbeGeometry":
        return cls([(0.0, pitch_um * c) for c in range(num_channels)])


def _to_grid(v: float) -> int:
    return round_half_away(v * POSITION_SCALE)


@dataclass(frozen=True)
class PipelineConfig:
    num_channels: int
    sampling_rate_hz: float = 30000.0
    median_window: int = 25
    n_th: float = 6.0  # unsigned Q4.2
    median_mode: MedianMode = MedianMode.INCREMENTAL_APPROX_MOM
    match_window: int = 16
    match_radius_um: float = 100.0
    emit_gap: int = 19  # head emitted once now - ts > emit_gap
    bank_capacity: int = 16
    localization_mode: LocalizationMode = LocalizationMode.CENTRAL_CHANNEL
    cluster_threshold_um: float = 25.0
    max_clusters: int = 384
    ts_bits: int = 32
    cluster_bits: int = 9
    strict_hardware_merge: bool = False
    f_lo_hz: float = 300.0
    f_hi_hz: float = 6000.0

    def __post_init__(self):
        object.__setattr__(self, "median_mode", MedianMode(self.median_mode))
        object.__setattr__(
            self, "localization_mode", LocalizationMode(self.localization_mode)
        )
        self.validate()

    @property
    def n_th_raw(self) -> int:
        return int(round(self.n_th * 4))

    def validate(self):
        if self.num_channels < 1:
            raise InvalidConfig("num_channels must be >= 1")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise InvalidConfig("median_window must be odd and positive")
        if self.median_mode.is_mom and self.median_window != 25:
            raise InvalidConfig("median-of-median modes are fixed at a 25-sample window")
        raw = self.n_th * 4
        if raw != int(raw) or not 0 <= raw < 64:
            raise InvalidConfig(f"n_th={self.n_th} is not representable as unsigned Q4.2")
        if self.bank_capacity != 16:
            raise InvalidConfig("bank_capacity is fixed at 16")
        if self.max_clusters < 1 or (1 << self.cluster_bits) < self.max_clusters:
            raise InvalidConfig("cluster_bits too narrow for max_clusters")
        if self.match_window < 0 or self.emit_gap < 0:
            raise InvalidConfig("match_window and emit_gap must be non-negative")
        if self.match_radius_um < 0 or self.cluster_threshold_um < 0:
            raise InvalidConfig("radii must be non-negative")
        if self.ts_bits < 1:
            raise InvalidConfig("ts_bits must be positive")

    def with_(self, **changes) -> "PipelineConfig":
        return replace(self, **changes)

    # flat key=value text, one field per line
    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, **overrides) -> "PipelineConfig":
        from .errors import ParseError

        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"line {lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ParseError(f"line {lineno}: unknown key {key!r}")
            kw[key] = _coerce(types[key], value, lineno)
        kw.update(overrides)
        if "num_channels" not in kw:
            raise ParseError("num_channels is required")
        return cls(**kw)


def _coerce(type_name: str, value: str, lineno: int):
    from .errors import ParseError

    try:
        if type_name == "int":
            return int(value)
        if type_name == "float":
            return float(value)
        if type_name == "bool":
            if value.lower() in ("1", "true", "yes"):
                return True
            if value.lower() in ("0", "false", "no"):
                return False
            raise ValueError(value)
        return value
    except ValueError:
        raise ParseError(f"line {lineno}: bad value {value!r}") from None
