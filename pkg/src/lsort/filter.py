"""Per-channel 300-6000 Hz band-pass: two first-order Direct Form II sections
(high-pass then low-pass) with Q1.10 coefficients and saturating state."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import CoeffOverflow, InvalidBand
from .fixedpoint import (
    from_twos,
    pack_fields,
    round_half_away,
    saturate,
    shift_round,
    to_twos,
    unpack_fields,
)

COEFF_FRAC_BITS = 10
COEFF_BITS = 12
# The high-pass pole sits near 0.94, so its delay word carries ~16x the input's
# low-frequency content; 12 bits clip on ordinary noise. 16 bits hold a
# full-scale DC input to within saturation.
HP_STATE_BITS = 16
LP_STATE_BITS = 12
STATE_BITS = HP_STATE_BITS + LP_STATE_BITS


class Section(NamedTuple):
    b0: float
    b1: float
    a1: float


class BandpassDesign(NamedTuple):
    highpass: Section
    lowpass: Section


def design_bandpass(fs_hz: float = 30000.0, f_lo: float = 300.0, f_hi: float = 6000.0) -> BandpassDesign:
    """Bilinear-transform first-order high-pass at ``f_lo`` cascaded with a
    first-order low-pass at ``f_hi``. Sections use H(z) = (b0 + b1 z^-1) / (1 + a1 z^-1)."""
    if not 0 < f_lo < f_hi < fs_hz / 2:
        raise InvalidBand(f"need 0 < f_lo < f_hi < fs/2, got {f_lo}, {f_hi}, fs={fs_hz}")
    k_lo = math.tan(math.pi * f_lo / fs_hz)
    k_hi = math.tan(math.pi * f_hi / fs_hz)
    hp = Section(1 / (1 + k_lo), -1 / (1 + k_lo), (k_lo - 1) / (k_lo + 1))
    lp = Section(k_hi / (1 + k_hi), k_hi / (1 + k_hi), (k_hi - 1) / (k_hi + 1))
    return BandpassDesign(hp, lp)


@dataclass(frozen=True)
class FilterCoeffs:
    """Raw Q1.10 integers, (b0, b1, a1) per section."""

    highpass: tuple[int, int, int]
    lowpass: tuple[int, int, int]

    def as_real(self) -> BandpassDesign:
        s = 1 << COEFF_FRAC_BITS
        return BandpassDesign(
            Section(*(c / s for c in self.highpass)),
            Section(*(c / s for c in self.lowpass)),
        )


def quantize_coeff(c: float) -> int:
    if not abs(c) < 2.0:
        raise CoeffOverflow(f"coefficient {c} outside Q1.10 range")
    raw = round_half_away(c * (1 << COEFF_FRAC_BITS))
    return saturate(raw, COEFF_BITS)


def quantize_coeffs(design: BandpassDesign) -> FilterCoeffs:
    return FilterCoeffs(
        tuple(quantize_coeff(c) for c in design.highpass),
        tuple(quantize_coeff(c) for c in design.lowpass),
    )


def default_coeffs(fs_hz: float = 30000.0, f_lo: float = 300.0, f_hi: float = 6000.0) -> FilterCoeffs:
    return quantize_coeffs(design_bandpass(fs_hz, f_lo, f_hi))


class FilterState:
    """Delay words for every channel plus a saturation counter."""

    def __init__(self, num_channels: int):
        self.hp = [0] * num_channels
        self.lp = [0] * num_channels
        self.saturations = 0

    @property
    def num_channels(self) -> int:
        return len(self.hp)

    def pack(self, channel: int) -> int:
        """Serialize one channel's state into a ``STATE_BITS``-bit word."""
        return pack_fields(
            [
                (to_twos(self.hp[channel], HP_STATE_BITS), HP_STATE_BITS),
                (to_twos(self.lp[channel], LP_STATE_BITS), LP_STATE_BITS),
            ]
        )

    def unpack(self, channel: int, word: int) -> None:
        hp, lp = unpack_fields(word, (HP_STATE_BITS, LP_STATE_BITS))
        self.hp[channel] = from_twos(hp, HP_STATE_BITS)
        self.lp[channel] = from_twos(lp, LP_STATE_BITS)


def _section(x: int, w_prev: int, coeffs, state_bits: int, sat_count: list) -> tuple[int, int]:
    b0, b1, a1 = coeffs
    w_full = shift_round((x << COEFF_FRAC_BITS) - a1 * w_prev, COEFF_FRAC_BITS)
    w = saturate(w_full, state_bits)
    y_full = shift_round(b0 * w + b1 * w_prev, COEFF_FRAC_BITS)
    y = saturate(y_full, 12)
    sat_count[0] += (w != w_full) + (y != y_full)
    return y, w


def filter_step(state: FilterState, channel: int, x: int, coeffs: FilterCoeffs) -> int:
    """Filter one 12-bit sample of ``channel`` and return the 12-bit output."""
    sat = [0]
    y, state.hp[channel] = _section(x, state.hp[channel], coeffs.highpass, HP_STATE_BITS, sat)
    y, state.lp[channel] = _section(y, state.lp[channel], coeffs.lowpass, LP_STATE_BITS, sat)
    state.saturations += sat[0]
    return y
