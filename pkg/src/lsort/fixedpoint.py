"""Integer helpers shared by the fixed-point stages."""

import math

INT12_MIN = -2048
INT12_MAX = 2047


def saturate(v: int, bits: int = 12) -> int:
    hi = (1 << (bits - 1)) - 1
    lo = -hi - 1
    return lo if v < lo else hi if v > hi else v


def shift_round(v: int, shift: int) -> int:
    """Arithmetic right shift with round-to-nearest, ties away from zero."""
    half = 1 << (shift - 1)
    if v >= 0:
        return (v + half) >> shift
    return -((-v + half) >> shift)


def round_div(num: int, den: int) -> int:
    """Integer division rounded to nearest, ties away from zero. ``den`` > 0."""
    if num >= 0:
        return (2 * num + den) // (2 * den)
    return -((-2 * num + den) // (2 * den))


def round_half_away(x: float) -> int:
    if x < 0:
        return -round_half_away(-x)
    f = math.floor(x)
    return int(f) + (1 if x - f >= 0.5 else 0)


def pack_fields(fields) -> int:
    """Concatenate ``(value, width)`` pairs MSB-first into one integer."""
    out = 0
    for value, width in fields:
        if not 0 <= value < (1 << width):
            raise ValueError(f"{value} does not fit in {width} bits")
        out = (out << width) | value
    return out


def unpack_fields(word: int, widths) -> list[int]:
    total = sum(widths)
    out = []
    for w in widths:
        total -= w
        out.append((word >> total) & ((1 << w) - 1))
    return out


def to_twos(v: int, bits: int) -> int:
    return v & ((1 << bits) - 1)


def from_twos(u: int, bits: int) -> int:
    return u - (1 << bits) if u & (1 << (bits - 1)) else u
