"""Per-channel median thresholding."""

from __future__ import annotations

from .core import MedianMode, Peak
from .median import magnitude, make_window

NTH_FRAC_BITS = 2


def threshold(n_th_raw: int, median: int) -> int:
    """n_th (unsigned Q4.2) times the median, truncated toward zero."""
    return (n_th_raw * median) >> NTH_FRAC_BITS


class ChannelDetectState:
    def __init__(self, channel: int, mode: MedianMode = MedianMode.INCREMENTAL_APPROX_MOM, window: int = 25):
        self.channel = channel
        self.window = make_window(mode, window)
        self.size = window
        self.warmup = 0  # saturates at ``size``
        self.last_threshold: int | None = None

    @property
    def warm(self) -> bool:
        return self.warmup >= self.size

    def detect(self, timestep: int, y: int, n_th_raw: int) -> Peak | None:
        """Push |y| into the window and report a Peak if |y| exceeds the threshold.

        Samples are blind until the window has seen ``size`` pushes.
        """
        med = self.window.push(magnitude(y))
        if self.warmup < self.size:
            self.warmup += 1
        if not self.warm:
            self.last_threshold = None
            return None
        th = threshold(n_th_raw, med)
        self.last_threshold = th
        amp = abs(y)
        if amp > th:
            return Peak(self.channel, timestep, amp)
        return None


def detect(state: ChannelDetectState, timestep: int, y: int, n_th: float) -> Peak | None:
    return state.detect(timestep, y, int(round(n_th * 4)))
