"""Block-path throughput against channel count and median mode.

The real-time factor is relative to that channel count sampled at 30 kHz.
"""

import argparse

from lsort.bench import synthetic_frames, throughput_bench
from lsort.core import MedianMode, PipelineConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--channels", type=int, nargs="+", default=[32, 128, 384])
    ap.add_argument("--duration", type=float, default=2.0)
    args = ap.parse_args()

    print(f"{'channels':>8} {'median':<22}{'Msamples/s':>11}{'x real-time':>12}")
    for c in args.channels:
        frames, geo = synthetic_frames(c, args.duration, seed=7)
        for mode in MedianMode:
            res = throughput_bench(PipelineConfig(num_channels=c, median_mode=mode), frames, geo)
            print(f"{c:8d} {mode.value:<22}{res.rate / 1e6:11.2f}{res.rate / (c * 30000):12.2f}")


if __name__ == "__main__":
    main()
