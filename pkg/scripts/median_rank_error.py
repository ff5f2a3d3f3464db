"""Rank of each median estimator's output within the true trailing window.

For a window of 25 the exact median sits at rank 13. The histogram shows how
far the median-of-median estimators stray on uniform and on filtered-noise
magnitudes. Ranks are taken at every step, so the incremental estimator
can stray past 9..17 while its output is held between stage-2 updates.
"""

import argparse
from collections import Counter

import numpy as np

from lsort.core import MedianMode
from lsort.filter import FilterState, default_coeffs, filter_step
from lsort.median import magnitude, make_window


def rank_span(window, v):
    below = sum(w < v for w in window)
    return below + 1, below + sum(w == v for w in window)


def closest_rank(window, v, target=13):
    lo, hi = rank_span(window, v)
    return min(max(target, lo), hi)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--source", choices=["uniform", "noise"], default="noise")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    if args.source == "uniform":
        vals = rng.integers(0, 2048, args.samples).tolist()
    else:
        st, co = FilterState(1), default_coeffs()
        raw = np.clip(np.round(rng.normal(0, 30, args.samples)), -2048, 2047).astype(int)
        vals = [magnitude(filter_step(st, 0, int(v), co)) for v in raw]

    for mode in MedianMode:
        w = make_window(mode)
        hist = Counter()
        for i, v in enumerate(vals):
            out = w.push(v)
            if i >= 48:  # past warm-up for every estimator
                hist[closest_rank(vals[i - 24 : i + 1], out)] += 1
        n = sum(hist.values())
        spread = " ".join(f"{r}:{100 * c / n:.1f}%" for r, c in sorted(hist.items()))
        print(f"{mode.value:<22} {spread}")


if __name__ == "__main__":
    main()
