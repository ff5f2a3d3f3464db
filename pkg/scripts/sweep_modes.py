"""Accuracy of every median mode / localization mode / threshold combination.

Sorts one synthetic recording with all requested pipelines in lockstep and
prints a table of detection, classification and precision.

    python scripts/sweep_modes.py --duration 10 --n-th 6 8
"""

import argparse
import itertools
import time

from lsort.core import LocalizationMode, MedianMode, PipelineConfig, ProbeGeometry
from lsort.metrics import evaluate
from lsort.pipeline import Pipeline
from lsort.synth import acceptance_config, iter_chunks, spike_trains


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--offset", type=float, nargs=2, default=(0.0, 0.0), metavar=("DX", "DZ"),
                    help="shift every unit off its site, in micrometres")
    ap.add_argument("--n-th", type=float, nargs="+", default=[6.0])
    ap.add_argument("--modes", nargs="+", default=[m.value for m in MedianMode], choices=[m.value for m in MedianMode])
    args = ap.parse_args()

    cfg = acceptance_config(seed=args.seed, duration_s=args.duration, offset_um=tuple(args.offset))
    geo = ProbeGeometry.neuropixels(cfg.num_channels)
    gt = spike_trains(cfg)
    combos = list(itertools.product(args.n_th, args.modes, LocalizationMode))
    pipes = {
        k: Pipeline(PipelineConfig(num_channels=cfg.num_channels, n_th=k[0], median_mode=k[1], localization_mode=k[2]), geo)
        for k in combos
    }
    events = {k: [] for k in pipes}
    t0 = time.perf_counter()
    for chunk in iter_chunks(cfg, geo, gt):
        for k, p in pipes.items():
            events[k] += p.process_block(chunk)
    print(f"{len(gt)} ground-truth firings, {len(pipes)} pipelines, {time.perf_counter() - t0:.0f} s")
    print(f"{'n_th':>5} {'median':<22}{'localization':<16}{'detect':>8}{'classify':>9}{'precision':>10}{'overflow':>9}")
    for (n, mode, loc), p in pipes.items():
        events[(n, mode, loc)] += p.flush()
        r = evaluate(events[(n, mode, loc)], gt)
        s = p.stats()
        print(f"{n:5.2f} {mode:<22}{loc.value:<16}{r['detection_accuracy']:8.4f}"
              f"{r['classification_accuracy']:9.4f}{r['precision']:10.4f}{s['cluster_capacity_overflows']:9d}")


if __name__ == "__main__":
    main()
