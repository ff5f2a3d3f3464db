"""Command-line entry point: ``lsort {sort,synth,eval,bench,median-trace}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import MedianMode, PipelineConfig, ProbeGeometry
from .errors import LSortError


def _load_config(path: str | None, channels: int | None) -> PipelineConfig:
    overrides = {"num_channels": channels} if channels is not None else {}
    if path:
        return PipelineConfig.loads(Path(path).read_text(), **overrides)
    return PipelineConfig(num_channels=channels or 384)


def _load_geometry(path: str | None, num_channels: int) -> ProbeGeometry:
    from .wire import read_geometry

    if path:
        return read_geometry(Path(path).read_text())
    return ProbeGeometry.neuropixels(num_channels)


def cmd_sort(args) -> int:
    from .pipeline import Pipeline
    from .wire import RecordingReader, encode_events, format_clusters_csv, format_events_csv, pack_bits

    cfg = _load_config(args.config, args.channels)
    geo = _load_geometry(args.geometry, cfg.num_channels)
    reader = RecordingReader(args.input, cfg.num_channels)
    pipe = Pipeline(cfg, geo)
    events = pipe.run(reader.chunks(args.chunk_frames))
    if args.events_csv:
        Path(args.events_csv).write_text(format_events_csv(events))
    if args.bitstream_out:
        bits = encode_events(events, cfg.ts_bits, cfg.cluster_bits)
        Path(args.bitstream_out).write_bytes(pack_bits(bits))
    if args.clusters_csv:
        Path(args.clusters_csv).write_text(format_clusters_csv(pipe.clusters.table()))
    if args.stats:
        stats = pipe.stats()
        stats["input_saturations"] = reader.saturated
        for k, v in stats.items():
            print(f"{k}={v}")
        for k, v in pipe.timing.items():
            print(f"time_{k}_s={v:.3f}")
    return 0


def cmd_synth(args) -> int:
    from dataclasses import replace

    from .synth import SynthConfig, acceptance_config, iter_chunks, spike_trains
    from .wire import format_geometry, write_recording

    cfg = SynthConfig.loads(Path(args.config).read_text()) if args.config else acceptance_config()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.duration is not None:
        cfg = replace(cfg, duration_s=args.duration)
    geo = ProbeGeometry.neuropixels(cfg.num_channels)
    gt = spike_trains(cfg)
    n = write_recording(iter_chunks(cfg, geo, gt), args.out)
    if args.gt_out:
        Path(args.gt_out).write_text(gt.to_csv())
    if args.geometry_out:
        Path(args.geometry_out).write_text(format_geometry(geo))
    print(f"wrote {n} frames x {cfg.num_channels} channels, {len(gt)} firings", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    from .metrics import evaluate
    from .synth import GroundTruth
    from .wire import parse_events_csv

    events = parse_events_csv(Path(args.events).read_text())
    gt = GroundTruth.from_csv(Path(args.gt).read_text())
    for k, v in evaluate(events, gt, args.tol_samples, args.tol_um).items():
        print(f"{k}={v:.6f}" if isinstance(v, float) else f"{k}={v}")
    return 0


def cmd_bench(args) -> int:
    from .bench import synthetic_frames, throughput_bench

    cfg = _load_config(args.config, args.channels)
    frames, geo = synthetic_frames(cfg.num_channels, args.duration, args.seed)
    res = throughput_bench(cfg, frames, geo, repeats=args.repeats)
    print(res.report())
    if args.stability:
        longer, _ = synthetic_frames(cfg.num_channels, 2 * args.duration, args.seed)
        res2 = throughput_bench(cfg, longer, geo, repeats=args.repeats)
        ratio = res2.rate / res.rate
        print(f"doubled length: {res2.rate / 1e6:.2f} Msamples/s, ratio {ratio:.3f}"
              f" ({'stable' if 0.8 <= ratio <= 1.2 else 'UNSTABLE'})")
    return 0


def cmd_median_trace(args) -> int:
    from .filter import FilterState, default_coeffs, filter_step
    from .median import magnitude, median_trace
    from .wire import RecordingReader

    reader = RecordingReader(args.input, args.channels)
    raw = reader.channel(args.channel).tolist()
    if args.unfiltered:
        values = [magnitude(v) for v in raw]
    else:
        st = FilterState(1)
        co = default_coeffs()
        values = [magnitude(filter_step(st, 0, v, co)) for v in raw]
    out = sys.stdout
    out.write("timestep,estimate,oracle\n")
    for i, est, ref in median_trace(values, args.mode, args.window):
        out.write(f"{i},{est},{ref}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lsort", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sort", help="sort a raw int16 recording")
    p.add_argument("--input", required=True, help="channel-interleaved int16 LE file")
    p.add_argument("--geometry", help="'channel x_um z_um' file (default: Neuropixels layout)")
    p.add_argument("--config", help="key=value PipelineConfig file")
    p.add_argument("--channels", type=int, help="override num_channels")
    p.add_argument("--events-csv")
    p.add_argument("--bitstream-out")
    p.add_argument("--clusters-csv")
    p.add_argument("--stats", action="store_true", help="print counters and stage timings")
    p.add_argument("--chunk-frames", type=int, default=30000)
    p.set_defaults(func=cmd_sort)

    p = sub.add_parser("synth", help="write a synthetic recording and its ground truth")
    p.add_argument("--config", help="key=value SynthConfig file (default: acceptance dataset)")
    p.add_argument("--out", required=True)
    p.add_argument("--gt-out")
    p.add_argument("--geometry-out")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, help="override duration_s")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score an events CSV against ground truth")
    p.add_argument("--events", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--tol-samples", type=int, default=15)
    p.add_argument("--tol-um", type=float, default=50.0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="throughput on an in-memory synthetic recording")
    p.add_argument("--channels", type=int, default=384)
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--repeats", type=int, default=3, help="timed runs; the fastest is reported")
    p.add_argument("--stability", action="store_true", help="repeat at twice the length")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("median-trace", help="per-sample median estimate vs oracle as CSV")
    p.add_argument("--mode", type=MedianMode, default=MedianMode.INCREMENTAL_APPROX_MOM,
                   choices=list(MedianMode), metavar="{" + ",".join(m.value for m in MedianMode) + "}")
    p.add_argument("--input", required=True)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--channels", type=int, default=384, help="channels in the recording")
    p.add_argument("--window", type=int, default=25)
    p.add_argument("--unfiltered", action="store_true", help="trace raw magnitudes")
    p.set_defaults(func=cmd_median_trace)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        sys.stderr.close()  # downstream closed early (e.g. piped into head)
        return 0
    except (LSortError, OSError) as e:
        print(f"lsort: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
