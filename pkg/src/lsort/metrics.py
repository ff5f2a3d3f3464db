"""Detection and classification accuracy against ground truth."""

from __future__ import annotations

import bisect
import warnings
from collections import Counter
from dataclasses import dataclass, field

from .core import ClusterMerge, SortedSpike
from .synth import GroundTruth


class EmptyTPWarning(UserWarning):
    pass


@dataclass
class DetectionMetrics:
    tp: int
    fp: int
    fn: int
    matches: list[tuple[int, int]] = field(default_factory=list, repr=False)

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fn
        return self.tp / total if total else 0.0

    @property
    def precision(self) -> float:
        total = self.tp + self.fp
        return self.tp / total if total else 0.0


def final_labels(events) -> list[SortedSpike]:
    """Spikes with cluster ids rewritten to the cluster that survived all merges."""
    parent: dict[int, int] = {}

    def root(c):
        while c in parent:
            c = parent[c]
        return c

    spikes = []
    for ev in events:
        if isinstance(ev, ClusterMerge):
            parent[ev.removed] = ev.kept
        elif isinstance(ev, SortedSpike):
            spikes.append(ev)
    return [SortedSpike(s.timestep, root(s.cluster), s.position, s.channel, s.amplitude) for s in spikes]


def eval_detection(detections, gt: GroundTruth, tol_samples: int = 15, tol_um: float = 50.0) -> DetectionMetrics:
    """Greedy one-to-one matching in detection time order.

    ``detections`` are items with ``timestep`` and ``position``. Each detection
    takes the unmatched ground-truth firing closest in time (earliest on ties)
    among those within ``tol_samples`` and ``tol_um``.
    """
    dets = sorted(range(len(detections)), key=lambda i: detections[i].timestep)
    gts = gt.timesteps.tolist()
    gunits = gt.units.tolist()
    used = [False] * len(gts)
    tol2 = tol_um * tol_um
    matches = []
    for i in dets:
        d = detections[i]
        lo = bisect.bisect_left(gts, d.timestep - tol_samples)
        hi = bisect.bisect_right(gts, d.timestep + tol_samples)
        best = None
        for j in range(lo, hi):
            if used[j]:
                continue
            ux, uz = gt.unit_positions[gunits[j]]
            dx, dz = d.position[0] - ux, d.position[1] - uz
            if dx * dx + dz * dz > tol2:
                continue
            dt = abs(gts[j] - d.timestep)
            if best is None or dt < best[0]:
                best = (dt, j)
        if best is not None:
            used[best[1]] = True
            matches.append((i, best[1]))
    tp = len(matches)
    return DetectionMetrics(tp, len(detections) - tp, len(gts) - tp, matches)


def eval_classification(detections, gt: GroundTruth, matches) -> float:
    """Share of true positives whose cluster maps to their unit.

    Clusters and units are paired greedily by descending contingency count
    (ties: lower cluster id, then lower unit index).
    """
    if not matches:
        warnings.warn("no true positives; classification accuracy is 0", EmptyTPWarning, stacklevel=2)
        return 0.0
    table = Counter((detections[i].cluster, int(gt.units[j])) for i, j in matches)
    cells = sorted(table.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    used_c, used_u = set(), set()
    hit = 0
    for (c, u), n in cells:
        if c in used_c or u in used_u:
            continue
        used_c.add(c)
        used_u.add(u)
        hit += n
    return hit / len(matches)


def evaluate(events, gt: GroundTruth, tol_samples: int = 15, tol_um: float = 50.0) -> dict:
    spikes = final_labels(events)
    det = eval_detection(spikes, gt, tol_samples, tol_um)
    cls = eval_classification(spikes, gt, det.matches) if det.matches else 0.0
    return {
        "tp": det.tp,
        "fp": det.fp,
        "fn": det.fn,
        "detection_accuracy": det.accuracy,
        "precision": det.precision,
        "classification_accuracy": cls,
    }
