"""O-Sort online clustering over spike positions with a fixed distance threshold."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import ClusterMerge
from .errors import NoClusters
from .fixedpoint import round_div, round_half_away
from .kernels import nearest_alive

log = logging.getLogger(__name__)

CENTROID_FRAC_BITS = 8
CENTROID_SCALE = 1 << CENTROID_FRAC_BITS
COUNT_MAX = (1 << 16) - 1


@dataclass(frozen=True)
class Cluster:
    id: int
    centroid: tuple[float, float]
    count: int
    alive: bool


def _raw(v: float) -> int:
    return round_half_away(v * CENTROID_SCALE)


class ClusterSet:
    """Clusters indexed by id; centroids kept as integers in 1/256 um."""

    def __init__(self, threshold_um: float = 25.0, max_clusters: int = 384, strict_hardware: bool = False):
        self.threshold_um = threshold_um
        t = _raw(threshold_um)
        self._t2 = t * t
        self.max_clusters = max_clusters
        self.strict_hardware = strict_hardware
        self.cx = np.zeros(max_clusters, dtype=np.int64)
        self.cz = np.zeros(max_clusters, dtype=np.int64)
        self.count = np.zeros(max_clusters, dtype=np.int64)
        self.alive = np.zeros(max_clusters, dtype=bool)
        self.next_id = 0
        self.n_alive = 0
        self.capacity_overflows = 0
        self.assigned = 0

    def __len__(self):
        return self.n_alive

    def _nearest_raw(self, px: int, pz: int, exclude: int = -1) -> tuple[int, int]:
        # ties go to the lowest id
        return nearest_alive(self.cx, self.cz, self.alive, px, pz, exclude)

    def nearest(self, p: tuple[float, float]) -> tuple[int, float]:
        """Closest alive cluster and its squared distance in um^2."""
        if not self.n_alive:
            raise NoClusters("no alive clusters")
        i, d2 = self._nearest_raw(_raw(p[0]), _raw(p[1]))
        return i, d2 / CENTROID_SCALE**2

    def _create(self, px: int, pz: int) -> int:
        i = self.next_id
        self.next_id += 1
        self.cx[i], self.cz[i], self.count[i], self.alive[i] = px, pz, 1, True
        self.n_alive += 1
        return i

    def assign(self, p: tuple[float, float]) -> tuple[int, list[ClusterMerge]]:
        """Place a spike at position ``p``; return its cluster id and any merges."""
        px, pz = _raw(p[0]), _raw(p[1])
        self.assigned += 1
        if not self.n_alive:
            return self._create(px, pz), []
        i, d2 = self._nearest_raw(px, pz)
        if d2 > self._t2:
            if self.next_id < self.max_clusters:
                return self._create(px, pz), []
            if self.capacity_overflows == 0:
                log.warning("cluster ids exhausted; assigning to nearest cluster")
            self.capacity_overflows += 1
        n = int(self.count[i])
        self.cx[i] = round_div(int(self.cx[i]) * n + px, n + 1)
        self.cz[i] = round_div(int(self.cz[i]) * n + pz, n + 1)
        self.count[i] = min(n + 1, COUNT_MAX)
        return i, self._merge_from(i)

    def _merge_from(self, i: int) -> list[ClusterMerge]:
        events = []
        while True:
            if self.n_alive < 2:
                break
            j, d2 = self._nearest_raw(int(self.cx[i]), int(self.cz[i]), exclude=i)
            if d2 > self._t2:
                break
            kept, removed = min(i, j), max(i, j)
            nk, nr = int(self.count[kept]), int(self.count[removed])
            tot = nk + nr
            self.cx[kept] = round_div(int(self.cx[kept]) * nk + int(self.cx[removed]) * nr, tot)
            self.cz[kept] = round_div(int(self.cz[kept]) * nk + int(self.cz[removed]) * nr, tot)
            self.count[kept] = min(tot, COUNT_MAX)
            self.alive[removed] = False
            self.n_alive -= 1
            events.append(ClusterMerge(kept, removed))
            i = kept
            if self.strict_hardware:
                break
        return events

    def table(self, include_dead: bool = False) -> list[Cluster]:
        out = []
        for i in range(self.next_id):
            if self.alive[i] or include_dead:
                out.append(
                    Cluster(
                        i,
                        (int(self.cx[i]) / CENTROID_SCALE, int(self.cz[i]) / CENTROID_SCALE),
                        int(self.count[i]),
                        bool(self.alive[i]),
                    )
                )
        return out

    def add(self, centroid: tuple[float, float], count: int = 1) -> int:
        """Seed a cluster directly (tests and replays)."""
        i = self._create(_raw(centroid[0]), _raw(centroid[1]))
        self.count[i] = count
        return i


def assign(clusters: ClusterSet, p) -> tuple[int, list[ClusterMerge]]:
    return clusters.assign(p)


def nearest(clusters: ClusterSet, p) -> tuple[int, float]:
    return clusters.nearest(p)
