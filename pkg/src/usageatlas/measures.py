"""Per-cluster metrics: size, distance (contracted farness), thickness (E-I).

Distance treats a cluster as a single contracted node on the dichotomized
graph and averages its shortest-path length to every node outside it.
Thickness is the valued E-I index (external - internal)/(external +
internal) over duplication weights; -1 means all ties internal (perfect
cohesion), +1 all external. Lower E-I over time = the culture thickens.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from usageatlas.duplication import BinaryGraph, DuplicationGraph
from usageatlas.errors import UndefinedMetricError, ValidationError
from usageatlas.regions import Partition

# Flags carried in metric reports.
FLAG_EI_NO_TIES = "ei-no-ties"
FLAG_ZERO_EI_VARIANCE = "zero-ei-variance"

DISTANCE_BASIS = "contracted cluster node, unweighted geodesics on the dichotomized graph"


@dataclass
class CultureMetrics:
    cluster_id: int
    size: int
    distance: float
    unreachable_count: int
    ei_index: float
    ei_standardized: float | None = None
    flags: list[str] = field(default_factory=list)


def _member_indices(cluster: Iterable[int], n: int) -> np.ndarray:
    members = np.asarray(sorted(set(int(i) for i in cluster)), dtype=int)
    if members.size == 0:
        raise ValidationError("cluster must be non-empty")
    if members[0] < 0 or members[-1] >= n:
        raise ValidationError(f"cluster member index out of range for {n} nodes")
    return members


def cluster_distance(graph: BinaryGraph, cluster: Iterable[int]) -> tuple[float, int]:
    """Mean geodesic length from the contracted cluster to all other nodes.

    The cluster is contracted to a supernode adjacent to the union of its
    members' external neighbors; a BFS from that supernode never needs to
    re-enter the cluster. Unreachable nodes contribute (max finite
    distance in this BFS + 1) each; their count is returned alongside.
    """
    n = graph.n_sites
    members = _member_indices(cluster, n)
    in_cluster = np.zeros(n, dtype=bool)
    in_cluster[members] = True
    if in_cluster.all():
        raise UndefinedMetricError("distance is undefined for a cluster covering every node")

    dist = np.full(n, np.inf)
    frontier = deque()
    seed = np.any(graph.adjacency[members], axis=0) & ~in_cluster
    for v in np.flatnonzero(seed):
        dist[v] = 1.0
        frontier.append(int(v))
    while frontier:
        u = frontier.popleft()
        du = dist[u]
        for v in graph.neighbors(u):
            if not in_cluster[v] and dist[v] == np.inf:
                dist[v] = du + 1.0
                frontier.append(int(v))

    external = dist[~in_cluster]
    reachable = external[np.isfinite(external)]
    max_finite = float(reachable.max()) if reachable.size else 0.0
    unreachable = int(external.size - reachable.size)
    total = float(reachable.sum()) + unreachable * (max_finite + 1.0)
    return total / external.size, unreachable


def ei_index(graph: DuplicationGraph, cluster: Iterable[int]) -> tuple[float, bool]:
    """Valued E-I index (E - I)/(E + I); each unordered dyad counted once.

    Returns (value, degenerate); degenerate is True when the cluster has
    no tie weight at all, in which case the value is 0.
    """
    n = graph.n_sites
    members = _member_indices(cluster, n)
    inside = np.zeros(n, dtype=bool)
    inside[members] = True
    values = graph.values
    internal = values[np.ix_(inside, inside)].sum() / 2.0
    external = values[np.ix_(inside, ~inside)].sum()
    total = internal + external
    if total == 0:
        return 0.0, True
    return float((external - internal) / total), False


def standardized_ei(metrics: Sequence[CultureMetrics]) -> list[float]:
    """Z-scores of clusters' E-I indices within one snapshot.

    Uses the population standard deviation over the given clusters. With
    zero variance all scores are 0 and every row gets a zero-variance
    flag.
    """
    if len(metrics) < 2:
        raise UndefinedMetricError("standardization needs at least 2 clusters")
    values = np.array([m.ei_index for m in metrics], dtype=float)
    mean = float(values.mean())
    sd = float(values.std())  # population sd
    if sd <= 1e-12 * max(1.0, abs(mean)):  # equal values differ only by rounding
        for m in metrics:
            if FLAG_ZERO_EI_VARIANCE not in m.flags:
                m.flags.append(FLAG_ZERO_EI_VARIANCE)
        scores = [0.0] * len(metrics)
    else:
        scores = [float((v - mean) / sd) for v in values]
    for m, z in zip(metrics, scores):
        m.ei_standardized = z
    return scores


def snapshot_metrics(
    graph: DuplicationGraph, binary: BinaryGraph, partition: Partition
) -> list[CultureMetrics]:
    """One CultureMetrics per cluster, ordered by cluster id.

    Member errors (e.g. undefined distance for a single-cluster
    partition) propagate.
    """
    graph_domains = [s.domain for s in graph.sites]
    if graph_domains != partition.domains or [s.domain for s in binary.sites] != graph_domains:
        raise ValidationError("graph, binary graph, and partition must share the site universe")
    out: list[CultureMetrics] = []
    for cid in sorted(partition.clusters):
        members = partition.members(cid)
        dist, unreachable = cluster_distance(binary, members)
        ei, degenerate = ei_index(graph, members)
        flags = [FLAG_EI_NO_TIES] if degenerate else []
        out.append(
            CultureMetrics(
                cluster_id=cid,
                size=len(members),
                distance=dist,
                unreachable_count=unreachable,
                ei_index=ei,
                flags=flags,
            )
        )
    return out
