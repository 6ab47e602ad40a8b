"""Regional usage cultures: profile similarity, agglomerative clustering,
dendrogram cuts, and matching of homologous clusters across snapshots.

Sites are similar when they share audiences with the same other sites, so
similarity is the Pearson correlation between two sites' valued
duplication profiles (excluding the pair's own coordinates). Clustering
is average-linkage (UPGMA) agglomeration on dissimilarity 1 - r with
deterministic tiebreaks; the dendrogram is cut either at a fixed cluster
count or at the level maximizing weighted modularity on the valued graph.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field

import numpy as np

from usageatlas.duplication import DuplicationGraph
from usageatlas.errors import ValidationError

# Relative-variance floor below which a profile row counts as constant
# (its correlations are defined as 0 so isolated sites stay clusterable).
_CONSTANT_REL_VARIANCE = 1e-12


@dataclass(frozen=True)
class CutSpec:
    """How to cut the dendrogram: fixed cluster count or modularity-optimal."""

    mode: str  # "fixed" | "auto"
    k: int | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "auto"):
            raise ValidationError(f"cut mode must be 'fixed' or 'auto', got '{self.mode}'")
        if self.mode == "fixed" and (self.k is None or self.k < 1):
            raise ValidationError("fixed cut requires k >= 1")


@dataclass(frozen=True)
class MergeStep:
    left: int
    right: int
    height: float
    merged: int


@dataclass(frozen=True)
class Dendrogram:
    """Agglomeration record: n-1 merges over cluster ids.

    Leaves are ids 0..n-1; the merge at step s creates id n+s. Merge
    heights are non-decreasing (average linkage is monotone).
    """

    n_leaves: int
    steps: tuple[MergeStep, ...]

    def leaf_order(self) -> list[int]:
        """Left-to-right leaf sequence of the tree (lower id subtree first)."""
        children = {s.merged: (s.left, s.right) for s in self.steps}
        root = self.steps[-1].merged if self.steps else 0
        order: list[int] = []
        stack = [root]
        while stack:
            node = stack.pop()
            if node < self.n_leaves:
                order.append(node)
            else:
                left, right = children[node]
                stack.append(max(left, right))
                stack.append(min(left, right))
        return order

    def labels_at(self, k: int) -> np.ndarray:
        """Cluster labels (arbitrary ids) after cutting to exactly k clusters."""
        n = self.n_leaves
        if not 1 <= k <= n:
            raise ValidationError(f"cut level k must be in [1, {n}], got {k}")
        parent = list(range(n + len(self.steps)))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for step in self.steps[: n - k]:
            parent[find(step.left)] = step.merged
            parent[find(step.right)] = step.merged
        return np.array([find(i) for i in range(n)])


class Partition:
    """Assignment of sites to clusters, with the cut used as provenance.

    Cluster ids are normalized to 0..k-1 ordered by descending size then
    ascending smallest member domain, so the numbering is deterministic
    and independent of merge bookkeeping.
    """

    def __init__(self, domains: list[str], raw_labels: np.ndarray, provenance: dict):
        if len(domains) != len(raw_labels):
            raise ValidationError("labels must align with the site universe")
        groups: dict[int, list[int]] = {}
        for i, lab in enumerate(np.asarray(raw_labels).tolist()):
            groups.setdefault(lab, []).append(i)
        if not groups:
            raise ValidationError("partition must have at least one cluster")
        ordered = sorted(
            groups.values(), key=lambda members: (-len(members), min(domains[i] for i in members))
        )
        self.domains = list(domains)
        self.clusters: dict[int, list[int]] = {cid: members for cid, members in enumerate(ordered)}
        self.labels = np.empty(len(domains), dtype=int)
        for cid, members in self.clusters.items():
            self.labels[members] = cid
        self.provenance = dict(provenance)
        self.colors: dict[int, str] = {}

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def members(self, cluster_id: int) -> list[int]:
        return self.clusters[cluster_id]

    def member_domains(self, cluster_id: int) -> list[str]:
        return sorted(self.domains[i] for i in self.clusters[cluster_id])

    def cluster_of(self, domain: str) -> int:
        return int(self.labels[self.domains.index(domain)])


@dataclass(frozen=True)
class MatchedPair:
    from_cluster: int
    to_cluster: int
    jaccard: float


@dataclass(frozen=True)
class ClusterMatch:
    """Greedy max-Jaccard matching between two snapshots' partitions."""

    threshold: float
    pairs: tuple[MatchedPair, ...] = field(default_factory=tuple)


def profile_similarity(graph: DuplicationGraph) -> np.ndarray:
    """Pearson correlation between valued duplication profiles.

    r_ij correlates rows i and j over coordinates k not in {i, j}. Rows
    constant over those coordinates (isolated sites in particular) get
    r = 0. Diagonal is 1; all entries clipped to [-1, 1].
    """
    n = graph.n_sites
    if n < 3:
        raise ValidationError(f"profile similarity needs at least 3 sites, got {n}")
    a = graph.values
    m = n - 2
    row_sum = a.sum(axis=1)
    row_sumsq = (a * a).sum(axis=1)
    cross = a @ a
    cross = (cross + cross.T) / 2.0  # enforce exact symmetry of the BLAS product

    # Per-pair sums excluding coordinates i and j (diagonal is already 0).
    sx = row_sum[:, None] - a
    qx = row_sumsq[:, None] - a * a
    var_x = m * qx - sx * sx
    var_y = var_x.T
    numer = m * cross - sx * sx.T

    const_x = var_x <= _CONSTANT_REL_VARIANCE * m * np.maximum(qx, 0.0)
    defined = ~(const_x | const_x.T)
    denom = np.sqrt(np.maximum(var_x, 0.0) * np.maximum(var_y, 0.0))
    r = np.zeros((n, n))
    np.divide(numer, denom, out=r, where=defined & (denom > 0))
    np.clip(r, -1.0, 1.0, out=r)
    r = (r + r.T) / 2.0
    np.fill_diagonal(r, 1.0)
    return r


def upgma(dissimilarity: np.ndarray) -> Dendrogram:
    """Average-linkage agglomeration with deterministic tiebreaks.

    On equal dissimilarity the pair with the lexicographically smallest
    (cluster-id, cluster-id) merges first.
    """
    d = np.array(dissimilarity, dtype=float)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValidationError("dissimilarity matrix must be square")
    np.fill_diagonal(d, np.inf)

    ids = np.arange(n)
    sizes = np.ones(n, dtype=int)
    alive = np.ones(n, dtype=bool)
    steps: list[MergeStep] = []
    for step in range(n - 1):
        dmin = d.min()
        si, sj = _tied_pair_with_lowest_ids(d, dmin, ids)
        id_a, id_b = sorted((int(ids[si]), int(ids[sj])))
        merged = n + step
        steps.append(MergeStep(id_a, id_b, float(dmin), merged))

        others = alive.copy()
        others[si] = others[sj] = False
        d[si, others] = (sizes[si] * d[si, others] + sizes[sj] * d[sj, others]) / (
            sizes[si] + sizes[sj]
        )
        d[others, si] = d[si, others]
        d[sj, :] = np.inf
        d[:, sj] = np.inf
        sizes[si] += sizes[sj]
        ids[si] = merged
        alive[sj] = False
    return Dendrogram(n_leaves=n, steps=tuple(steps))


def _tied_pair_with_lowest_ids(d: np.ndarray, dmin: float, ids: np.ndarray) -> tuple[int, int]:
    rows, cols = np.nonzero(d == dmin)
    best = None
    best_slots = (0, 0)
    for si, sj in zip(rows.tolist(), cols.tolist()):
        if si >= sj:
            continue
        key = tuple(sorted((int(ids[si]), int(ids[sj]))))
        if best is None or key < best:
            best = key
            best_slots = (si, sj)
    if best is None:
        raise ValidationError("no mergeable pair found (non-finite dissimilarities?)")
    return best_slots


def modularity(values: np.ndarray, labels: np.ndarray) -> float:
    """Weighted Newman modularity of a partition on the valued graph."""
    total = values.sum() / 2.0
    if total <= 0:
        return 0.0
    deg = values.sum(axis=1)
    q = 0.0
    for lab in np.unique(labels):
        members = labels == lab
        within = values[np.ix_(members, members)].sum() / 2.0
        q += within / total - (deg[members].sum() / (2.0 * total)) ** 2
    return float(q)


def _modularity_by_level(values: np.ndarray, dendrogram: Dendrogram) -> dict[int, float]:
    """Modularity at every dendrogram level, computed incrementally.

    Returns {cluster_count: Q}. Level n is the all-singleton partition,
    level 1 the single cluster.
    """
    n = dendrogram.n_leaves
    total = values.sum() / 2.0
    if total <= 0:
        return {k: 0.0 for k in range(1, n + 1)}
    w = values.astype(float).copy()
    deg = values.sum(axis=1).astype(float)
    slot_of = {i: i for i in range(n)}
    two_m = 2.0 * total
    q = float(-np.sum((deg / two_m) ** 2))
    levels = {n: q}
    for step in dendrogram.steps:
        sa = slot_of.pop(step.left)
        sb = slot_of.pop(step.right)
        q += w[sa, sb] / total - deg[sa] * deg[sb] / (2.0 * total * total)
        w[sa, :] += w[sb, :]
        w[:, sa] += w[:, sb]
        w[sb, :] = 0.0
        w[:, sb] = 0.0
        deg[sa] += deg[sb]
        deg[sb] = 0.0
        slot_of[step.merged] = sa
        levels[n - len(levels)] = q  # after s merges there are n - s clusters
    return levels


def cluster(
    similarity: np.ndarray,
    cut: CutSpec,
    graph: DuplicationGraph | None = None,
    domains: list[str] | None = None,
) -> tuple[Dendrogram, Partition]:
    """Cluster sites by profile similarity and cut the dendrogram.

    `graph` supplies the valued ties for the modularity criterion and the
    site universe; it is required for auto cuts. For fixed cuts a bare
    `domains` list may stand in for the graph.
    """
    similarity = np.asarray(similarity, dtype=float)
    n = similarity.shape[0]
    if similarity.shape != (n, n) or n < 1:
        raise ValidationError("similarity matrix must be square and non-empty")
    if np.any(np.abs(similarity) > 1.0 + 1e-9):
        raise ValidationError("similarity entries must lie in [-1, 1]")
    if domains is None:
        if graph is None:
            raise ValidationError("cluster() needs `graph` or `domains` for the site universe")
        domains = [s.domain for s in graph.sites]
    if len(domains) != n:
        raise ValidationError("site universe does not match the similarity matrix")
    if cut.mode == "fixed" and cut.k is not None and cut.k > n:
        raise ValidationError(f"cut k={cut.k} exceeds site count {n}")

    dendrogram = upgma(1.0 - np.clip(similarity, -1.0, 1.0))

    if cut.mode == "fixed":
        assert cut.k is not None
        labels = dendrogram.labels_at(cut.k)
        provenance = {"mode": "fixed", "k": cut.k}
    else:
        if graph is None:
            raise ValidationError("auto cut requires the valued graph for modularity")
        levels = _modularity_by_level(graph.values, dendrogram)
        # On equal modularity prefer the finer partition (more clusters).
        best_k = max(sorted(levels, reverse=True), key=lambda k: levels[k])
        labels = dendrogram.labels_at(best_k)
        provenance = {"mode": "auto", "k": int(best_k), "modularity": float(levels[best_k])}
    return dendrogram, Partition(domains, labels, provenance)


def match_clusters(p1: Partition, p2: Partition, threshold: float = 0.3) -> ClusterMatch:
    """Greedy maximum-Jaccard matching of clusters across two partitions.

    Sites are matched by domain; membership is restricted to the shared
    universe before computing overlap. Pairs below `threshold` stay
    unmatched, and each cluster appears in at most one pair.
    """
    shared = set(p1.domains) & set(p2.domains)
    sets1 = {cid: {p1.domains[i] for i in members} & shared for cid, members in p1.clusters.items()}
    sets2 = {cid: {p2.domains[i] for i in members} & shared for cid, members in p2.clusters.items()}

    candidates: list[tuple[float, int, int]] = []
    for c1, m1 in sets1.items():
        if not m1:
            continue
        for c2, m2 in sets2.items():
            if not m2:
                continue
            inter = len(m1 & m2)
            if inter == 0:
                continue
            jac = inter / len(m1 | m2)
            if jac >= threshold:
                candidates.append((jac, c1, c2))
    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))

    used1: set[int] = set()
    used2: set[int] = set()
    pairs: list[MatchedPair] = []
    for jac, c1, c2 in candidates:
        if c1 in used1 or c2 in used2:
            continue
        used1.add(c1)
        used2.add(c2)
        pairs.append(MatchedPair(c1, c2, jac))
    pairs.sort(key=lambda p: p.from_cluster)
    return ClusterMatch(threshold=threshold, pairs=tuple(pairs))


PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
    "#c49c94", "#f7b6d2", "#dbdb8d", "#9edae5", "#393b79",
]


def _extra_color(index: int) -> str:
    # Golden-ratio hue stepping keeps generated colors well separated.
    hue = (index * 0.6180339887498949) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.65, 0.85)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def assign_colors(
    partition: Partition,
    previous: Partition | None = None,
    threshold: float = 0.3,
) -> None:
    """Assign one color per cluster, stable across snapshots.

    Clusters matched to the previous snapshot inherit its color; the rest
    take the first palette colors not already in use.
    """
    colors: dict[int, str] = {}
    taken: set[str] = set()
    if previous is not None and previous.colors:
        for pair in match_clusters(previous, partition, threshold).pairs:
            color = previous.colors.get(pair.from_cluster)
            if color and color not in taken:
                colors[pair.to_cluster] = color
                taken.add(color)
    fresh = (c for c in PALETTE if c not in taken)
    extra = 0
    for cid in sorted(partition.clusters):
        if cid in colors:
            continue
        color = next(fresh, None)
        while color is None or color in taken:
            color = _extra_color(extra)
            extra += 1
        colors[cid] = color
        taken.add(color)
    partition.colors = colors
