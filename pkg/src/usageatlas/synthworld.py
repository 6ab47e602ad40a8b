"""Synthetic geo-linguistic panel generator with known ground truth.

Each user belongs to one region and visits sites by independent Bernoulli
draws: home-region sites at p_home, foreign sites at p_cross scaled by a
per-region-pair language-overlap multiplier, global sites at p_global.
Every user additionally draws a two-point activity multiplier applied to
all of their visit probabilities. The multiplier is what plants
recoverable structure: it induces positive covariance between a user's
visits, so within-region (and global) pairs show above-random duplication
while expected duplication alone would explain independent visits.

Per-user RNG streams are derived from (seed, snapshot index, user index),
so generation is deterministic and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from usageatlas.errors import ValidationError
from usageatlas.panel import PanelSnapshot, Site

# Two-point activity multiplier: half the users visit less, half more,
# mean 1 so site reaches are preserved while covariance becomes positive.
ACTIVITY_LEVELS = (0.5, 1.5)

GLOBAL_REGION = "global"


@dataclass(frozen=True)
class RegionSpec:
    name: str
    user_share: float
    site_count: int
    language: str = ""
    p_home: float | None = None  # per-region override of WorldSpec.p_home
    p_cross: float | None = None


@dataclass(frozen=True)
class WorldSpec:
    regions: tuple[RegionSpec, ...]
    users: int
    p_home: float
    p_cross: float
    p_global: float = 0.0
    global_sites: int = 0
    language_overlap: dict[tuple[str, str], float] = field(default_factory=dict)
    drift: dict[str, dict[str, float]] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not self.regions:
            raise ValidationError("world needs at least one region")
        names = [r.name for r in self.regions]
        if len(set(names)) != len(names):
            raise ValidationError("region names must be unique")
        share_sum = sum(r.user_share for r in self.regions)
        if abs(share_sum - 1.0) > 1e-9:
            raise ValidationError(f"region user shares must sum to 1, got {share_sum}")
        if self.users < 1:
            raise ValidationError("world needs at least one user")
        for r in self.regions:
            if r.site_count < 1:
                raise ValidationError(f"region '{r.name}' needs at least one site")
            if not 0.0 <= r.user_share <= 1.0:
                raise ValidationError(f"region '{r.name}' share must be in [0, 1]")
        total_sites = sum(r.site_count for r in self.regions) + self.global_sites
        if total_sites < 2:
            raise ValidationError("world must generate at least 2 sites")
        if self.global_sites < 0:
            raise ValidationError("global_sites must be >= 0")
        for p, name in [(self.p_home, "p_home"), (self.p_cross, "p_cross"), (self.p_global, "p_global")]:
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {p}")
        for r in self.regions:
            for p, name in [(r.p_home, "p_home"), (r.p_cross, "p_cross")]:
                if p is not None and not 0.0 <= p <= 1.0:
                    raise ValidationError(f"region '{r.name}' {name} must be in [0, 1]")
        known = set(names)
        for (a, b), mult in self.language_overlap.items():
            if a not in known or b not in known:
                raise ValidationError(f"language_overlap names unknown region in ({a}, {b})")
            if mult < 0:
                raise ValidationError("language_overlap multipliers must be >= 0")
        for name in self.drift:
            if name not in known:
                raise ValidationError(f"drift names unknown region '{name}'")

    def overlap(self, a: str, b: str) -> float:
        key = (a, b) if a <= b else (b, a)
        return self.language_overlap.get(key, 1.0)


@dataclass(frozen=True)
class GroundTruth:
    """Planted region per site, plus expected thickness direction per region."""

    assignments: dict[str, str]  # domain -> region name (global sites -> "global")
    thickening: dict[str, str]  # region name -> "down" | "up" | "flat"


def _clip01(p: float) -> float:
    return min(1.0, max(0.0, p))


def _effective_probs(spec: WorldSpec, region: RegionSpec, snapshot_index: int) -> tuple[float, float]:
    deltas = spec.drift.get(region.name, {})
    home = (region.p_home if region.p_home is not None else spec.p_home) + snapshot_index * deltas.get("p_home", 0.0)
    cross = (region.p_cross if region.p_cross is not None else spec.p_cross) + snapshot_index * deltas.get("p_cross", 0.0)
    return _clip01(home), _clip01(cross)


def _region_user_counts(spec: WorldSpec) -> list[int]:
    # Largest-remainder allocation keeps counts exact and deterministic.
    raw = [r.user_share * spec.users for r in spec.regions]
    counts = [int(x) for x in raw]
    short = spec.users - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def world_sites(spec: WorldSpec) -> tuple[list[Site], GroundTruth]:
    """The stable site universe and its ground-truth assignment."""
    sites: list[Site] = []
    assignments: dict[str, str] = {}
    for region in spec.regions:
        for i in range(region.site_count):
            domain = f"{region.name}-{i:03d}.example"
            langs = frozenset({region.language}) if region.language else frozenset()
            sites.append(Site(id=domain, domain=domain, languages=langs, region_tag=region.name))
            assignments[domain] = region.name
    for i in range(spec.global_sites):
        domain = f"global-{i:03d}.example"
        sites.append(Site(id=domain, domain=domain, languages=frozenset({"multi"}), region_tag=GLOBAL_REGION))
        assignments[domain] = GLOBAL_REGION

    thickening: dict[str, str] = {}
    for region in spec.regions:
        d_home = spec.drift.get(region.name, {}).get("p_home", 0.0)
        d_cross = spec.drift.get(region.name, {}).get("p_cross", 0.0)
        if d_home > 0 or d_cross < 0:
            thickening[region.name] = "down"
        elif d_home < 0 or d_cross > 0:
            thickening[region.name] = "up"
        else:
            thickening[region.name] = "flat"
    return sites, GroundTruth(assignments=assignments, thickening=thickening)


def generate_snapshot(spec: WorldSpec, snapshot_index: int = 0) -> tuple[PanelSnapshot, GroundTruth]:
    """Sample one panel snapshot; drift is applied `snapshot_index` times."""
    if snapshot_index < 0:
        raise ValidationError("snapshot_index must be >= 0")
    sites, truth = world_sites(spec)
    n_sites = len(sites)
    region_names = [r.name for r in spec.regions]

    # Per-region visit-probability rows over the site axis.
    prob_rows: dict[str, np.ndarray] = {}
    for region in spec.regions:
        home, cross = _effective_probs(spec, region, snapshot_index)
        row = np.empty(n_sites)
        col = 0
        for other in spec.regions:
            block = home if other.name == region.name else cross * spec.overlap(region.name, other.name)
            row[col : col + other.site_count] = _clip01(block)
            col += other.site_count
        row[col:] = spec.p_global
        prob_rows[region.name] = row

    counts = _region_user_counts(spec)
    visits = np.zeros((spec.users, n_sites), dtype=bool)
    user_ids = [f"u{idx:05d}" for idx in range(spec.users)]
    user_region = np.repeat(np.arange(len(spec.regions)), counts)
    for u in range(spec.users):
        rng = np.random.default_rng([spec.seed, snapshot_index, u])
        draws = rng.random(n_sites + 1)
        activity = ACTIVITY_LEVELS[0] if draws[0] < 0.5 else ACTIVITY_LEVELS[1]
        probs = np.minimum(prob_rows[region_names[user_region[u]]] * activity, 1.0)
        visits[u] = draws[1:] < probs

    label = f"t{snapshot_index}"
    return PanelSnapshot(label, user_ids, sites, visits), truth


def generate_series(spec: WorldSpec, snapshots: int) -> list[tuple[PanelSnapshot, GroundTruth]]:
    """Sequence of snapshots with cumulative drift and a stable site universe."""
    if snapshots < 1:
        raise ValidationError("series needs at least one snapshot")
    return [generate_snapshot(spec, t) for t in range(snapshots)]
