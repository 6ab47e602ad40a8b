"""Audience-duplication network analysis toolkit.

Builds above-random audience duplication networks from user x site
visitation panels, partitions them into regional usage cultures, scores
each culture's distance and thickness over time, and renders maps and
metric charts as SVG.
"""

__version__ = "0.1.0"

from usageatlas.duplication import (
    BinaryGraph,
    DuplicationGraph,
    above_random,
    build_valued_graph,
    dichotomize,
    expected_duplication,
    observed_duplication,
)
from usageatlas.panel import PanelSnapshot, Site, load_panel, reach, top_n_sites
from usageatlas.regions import CutSpec, Partition, cluster, match_clusters, profile_similarity
from usageatlas.measures import CultureMetrics, cluster_distance, ei_index, snapshot_metrics, standardized_ei

__all__ = [
    "BinaryGraph",
    "CultureMetrics",
    "CutSpec",
    "DuplicationGraph",
    "PanelSnapshot",
    "Partition",
    "Site",
    "above_random",
    "build_valued_graph",
    "cluster",
    "cluster_distance",
    "dichotomize",
    "ei_index",
    "expected_duplication",
    "load_panel",
    "match_clusters",
    "observed_duplication",
    "profile_similarity",
    "reach",
    "snapshot_metrics",
    "standardized_ei",
    "top_n_sites",
]
