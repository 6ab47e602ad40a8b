"""On-disk JSON artifacts exchanged between pipeline stages.

Every artifact carries {schema_version, tool_version}. Serialization is
deterministic: fixed key order, no timestamps (those live in the run.log
sidecar only), floats via repr.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from usageatlas import __version__
from usageatlas.cartograph import Layout, LayoutParams
from usageatlas.duplication import DuplicationGraph
from usageatlas.errors import DependencyError, ValidationError
from usageatlas.graphmetrics import GraphSummary
from usageatlas.measures import CultureMetrics
from usageatlas.panel import Site
from usageatlas.regions import ClusterMatch, Partition

SCHEMAS = {
    "config": "usage-atlas/config@1",
    "world": "usage-atlas/world@1",
    "graph": "usage-atlas/graph@1",
    "summary": "usage-atlas/summary@1",
    "partition": "usage-atlas/partition@1",
    "metrics": "usage-atlas/metrics@1",
    "layout": "usage-atlas/layout@1",
    "report": "usage-atlas/report@1",
    "matches": "usage-atlas/matches@1",
    "trajectories": "usage-atlas/trajectories@1",
    "ground-truth": "usage-atlas/ground-truth@1",
    "error": "usage-atlas/error@1",
}


def stamp(kind: str) -> dict:
    return {"schema_version": SCHEMAS[kind], "tool_version": __version__}


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def read_json(path: str | Path, kind: str | None = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise DependencyError(f"required artifact not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    if kind is not None and data.get("schema_version") != SCHEMAS[kind]:
        raise ValidationError(
            f"{path} has schema '{data.get('schema_version')}', expected '{SCHEMAS[kind]}'"
        )
    return data


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- graph -----------------------------------------------------------------


def graph_to_json(graph: DuplicationGraph) -> dict:
    edges = []
    rows, cols = np.nonzero(np.triu(graph.values, 1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        edges.append({"i": i, "j": j, "value": float(graph.values[i, j])})
    return {
        **stamp("graph"),
        "snapshot_label": graph.snapshot_label,
        "sites": [{"id": s.id, "domain": s.domain} for s in graph.sites],
        "edges": edges,
    }


def graph_from_json(data: dict) -> DuplicationGraph:
    sites = [Site(id=s["id"], domain=s["domain"]) for s in data["sites"]]
    n = len(sites)
    values = np.zeros((n, n))
    for edge in data["edges"]:
        i, j, value = edge["i"], edge["j"], edge["value"]
        if value <= 0:
            raise ValidationError(f"graph edge ({i},{j}) has non-positive value {value}")
        values[i, j] = value
        values[j, i] = value
    return DuplicationGraph(sites, values, data["snapshot_label"])


# --- summary ----------------------------------------------------------------


def summary_to_json(summary: GraphSummary, snapshot_label: str, pairs_evaluated: int) -> dict:
    return {
        **stamp("summary"),
        "snapshot_label": snapshot_label,
        "node_count": summary.node_count,
        "edge_count": summary.edge_count,
        "pairs_evaluated": pairs_evaluated,
        "density": summary.density,
        "clustering_coefficient": summary.clustering_coefficient,
        "clustering_variant": summary.clustering_variant,
    }


# --- partition ---------------------------------------------------------------


def partition_to_json(partition: Partition, snapshot_label: str) -> dict:
    cut = dict(partition.provenance)
    clusters = []
    for cid in sorted(partition.clusters):
        clusters.append(
            {
                "id": cid,
                "color": partition.colors.get(cid, ""),
                "member_domains": partition.member_domains(cid),
            }
        )
    return {**stamp("partition"), "snapshot_label": snapshot_label, "cut": cut, "clusters": clusters}


def partition_from_json(data: dict, domains: list[str]) -> Partition:
    by_domain: dict[str, int] = {}
    for entry in data["clusters"]:
        for domain in entry["member_domains"]:
            if domain in by_domain:
                raise ValidationError(f"domain '{domain}' appears in two clusters")
            by_domain[domain] = entry["id"]
    missing = [d for d in domains if d not in by_domain]
    extra = [d for d in by_domain if d not in set(domains)]
    if missing or extra:
        raise ValidationError(
            f"partition does not cover the graph universe (missing={missing[:3]}, extra={extra[:3]})"
        )
    labels = np.array([by_domain[d] for d in domains])
    partition = Partition(domains, labels, data.get("cut", {}))
    # Partition() renumbers; ids here are already 0..k-1 by construction,
    # but re-map colors by membership to stay safe.
    colors: dict[int, str] = {}
    member_sets = {cid: set(partition.member_domains(cid)) for cid in partition.clusters}
    for entry in data["clusters"]:
        wanted = set(entry["member_domains"])
        for cid, members in member_sets.items():
            if members == wanted and entry.get("color"):
                colors[cid] = entry["color"]
    partition.colors = colors
    return partition


# --- metrics -----------------------------------------------------------------


def metrics_to_json(metrics: list[CultureMetrics], snapshot_label: str) -> dict:
    clusters = []
    for m in metrics:
        row = {
            "id": m.cluster_id,
            "size": m.size,
            "distance": m.distance,
            "unreachable_count": m.unreachable_count,
            "ei_index": m.ei_index,
            "degenerate_flags": list(m.flags),
        }
        if m.ei_standardized is not None:
            row["ei_standardized"] = m.ei_standardized
        clusters.append(row)
    return {
        **stamp("metrics"),
        "snapshot_label": snapshot_label,
        "distance_basis": "contracted-node farness on the dichotomized graph",
        "thickness_basis": "valued E-I index",
        "clusters": clusters,
    }


def metrics_from_json(data: dict) -> list[CultureMetrics]:
    out = []
    for row in data["clusters"]:
        out.append(
            CultureMetrics(
                cluster_id=row["id"],
                size=row["size"],
                distance=row["distance"],
                unreachable_count=row["unreachable_count"],
                ei_index=row["ei_index"],
                ei_standardized=row.get("ei_standardized"),
                flags=list(row.get("degenerate_flags", [])),
            )
        )
    return out


# --- layout ------------------------------------------------------------------


def layout_to_json(layout: Layout) -> dict:
    return {
        **stamp("layout"),
        "snapshot_label": layout.snapshot_label,
        "params": {
            "width": layout.params.width,
            "height": layout.params.height,
            "iterations": layout.params.iterations,
            "initial_temperature": layout.params.initial_temperature,
            "seed": layout.params.seed,
        },
        "positions": [
            {"domain": domain, "x": float(layout.positions[i, 0]), "y": float(layout.positions[i, 1])}
            for i, domain in enumerate(layout.domains)
        ],
    }


def layout_from_json(data: dict) -> Layout:
    params = LayoutParams(**data["params"])
    domains = tuple(p["domain"] for p in data["positions"])
    positions = np.array([[p["x"], p["y"]] for p in data["positions"]])
    positions.flags.writeable = False
    return Layout(data["snapshot_label"], domains, positions, params)


# --- cross-snapshot artifacts --------------------------------------------------


def matches_to_json(
    snapshot_labels: list[str],
    adjacent: list[ClusterMatch],
    chains: list[dict],
) -> dict:
    blocks = []
    for idx, match in enumerate(adjacent):
        blocks.append(
            {
                "from": snapshot_labels[idx],
                "to": snapshot_labels[idx + 1],
                "pairs": [
                    {"from_cluster": p.from_cluster, "to_cluster": p.to_cluster, "jaccard": p.jaccard}
                    for p in match.pairs
                ],
            }
        )
    return {
        **stamp("matches"),
        "snapshots": snapshot_labels,
        "threshold": adjacent[0].threshold if adjacent else None,
        "adjacent": blocks,
        "chains": chains,
    }
