"""Pipeline stages with on-disk JSON handoff, plus the multi-snapshot run.

Each stage reads its inputs from files and writes its outputs to files,
so running stages separately composes to exactly the same artifacts as
one `pipeline` invocation. Cross-snapshot work (homologous-cluster
matching, standardized thickness, trajectory chart) runs after all
snapshots and only adds new files.
"""

from __future__ import annotations

import logging
from datetime import datetime, timezone
from pathlib import Path

from usageatlas import artifacts
from usageatlas.artifacts import read_json, sha256_file, stamp, write_json
from usageatlas.cartograph import LayoutParams, fr_layout, render_map, render_scatter, render_trajectories
from usageatlas.config import RunConfig
from usageatlas.duplication import build_valued_graph, dichotomize
from usageatlas.errors import DependencyError, UsageAtlasError, ValidationError
from usageatlas.graphmetrics import summarize
from usageatlas.measures import CultureMetrics, snapshot_metrics, standardized_ei
from usageatlas.panel import load_panel, top_n_sites, write_panel_csv
from usageatlas.regions import CutSpec, Partition, assign_colors, cluster, match_clusters, profile_similarity
from usageatlas.synthworld import WorldSpec, generate_series

log = logging.getLogger("usageatlas")


def _p(out_dir: str | Path, name: str) -> Path:
    return Path(out_dir) / name


def stage_generate(world: WorldSpec, snapshots: int, out_dir: str | Path) -> list[tuple[str, Path, Path]]:
    """Write synthetic panel CSVs plus the ground truth; returns (label, visits, sites)."""
    out_dir = Path(out_dir)
    panels_dir = out_dir / "panels"
    panels_dir.mkdir(parents=True, exist_ok=True)
    series = generate_series(world, snapshots)
    sources = []
    for panel, _truth in series:
        visits_path = panels_dir / f"panel_{panel.label}.csv"
        sites_path = panels_dir / f"sites_{panel.label}.csv"
        write_panel_csv(panel, visits_path, sites_path)
        sources.append((panel.label, visits_path, sites_path))
    truth = series[0][1]
    write_json(
        out_dir / "ground_truth.json",
        {**stamp("ground-truth"), "assignments": truth.assignments, "thickening": truth.thickening},
    )
    log.info("generated %d synthetic snapshot(s) under %s", snapshots, panels_dir)
    return sources


def stage_graph(
    visits_path: str | Path,
    out_dir: str | Path,
    label: str | None = None,
    sites_path: str | Path | None = None,
    top_n: int = 1000,
) -> str:
    """Panel CSV -> top-N selection -> valued graph JSON + summary JSON."""
    visits_path = Path(visits_path)
    if not visits_path.exists():
        raise DependencyError(f"required panel file not found: {visits_path}")
    panel = load_panel(visits_path, label=label, metadata=sites_path)
    selected = top_n_sites(panel, top_n)
    graph = build_valued_graph(panel.restrict(selected))
    summary = summarize(dichotomize(graph))
    write_json(_p(out_dir, f"graph_{panel.label}.json"), artifacts.graph_to_json(graph))
    write_json(
        _p(out_dir, f"summary_{panel.label}.json"),
        artifacts.summary_to_json(summary, panel.label, graph.pairs_evaluated),
    )
    log.info("graph %s: %d sites, %d pairs, %d edges", panel.label, graph.n_sites,
             graph.pairs_evaluated, summary.edge_count)
    return panel.label


def stage_cluster(
    graph_path: str | Path,
    out_dir: str | Path,
    cut: CutSpec,
    prev_partition_path: str | Path | None = None,
    match_threshold: float = 0.3,
) -> str:
    """Graph JSON -> similarity -> dendrogram cut -> partition JSON with colors."""
    graph = artifacts.graph_from_json(read_json(graph_path, "graph"))
    similarity = profile_similarity(graph)
    _dendrogram, partition = cluster(similarity, cut, graph=graph)
    previous = None
    if prev_partition_path is not None:
        prev_data = read_json(prev_partition_path, "partition")
        previous = artifacts.partition_from_json(
            prev_data, sorted({d for c in prev_data["clusters"] for d in c["member_domains"]})
        )
    assign_colors(partition, previous=previous, threshold=match_threshold)
    label = graph.snapshot_label
    write_json(_p(out_dir, f"partition_{label}.json"), artifacts.partition_to_json(partition, label))
    log.info("partition %s: %d clusters (%s)", label, partition.n_clusters, partition.provenance)
    return label


def _load_graph_and_partition(graph_path: str | Path, partition_path: str | Path):
    graph = artifacts.graph_from_json(read_json(graph_path, "graph"))
    domains = [s.domain for s in graph.sites]
    partition = artifacts.partition_from_json(read_json(partition_path, "partition"), domains)
    return graph, partition


def stage_measure(graph_path: str | Path, partition_path: str | Path, out_dir: str | Path) -> str:
    """Graph + partition JSON -> per-cluster metrics JSON."""
    graph, partition = _load_graph_and_partition(graph_path, partition_path)
    metrics = snapshot_metrics(graph, dichotomize(graph), partition)
    label = graph.snapshot_label
    write_json(_p(out_dir, f"metrics_{label}.json"), artifacts.metrics_to_json(metrics, label))
    return label


def stage_layout(
    graph_path: str | Path,
    partition_path: str | Path,
    out_dir: str | Path,
    params: LayoutParams,
) -> str:
    """Graph + partition JSON -> coordinates JSON + map SVG."""
    graph, partition = _load_graph_and_partition(graph_path, partition_path)
    binary = dichotomize(graph)
    layout = fr_layout(binary, params, snapshot_label=graph.snapshot_label)
    label = graph.snapshot_label
    write_json(_p(out_dir, f"layout_{label}.json"), artifacts.layout_to_json(layout))
    _p(out_dir, f"map_{label}.svg").write_text(render_map(layout, partition, binary), encoding="utf-8")
    return label


def stage_report(label: str, out_dir: str | Path) -> dict:
    """Assemble the per-snapshot report: scatter SVG + manifest with hashes."""
    out_dir = Path(out_dir)
    summary_data = read_json(out_dir / f"summary_{label}.json", "summary")
    partition_data = read_json(out_dir / f"partition_{label}.json", "partition")
    metrics_data = read_json(out_dir / f"metrics_{label}.json", "metrics")
    metrics = artifacts.metrics_from_json(metrics_data)
    colors = {c["id"]: c["color"] for c in partition_data["clusters"] if c.get("color")}
    scatter_path = out_dir / f"scatter_{label}.svg"
    scatter_path.write_text(render_scatter(metrics, snapshot_label=label, colors=colors), encoding="utf-8")

    manifest = {}
    for name in (
        f"graph_{label}.json", f"summary_{label}.json", f"partition_{label}.json",
        f"metrics_{label}.json", f"layout_{label}.json", f"map_{label}.svg",
        f"scatter_{label}.svg",
    ):
        file = out_dir / name
        if file.exists():
            manifest[name] = sha256_file(file)
    report = {
        **stamp("report"),
        "snapshot_label": label,
        "summary": {k: v for k, v in summary_data.items() if k not in ("schema_version", "tool_version")},
        "partition": f"partition_{label}.json",
        "metrics": metrics_data["clusters"],
        "manifest": manifest,
    }
    write_json(out_dir / f"report_{label}.json", report)
    return report


def run_snapshot(
    visits_path: str | Path,
    out_dir: str | Path,
    label: str | None = None,
    sites_path: str | Path | None = None,
    top_n: int = 1000,
    cut: CutSpec = CutSpec(mode="auto"),
    layout_params: LayoutParams = LayoutParams(),
    prev_partition_path: str | Path | None = None,
    match_threshold: float = 0.3,
) -> dict:
    """All per-snapshot stages for one panel, composed on disk."""
    out_dir = Path(out_dir)
    label = stage_graph(visits_path, out_dir, label=label, sites_path=sites_path, top_n=top_n)
    graph_path = out_dir / f"graph_{label}.json"
    stage_cluster(graph_path, out_dir, cut, prev_partition_path, match_threshold)
    partition_path = out_dir / f"partition_{label}.json"
    stage_measure(graph_path, partition_path, out_dir)
    stage_layout(graph_path, partition_path, out_dir, layout_params)
    return stage_report(label, out_dir)


def _build_chains(labels: list[str], matches: list, partitions: list[Partition]) -> list[dict]:
    """Follow adjacent matches across every snapshot; full-length chains only."""
    forward = [{p.from_cluster: p.to_cluster for p in m.pairs} for m in matches]
    chains = []
    for start in sorted(partitions[0].clusters):
        path = [start]
        for step in forward:
            nxt = step.get(path[-1])
            if nxt is None:
                break
            path.append(nxt)
        if len(path) == len(labels):
            chains.append(
                {
                    "chain_id": len(chains),
                    "label": f"c{start}",
                    "color": partitions[0].colors.get(start, ""),
                    "clusters": {lab: cid for lab, cid in zip(labels, path)},
                }
            )
    return chains


def cross_snapshot_stage(labels: list[str], out_dir: str | Path, match_threshold: float = 0.3) -> dict:
    """Match clusters across snapshots, standardize thickness, render trajectories."""
    out_dir = Path(out_dir)
    partitions: list[Partition] = []
    metrics_by_label: dict[str, list[CultureMetrics]] = {}
    for label in labels:
        graph_data = read_json(out_dir / f"graph_{label}.json", "graph")
        domains = [s["domain"] for s in graph_data["sites"]]
        partitions.append(
            artifacts.partition_from_json(read_json(out_dir / f"partition_{label}.json", "partition"), domains)
        )
        metrics_by_label[label] = artifacts.metrics_from_json(
            read_json(out_dir / f"metrics_{label}.json", "metrics")
        )

    adjacent = [
        match_clusters(partitions[i], partitions[i + 1], match_threshold)
        for i in range(len(partitions) - 1)
    ]
    chains = _build_chains(labels, adjacent, partitions)
    write_json(out_dir / "matches.json", artifacts.matches_to_json(labels, adjacent, chains))

    snapshot_flags: dict[str, list[str]] = {}
    chain_rows = []
    for chain in chains:
        chain_rows.append({**chain, "ei": [], "z": []})
    for idx, label in enumerate(labels):
        by_id = {m.cluster_id: m for m in metrics_by_label[label]}
        rows = [by_id[chain["clusters"][label]] for chain in chains]
        if len(rows) >= 2:
            zs = standardized_ei(rows)
            flags = sorted({f for m in rows for f in m.flags})
        else:
            zs = [None] * len(rows)
            flags = ["standardization-undefined"] if rows else []
        snapshot_flags[label] = flags
        for chain_row, m, z in zip(chain_rows, rows, zs):
            chain_row["ei"].append(m.ei_index)
            chain_row["z"].append(z)

    trajectories = {
        **stamp("trajectories"),
        "snapshots": labels,
        "snapshot_flags": snapshot_flags,
        "chains": chain_rows,
    }
    write_json(out_dir / "trajectories.json", trajectories)
    svg_chains = [c for c in chain_rows if any(z is not None for z in c["z"])]
    (out_dir / "trajectories.svg").write_text(render_trajectories(labels, svg_chains), encoding="utf-8")
    log.info("cross-snapshot: %d chain(s) across %d snapshot(s)", len(chains), len(labels))
    return trajectories


def run_pipeline(config: RunConfig, out_dir: str | Path | None = None) -> list[dict]:
    """Full multi-snapshot run; returns the per-snapshot reports.

    A failing snapshot is recorded as a structured error artifact and
    skipped; cross-snapshot stages run on the survivors.
    """
    out = Path(out_dir if out_dir is not None else (config.out_dir or "out"))
    out.mkdir(parents=True, exist_ok=True)
    _configure_run_log(out)

    if config.world is not None:
        sources = stage_generate(config.world, config.world_snapshots, out)
    else:
        sources = [(p.label, p.visits, p.sites) for p in config.panels]

    reports = []
    survivors: list[str] = []
    prev_partition: Path | None = None
    for label, visits_path, sites_path in sources:
        try:
            report = run_snapshot(
                visits_path,
                out,
                label=label,
                sites_path=sites_path,
                top_n=config.top_n,
                cut=config.cut,
                layout_params=config.layout,
                prev_partition_path=prev_partition,
                match_threshold=config.match_threshold,
            )
        except UsageAtlasError as exc:
            log.error("snapshot %s failed: %s", label, exc)
            write_json(
                out / f"error_{label}.json",
                {
                    **stamp("error"),
                    "snapshot_label": label,
                    "error_type": type(exc).__name__,
                    "message": str(exc),
                },
            )
            continue
        reports.append(report)
        survivors.append(label)
        prev_partition = out / f"partition_{label}.json"

    if not survivors:
        raise ValidationError("every snapshot failed; see error artifacts")
    if len(survivors) >= 2:
        cross_snapshot_stage(survivors, out, config.match_threshold)
    return reports


def _configure_run_log(out_dir: Path) -> None:
    # Timestamps are confined to this sidecar; artifacts stay byte-stable.
    for handler in list(log.handlers):
        if getattr(handler, "_usageatlas_run_log", False):
            log.removeHandler(handler)
            handler.close()
    handler = logging.FileHandler(out_dir / "run.log", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    handler._usageatlas_run_log = True  # type: ignore[attr-defined]
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.info("run started at %s", datetime.now(timezone.utc).isoformat())
