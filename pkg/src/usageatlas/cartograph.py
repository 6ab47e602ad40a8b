"""Force-directed layout and SVG rendering of maps, scatters, trajectories.

The layout is the classic force-directed scheme: repulsive forces between
all node pairs (k^2/d), attractive forces along edges (d^2/k), optimal
pair distance k = sqrt(area/n), per-step displacement capped by a
temperature that cools linearly to zero. Node positions are seeded by a
deterministic RNG, so identical inputs and seed give identical layouts.

Rendering is plain hand-built SVG. Data marks carry `data-*` attributes
with the exact values they encode so charts can be read back by tests
and downstream tooling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from usageatlas.duplication import BinaryGraph
from usageatlas.errors import ValidationError
from usageatlas.measures import CultureMetrics
from usageatlas.regions import PALETTE, Partition, assign_colors


@dataclass(frozen=True)
class LayoutParams:
    width: float = 1000.0
    height: float = 1000.0
    iterations: int = 500
    initial_temperature: float = 0.1  # fraction of width
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError("layout needs at least 1 iteration")
        if self.initial_temperature <= 0:
            raise ValidationError("initial temperature must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("frame dimensions must be positive")


@dataclass(frozen=True)
class Layout:
    snapshot_label: str
    domains: tuple[str, ...]
    positions: np.ndarray  # (n, 2), within [0, width] x [0, height]
    params: LayoutParams


def fr_layout(graph: BinaryGraph, params: LayoutParams, snapshot_label: str | None = None) -> Layout:
    """Force-directed node placement on the dichotomized graph."""
    n = graph.n_sites
    label = snapshot_label if snapshot_label is not None else ""
    domains = tuple(s.domain for s in graph.sites)
    if n == 1:
        pos = np.array([[params.width / 2.0, params.height / 2.0]])
        return Layout(label, domains, pos, params)

    rng = np.random.default_rng(params.seed)
    pos = rng.random((n, 2)) * np.array([params.width, params.height])
    k = math.sqrt(params.width * params.height / n)
    t0 = params.initial_temperature * params.width
    edges_i, edges_j = np.nonzero(np.triu(graph.adjacency, 1))

    for it in range(params.iterations):
        temp = t0 * (1.0 - it / params.iterations)
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta * delta).sum(axis=2))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-9)
        # repulsion k^2/d from every other node, directed along delta
        coeff = k * k / (dist * dist)
        np.fill_diagonal(coeff, 0.0)
        disp = (delta * coeff[:, :, None]).sum(axis=1)
        if edges_i.size:
            # attraction d^2/k along each edge
            evec = pos[edges_i] - pos[edges_j]
            ed = np.maximum(np.sqrt((evec * evec).sum(axis=1)), 1e-9)
            pull = evec * (ed / k)[:, None]
            np.subtract.at(disp, edges_i, pull)
            np.add.at(disp, edges_j, pull)
        length = np.maximum(np.sqrt((disp * disp).sum(axis=1)), 1e-9)
        step = np.minimum(length, temp) / length
        pos = pos + disp * step[:, None]
        np.clip(pos[:, 0], 0.0, params.width, out=pos[:, 0])
        np.clip(pos[:, 1], 0.0, params.height, out=pos[:, 1])

    pos.flags.writeable = False
    return Layout(label, domains, pos, params)


# --- SVG helpers -----------------------------------------------------------

_SVG_OPEN = '<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" viewBox="0 0 {w:.0f} {h:.0f}">'


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _attr_escape(tag: str, **attrs) -> str:
    parts = [tag]
    for key, value in attrs.items():
        name = key.rstrip("_").replace("_", "-")
        parts.append(f"{name}={quoteattr(str(value))}")
    return "<" + " ".join(parts)


def _text(x: float, y: float, content: str, **attrs) -> str:
    return _attr_escape("text", x=_fmt(x), y=_fmt(y), **attrs) + f">{escape(content)}</text>"


def _cluster_colors(partition: Partition) -> dict[int, str]:
    if not partition.colors:
        assign_colors(partition)
    return partition.colors


def render_map(layout: Layout, partition: Partition, binary: BinaryGraph) -> str:
    """Usage map: one dot per site colored by cluster, thin lines for ties."""
    domains = [s.domain for s in binary.sites]
    if list(layout.domains) != domains or partition.domains != domains:
        raise ValidationError("layout, partition, and graph must share the site universe")
    colors = _cluster_colors(partition)
    w, h = layout.params.width, layout.params.height
    legend_w = 200.0
    lines = [_SVG_OPEN.format(w=w + legend_w, h=h)]
    lines.append(f'<rect x="0" y="0" width="{w:.0f}" height="{h:.0f}" fill="#ffffff"/>')

    lines.append('<g class="edges" stroke="#c8c8c8" stroke-width="0.4" stroke-opacity="0.5">')
    ei, ej = np.nonzero(np.triu(binary.adjacency, 1))
    for i, j in zip(ei.tolist(), ej.tolist()):
        x1, y1 = layout.positions[i]
        x2, y2 = layout.positions[j]
        lines.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"/>')
    lines.append("</g>")

    lines.append('<g class="nodes">')
    for i, domain in enumerate(domains):
        x, y = layout.positions[i]
        color = colors[int(partition.labels[i])]
        lines.append(
            _attr_escape(
                "circle", class_="node", cx=_fmt(x), cy=_fmt(y), r="3", fill=color,
                data_domain=domain,
            )
            + "/>"
        )
    lines.append("</g>")

    lines.append('<g class="legend" font-family="sans-serif" font-size="12">')
    lines.append(_text(w + 14, 22, f"clusters ({layout.snapshot_label})", font_weight="bold"))
    for row, cid in enumerate(sorted(partition.clusters)):
        y = 40 + row * 18
        lines.append(
            _attr_escape(
                "g", class_="legend-entry", data_cluster=cid,
            )
            + ">"
        )
        lines.append(f'<rect x="{_fmt(w + 14)}" y="{_fmt(y - 9)}" width="12" height="12" fill="{colors[cid]}"/>')
        lines.append(_text(w + 32, y + 1, f"cluster {cid} (n={len(partition.members(cid))})"))
        lines.append("</g>")
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_scatter(
    metrics: Sequence[CultureMetrics],
    snapshot_label: str = "",
    colors: dict[int, str] | None = None,
) -> str:
    """Distance x thickness scatter; circle area encodes cluster size."""
    if not metrics:
        raise ValidationError("scatter needs at least one cluster")
    w, h = 640.0, 480.0
    margin = 60.0
    x_hi = max(1.0, max(m.distance for m in metrics) * 1.1)
    y_lo, y_hi = -1.05, 1.05

    def sx(v: float) -> float:
        return margin + (v / x_hi) * (w - 2 * margin)

    def sy(v: float) -> float:
        return h - margin - ((v - y_lo) / (y_hi - y_lo)) * (h - 2 * margin)

    lines = [_SVG_OPEN.format(w=w, h=h)]
    lines.append(f'<rect x="0" y="0" width="{w:.0f}" height="{h:.0f}" fill="#ffffff"/>')
    lines.append('<g class="axes" stroke="#444444" stroke-width="1">')
    lines.append(f'<line x1="{_fmt(margin)}" y1="{_fmt(h - margin)}" x2="{_fmt(w - margin)}" y2="{_fmt(h - margin)}"/>')
    lines.append(f'<line x1="{_fmt(margin)}" y1="{_fmt(margin)}" x2="{_fmt(margin)}" y2="{_fmt(h - margin)}"/>')
    lines.append(f'<line x1="{_fmt(margin)}" y1="{_fmt(sy(0.0))}" x2="{_fmt(w - margin)}" y2="{_fmt(sy(0.0))}" stroke-dasharray="4 3" stroke="#bbbbbb"/>')
    lines.append("</g>")
    lines.append('<g class="axis-labels" font-family="sans-serif" font-size="13" fill="#222222">')
    lines.append(_text(w / 2, h - 18, "distance", text_anchor="middle"))
    lines.append(_text(18, h / 2, "E-I index", text_anchor="middle", transform=f"rotate(-90 18 {h / 2:.2f})"))
    if snapshot_label:
        lines.append(_text(w / 2, 24, snapshot_label, text_anchor="middle", font_weight="bold"))
    lines.append(_text(margin, h - margin + 16, "0", text_anchor="middle", font_size="10"))
    lines.append(_text(w - margin, h - margin + 16, f"{x_hi:.2f}", text_anchor="middle", font_size="10"))
    lines.append(_text(margin - 8, sy(1.0) + 4, "1", text_anchor="end", font_size="10"))
    lines.append(_text(margin - 8, sy(-1.0) + 4, "-1", text_anchor="end", font_size="10"))
    lines.append("</g>")

    lines.append('<g class="marks" fill-opacity="0.75" stroke="#333333" stroke-width="0.8">')
    for m in metrics:
        color = (colors or {}).get(m.cluster_id) or PALETTE[m.cluster_id % len(PALETTE)]
        radius = 4.0 * math.sqrt(m.size)
        lines.append(
            _attr_escape(
                "circle", class_="mark", cx=_fmt(sx(m.distance)), cy=_fmt(sy(m.ei_index)),
                r=_fmt(radius), fill=color,
                data_cluster=m.cluster_id, data_distance=repr(m.distance),
                data_ei=repr(m.ei_index), data_size=m.size,
            )
            + "/>"
        )
        lines.append(
            _text(sx(m.distance), sy(m.ei_index) - radius - 4, str(m.cluster_id),
                  text_anchor="middle", font_family="sans-serif", font_size="11")
        )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_trajectories(
    snapshot_labels: Sequence[str],
    chains: Sequence[dict],
) -> str:
    """Standardized E-I trajectories: one polyline per homologous cluster.

    Each chain is {"chain_id", "label", "color", "z": [per-snapshot z]}.
    With no chains a warning document is produced instead of a chart.
    """
    w, h = 640.0, 400.0
    margin = 60.0
    lines = [_SVG_OPEN.format(w=w, h=h)]
    lines.append(f'<rect x="0" y="0" width="{w:.0f}" height="{h:.0f}" fill="#ffffff"/>')
    if not chains or len(snapshot_labels) < 2:
        lines.append(_text(w / 2, h / 2, "no homologous clusters to plot", class_="warning",
                           text_anchor="middle", font_family="sans-serif", font_size="14"))
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    z_values = [abs(z) for c in chains for z in c["z"] if z is not None]
    z_max = max(1.0, max(z_values) * 1.1 if z_values else 1.0)
    n_snap = len(snapshot_labels)

    def sx(i: int) -> float:
        return margin + (i / (n_snap - 1)) * (w - 2 * margin - 70)

    def sy(z: float) -> float:
        return h / 2 - (z / z_max) * (h / 2 - margin)

    lines.append('<g class="axes" stroke="#444444" stroke-width="1">')
    lines.append(f'<line x1="{_fmt(margin)}" y1="{_fmt(h / 2)}" x2="{_fmt(w - margin)}" y2="{_fmt(h / 2)}" stroke-dasharray="4 3" stroke="#bbbbbb"/>')
    lines.append(f'<line x1="{_fmt(margin)}" y1="{_fmt(margin)}" x2="{_fmt(margin)}" y2="{_fmt(h - margin)}"/>')
    lines.append("</g>")
    lines.append('<g class="axis-labels" font-family="sans-serif" font-size="12" fill="#222222">')
    for i, label in enumerate(snapshot_labels):
        lines.append(_text(sx(i), h - margin + 24, label, text_anchor="middle"))
    lines.append(_text(18, h / 2, "standardized E-I", text_anchor="middle",
                       transform=f"rotate(-90 18 {h / 2:.2f})"))
    lines.append("</g>")

    lines.append('<g class="trajectories" fill="none" stroke-width="2">')
    for chain in chains:
        zs = chain["z"]
        points = " ".join(
            f"{_fmt(sx(i))},{_fmt(sy(z))}" for i, z in enumerate(zs) if z is not None
        )
        lines.append(
            _attr_escape(
                "polyline", class_="trajectory", points=points, stroke=chain["color"],
                data_chain=chain["chain_id"],
                data_z=";".join("" if z is None else repr(z) for z in zs),
            )
            + "/>"
        )
        last = [(i, z) for i, z in enumerate(zs) if z is not None]
        if last:
            i, z = last[-1]
            lines.append(
                _text(sx(i) + 8, sy(z) + 4, str(chain["label"]), fill=chain["color"],
                      stroke="none", font_family="sans-serif", font_size="11")
            )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
