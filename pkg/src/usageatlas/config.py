"""Run configuration: one versioned JSON file reproduces a whole run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from usageatlas.artifacts import SCHEMAS
from usageatlas.cartograph import LayoutParams
from usageatlas.errors import ValidationError
from usageatlas.regions import CutSpec
from usageatlas.synthworld import RegionSpec, WorldSpec


@dataclass(frozen=True)
class PanelSource:
    label: str
    visits: Path
    sites: Path | None = None


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    top_n: int = 1000
    cut: CutSpec = field(default_factory=lambda: CutSpec(mode="auto"))
    match_threshold: float = 0.3
    layout: LayoutParams = field(default_factory=LayoutParams)
    out_dir: Path | None = None
    panels: tuple[PanelSource, ...] = ()
    world: WorldSpec | None = None
    world_snapshots: int = 1

    def __post_init__(self):
        if not self.panels and self.world is None:
            raise ValidationError("config needs input panels or a synthetic world")
        if self.panels and self.world is not None:
            raise ValidationError("config must use either panels or a world, not both")
        if self.top_n < 2:
            raise ValidationError(f"top_n must be >= 2, got {self.top_n}")
        if not 0.0 <= self.match_threshold <= 1.0:
            raise ValidationError("match_threshold must be in [0, 1]")
        if self.world is not None and self.world_snapshots < 1:
            raise ValidationError("world snapshots must be >= 1")
        labels = [p.label for p in self.panels]
        if len(set(labels)) != len(labels):
            raise ValidationError("panel labels must be unique")


def world_from_dict(data: dict, default_seed: int = 0) -> WorldSpec:
    """Build a WorldSpec from its JSON form (see README for the format)."""
    try:
        regions = tuple(
            RegionSpec(
                name=r["name"],
                user_share=float(r["user_share"]),
                site_count=int(r["site_count"]),
                language=r.get("language", ""),
                p_home=r.get("p_home"),
                p_cross=r.get("p_cross"),
            )
            for r in data["regions"]
        )
        overlap: dict[tuple[str, str], float] = {}
        for key, mult in data.get("language_overlap", {}).items():
            parts = key.split("|")
            if len(parts) != 2:
                raise ValidationError(f"language_overlap key '{key}' must be 'regionA|regionB'")
            a, b = sorted(parts)
            overlap[(a, b)] = float(mult)
        return WorldSpec(
            regions=regions,
            users=int(data["users"]),
            p_home=float(data["p_home"]),
            p_cross=float(data["p_cross"]),
            p_global=float(data.get("p_global", 0.0)),
            global_sites=int(data.get("global_sites", 0)),
            language_overlap=overlap,
            drift={k: dict(v) for k, v in data.get("drift", {}).items()},
            seed=int(data.get("seed", default_seed)),
        )
    except KeyError as exc:
        raise ValidationError(f"world spec missing required field {exc}") from None


def _cut_from_dict(data: dict) -> CutSpec:
    mode = data.get("mode", "auto")
    return CutSpec(mode=mode, k=data.get("k"))


def _layout_from_dict(data: dict, default_seed: int) -> LayoutParams:
    return LayoutParams(
        width=float(data.get("width", 1000.0)),
        height=float(data.get("height", 1000.0)),
        iterations=int(data.get("iterations", 500)),
        initial_temperature=float(data.get("initial_temperature", 0.1)),
        seed=int(data.get("seed", default_seed)),
    )


def load_config(path: str | Path, seed_override: int | None = None, out_override: str | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("schema") != SCHEMAS["config"]:
        raise ValidationError(
            f"config schema must be '{SCHEMAS['config']}', got '{data.get('schema')}'"
        )
    seed = int(seed_override if seed_override is not None else data.get("seed", 0))

    panels = tuple(
        PanelSource(
            label=p["label"],
            visits=(path.parent / p["visits"]).resolve(),
            sites=(path.parent / p["sites"]).resolve() if p.get("sites") else None,
        )
        for p in data.get("panels", [])
    )
    world = None
    world_snapshots = 1
    if "world" in data:
        world = world_from_dict(data["world"], default_seed=seed)
        world_snapshots = int(data["world"].get("snapshots", 1))

    out_dir = out_override or data.get("out_dir")
    return RunConfig(
        seed=seed,
        top_n=int(data.get("top_n", 1000)),
        cut=_cut_from_dict(data.get("cut", {})),
        match_threshold=float(data.get("match_threshold", 0.3)),
        layout=_layout_from_dict(data.get("layout", {}), default_seed=seed),
        out_dir=Path(out_dir) if out_dir else None,
        panels=panels,
        world=world,
        world_snapshots=world_snapshots,
    )
