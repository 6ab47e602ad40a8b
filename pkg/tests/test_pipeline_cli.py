from __future__ import annotations

import json
from pathlib import Path

import pytest

from usageatlas import artifacts
from usageatlas.artifacts import sha256_file
from usageatlas.cartograph import LayoutParams
from usageatlas.cli import main
from usageatlas.config import PanelSource, RunConfig, load_config, world_from_dict
from usageatlas.errors import ValidationError
from usageatlas.pipeline import (
    cross_snapshot_stage,
    run_pipeline,
    run_snapshot,
    stage_cluster,
    stage_generate,
    stage_graph,
    stage_layout,
    stage_measure,
    stage_report,
)
from usageatlas.regions import CutSpec

WORLD = {
    "regions": [
        {"name": "alpha", "user_share": 0.25, "site_count": 10, "language": "aa"},
        {"name": "beta", "user_share": 0.25, "site_count": 10, "language": "bb"},
        {"name": "gamma", "user_share": 0.25, "site_count": 10, "language": "cc"},
        {"name": "delta", "user_share": 0.25, "site_count": 10, "language": "dd", "p_home": 0.24},
    ],
    "users": 2500,
    "p_home": 0.3,
    "p_cross": 0.1,
    "p_global": 0.4,
    "global_sites": 4,
    "drift": {"delta": {"p_home": 0.08}},
    "snapshots": 3,
}


def write_config(tmp_path: Path, seed=5, **extra) -> Path:
    cfg = {
        "schema": "usage-atlas/config@1",
        "seed": seed,
        "top_n": 1000,
        "cut": {"mode": "auto"},
        "match_threshold": 0.3,
        "layout": {"iterations": 40},
        "world": WORLD,
        **extra,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


class TestConfig:
    def test_load_roundtrip(self, tmp_path):
        config = load_config(write_config(tmp_path))
        assert config.seed == 5
        assert config.world is not None and config.world_snapshots == 3
        assert config.layout.iterations == 40
        assert config.layout.seed == 5  # inherits the config seed

    def test_wrong_schema_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"schema": "nope@9", "world": WORLD}), encoding="utf-8")
        with pytest.raises(ValidationError):
            load_config(path)

    def test_needs_panels_or_world(self):
        with pytest.raises(ValidationError):
            RunConfig(seed=1)

    def test_top_n_validation(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config(write_config(tmp_path, top_n=1))

    def test_seed_override(self, tmp_path):
        # a world without an explicit seed inherits the overridden config seed
        config = load_config(write_config(tmp_path), seed_override=42)
        assert config.seed == 42 and config.world.seed == 42
        # an explicit world seed survives the override
        explicit = write_config(tmp_path, world={**WORLD, "seed": 7})
        config = load_config(explicit, seed_override=42)
        assert config.seed == 42 and config.world.seed == 7


@pytest.fixture(scope="module")
def pipeline_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    config = RunConfig(
        seed=5, cut=CutSpec(mode="auto"), layout=LayoutParams(iterations=40, seed=5),
        world=world_from_dict(WORLD, default_seed=5), world_snapshots=3,
    )
    reports = run_pipeline(config, out)
    return out, reports


class TestPipeline:
    def test_three_snapshots_three_reports_plus_cross_artifacts(self, pipeline_out):
        out, reports = pipeline_out
        assert len(reports) == 3
        assert (out / "trajectories.svg").exists()
        assert (out / "matches.json").exists()
        assert (out / "trajectories.json").exists()

    def test_all_artifacts_carry_schema_stamps(self, pipeline_out):
        out, _ = pipeline_out
        for path in out.glob("*.json"):
            data = json.loads(path.read_text(encoding="utf-8"))
            assert str(data.get("schema_version", "")).startswith("usage-atlas/"), path.name
            assert data.get("tool_version"), path.name

    def test_manifest_hashes_match_emitted_files(self, pipeline_out):
        out, reports = pipeline_out
        for report in reports:
            for name, digest in report["manifest"].items():
                assert sha256_file(out / name) == digest, name

    def test_reports_embed_summary_and_metrics(self, pipeline_out):
        _, reports = pipeline_out
        for report in reports:
            assert 0.0 <= report["summary"]["density"] <= 1.0
            assert report["summary"]["pairs_evaluated"] == 44 * 43 // 2
            assert report["metrics"], "metrics rows must be embedded"

    def test_chains_cover_all_snapshots(self, pipeline_out):
        out, _ = pipeline_out
        traj = json.loads((out / "trajectories.json").read_text(encoding="utf-8"))
        assert traj["snapshots"] == ["t0", "t1", "t2"]
        assert len(traj["chains"]) >= 4
        for chain in traj["chains"]:
            assert len(chain["ei"]) == 3 and len(chain["z"]) == 3

    def test_colors_stable_across_snapshots(self, pipeline_out):
        out, _ = pipeline_out
        matches = json.loads((out / "matches.json").read_text(encoding="utf-8"))
        partitions = {
            label: json.loads((out / f"partition_{label}.json").read_text(encoding="utf-8"))
            for label in ("t0", "t1", "t2")
        }
        colors = {
            label: {c["id"]: c["color"] for c in data["clusters"]}
            for label, data in partitions.items()
        }
        for block, frm, to in zip(matches["adjacent"], ("t0", "t1"), ("t1", "t2")):
            for pair in block["pairs"]:
                assert colors[frm][pair["from_cluster"]] == colors[to][pair["to_cluster"]]

    def test_rerun_is_byte_identical(self, pipeline_out, tmp_path):
        out, _ = pipeline_out
        config = RunConfig(
            seed=5, cut=CutSpec(mode="auto"), layout=LayoutParams(iterations=40, seed=5),
            world=world_from_dict(WORLD, default_seed=5), world_snapshots=3,
        )
        run_pipeline(config, tmp_path)
        for path in sorted(out.rglob("*")):
            if path.is_file() and path.suffix in (".json", ".svg", ".csv"):
                twin = tmp_path / path.relative_to(out)
                assert twin.read_bytes() == path.read_bytes(), path.name

    def test_staged_run_equals_pipeline_run(self, pipeline_out, tmp_path):
        out, _ = pipeline_out
        world = world_from_dict(WORLD, default_seed=5)
        sources = stage_generate(world, 3, tmp_path)
        prev = None
        for label, visits, sites in sources:
            stage_graph(visits, tmp_path, label=label, sites_path=sites, top_n=1000)
            graph_path = tmp_path / f"graph_{label}.json"
            stage_cluster(graph_path, tmp_path, CutSpec(mode="auto"), prev, 0.3)
            partition_path = tmp_path / f"partition_{label}.json"
            stage_measure(graph_path, partition_path, tmp_path)
            stage_layout(graph_path, partition_path, tmp_path, LayoutParams(iterations=40, seed=5))
            stage_report(label, tmp_path)
            prev = partition_path
        cross_snapshot_stage(["t0", "t1", "t2"], tmp_path, 0.3)
        for path in sorted(out.rglob("*")):
            if path.is_file() and path.suffix in (".json", ".svg", ".csv"):
                twin = tmp_path / path.relative_to(out)
                assert twin.read_bytes() == path.read_bytes(), path.name

    def test_failing_snapshot_writes_error_and_survivors_continue(self, tmp_path):
        world = world_from_dict({**WORLD, "snapshots": 2}, default_seed=5)
        sources = stage_generate(world, 2, tmp_path)
        # corrupt the second snapshot's panel
        Path(sources[1][1]).write_text("user_id,site_domain\nu1,only.example\n", encoding="utf-8")
        config = RunConfig(
            seed=5, layout=LayoutParams(iterations=30, seed=5),
            panels=tuple(
                PanelSource(label=label, visits=visits, sites=sites)
                for label, visits, sites in sources
            ),
        )
        reports = run_pipeline(config, tmp_path)
        assert len(reports) == 1
        error = json.loads((tmp_path / "error_t1.json").read_text(encoding="utf-8"))
        assert error["error_type"] == "ValidationError"
        assert not (tmp_path / "matches.json").exists()  # one survivor, no cross stage

    def test_all_snapshots_failing_raises(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("user_id,site_domain\n", encoding="utf-8")
        config = RunConfig(seed=1, panels=(PanelSource(label="x", visits=bad),))
        with pytest.raises(ValidationError):
            run_pipeline(config, tmp_path / "out")


class TestCli:
    def run_cli(self, *argv):
        return main([str(a) for a in argv])

    def test_generate_then_stage_commands(self, tmp_path, capsys):
        world_path = tmp_path / "world.json"
        world_path.write_text(json.dumps({**WORLD, "seed": 5, "snapshots": 1}), encoding="utf-8")
        out = tmp_path / "out"
        assert self.run_cli("generate", "--world", world_path, "--out", out) == 0
        panel = out / "panels" / "panel_t0.csv"
        assert panel.exists()
        assert self.run_cli("graph", "--panel", panel, "--sites", out / "panels" / "sites_t0.csv",
                            "--label", "t0", "--out", out) == 0
        assert self.run_cli("cluster", "--graph", out / "graph_t0.json", "--out", out) == 0
        assert self.run_cli("measure", "--graph", out / "graph_t0.json",
                            "--partition", out / "partition_t0.json", "--out", out) == 0
        assert self.run_cli("layout", "--graph", out / "graph_t0.json",
                            "--partition", out / "partition_t0.json", "--out", out,
                            "--iterations", 30, "--seed", 5) == 0
        for name in ("graph_t0.json", "summary_t0.json", "partition_t0.json",
                     "metrics_t0.json", "layout_t0.json", "map_t0.svg"):
            assert (out / name).exists(), name

    def test_graph_on_two_site_panel_has_at_most_one_edge(self, tmp_path):
        panel = tmp_path / "panel_tiny.csv"
        panel.write_text("user_id,site_domain\nu1,a.example\nu1,b.example\nu2,a.example\n",
                         encoding="utf-8")
        assert self.run_cli("graph", "--panel", panel, "--label", "tiny", "--out", tmp_path) == 0
        data = json.loads((tmp_path / "graph_tiny.json").read_text(encoding="utf-8"))
        assert len(data["edges"]) <= 1

    def test_cluster_without_graph_is_a_dependency_error(self, tmp_path, capsys):
        code = self.run_cli("cluster", "--graph", tmp_path / "missing.json", "--out", tmp_path)
        assert code == 2
        assert "missing.json" in capsys.readouterr().err

    def test_validation_errors_exit_1(self, tmp_path, capsys):
        panel = tmp_path / "panel_bad.csv"
        panel.write_text("user_id,site_domain\nu1,only.example\n", encoding="utf-8")
        assert self.run_cli("graph", "--panel", panel, "--out", tmp_path) == 1

    def test_report_all_in_one(self, tmp_path):
        world_path = tmp_path / "world.json"
        world_path.write_text(json.dumps({**WORLD, "seed": 5, "snapshots": 1}), encoding="utf-8")
        out = tmp_path / "out"
        self.run_cli("generate", "--world", world_path, "--out", out)
        code = self.run_cli("report", "--panel", out / "panels" / "panel_t0.csv",
                            "--sites", out / "panels" / "sites_t0.csv", "--label", "t0",
                            "--out", out, "--iterations", 30, "--seed", 5)
        assert code == 0
        report = json.loads((out / "report_t0.json").read_text(encoding="utf-8"))
        assert report["snapshot_label"] == "t0"
        assert (out / "scatter_t0.svg").exists()

    def test_pipeline_command(self, tmp_path, capsys):
        config_path = write_config(tmp_path)
        out = tmp_path / "run"
        assert self.run_cli("pipeline", "--config", config_path, "--out", out) == 0
        stdout = capsys.readouterr().out
        assert "pairs evaluated" in stdout
        assert (out / "report_t2.json").exists()

    def test_pipeline_with_missing_config_exits_1(self, tmp_path):
        assert self.run_cli("pipeline", "--config", tmp_path / "none.json") == 1
