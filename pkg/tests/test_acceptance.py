"""Acceptance suite: one test per criterion, one printed pass line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
Property criteria use fixed seed sets, so results are reproducible.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from conftest import make_binary, make_panel, make_sites, make_valued
from oracles import (
    clustering_by_counting,
    contracted_distance,
    density_by_counting,
    ei_by_looping,
    floyd_warshall,
    random_binary_adjacency,
    random_valued_matrix,
)
from usageatlas.artifacts import layout_to_json
from usageatlas.cartograph import LayoutParams, fr_layout
from usageatlas.config import RunConfig, world_from_dict
from usageatlas.duplication import (
    DuplicationGraph,
    build_valued_graph,
    dichotomize,
    expected_duplication,
    observed_duplication,
)
from usageatlas.graphmetrics import all_pairs_geodesics, clustering_coefficient, density
from usageatlas.measures import cluster_distance, ei_index, snapshot_metrics, standardized_ei
from usageatlas.pipeline import run_pipeline
from usageatlas.regions import CutSpec, cluster, profile_similarity
from usageatlas.synthworld import RegionSpec, WorldSpec, generate_series, generate_snapshot


def ok(criterion: int, message: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS - {message}")


def region_of_cluster(partition, panel, truth, cluster_id) -> str:
    regions = Counter(
        truth.assignments[panel.sites[i].domain] for i in partition.members(cluster_id)
    )
    return regions.most_common(1)[0][0]


def test_criterion_1_worked_example_fidelity():
    # one-ulp tolerance: 0.80 * 0.70 is not exactly representable in binary
    assert expected_duplication(0.80, 0.70) == pytest.approx(0.56, abs=1e-15)
    joint = [(f"u{i}", "cnn.example") for i in range(20)] + [(f"u{i}", "baidu.example") for i in range(20)]
    panel = make_panel(joint, extra_users=80)
    assert panel.n_users == 100
    assert observed_duplication(panel, "cnn.example", "baidu.example") == 0.20
    ok(1, "expected_duplication(0.80, 0.70) = 0.56 and the 100-user/20-joint fixture = 0.20")


def test_criterion_2_pair_enumeration():
    # formula on directly constructed graphs
    for n, want in ((1018, 517_653), (1022, 521_731), (1030, 529_935)):
        graph = DuplicationGraph(make_sites([f"s{i}.example" for i in range(n)]), np.zeros((n, n)), "x")
        assert graph.pairs_evaluated == want

    # full pipeline at top_n = 1018 over a >= 1018-site synthetic panel
    world = world_from_dict({
        "regions": [
            {"name": f"r{i}", "user_share": 0.125, "site_count": 127, "language": f"l{i}"}
            for i in range(8)
        ],
        "global_sites": 10, "users": 900,
        "p_home": 0.25, "p_cross": 0.01, "p_global": 0.4, "seed": 11,
    })
    config = RunConfig(seed=11, top_n=1018, cut=CutSpec(mode="auto"),
                       layout=LayoutParams(iterations=30, seed=11),
                       world=world, world_snapshots=1)
    import tempfile

    with tempfile.TemporaryDirectory() as td:
        reports = run_pipeline(config, td)
    assert reports[0]["summary"]["node_count"] == 1018
    assert reports[0]["summary"]["pairs_evaluated"] == 517_653
    ok(2, "pipeline reports 517,653 pairs at n=1018; formula checks for 1022 and 1030")


def test_criterion_3_ei_extremes():
    vals = np.zeros((4, 4))
    vals[0, 1] = vals[1, 0] = 0.25
    vals[2, 3] = vals[3, 2] = 0.4
    singleton, _ = ei_index(make_valued(vals), {0})
    assert singleton == 1.0  # exact
    saturated, _ = ei_index(make_valued(vals), {2, 3})
    assert saturated == -1.0  # exact
    ok(3, "singleton E-I = +1 and internally saturated isolated cluster = -1, both exact")


def test_criterion_4_oracle_equivalence_on_small_graphs():
    rng = np.random.default_rng(4)
    started = time.time()
    for trial in range(200):
        n = int(rng.integers(2, 9))
        adj = random_binary_adjacency(rng, n, float(rng.random()))
        graph = make_binary(adj)
        assert density(graph) == pytest.approx(density_by_counting(adj), abs=1e-12)
        assert clustering_coefficient(graph) == pytest.approx(clustering_by_counting(adj), abs=1e-12)
        assert np.array_equal(all_pairs_geodesics(graph), floyd_warshall(adj))

        if n >= 2:
            size = int(rng.integers(1, n))
            members = set(rng.choice(n, size=size, replace=False).tolist())
            dist, unreachable = cluster_distance(graph, members)
            want_dist, want_unreachable = contracted_distance(adj, members)
            assert dist == pytest.approx(want_dist, abs=1e-12)
            assert unreachable == want_unreachable

        vals = random_valued_matrix(rng, n)
        members = set(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
        got = ei_index(make_valued(vals), members)
        want = ei_by_looping(vals, members)
        assert got[0] == pytest.approx(want[0], abs=1e-12)
        assert got[1] == want[1]
    elapsed = time.time() - started
    assert elapsed < 10.0
    ok(4, f"200-graph corpus matches brute-force oracles within 1e-12 in {elapsed:.1f}s")


def test_criterion_5_random_graph_clustering_equals_density():
    rng = np.random.default_rng(5)
    started = time.time()
    for p in (0.2, 0.4):
        ccs, densities = [], []
        for _ in range(50):
            adj = random_binary_adjacency(rng, 200, p)
            graph = make_binary(adj)
            ccs.append(clustering_coefficient(graph))
            densities.append(density(graph))
        gap = abs(float(np.mean(ccs)) - float(np.mean(densities)))
        assert gap < 0.05, f"p={p}: |mean cc - mean density| = {gap}"
    elapsed = time.time() - started
    assert elapsed < 30.0
    ok(5, f"G(200, p) mean clustering is within 0.05 of density for p in {{0.2, 0.4}} ({elapsed:.1f}s)")


def recovery_world(seed: int) -> WorldSpec:
    return WorldSpec(
        regions=tuple(RegionSpec(f"r{i}", 0.2, 32, f"l{i}") for i in range(5)),
        users=20000, p_home=0.3, p_cross=0.02, seed=seed,
    )


def test_criterion_6_planted_partition_recovery():
    wins = 0
    slowest = 0.0
    for seed in range(10):
        started = time.time()
        panel, truth = generate_snapshot(recovery_world(seed))
        graph = build_valued_graph(panel)
        _, partition = cluster(profile_similarity(graph), CutSpec(mode="auto"), graph=graph)
        want = [truth.assignments[s.domain] for s in panel.sites]
        ari = adjusted_rand_score(want, partition.labels)
        slowest = max(slowest, time.time() - started)
        wins += ari >= 0.9
    assert wins >= 9
    assert slowest < 60.0
    ok(6, f"ARI >= 0.9 in {wins}/10 seeds (slowest run {slowest:.1f}s)")


def test_criterion_7_distance_ordering():
    overlap = {tuple(sorted(("r0", f"r{i}"))): 0.1 for i in range(1, 5)}
    wins = 0
    for seed in range(10):
        spec = WorldSpec(
            regions=tuple(RegionSpec(f"r{i}", 0.2, 30, f"l{i}") for i in range(5)),
            users=20000, p_home=0.3, p_cross=0.1, p_global=0.5, global_sites=8,
            language_overlap=overlap, seed=seed,
        )
        panel, truth = generate_snapshot(spec)
        graph = build_valued_graph(panel)
        _, partition = cluster(profile_similarity(graph), CutSpec(mode="auto"), graph=graph)
        metrics = snapshot_metrics(graph, dichotomize(graph), partition)
        farthest = max(metrics, key=lambda m: m.distance)
        wins += region_of_cluster(partition, panel, truth, farthest.cluster_id) == "r0"
    assert wins >= 9
    ok(7, f"the 10x-isolated region takes the maximum distance in {wins}/10 seeds")


def test_criterion_8_thickening_direction():
    wins = 0
    for seed in range(10):
        homes = [0.26, 0.28, 0.30, 0.32]
        regions = [RegionSpec(f"r{i}", 0.2, 24, f"l{i}", p_home=h) for i, h in enumerate(homes)]
        regions.append(RegionSpec("drift", 0.2, 24, "ld", p_home=0.22))
        spec = WorldSpec(regions=tuple(regions), users=15000, p_home=0.3, p_cross=0.1,
                         drift={"drift": {"p_home": 0.09}}, seed=seed)
        zs = []
        for panel, truth in generate_series(spec, 3):
            graph = build_valued_graph(panel)
            _, partition = cluster(profile_similarity(graph), CutSpec(mode="auto"), graph=graph)
            metrics = snapshot_metrics(graph, dichotomize(graph), partition)
            if partition.n_clusters < 2:
                break
            standardized_ei(metrics)
            drift_cid = next(
                cid for cid in partition.clusters
                if region_of_cluster(partition, panel, truth, cid) == "drift"
            )
            zs.append(next(m.ei_standardized for m in metrics if m.cluster_id == drift_cid))
        wins += len(zs) == 3 and zs[0] > zs[1] > zs[2]
    assert wins >= 9
    ok(8, f"the drifting region's standardized E-I strictly decreases in {wins}/10 seeds")


def test_criterion_9_layout_quality_and_determinism():
    wins = 0
    for seed in range(10):
        spec = WorldSpec(
            regions=tuple(RegionSpec(f"r{i}", 1 / 3, 20, f"l{i}") for i in range(3)),
            users=8000, p_home=0.3, p_cross=0.02, seed=seed,
        )
        panel, truth = generate_snapshot(spec)
        binary = dichotomize(build_valued_graph(panel))
        layout = fr_layout(binary, LayoutParams(iterations=300, seed=seed), panel.label)
        labels = [truth.assignments[s.domain] for s in binary.sites]
        pos = layout.positions
        intra, inter = [], []
        for i in range(binary.n_sites):
            for j in range(i + 1, binary.n_sites):
                d = float(np.linalg.norm(pos[i] - pos[j]))
                (intra if labels[i] == labels[j] else inter).append(d)
        wins += float(np.mean(intra)) < float(np.mean(inter))
        if seed == 0:
            again = fr_layout(binary, LayoutParams(iterations=300, seed=seed), panel.label)
            assert json.dumps(layout_to_json(layout)) == json.dumps(layout_to_json(again))
    assert wins >= 9
    ok(9, f"intra-cluster layout distance < inter-cluster in {wins}/10 seeds; byte-deterministic")


def test_criterion_10_pipeline_determinism(tmp_path):
    world = world_from_dict({
        "regions": [
            {"name": n, "user_share": 0.25, "site_count": 12, "language": n}
            for n in ("alpha", "beta", "gamma", "delta")
        ],
        "users": 3000, "p_home": 0.3, "p_cross": 0.1, "p_global": 0.4,
        "global_sites": 5, "seed": 3, "drift": {"delta": {"p_home": 0.08}},
    })
    config = RunConfig(seed=3, cut=CutSpec(mode="auto"),
                       layout=LayoutParams(iterations=60, seed=3),
                       world=world, world_snapshots=3)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    run_pipeline(config, out_a)
    run_pipeline(config, out_b)
    compared = 0
    for path in sorted(out_a.rglob("*")):
        if path.is_file() and path.suffix in (".json", ".svg"):
            twin = out_b / path.relative_to(out_a)
            assert twin.read_bytes() == path.read_bytes(), path.name
            compared += 1
    assert compared >= 20
    ok(10, f"two identical runs produced byte-identical artifacts ({compared} files compared)")
