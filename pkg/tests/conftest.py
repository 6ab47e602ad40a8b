from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from usageatlas.duplication import BinaryGraph, DuplicationGraph
from usageatlas.panel import PanelSnapshot, Site


def make_sites(domains: list[str]) -> list[Site]:
    return [Site(id=d, domain=d) for d in domains]


def make_panel(visits: list[tuple[str, str]], label: str = "test", extra_users: int = 0) -> PanelSnapshot:
    """Panel from (user, domain) pairs; extra_users adds visitless users to U."""
    users: dict[str, int] = {}
    sites: dict[str, int] = {}
    for user, domain in visits:
        users.setdefault(user, len(users))
        sites.setdefault(domain, len(sites))
    for i in range(extra_users):
        users.setdefault(f"__filler{i}", len(users))
    matrix = np.zeros((len(users), len(sites)), dtype=bool)
    for user, domain in visits:
        matrix[users[user], sites[domain]] = True
    return PanelSnapshot(label, list(users), make_sites(list(sites)), matrix)


def make_binary(adjacency: np.ndarray, prefix: str = "s") -> BinaryGraph:
    n = adjacency.shape[0]
    return BinaryGraph(make_sites([f"{prefix}{i}.example" for i in range(n)]), adjacency)


def make_valued(values: np.ndarray, label: str = "test", prefix: str = "s") -> DuplicationGraph:
    n = values.shape[0]
    return DuplicationGraph(make_sites([f"{prefix}{i}.example" for i in range(n)]), values, label)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240901)
