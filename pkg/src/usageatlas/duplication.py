"""Pairwise audience duplication and duplication-graph construction.

Observed duplication between two sites is the fraction of the panel
universe visiting both. Expected duplication is the product of the two
reaches (independence baseline). The residual observed - expected is the
above-random duplication; positive means more shared audience than
chance. Negative residuals are zeroed: the tie is considered absent.
"""

from __future__ import annotations

import numpy as np

from usageatlas.errors import InvalidPairError, ValidationError
from usageatlas.panel import PanelSnapshot, Site


class DuplicationGraph:
    """Symmetric valued graph of above-random duplication between sites.

    `values` is an (n, n) float matrix with zero diagonal; every stored
    entry is >= 0 (negatives zeroed at construction). The diagonal carries
    no tie and is excluded from all downstream computation.
    """

    def __init__(self, sites: list[Site], values: np.ndarray, snapshot_label: str):
        values = np.asarray(values, dtype=float)
        n = len(sites)
        if values.shape != (n, n):
            raise ValidationError(f"value matrix shape {values.shape} does not match {n} sites")
        if not np.array_equal(values, values.T):
            raise ValidationError("duplication values must be symmetric")
        if np.any(values < 0):
            raise ValidationError("duplication values must be non-negative (zeroed residuals)")
        self.sites = list(sites)
        self.values = values
        self.values.flags.writeable = False
        self.snapshot_label = snapshot_label
        self._site_index = {s.domain: i for i, s in enumerate(self.sites)}

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def pairs_evaluated(self) -> int:
        """Number of unordered off-diagonal pairs, n(n-1)/2."""
        n = self.n_sites
        return n * (n - 1) // 2

    def site_index(self, domain: str) -> int:
        return self._site_index[domain]


class BinaryGraph:
    """Dichotomized duplication graph: edge wherever the residual is > 0."""

    def __init__(self, sites: list[Site], adjacency: np.ndarray):
        adjacency = np.asarray(adjacency, dtype=bool)
        n = len(sites)
        if adjacency.shape != (n, n):
            raise ValidationError(f"adjacency shape {adjacency.shape} does not match {n} sites")
        if not np.array_equal(adjacency, adjacency.T):
            raise ValidationError("adjacency must be symmetric")
        if np.any(np.diag(adjacency)):
            raise ValidationError("adjacency must have no self-loops")
        self.sites = list(sites)
        self.adjacency = adjacency
        self.adjacency.flags.writeable = False

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])


def _check_fraction(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must be in [0, 1], got {value}")
    return value


def observed_duplication(snapshot: PanelSnapshot, a: Site | str, b: Site | str) -> float:
    """Fraction of the universe visiting both `a` and `b`."""
    ia = snapshot.site_index(a)
    ib = snapshot.site_index(b)
    if ia == ib:
        raise InvalidPairError(f"duplication of a site with itself is undefined ({a})")
    joint = int(np.count_nonzero(snapshot.visits[:, ia] & snapshot.visits[:, ib]))
    return joint / snapshot.n_users


def expected_duplication(r_a: float, r_b: float) -> float:
    """Duplication expected by chance: the product of the two reaches."""
    _check_fraction(r_a, "r_a")
    _check_fraction(r_b, "r_b")
    return r_a * r_b


def above_random(observed: float, expected: float) -> float:
    """Signed residual observed - expected; positive = more shared than chance."""
    _check_fraction(observed, "observed")
    _check_fraction(expected, "expected")
    return observed - expected


def build_valued_graph(snapshot: PanelSnapshot) -> DuplicationGraph:
    """Above-random duplication for every unordered pair, negatives zeroed.

    Evaluates exactly n(n-1)/2 pairs. The cell arithmetic is exact-count
    based (joint visitors / U), so the matrix is exactly symmetric.
    """
    v = snapshot.visits.astype(np.float64)
    joint = v.T @ v  # exact integer co-visitor counts in float64
    observed = joint / snapshot.n_users
    r = snapshot.reach_vector()
    expected = np.outer(r, r)
    values = observed - expected
    np.maximum(values, 0.0, out=values)
    np.fill_diagonal(values, 0.0)
    return DuplicationGraph(snapshot.sites, values, snapshot.label)


def dichotomize(graph: DuplicationGraph) -> BinaryGraph:
    """Binary view: tie present iff the valued entry is strictly positive."""
    return BinaryGraph(graph.sites, graph.values > 0)
