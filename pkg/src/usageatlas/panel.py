"""Visitation panels: site registry, CSV ingestion, reach, top-N selection.

A panel snapshot is a binary user x site visitation relation for one
period: a cell is set when the user visited the site at least once.
Visits are binary by design; all duplication math downstream is about
shared sets of people, not visit volumes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from usageatlas.errors import NotFoundError, ParseError, ValidationError

VISITS_HEADER = ["user_id", "site_domain"]
SITES_HEADER = ["site_domain", "languages", "region_tag"]


@dataclass(frozen=True)
class Site:
    """A website (full domain or subdomain; subdomains are distinct sites)."""

    id: str
    domain: str
    languages: frozenset[str] = field(default_factory=frozenset)
    region_tag: str | None = None


class PanelSnapshot:
    """Immutable user x site visitation panel for one time point.

    `visits` is a (U, n) boolean matrix; row order follows first appearance
    of each user in the source, column order the `sites` list.
    """

    def __init__(self, label: str, user_ids: list[str], sites: list[Site], visits: np.ndarray):
        if len(user_ids) < 1:
            raise ValidationError(f"panel '{label}' has no users")
        if len(sites) < 2:
            raise ValidationError(f"panel '{label}' has {len(sites)} sites; need at least 2")
        domains = [s.domain for s in sites]
        if len(set(domains)) != len(domains):
            raise ValidationError(f"panel '{label}' has duplicate site domains")
        visits = np.asarray(visits, dtype=bool)
        if visits.shape != (len(user_ids), len(sites)):
            raise ValidationError(
                f"visits shape {visits.shape} does not match {len(user_ids)} users x {len(sites)} sites"
            )
        self.label = label
        self.user_ids = list(user_ids)
        self.sites = list(sites)
        self.visits = visits
        self.visits.flags.writeable = False
        self._site_index = {s.domain: i for i, s in enumerate(self.sites)}

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def site_index(self, site: Site | str) -> int:
        domain = site.domain if isinstance(site, Site) else site
        try:
            return self._site_index[domain]
        except KeyError:
            raise NotFoundError(f"site '{domain}' not in panel '{self.label}'") from None

    def visitor_counts(self) -> np.ndarray:
        """Unique visitors per site, aligned with `sites`."""
        return self.visits.sum(axis=0)

    def reach_vector(self) -> np.ndarray:
        """Per-site reach r_i = visitors_i / U, each in [0, 1]."""
        return self.visitor_counts() / self.n_users

    def restrict(self, sites: Iterable[Site]) -> "PanelSnapshot":
        """Sub-panel over the given sites, keeping the full user universe U."""
        idx = [self.site_index(s) for s in sites]
        kept = [self.sites[i] for i in idx]
        return PanelSnapshot(self.label, self.user_ids, kept, self.visits[:, idx].copy())


def reach(snapshot: PanelSnapshot, site: Site | str) -> float:
    """Fraction of the panel universe that visited `site` at least once."""
    i = snapshot.site_index(site)
    return int(snapshot.visits[:, i].sum()) / snapshot.n_users


def top_n_sites(snapshot: PanelSnapshot, n: int) -> list[Site]:
    """Top `n` sites ranked by unique visitors, descending.

    Ties are broken by ascending domain string so the ranking is a total
    order: top_n(k) is always a prefix of top_n(k+1).
    """
    if n < 2:
        raise ValidationError(f"top_n_sites needs n >= 2, got {n}")
    counts = snapshot.visitor_counts()
    ranked = sorted(snapshot.sites, key=lambda s: (-int(counts[snapshot.site_index(s)]), s.domain))
    return ranked[:n]


def _read_rows(fh: IO[str], n_fields: int, what: str) -> Iterable[tuple[int, list[str]]]:
    reader = csv.reader(fh)
    for lineno, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != n_fields:
            raise ParseError(f"{what} row has {len(row)} fields, expected {n_fields}", line=lineno)
        yield lineno, [f.strip() for f in row]


def load_site_metadata(source: str | Path) -> dict[str, Site]:
    """Optional site metadata CSV: site_domain,languages,region_tag.

    Languages are ';'-separated tags; empty fields mean no metadata.
    """
    meta: dict[str, Site] = {}
    with open(source, newline="", encoding="utf-8") as fh:
        for lineno, row in _read_rows(fh, 3, "site metadata"):
            if lineno == 1 and row == SITES_HEADER:
                continue
            domain, languages, region_tag = row
            if not domain:
                raise ParseError("empty site_domain", line=lineno)
            langs = frozenset(t for t in languages.split(";") if t)
            meta[domain] = Site(id=domain, domain=domain, languages=langs, region_tag=region_tag or None)
    return meta


def load_panel(
    source: str | Path,
    label: str | None = None,
    metadata: str | Path | dict[str, Site] | None = None,
) -> PanelSnapshot:
    """Load a visitation CSV (`user_id,site_domain`, one visit per row).

    Repeated (user, site) rows collapse to a single visit. Raises
    ParseError with the line number on malformed rows and ValidationError
    when the file yields zero users or fewer than two sites.
    """
    path = Path(source)
    if label is None:
        label = path.stem.removeprefix("panel_")
    if isinstance(metadata, (str, Path)):
        metadata = load_site_metadata(metadata)

    user_index: dict[str, int] = {}
    site_order: dict[str, int] = {}
    pairs: set[tuple[int, int]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in _read_rows(fh, 2, "visit"):
            if lineno == 1 and row == VISITS_HEADER:
                continue
            user_id, domain = row
            if not user_id or not domain:
                raise ParseError("empty user_id or site_domain", line=lineno)
            u = user_index.setdefault(user_id, len(user_index))
            s = site_order.setdefault(domain, len(site_order))
            pairs.add((u, s))

    if not user_index:
        raise ValidationError(f"panel file '{path}' contains no visits")
    if len(site_order) < 2:
        raise ValidationError(f"panel file '{path}' has {len(site_order)} sites; need at least 2")

    sites = []
    for domain in site_order:
        if metadata and domain in metadata:
            sites.append(metadata[domain])
        else:
            sites.append(Site(id=domain, domain=domain))

    visits = np.zeros((len(user_index), len(sites)), dtype=bool)
    rows, cols = zip(*pairs)
    visits[list(rows), list(cols)] = True

    users = [u for u, _ in sorted(user_index.items(), key=lambda kv: kv[1])]
    return PanelSnapshot(label, users, sites, visits)


def write_panel_csv(snapshot: PanelSnapshot, visits_path: str | Path, sites_path: str | Path | None = None) -> None:
    """Write a snapshot back out in the visitation CSV format (plus metadata CSV)."""
    with open(visits_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(VISITS_HEADER)
        rows, cols = np.nonzero(snapshot.visits)
        for u, s in zip(rows.tolist(), cols.tolist()):
            writer.writerow([snapshot.user_ids[u], snapshot.sites[s].domain])
    if sites_path is not None:
        with open(sites_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SITES_HEADER)
            for site in snapshot.sites:
                writer.writerow([site.domain, ";".join(sorted(site.languages)), site.region_tag or ""])
