"""Bipartite embedding networks, the hyperlink network and tracker co-occurrence."""
from __future__ import annotations

import logging
from collections import Counter
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .extract.corpus import EmbeddingEdge

log = logging.getLogger(__name__)


class GraphError(ValueError):
    pass


class BipartiteGraph:
    """Sites x third-parties incidence, stored sparsely.

    Vertices are numbered by lexicographic PLD order on each side. The
    incidence matrix is binary; page counts are kept alongside for reports.
    """

    def __init__(self, sites: Sequence[str], third_parties: Sequence[str], incidence: sp.csr_matrix,
                 weights: sp.csr_matrix | None = None):
        self.sites = tuple(sites)
        self.third_parties = tuple(third_parties)
        self.site_index = {s: i for i, s in enumerate(self.sites)}
        self.tp_index = {t: j for j, t in enumerate(self.third_parties)}
        if len(self.site_index) != len(self.sites) or len(self.tp_index) != len(self.third_parties):
            raise GraphError("vertex names must be unique")
        self.incidence = sp.csr_matrix(incidence, dtype=np.int8)
        self.incidence.sort_indices()
        self.weights = None if weights is None else sp.csr_matrix(weights, dtype=np.int64)
        self._csc = self.incidence.tocsc()
        self._csc.sort_indices()
        self.unmatched_labels = 0

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_third_parties(self) -> int:
        return len(self.third_parties)

    @property
    def n_edges(self) -> int:
        return int(self.incidence.nnz)

    def site_degrees(self) -> np.ndarray:
        return np.diff(self.incidence.indptr).astype(np.int64)

    def third_party_degrees(self) -> np.ndarray:
        return np.diff(self._csc.indptr).astype(np.int64)

    def sites_of(self, tp: int | str) -> np.ndarray:
        j = self.tp_index[tp] if isinstance(tp, str) else tp
        return self._csc.indices[self._csc.indptr[j]:self._csc.indptr[j + 1]]

    def third_parties_of(self, site: int | str) -> np.ndarray:
        i = self.site_index[site] if isinstance(site, str) else site
        return self.incidence.indices[self.incidence.indptr[i]:self.incidence.indptr[i + 1]]

    def site_mask(self, tps: Iterable[str]) -> np.ndarray:
        """Boolean mask of sites embedding any of ``tps`` (unknown PLDs ignored)."""
        mask = np.zeros(self.n_sites, dtype=bool)
        for t in tps:
            j = self.tp_index.get(t)
            if j is not None:
                mask[self.sites_of(j)] = True
        return mask

    def edges(self) -> Iterator[EmbeddingEdge]:
        inc, w = self.incidence, self.weights
        for i, site in enumerate(self.sites):
            cols = inc.indices[inc.indptr[i]:inc.indptr[i + 1]]
            counts = {}
            if w is not None:
                lo, hi = w.indptr[i], w.indptr[i + 1]
                counts = dict(zip(w.indices[lo:hi].tolist(), w.data[lo:hi].tolist()))
            for j in cols.tolist():
                yield EmbeddingEdge(site, self.third_parties[j], int(counts.get(j, 1)))

    def __repr__(self):
        return f"BipartiteGraph(sites={self.n_sites}, third_parties={self.n_third_parties}, edges={self.n_edges})"


def build_bipartite(edges: Iterable[EmbeddingEdge], extra_sites: Iterable[str] = ()) -> BipartiteGraph:
    """Bipartite graph over the PLDs in ``edges``; ``extra_sites`` adds sites without embeddings."""
    edges = list(edges)
    pairs = set()
    for e in edges:
        key = (e.site, e.third_party)
        if key in pairs:
            raise GraphError(f"duplicate edge {e.site} -> {e.third_party}")
        pairs.add(key)
    sites = sorted({e.site for e in edges} | set(extra_sites))
    tps = sorted({e.third_party for e in edges})
    si = {s: i for i, s in enumerate(sites)}
    ti = {t: j for j, t in enumerate(tps)}
    rows = np.fromiter((si[e.site] for e in edges), dtype=np.int64, count=len(edges))
    cols = np.fromiter((ti[e.third_party] for e in edges), dtype=np.int64, count=len(edges))
    counts = np.fromiter((e.page_count for e in edges), dtype=np.int64, count=len(edges))
    shape = (len(sites), len(tps))
    inc = sp.csr_matrix((np.ones(len(edges), dtype=np.int8), (rows, cols)), shape=shape)
    wts = sp.csr_matrix((counts, (rows, cols)), shape=shape)
    return BipartiteGraph(sites, tps, inc, wts)


def filter_trackers(g: BipartiteGraph, trackers) -> BipartiteGraph:
    """Restrict the right side to tracker PLDs; every site is kept.

    ``trackers`` is a LabelTable or an iterable of tracker PLDs. Trackers
    absent from ``g`` are counted in ``unmatched_labels`` on the result.
    """
    if hasattr(trackers, "trackers"):
        trackers = trackers.trackers()
    trackers = set(trackers)
    keep = [j for j, t in enumerate(g.third_parties) if t in trackers]
    unmatched = len(trackers - set(g.third_parties))
    if unmatched:
        log.warning("%d labeled trackers do not occur in the graph", unmatched)
    inc = g.incidence[:, keep]
    wts = g.weights[:, keep] if g.weights is not None else None
    out = BipartiteGraph(g.sites, [g.third_parties[j] for j in keep], inc, wts)
    out.unmatched_labels = unmatched
    return out


def degree_ccdf(g: BipartiteGraph, side: str = "right") -> list[tuple[int, float]]:
    """(degree, fraction of vertices with at least that degree) for each observed degree."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    deg = g.site_degrees() if side == "left" else g.third_party_degrees()
    if deg.size == 0:
        raise GraphError(f"{side} vertex set is empty")
    values, counts = np.unique(deg, return_counts=True)
    at_least = np.cumsum(counts[::-1])[::-1]
    return [(int(v), float(c / deg.size)) for v, c in zip(values, at_least)]


class CooccurrenceGraph:
    """Undirected weighted tracker graph; off-diagonal entries of B^T B.

    ``weights`` maps index pairs ``(i, j)`` with ``i < j`` to shared-site
    counts; ``site_counts`` holds the diagonal (bipartite degree).
    """

    def __init__(self, vertices: Sequence[str], weights: dict[tuple[int, int], float],
                 site_counts: Sequence[int] | None = None):
        self.vertices = tuple(vertices)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.weights = {}
        for (i, j), w in weights.items():
            if i == j:
                raise GraphError("self-loops are not stored")
            if w:
                self.weights[(min(i, j), max(i, j))] = w
        self.site_counts = (np.zeros(len(self.vertices), dtype=np.int64) if site_counts is None
                            else np.asarray(site_counts, dtype=np.int64))
        self._adj: list[dict[int, float]] = [dict() for _ in self.vertices]
        for (i, j), w in self.weights.items():
            self._adj[i][j] = w
            self._adj[j][i] = w

    def __len__(self):
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        return float(sum(self.weights.values()))

    def weight(self, a: int | str, b: int | str) -> float:
        i = self.index[a] if isinstance(a, str) else a
        j = self.index[b] if isinstance(b, str) else b
        return self._adj[i].get(j, 0)

    def neighbors(self, i: int) -> dict[int, float]:
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def edge_list(self) -> list[tuple[str, str, float]]:
        return sorted((self.vertices[i], self.vertices[j], w) for (i, j), w in self.weights.items())

    def subgraph(self, keep: Iterable[int], edges: Iterable[tuple[int, int]] | None = None) -> "CooccurrenceGraph":
        """Induced subgraph on ``keep`` (optionally restricted to ``edges``), names preserved."""
        keep = sorted(set(keep))
        remap = {old: new for new, old in enumerate(keep)}
        pairs = self.weights.keys() if edges is None else edges
        w = {}
        for (i, j) in pairs:
            if i in remap and j in remap:
                w[(remap[i], remap[j])] = self.weights[(min(i, j), max(i, j))]
        return CooccurrenceGraph([self.vertices[i] for i in keep], w, self.site_counts[keep])

    def __eq__(self, other):
        return (isinstance(other, CooccurrenceGraph) and self.edge_list() == other.edge_list()
                and self.vertices == other.vertices)

    def __repr__(self):
        return f"CooccurrenceGraph(vertices={len(self)}, edges={self.n_edges})"


def one_mode_projection(g: BipartiteGraph) -> CooccurrenceGraph:
    """Co-occurrence counts of third-party pairs, accumulated site by site."""
    counts: Counter = Counter()
    for i in range(g.n_sites):
        tps = g.third_parties_of(i)
        if len(tps) > 1:
            counts.update(combinations(tps.tolist(), 2))
    return CooccurrenceGraph(g.third_parties, dict(counts), g.third_party_degrees())


def k_core(g: CooccurrenceGraph, k: int) -> CooccurrenceGraph:
    """Maximal subgraph in which every vertex has at least ``k`` neighbours."""
    if k < 1:
        raise ValueError("k must be positive")
    degree = [g.degree(i) for i in range(len(g))]
    alive = [True] * len(g)
    stack = [i for i, d in enumerate(degree) if d < k]
    for i in stack:
        alive[i] = False
    while stack:
        i = stack.pop()
        for j in g.neighbors(i):
            if alive[j]:
                degree[j] -= 1
                if degree[j] < k:
                    alive[j] = False
                    stack.append(j)
    return g.subgraph(i for i, a in enumerate(alive) if a)


class HyperlinkGraph:
    """Directed PLD-level link graph with collapsed parallel edges."""

    def __init__(self, vertices: Sequence[str], out_edges: Sequence[Iterable[int]]):
        self.vertices = tuple(vertices)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.out_edges = [tuple(sorted(set(e))) for e in out_edges]

    def __len__(self):
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return sum(len(e) for e in self.out_edges)

    def __repr__(self):
        return f"HyperlinkGraph(vertices={len(self)}, edges={self.n_edges})"


def build_hyperlink_graph(pairs: Iterable[tuple[str, str]], extra_vertices: Iterable[str] = (),
                          drop_self_loops: bool = True) -> HyperlinkGraph:
    pairs = [(s, d) for s, d in pairs if not (drop_self_loops and s == d)]
    vertices = sorted({v for p in pairs for v in p} | set(extra_vertices))
    idx = {v: i for i, v in enumerate(vertices)}
    out: list[set[int]] = [set() for _ in vertices]
    for s, d in pairs:
        out[idx[s]].add(idx[d])
    return HyperlinkGraph(vertices, out)


# -- TSV interchange -------------------------------------------------------

def write_edges(edges: Iterable[EmbeddingEdge], path: str | Path):
    """``site<TAB>third_party<TAB>page_count`` sorted by (site, third_party)."""
    rows = sorted(edges, key=lambda e: (e.site, e.third_party))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in rows:
            fh.write(f"{e.site}\t{e.third_party}\t{e.page_count}\n")


def read_edges(path: str | Path) -> list[EmbeddingEdge]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise GraphError(f"{path}:{n}: expected 3 tab-separated fields")
            out.append(EmbeddingEdge(parts[0], parts[1], int(parts[2])))
    return out


def write_sites(site_pages: dict[str, int], path: str | Path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for site in sorted(site_pages):
            fh.write(f"{site}\t{site_pages[site]}\n")


def read_sites(path: str | Path) -> dict[str, int]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                site, count = line.rstrip("\n").split("\t")
                out[site] = int(count)
    return out


def write_hyperlinks(pairs: Iterable[tuple[str, str]], path: str | Path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s, d in sorted(set(pairs)):
            fh.write(f"{s}\t{d}\n")


def read_hyperlinks(path: str | Path) -> list[tuple[str, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise GraphError(f"{path}:{n}: expected src<TAB>dst")
            out.append((parts[0], parts[1]))
    return out
