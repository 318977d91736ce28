"""Co-occurrence clustering: G2 pruning, Louvain modularity maximization, 2-core cleanup."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import BipartiteGraph, CooccurrenceGraph, k_core, one_mode_projection
from .stats import DegenerateInputError, g2_test
from .tables import LabelTable


class ClusterError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Community id per vertex, ids contiguous from 0 in order of first appearance."""

    assignment: tuple[int, ...]

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Partition":
        remap: dict = {}
        return cls(tuple(remap.setdefault(c, len(remap)) for c in labels))

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment))

    def __len__(self):
        return len(self.assignment)

    def communities(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_communities)]
        for v, c in enumerate(self.assignment):
            out[c].append(v)
        return out


def prune_g2(g: CooccurrenceGraph, b: BipartiteGraph, alpha_level: float = 0.01,
             bonferroni: bool = True) -> CooccurrenceGraph:
    """Keep edges whose co-occurrence is significantly above independence.

    For each pair the 2x2 table over all sites of ``b`` (first present/absent
    x second present/absent) is tested with G2. With ``bonferroni`` the level
    is divided by the number of candidate edges.
    """
    if any(v not in b.tp_index for v in g.vertices):
        raise ClusterError("co-occurrence graph does not derive from this bipartite graph")
    deg = b.third_party_degrees()
    idx = [b.tp_index[v] for v in g.vertices]
    if not np.array_equal(deg[idx], g.site_counts):
        raise ClusterError("co-occurrence graph does not derive from this bipartite graph")
    n = b.n_sites
    level = alpha_level / max(g.n_edges, 1) if bonferroni else alpha_level
    keep = []
    for (i, j), w in g.weights.items():
        di, dj = int(g.site_counts[i]), int(g.site_counts[j])
        if w * n <= di * dj:
            continue  # not above the independence expectation
        try:
            res = g2_test([[w, di - w], [dj - w, n - di - dj + w]])
        except DegenerateInputError:
            continue  # a tracker on every site carries no association signal
        if res.p_value < level:
            keep.append((i, j))
    return g.subgraph(range(len(g)), keep)


def _arrays(g: CooccurrenceGraph):
    k = np.zeros(len(g))
    for (i, j), w in g.weights.items():
        k[i] += w
        k[j] += w
    return k, g.total_weight


def modularity(g: CooccurrenceGraph, p: Partition, resolution: float = 1.0) -> float:
    """Newman modularity of ``p`` with edge weights as A_ij."""
    if len(p) != len(g):
        raise ClusterError("partition does not cover the graph's vertices")
    k, m = _arrays(g)
    if m == 0:
        raise ClusterError("graph has no edge weight")
    c = np.asarray(p.assignment)
    inside = sum(w for (i, j), w in g.weights.items() if c[i] == c[j])
    tot = np.bincount(c, weights=k)
    return float(inside / m - resolution * (tot ** 2).sum() / (4 * m * m))


def _one_level(adj: list[dict[int, float]], k: np.ndarray, m2: float,
               resolution: float, rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """Local moving phase on a (possibly aggregated) graph. Returns communities, improved flag."""
    n = len(adj)
    comm = np.arange(n)
    tot = k.copy()
    improved = False
    order = rng.permutation(n)
    moved = True
    while moved:
        moved = False
        for v in order:
            cv = comm[v]
            links: dict[int, float] = {}
            for u, w in adj[v].items():
                links[comm[u]] = links.get(comm[u], 0.0) + w
            tot[cv] -= k[v]
            # gain of joining c relative to staying isolated: k_v,in(c) - res * tot(c) * k_v / 2m
            best_c = cv
            best_gain = links.get(cv, 0.0) - resolution * tot[cv] * k[v] / m2
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * k[v] / m2
                if gain > best_gain + 1e-12:
                    best_c, best_gain = c, gain
            tot[best_c] += k[v]
            if best_c != cv:
                comm[v] = best_c
                moved = improved = True
    return comm, improved


def louvain(g: CooccurrenceGraph, resolution: float = 1.0, seed: int = 0) -> Partition:
    """Two-phase Louvain: greedy local moves, then community aggregation, repeated."""
    if len(g) == 0 or g.total_weight == 0:
        raise ClusterError("louvain needs a graph with positive edge weight")
    rng = np.random.default_rng(seed)
    adj = [dict(g.neighbors(i)) for i in range(len(g))]
    k, m = _arrays(g)
    m2 = 2.0 * m
    membership = np.arange(len(g))
    while True:
        comm, improved = _one_level(adj, k, m2, resolution, rng)
        if not improved:
            break
        _, comm = np.unique(comm, return_inverse=True)
        membership = comm[membership]
        n_new = comm.max() + 1
        new_adj: list[dict[int, float]] = [dict() for _ in range(n_new)]
        for v, nbrs in enumerate(adj):
            cv = comm[v]
            for u, w in nbrs.items():
                cu = comm[u]
                if cu != cv:  # internal weight stays inside k, no explicit loop needed
                    new_adj[cv][cu] = new_adj[cv].get(cu, 0.0) + w
        new_k = np.zeros(n_new)
        np.add.at(new_k, comm, k)
        adj, k = new_adj, new_k
        if n_new == 1:
            break
    return Partition.from_labels(membership.tolist())


@dataclass
class ClusterConfig:
    alpha_level: float = 0.01
    bonferroni: bool = True
    resolutions: tuple[float, ...] = (0.5, 0.75, 1.0, 1.25, 1.5)
    seeds: int = 10
    base_seed: int = 0
    core_k: int = 2
    core_order: str = "pre"  # "pre": 2-core before clustering, "post": after
    weighted: bool = True


@dataclass
class Community:
    id: int
    members: list[str]
    country_histogram: dict[str, int]
    category_histogram: dict[str, int]
    tld_histogram: dict[str, int]
    country_enrichment: dict[str, float] = field(default_factory=dict)
    category_enrichment: dict[str, float] = field(default_factory=dict)
    tld_enrichment: dict[str, float] = field(default_factory=dict)


@dataclass
class ClusterReport:
    config: dict
    Q: float
    resolution: float
    seed: int
    diagnostics: dict
    communities: list[Community]
    edges: list[tuple[str, str, float]] = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "Q": self.Q,
            "resolution": self.resolution,
            "seed": self.seed,
            "diagnostics": self.diagnostics,
            "communities": [asdict(c) for c in self.communities],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_dot(self) -> str:
        palette = ["#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#ffff33",
                   "#a65628", "#f781bf", "#999999", "#66c2a5", "#fc8d62", "#8da0cb"]
        lines = ["graph cooccurrence {", "  node [style=filled];"]
        for c in self.communities:
            color = palette[c.id % len(palette)]
            for v in c.members:
                lines.append(f'  "{v}" [community={c.id}, fillcolor="{color}"];')
        for a, b, w in self.edges:
            lines.append(f'  "{a}" -- "{b}" [weight={w:g}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _histogram(values: Iterable[str]) -> dict[str, int]:
    c = Counter(v for v in values if v)
    return dict(sorted(c.items(), key=lambda kv: (-kv[1], kv[0])))


def _enrichment(local: dict[str, int], corpus: dict[str, int]) -> dict[str, float]:
    ln, cn = sum(local.values()), sum(corpus.values())
    if not ln or not cn:
        return {}
    return {k: round((v / ln) / (corpus[k] / cn), 6) for k, v in local.items() if corpus.get(k)}


def _tld(pld: str) -> str:
    return pld.rsplit(".", 1)[-1]


def _select(cands: list[tuple[float, int, tuple[int, ...], float, int]]):
    # highest Q, then fewer communities, then lexicographically smallest assignment
    return min(cands, key=lambda c: (-round(c[0], 12), c[1], c[2]))


def cluster_pipeline(b: BipartiteGraph, labels: LabelTable | None = None,
                     config: ClusterConfig | None = None) -> ClusterReport:
    """Projection, G2 pruning, k-core and a grid search over Louvain runs."""
    config = config or ClusterConfig()
    if config.core_order not in ("pre", "post"):
        raise ValueError("core_order must be 'pre' or 'post'")
    proj = one_mode_projection(b)
    pruned = prune_g2(proj, b, config.alpha_level, config.bonferroni)
    diagnostics = {
        "trackers": len(proj),
        "projection_edges": proj.n_edges,
        "pruned_edges": pruned.n_edges,
    }
    work = k_core(pruned, config.core_k) if config.core_order == "pre" else pruned
    if not config.weighted:
        work = CooccurrenceGraph(work.vertices, {e: 1 for e in work.weights}, work.site_counts)
    diagnostics["clustered_vertices"] = len(work)
    diagnostics["clustered_edges"] = work.n_edges
    if len(work) == 0 or work.n_edges == 0:
        raise ClusterError(
            f"no {config.core_k}-core left after pruning: {diagnostics['trackers']} trackers, "
            f"{diagnostics['projection_edges']} co-occurrence edges, {diagnostics['pruned_edges']} significant"
        )
    cands = []
    for res in config.resolutions:
        for s in range(config.seeds):
            seed = config.base_seed + s
            p = louvain(work, res, seed)
            cands.append((modularity(work, p), p.n_communities, p.assignment, res, seed))
    q, _, assignment, best_res, best_seed = _select(cands)
    part = Partition(assignment)
    final = work
    if config.core_order == "post":
        final = k_core(work, config.core_k)
        keep = {v: i for i, v in enumerate(work.vertices)}
        part = Partition.from_labels([assignment[keep[v]] for v in final.vertices])
        if final.n_edges == 0:
            raise ClusterError("clustering left no 2-core")
        q = modularity(final, part)
    diagnostics["core_vertices"] = len(final)
    diagnostics["core_edges"] = final.n_edges

    def attrs(plds, what):
        if labels is None:
            return []
        out = []
        for t in plds:
            lab = labels.get(t)
            out.append(getattr(lab, what) if lab else "")
        return out

    corpus_country = _histogram(attrs(b.third_parties, "country"))
    corpus_category = _histogram(attrs(b.third_parties, "category"))
    corpus_tld = _histogram(_tld(s) for s in b.sites)
    communities = []
    for cid, members in enumerate(part.communities()):
        names = sorted(final.vertices[v] for v in members)
        site_mask = b.site_mask(names)
        tlds = _histogram(_tld(b.sites[i]) for i in np.flatnonzero(site_mask))
        countries = _histogram(attrs(names, "country"))
        categories = _histogram(attrs(names, "category"))
        communities.append(Community(
            cid, names, countries, categories, tlds,
            _enrichment(countries, corpus_country),
            _enrichment(categories, corpus_category),
            _enrichment(tlds, corpus_tld),
        ))
    cfg = asdict(config)
    cfg["resolutions"] = list(config.resolutions)
    return ClusterReport(cfg, round(q, 12), best_res, best_seed, diagnostics, communities, final.edge_list())
