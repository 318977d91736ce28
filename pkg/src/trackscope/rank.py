"""PageRank over the hyperlink network and PageRank-weighted prevalence of third parties."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .graph import BipartiteGraph, HyperlinkGraph
from .tables import LabelTable

log = logging.getLogger(__name__)

DEFAULT_DOMINANT_COMPANIES = ("Google", "Facebook", "Twitter")


class ShareError(ValueError):
    pass


@dataclass
class RankVector:
    """PageRank score per PLD; scores sum to one."""

    scores: dict[str, float]
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0
    params: dict = field(default_factory=dict)

    def __getitem__(self, pld):
        return self.scores[pld]

    def __len__(self):
        return len(self.scores)

    def get(self, pld, default=0.0):
        return self.scores.get(pld, default)

    def write_tsv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for pld in sorted(self.scores):
                fh.write(f"{pld}\t{self.scores[pld]:.17g}\n")

    @classmethod
    def read_tsv(cls, path) -> "RankVector":
        scores = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    pld, score = line.rstrip("\n").split("\t")
                    scores[pld] = float(score)
        return cls(scores)


def transition_matrix(g: HyperlinkGraph) -> tuple[sp.csr_matrix, np.ndarray]:
    """Column-stochastic link matrix (column j = out-links of j) and dangling mask."""
    n = len(g)
    out_deg = np.array([len(e) for e in g.out_edges], dtype=np.float64)
    rows = np.fromiter((d for e in g.out_edges for d in e), dtype=np.int64)
    cols = np.repeat(np.arange(n), out_deg.astype(np.int64))
    data = 1.0 / out_deg[cols] if cols.size else np.zeros(0)
    m = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    return m, out_deg == 0


def pagerank(g: HyperlinkGraph, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 200,
             dangling: str = "uniform") -> RankVector:
    """Power iteration with uniform teleportation.

    ``dangling="uniform"`` spreads the mass of pages without out-links over all
    pages each step; ``"self"`` keeps it on the page itself. Stops when the L1
    change drops below ``tol``; hitting ``max_iter`` flags the result as not
    converged instead of raising.
    """
    if len(g) == 0:
        raise ValueError("hyperlink graph is empty")
    if not 0 < damping < 1:
        raise ValueError("damping must lie in (0, 1)")
    if dangling not in ("uniform", "self"):
        raise ValueError("dangling must be 'uniform' or 'self'")
    n = len(g)
    m, is_dangling = transition_matrix(g)
    if dangling == "self":
        m = m + sp.diags(is_dangling.astype(np.float64), format="csr")
    x = np.full(n, 1.0 / n)
    converged = False
    delta = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        nxt = damping * (m @ x)
        if dangling == "uniform":
            nxt += damping * x[is_dangling].sum() / n
        nxt += (1.0 - damping) / n
        nxt /= nxt.sum()
        delta = float(np.abs(nxt - x).sum())
        x = nxt
        if delta < tol:
            converged = True
            break
    if not converged:
        log.warning("pagerank did not converge in %d iterations (L1 change %.3g)", max_iter, delta)
    x = x / x.sum()
    params = {"damping": damping, "tol": tol, "max_iter": max_iter, "dangling": dangling}
    return RankVector(dict(zip(g.vertices, x.tolist())), converged, it, delta, params)


@dataclass(frozen=True)
class DomainSet:
    """A subset of the site vertices of a bipartite graph."""

    name: str
    domains: frozenset[str]

    def __len__(self):
        return len(self.domains)

    @classmethod
    def all_sites(cls, g: BipartiteGraph) -> "DomainSet":
        return cls("all", frozenset(g.sites))

    @classmethod
    def by_tld(cls, g: BipartiteGraph, tld: str) -> "DomainSet":
        tld = tld.lower().lstrip(".")
        return cls(tld, frozenset(s for s in g.sites if s.rsplit(".", 1)[-1] == tld))

    @classmethod
    def from_members(cls, g: BipartiteGraph, name: str, members: Iterable[str]) -> "DomainSet":
        """Members intersected with the graph's sites (e.g. a content category)."""
        return cls(name, frozenset(members) & frozenset(g.sites))

    def mask(self, g: BipartiteGraph) -> np.ndarray:
        m = np.zeros(g.n_sites, dtype=bool)
        idx = [g.site_index[d] for d in self.domains if d in g.site_index]
        if len(idx) != len(self.domains):
            raise ShareError(f"domain set {self.name!r} is not a subset of the graph's sites")
        m[idx] = True
        return m


def rank_array(g: BipartiteGraph, ranks: RankVector | Mapping[str, float]) -> np.ndarray:
    """Scores aligned with ``g.sites``; sites without a score get zero."""
    scores = ranks.scores if isinstance(ranks, RankVector) else ranks
    return np.array([scores.get(s, 0.0) for s in g.sites], dtype=np.float64)


def _targets(t: str | Iterable[str]) -> list[str]:
    return [t] if isinstance(t, str) else list(t)


def _check(domains: DomainSet):
    if len(domains) == 0:
        raise ShareError(f"domain set {domains.name!r} is empty")


def rank_share(domains: DomainSet, t: str | Iterable[str], g: BipartiteGraph,
               ranks: RankVector | Mapping[str, float], *, _p: np.ndarray | None = None,
               _d: np.ndarray | None = None) -> float:
    """PageRank mass of the domains embedding ``t`` over the mass of all domains.

    ``t`` is one third-party PLD or a collection of PLDs (a company), in which
    case a domain counts once if it embeds any of them.
    """
    _check(domains)
    d = domains.mask(g) if _d is None else _d
    p = rank_array(g, ranks) if _p is None else _p
    total = p[d].sum()
    if total <= 0:
        raise ShareError(f"no ranked domain in {domains.name!r}")
    hit = g.site_mask(_targets(t)) & d
    return float(p[hit].sum() / total)


def domain_share(domains: DomainSet, t: str | Iterable[str], g: BipartiteGraph, *,
                 _d: np.ndarray | None = None) -> float:
    """Fraction of ``domains`` embedding ``t`` (same company rule as rank_share)."""
    _check(domains)
    d = domains.mask(g) if _d is None else _d
    return float((g.site_mask(_targets(t)) & d).sum() / d.sum())


@dataclass(frozen=True)
class CompanyShare:
    company: str
    rank_share: float
    domain_share: float


def company_shares(domains: DomainSet, labels: LabelTable, g: BipartiteGraph,
                   ranks: RankVector | Mapping[str, float], trackers_only: bool = True) -> list[CompanyShare]:
    """Per-company shares over ``domains``, by rank share descending then name.

    Companies not embedded on any domain of the set are omitted.
    """
    _check(domains)
    d = domains.mask(g)
    p = rank_array(g, ranks)
    rows = []
    for company in labels.companies(trackers_only=trackers_only):
        plds = labels.tracker_plds_of(company) if trackers_only else labels.plds_of(company)
        ds = domain_share(domains, plds, g, _d=d)
        if ds == 0:
            continue
        rows.append(CompanyShare(company, rank_share(domains, plds, g, ranks, _p=p, _d=d), ds))
    rows.sort(key=lambda r: (-r.rank_share, r.company))
    return rows


def dominance(domains: DomainSet, labels: LabelTable, g: BipartiteGraph,
              ranks: RankVector | Mapping[str, float],
              companies: Iterable[str] = DEFAULT_DOMINANT_COMPANIES, top: int = 10,
              table: list[CompanyShare] | None = None) -> bool:
    """Whether ``companies`` hold more than half of the top-``top`` rank-share mass."""
    companies = set(companies)
    if not companies:
        raise ValueError("companies must be nonempty")
    rows = company_shares(domains, labels, g, ranks) if table is None else table
    if not rows:
        raise ShareError(f"no company is embedded in {domains.name!r}")
    head = rows[:top]
    mass = sum(r.rank_share for r in head)
    held = sum(r.rank_share for r in head if r.company in companies)
    return held > 0.5 * mass
