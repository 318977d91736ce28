"""File-mediated analysis stages: each reads the artifacts of earlier stages and writes reports.

Every JSON report is a flat object carrying the report name, the embedded
run configuration, the seed and a status, next to its results. Reports are
written with sorted keys and no timestamps so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from .cluster import ClusterConfig, ClusterError, cluster_pipeline
from .config import ConfigError, RunConfig
from .domains import SuffixRuleSet, default_rules
from .extract import CorpusError, ingest_corpus
from .graph import (
    BipartiteGraph,
    GraphError,
    build_bipartite,
    build_hyperlink_graph,
    degree_ccdf,
    filter_trackers,
    read_edges,
    read_hyperlinks,
    read_sites,
    write_edges,
    write_hyperlinks,
    write_sites,
)
from .rank import (
    DomainSet,
    RankVector,
    ShareError,
    company_shares,
    domain_share,
    dominance,
    pagerank,
    rank_array,
    rank_share,
)
from .reference import CORPUS_SCALE
from .stats import (
    DegenerateInputError,
    assortativity,
    cond_prob_matrix,
    fit_power_law,
    point_biserial,
    prevalence_test,
    significance_stars,
)
from .tables import (
    INDICATOR_COLUMNS,
    CategoryMap,
    LabelTable,
    TableError,
    load_country_indicators,
    load_country_tlds,
)

log = logging.getLogger(__name__)

# errors that mean "the data cannot support this analysis", as opposed to bad input
INSUFFICIENT = (DegenerateInputError, ShareError, ClusterError)


class PrerequisiteError(RuntimeError):
    pass


class ReportError(RuntimeError):
    pass


_PROB = {"type": "number", "minimum": 0, "maximum": 1}

_BASE = {
    "type": "object",
    "required": ["report", "config", "seed", "status"],
    "properties": {
        "report": {"type": "string"},
        "config": {"type": "object"},
        "seed": {"type": "integer"},
        "status": {"enum": ["ok", "insufficient_data"]},
        "message": {"type": "string"},
    },
}

SCHEMAS: dict[str, dict] = {
    "extract": {"required": ["records", "pages", "skipped", "skipped_by_reason", "sites", "third_parties", "edges"],
                "properties": {k: {"type": "integer", "minimum": 0}
                               for k in ("records", "pages", "skipped", "sites", "third_parties", "edges")}},
    "pagerank": {"required": ["vertices", "links", "converged", "iterations", "score_sum", "top"],
                 "properties": {"converged": {"type": "boolean"},
                                "score_sum": {"type": "number", "minimum": 1 - 1e-9, "maximum": 1 + 1e-9},
                                "top": {"type": "array", "items": {"type": "object", "required": ["pld", "score"]}}}},
    "rank_share": {"required": ["network", "sites", "rows"],
                   "properties": {"rows": {"type": "array", "items": {
                       "type": "object", "required": ["pld", "rank_share", "domain_share"],
                       "properties": {"rank_share": _PROB, "domain_share": _PROB}}}}},
    "condprob": {"required": ["network", "trackers"]},
    "powerlaw": {"required": ["network", "n_samples", "fit"],
                 "properties": {"fit": {"type": ["object", "null"]}}},
    "assortativity": {"required": ["network", "result"],
                      "properties": {"result": {"type": ["object", "null"]}}},
    "cooccur": {"required": ["Q", "communities", "diagnostics"],
                "properties": {"Q": {"type": ["number", "null"]},
                               "communities": {"type": "array", "items": {
                                   "type": "object",
                                   "required": ["id", "members", "country_histogram", "category_histogram",
                                                "tld_histogram"]}}}},
    "country": {"required": ["countries", "correlations"],
                "properties": {"countries": {"type": "array", "items": {
                    "type": "object", "required": ["tld", "country", "sites", "dominance"]}}}},
    "category": {"required": ["overall", "by_category", "prevalence", "shares"],
                 "properties": {"overall": {"type": "object"}}},
    "run": {"required": ["stages"],
            "properties": {"stages": {"type": "object", "additionalProperties": {
                "type": "object", "required": ["status"]}}}},
}


def schema_for(name: str) -> dict:
    extra = SCHEMAS[name]
    return {
        "type": "object",
        "required": _BASE["required"] + extra.get("required", []),
        "properties": {**_BASE["properties"], **extra.get("properties", {})},
    }


# -- IO helpers ----------------------------------------------------------------

def write_report(path: Path, name: str, cfg: RunConfig, body: dict, status: str = "ok",
                 message: str | None = None) -> dict:
    doc = {"report": name, "config": cfg.embedded(), "seed": cfg.seed, "status": status}
    if message:
        doc["message"] = message
    doc.update(body)
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    # validate what will actually be on disk, after the JSON round trip
    try:
        jsonschema.validate(json.loads(text), schema_for(name))
    except jsonschema.ValidationError as exc:
        raise ReportError(f"{path.name} fails its schema: {exc.message}") from None
    path.write_text(text, encoding="utf-8")
    return doc


def write_csv(path: Path, header: list[str], rows: list[list]):
    for n, row in enumerate(rows):
        if len(row) != len(header):
            raise ReportError(f"{path.name}: row {n} has {len(row)} fields, header has {len(header)}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([_cell(v) for v in row] for row in rows)


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def _need(cfg: RunConfig, name: str, producer: str) -> Path:
    path = cfg.out_dir / name
    if not path.exists():
        raise PrerequisiteError(f"{path} not found; run `trackscope {producer}` first")
    return path


def load_bipartite(cfg: RunConfig) -> BipartiteGraph:
    edges = read_edges(_need(cfg, "edges.tsv", "extract"))
    sites = read_sites(_need(cfg, "sites.tsv", "extract"))
    return build_bipartite(edges, extra_sites=sites)


def load_labels(cfg: RunConfig) -> LabelTable | None:
    return LabelTable.load(cfg.labels) if cfg.labels else None


def tracking_network(b: BipartiteGraph, labels: LabelTable | None) -> tuple[BipartiteGraph, str]:
    if labels is None:
        return b, "third_party"
    return filter_trackers(b, labels), "tracking"


def load_ranks(cfg: RunConfig) -> RankVector:
    return RankVector.read_tsv(_need(cfg, "pagerank.tsv", "analyze pagerank"))


# -- stages --------------------------------------------------------------------

def stage_extract(cfg: RunConfig) -> dict:
    rules = (SuffixRuleSet.load(cfg.suffix_list, include_private=cfg.include_private)
             if cfg.suffix_list else default_rules(cfg.include_private))
    res = ingest_corpus(cfg.corpus, rules, workers=cfg.workers)
    out = cfg.out_dir
    write_edges(res.edges, out / "edges.tsv")
    write_sites(res.site_pages, out / "sites.tsv")
    write_hyperlinks(res.hyperlinks, out / "hyperlinks.tsv")
    return write_report(out / "extract_summary.json", "extract", cfg, res.summary())


def stage_pagerank(cfg: RunConfig) -> dict:
    sites = read_sites(_need(cfg, "sites.tsv", "extract"))
    links = read_hyperlinks(_need(cfg, "hyperlinks.tsv", "extract"))
    hg = build_hyperlink_graph(links, extra_vertices=sites)
    rv = pagerank(hg, cfg.damping, cfg.tol, cfg.max_iter, cfg.dangling)
    rv.write_tsv(cfg.out_dir / "pagerank.tsv")
    ranked = sorted(((s, rv[s]) for s in sites), key=lambda kv: (-kv[1], kv[0]))[: cfg.top_n]
    body = {
        "vertices": len(hg),
        "links": hg.n_edges,
        "converged": rv.converged,
        "iterations": rv.iterations,
        "residual": rv.residual,
        "score_sum": float(sum(rv.scores.values())),
        "top": [{"pld": s, "score": p} for s, p in ranked],
    }
    if not rv.converged:
        body["warning"] = f"did not converge within {cfg.max_iter} iterations"
    return write_report(cfg.out_dir / "pagerank.json", "pagerank", cfg, body)


def stage_rank_share(cfg: RunConfig) -> dict:
    b = load_bipartite(cfg)
    ranks = load_ranks(cfg)
    labels = load_labels(cfg)
    everything = DomainSet.all_sites(b)
    d = everything.mask(b)
    p = rank_array(b, ranks)
    rows = []
    for t in b.third_parties:
        rows.append((t, rank_share(everything, t, b, ranks, _p=p, _d=d), domain_share(everything, t, b, _d=d)))
    rows.sort(key=lambda r: (-r[1], r[0]))
    rows = rows[: cfg.top_n]
    out = []
    for t, rs, ds in rows:
        lab = labels.get(t) if labels else None
        out.append({"pld": t, "company": lab.company if lab else "", "is_tracker": bool(lab and lab.is_tracker),
                    "rank_share": rs, "domain_share": ds})
    write_csv(cfg.out_dir / "rank_share.csv", ["pld", "company", "is_tracker", "rank_share", "domain_share"],
              [[r["pld"], r["company"], r["is_tracker"], r["rank_share"], r["domain_share"]] for r in out])
    body = {"network": "third_party", "sites": b.n_sites, "rows": out,
            "reference": {"google_analytics.com": {
                "rank_share": CORPUS_SCALE["google_analytics_rank_share"],
                "domain_share": CORPUS_SCALE["google_analytics_domain_share"]}}}
    return write_report(cfg.out_dir / "rank_share.json", "rank_share", cfg, body)


def stage_condprob(cfg: RunConfig) -> dict:
    b = load_bipartite(cfg)
    g, network = tracking_network(b, load_labels(cfg))
    deg = g.third_party_degrees()
    order = sorted(range(g.n_third_parties), key=lambda j: (-deg[j], g.third_parties[j]))
    top = [g.third_parties[j] for j in order[: cfg.condprob_top] if deg[j] > 0]
    if not top:
        return write_report(cfg.out_dir / "condprob.json", "condprob", cfg,
                            {"network": network, "trackers": []}, "insufficient_data",
                            "no tracker occurs on any site")
    m = cond_prob_matrix(g, top)
    write_csv(cfg.out_dir / "condprob.csv", [""] + top,
              [[t] + [float(v) for v in m[i]] for i, t in enumerate(top)])
    body = {"network": network, "trackers": top, "sites": {t: int(deg[g.tp_index[t]]) for t in top}}
    return write_report(cfg.out_dir / "condprob.json", "condprob", cfg, body)


def stage_powerlaw(cfg: RunConfig) -> dict:
    b = load_bipartite(cfg)
    g, network = tracking_network(b, load_labels(cfg))
    rows = []
    for side in ("left", "right"):
        try:
            rows += [[side, k, c] for k, c in degree_ccdf(g, side)]
        except GraphError:
            pass
    write_csv(cfg.out_dir / "degree_ccdf.csv", ["side", "degree", "ccdf"], rows)
    deg = g.third_party_degrees()
    deg = deg[deg > 0]
    body = {"network": network, "n_samples": int(deg.size), "fit": None,
            "reference": CORPUS_SCALE["tracker_degree_power_law"]}
    try:
        fit = fit_power_law(deg, method=cfg.powerlaw_method)
    except DegenerateInputError as exc:
        return write_report(cfg.out_dir / "powerlaw.json", "powerlaw", cfg, body, "insufficient_data", str(exc))
    body["fit"] = {"x_min": fit.x_min, "alpha": fit.alpha, "sigma": fit.sigma, "ks_distance": fit.ks_distance,
                   "n_tail": fit.n_tail, "method": fit.method}
    return write_report(cfg.out_dir / "powerlaw.json", "powerlaw", cfg, body)


def stage_assortativity(cfg: RunConfig) -> dict:
    b = load_bipartite(cfg)
    g, network = tracking_network(b, load_labels(cfg))
    body = {"network": network, "result": None, "reference": {"r": CORPUS_SCALE["assortativity_r"]}}
    try:
        res = assortativity(g, cfg.permutations, cfg.seed)
    except DegenerateInputError as exc:
        return write_report(cfg.out_dir / "assortativity.json", "assortativity", cfg, body,
                            "insufficient_data", str(exc))
    body["result"] = {"r": res.r, "p_value": res.p_value, "n_edges": res.n, "test": res.test,
                      "stars": significance_stars(res.p_value)}
    return write_report(cfg.out_dir / "assortativity.json", "assortativity", cfg, body)


def stage_cooccur(cfg: RunConfig) -> dict:
    b = load_bipartite(cfg)
    labels = load_labels(cfg)
    g, network = tracking_network(b, labels)
    ccfg = ClusterConfig(alpha_level=cfg.g2_alpha, bonferroni=cfg.bonferroni, resolutions=tuple(cfg.resolutions),
                         seeds=cfg.grid_seeds, base_seed=cfg.seed, core_order=cfg.core_order,
                         weighted=cfg.weighted)
    path = cfg.out_dir / "clusters.json"
    try:
        rep = cluster_pipeline(g, labels, ccfg)
    except ClusterError as exc:
        (cfg.out_dir / "clusters.dot").write_text("graph cooccurrence {\n}\n", encoding="utf-8")
        return write_report(path, "cooccur", cfg, {"network": network, "Q": None, "communities": [],
                                                   "diagnostics": {}}, "insufficient_data", str(exc))
    (cfg.out_dir / "clusters.dot").write_text(rep.to_dot(), encoding="utf-8")
    doc = json.loads(rep.to_json())
    body = {"network": network, "Q": doc["Q"], "resolution": doc["resolution"], "grid_seed": doc["seed"],
            "diagnostics": doc["diagnostics"], "communities": doc["communities"],
            "reference": {"clusters": CORPUS_SCALE["tracker_clusters"]}}
    return write_report(path, "cooccur", cfg, body)


def stage_country(cfg: RunConfig) -> dict:
    b = load_bipartite(cfg)
    ranks = load_ranks(cfg)
    labels = load_labels(cfg)
    if labels is None:
        raise ConfigError("country analysis needs --labels")
    g, _ = tracking_network(b, labels)
    tlds = load_country_tlds(cfg.country_tlds)
    indicators = load_country_indicators(cfg.indicators) if cfg.indicators else {}
    unknown = sorted(set(indicators) - set(tlds))
    if unknown:
        raise TableError(f"indicator rows for TLDs outside the country table: {', '.join(unknown)}")

    share_rows = []
    for name, dset in (("*", DomainSet.all_sites(g)), ("com", DomainSet.by_tld(g, "com"))):
        if len(dset):
            for i, row in enumerate(company_shares(dset, labels, g, ranks), 1):
                share_rows.append([name, i, row.company, row.rank_share, row.domain_share])
    countries = []
    for tld in sorted(tlds):
        dset = DomainSet.by_tld(g, tld)
        entry = {"tld": tld, "country": tlds[tld], "sites": len(dset), "dominance": None}
        if not len(dset):
            entry["note"] = "no site under this TLD"
            countries.append(entry)
            continue
        table = company_shares(dset, labels, g, ranks)
        for i, row in enumerate(table, 1):
            share_rows.append([tld, i, row.company, row.rank_share, row.domain_share])
        if table:
            entry["dominance"] = dominance(dset, labels, g, ranks, cfg.dominant_companies, table=table)
            entry["top_companies"] = [r.company for r in table[:10]]
        else:
            entry["note"] = "no tracking company on this TLD"
        countries.append(entry)
    write_csv(cfg.out_dir / "country_shares.csv", ["tld", "position", "company", "rank_share", "domain_share"],
              share_rows)

    judged = [c for c in countries if c["dominance"] is not None]
    correlations = []
    for col in INDICATOR_COLUMNS:
        pairs = [(int(c["dominance"]), indicators[c["tld"]][col]) for c in judged if c["tld"] in indicators]
        item = {"indicator": col, "n": len(pairs),
                "reference_r": CORPUS_SCALE["dominance_correlations"][col]}
        try:
            if len(pairs) < 3:
                raise DegenerateInputError(f"{len(pairs)} countries with both dominance and indicator data")
            res = point_biserial([p[0] for p in pairs], [p[1] for p in pairs])
            item.update(r=res.r, p_value=res.p_value, stars=significance_stars(res.p_value))
        except DegenerateInputError as exc:
            item["error"] = str(exc)
        correlations.append(item)
    write_csv(cfg.out_dir / "country_correlations.csv", ["indicator", "r", "p_value", "stars", "n"],
              [[c["indicator"], c.get("r"), c.get("p_value"), c.get("stars", ""), c["n"]] for c in correlations])
    body = {
        "countries": countries,
        "dominant_companies": list(cfg.dominant_companies),
        "dominance_count": sum(1 for c in judged if c["dominance"]),
        "judged_count": len(judged),
        "correlations": correlations,
        "reference": {k: CORPUS_SCALE[k] for k in
                      ("countries_examined", "countries_with_dominance", "countries_without_dominance")},
    }
    return write_report(cfg.out_dir / "country.json", "country", cfg, body)


def _units(cfg: RunConfig, labels: LabelTable, g: BipartiteGraph) -> dict[str, list[str]]:
    if cfg.prevalence_level == "pld":
        return {t: [t] for t in g.third_parties}
    present = set(g.third_parties)
    out = {}
    for company in labels.companies():
        plds = [p for p in labels.tracker_plds_of(company) if p in present]
        if plds:
            out[company] = plds
    return out


def stage_category(cfg: RunConfig) -> dict:
    b = load_bipartite(cfg)
    ranks = load_ranks(cfg)
    labels = load_labels(cfg)
    if labels is None:
        raise ConfigError("category analysis needs --labels")
    if not cfg.categories:
        raise ConfigError("category analysis needs --categories")
    cmap = CategoryMap.load(cfg.categories)
    g, _ = tracking_network(b, labels)
    high, low, ambiguous = cmap.sites_by_criticality()
    crit = DomainSet.from_members(g, "highly_critical", high)
    non = DomainSet.from_members(g, "less_critical", low)
    out = cfg.out_dir
    has_tracker = g.site_degrees() > 0

    def counts(dset: DomainSet) -> dict:
        if not len(dset):
            return {"sites": 0, "with_trackers": 0, "without_trackers": 0, "fraction_with_trackers": None}
        m = dset.mask(g)
        w = int((has_tracker & m).sum())
        return {"sites": len(dset), "with_trackers": w, "without_trackers": len(dset) - w,
                "fraction_with_trackers": w / len(dset)}

    overall = {"highly_critical": counts(crit), "less_critical": counts(non),
               "ambiguous_sites": len(ambiguous), "sites_not_in_corpus": len((high | low) - set(g.sites)),
               "reference_fraction_with_trackers": CORPUS_SCALE["fraction_with_trackers"]}
    by_category = []
    for cat in cmap.categories():
        dset = DomainSet.from_members(g, cat, cmap.sites(cat) - ambiguous)
        by_category.append({"category": cat, "criticality": cmap.criticality[cat], **counts(dset)})
    rows4 = [[lvl, overall[lvl]["sites"], overall[lvl]["with_trackers"], overall[lvl]["without_trackers"],
              overall[lvl]["fraction_with_trackers"]] for lvl in ("highly_critical", "less_critical")]
    rows4 += [[c["category"], c["sites"], c["with_trackers"], c["without_trackers"], c["fraction_with_trackers"]]
              for c in by_category]
    write_csv(out / "category_counts.csv", ["group", "sites", "with_trackers", "without_trackers",
                                            "fraction_with_trackers"], rows4)
    if not len(crit) or not len(non):
        body = {"overall": overall, "by_category": by_category, "prevalence": [], "shares": []}
        return write_report(out / "category.json", "category", cfg, body, "insufficient_data",
                            "need corpus sites in both criticality levels")

    try:
        t = prevalence_test(list(g.third_parties), crit, non, g)
        overall["test"] = {"direction": t.direction, "statistic": t.statistic, "p_value": t.p_value,
                           "stars": t.stars}
    except DegenerateInputError as exc:
        overall["test"] = {"error": str(exc)}

    # per-tracker prevalence among the most used trackers on categorized sites
    both = crit.mask(g) | non.mask(g)
    units = _units(cfg, labels, g)
    used = {u: int((g.site_mask(plds) & both).sum()) for u, plds in units.items()}
    top = sorted((u for u in used if used[u] > 0), key=lambda u: (-used[u], u))[: cfg.prevalence_top]
    prevalence = []
    for u in top:
        try:
            r = prevalence_test(units[u], crit, non, g)
            stat, p, direction = r.statistic, r.p_value, r.direction
            rc, rn = r.rate_critical, r.rate_noncritical
        except DegenerateInputError:
            # present on every categorized site: observed equals expected in every cell
            stat, p, direction, rc, rn = 0.0, 1.0, "none", 1.0, 1.0
        prevalence.append({"unit": u, "sites": used[u], "direction": direction, "statistic": stat,
                           "p_value": p, "stars": significance_stars(p), "rate_critical": rc,
                           "rate_noncritical": rn})
    write_csv(out / "category_prevalence.csv",
              ["unit", "sites", "direction", "statistic", "p_value", "stars", "rate_critical", "rate_noncritical"],
              [[r[k] for k in ("unit", "sites", "direction", "statistic", "p_value", "stars", "rate_critical",
                               "rate_noncritical")] for r in prevalence])

    # shares of the dominant companies per category
    shares = []
    groups = [(lvl, lvl, d) for lvl, d in (("highly_critical", crit), ("less_critical", non))]
    groups += [(c, cmap.criticality[c], DomainSet.from_members(g, c, cmap.sites(c) - ambiguous))
               for c in cmap.categories()]
    for name, lvl, dset in groups:
        if not len(dset):
            continue
        for company in cfg.dominant_companies:
            plds = labels.tracker_plds_of(company)
            shares.append({"group": name, "criticality": lvl, "company": company,
                           "domain_share": domain_share(dset, plds, g),
                           "rank_share": rank_share(dset, plds, g, ranks)})
    write_csv(out / "category_shares.csv", ["group", "criticality", "company", "domain_share", "rank_share"],
              [[s["group"], s["criticality"], s["company"], s["domain_share"], s["rank_share"]] for s in shares])

    # top companies per criticality level
    top_rows = []
    for lvl, dset in (("highly_critical", crit), ("less_critical", non)):
        for i, row in enumerate(company_shares(dset, labels, g, ranks)[:10], 1):
            top_rows.append([lvl, i, row.company, row.domain_share, row.rank_share])
    write_csv(out / "category_top_companies.csv", ["criticality", "position", "company", "domain_share",
                                                   "rank_share"], top_rows)

    # per-company distribution of PageRank over the highly critical sites it tracks
    p = rank_array(g, ranks)
    cm = crit.mask(g)
    cdf_rows = []
    cdf_companies = [r[2] for r in top_rows if r[0] == "highly_critical"]
    for company in cdf_companies:
        vals = np.sort(p[g.site_mask(labels.tracker_plds_of(company)) & cm])
        for i, v in enumerate(vals, 1):
            if i < len(vals) and vals[i] == v:
                continue
            cdf_rows.append([company, float(v), i / len(vals)])
    write_csv(out / "category_rank_cdf.csv", ["company", "pagerank", "cdf"], cdf_rows)

    body = {"overall": overall, "by_category": by_category, "prevalence": prevalence, "shares": shares,
            "cdf_companies": cdf_companies}
    return write_report(out / "category.json", "category", cfg, body)


STAGES: dict[str, tuple[Callable[[RunConfig], dict], tuple[str, ...]]] = {
    "pagerank": (stage_pagerank, ()),
    "rank-share": (stage_rank_share, ()),
    "condprob": (stage_condprob, ()),
    "powerlaw": (stage_powerlaw, ()),
    "assortativity": (stage_assortativity, ()),
    "cooccur": (stage_cooccur, ()),
    "country": (stage_country, ("labels",)),
    "category": (stage_category, ("labels", "categories")),
}


def run_all(cfg: RunConfig) -> tuple[dict, bool]:
    """Extraction followed by every analysis whose inputs are configured.

    A stage that fails is recorded and the remaining stages still run when
    their prerequisites exist. Returns the run summary and an overall ok flag.
    """
    stages: dict[str, dict] = {}
    ok = True
    try:
        doc = stage_extract(cfg)
        stages["extract"] = {"status": doc["status"]}
    except (CorpusError, OSError) as exc:
        stages["extract"] = {"status": "error", "message": str(exc)}
        ok = False
    for name, (fn, needs) in STAGES.items():
        missing = [n for n in needs if getattr(cfg, n) is None]
        if missing:
            stages[name] = {"status": "skipped", "message": "not configured: " + ", ".join(missing)}
            continue
        try:
            doc = fn(cfg)
            stages[name] = {"status": doc["status"]}
            if "message" in doc:
                stages[name]["message"] = doc["message"]
        except (PrerequisiteError, ConfigError, TableError, GraphError, ReportError, OSError, *INSUFFICIENT) as exc:
            stages[name] = {"status": "error", "message": str(exc)}
            ok = False
    write_report(cfg.out_dir / "run_summary.json", "run", cfg, {"stages": stages})
    return stages, ok
