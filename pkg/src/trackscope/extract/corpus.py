"""Corpus ingestion: pages in, aggregated (site, third-party) edges out."""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from ..domains import DomainError, PayLevelDomain, SuffixRuleSet, canonicalize_uri, default_rules, resolve_pld
from .markup import scan_html

log = logging.getLogger(__name__)

WARC_SUFFIXES = (".warc", ".warc.gz")
MANIFEST_SUFFIXES = (".tsv",)


class CorpusError(RuntimeError):
    pass


@dataclass(frozen=True)
class PageRecord:
    url: str
    body: bytes
    site_pld: PayLevelDomain

    @classmethod
    def from_url(cls, url: str, body: bytes, rules: SuffixRuleSet) -> "PageRecord":
        host = canonicalize_uri(url)
        if host is None:
            raise DomainError(f"no host in page url {url!r}")
        return cls(url, body, resolve_pld(host, rules))


@dataclass(frozen=True, order=True)
class EmbeddingEdge:
    site: PayLevelDomain
    third_party: PayLevelDomain
    page_count: int = 1

    def __post_init__(self):
        if self.site == self.third_party:
            raise ValueError(f"self-embedding edge for {self.site}")
        if self.page_count < 1:
            raise ValueError("page_count must be positive")


def _resolvable(host: str, rules: SuffixRuleSet) -> PayLevelDomain | None:
    # unknown top labels ("min.js", "window.location") are almost always script noise
    if not rules.is_known_tld(host.rsplit(".", 1)[-1]):
        return None
    try:
        return resolve_pld(host, rules)
    except DomainError:
        return None


def analyze_page(page: PageRecord, rules: SuffixRuleSet) -> tuple[set[PayLevelDomain], set[PayLevelDomain]]:
    """Third-party PLDs embedded by ``page`` and PLDs its anchors link to."""
    scan = scan_html(page.body)
    embedded = {_resolvable(c.raw, rules) for c in scan.candidates}
    linked = {_resolvable(h, rules) for h in scan.link_hosts}
    drop = {None, page.site_pld}
    return embedded - drop, linked - drop


def extract_page(page: PageRecord, rules: SuffixRuleSet) -> set[PayLevelDomain]:
    return analyze_page(page, rules)[0]


@dataclass
class IngestResult:
    edges: list[EmbeddingEdge]
    site_pages: dict[PayLevelDomain, int]
    hyperlinks: list[tuple[PayLevelDomain, PayLevelDomain]]
    counts: Counter = field(default_factory=Counter)

    def summary(self) -> dict:
        skipped = {k[len("skipped_"):]: v for k, v in sorted(self.counts.items()) if k.startswith("skipped_")}
        return {
            "records": self.counts["records"],
            "pages": self.counts["pages"],
            "skipped": sum(skipped.values()),
            "skipped_by_reason": skipped,
            "duplicate_urls": self.counts["duplicate_url"],
            "sites": len(self.site_pages),
            "third_parties": len({e.third_party for e in self.edges}),
            "edges": len(self.edges),
            "hyperlinks": len(self.hyperlinks),
        }


@dataclass(frozen=True)
class _RawPage:
    url: str
    body: bytes


def _iter_warc(path: Path, counts: Counter) -> Iterator[_RawPage]:
    from warcio.archiveiterator import ArchiveIterator
    from warcio.exceptions import ArchiveLoadFailed

    size = path.stat().st_size
    with open(path, "rb") as fh:
        archive = ArchiveIterator(fh)
        it = iter(archive)
        while True:
            try:
                record = next(it)
            except StopIteration:
                # a gzip member cut short ends iteration quietly, leaving bytes unparsed
                if archive.offset < size:
                    log.warning("%s: %d trailing bytes unparsed; record truncated", path, size - archive.offset)
                    counts["skipped_truncated"] += 1
                return
            except (ArchiveLoadFailed, EOFError, OSError, ValueError) as exc:
                log.warning("%s: unreadable record (%s); stopping file", path, exc)
                counts["skipped_truncated"] += 1
                return
            counts["records"] += 1
            if record.rec_type is None:
                # a compressed member cut inside its headers parses as an empty record
                log.warning("%s: record with unreadable headers; stopping file", path)
                counts["skipped_truncated"] += 1
                return
            if record.format != "warc":
                # warcio falls back to the legacy ARC reader on anything without a WARC header
                counts["skipped_not_warc"] += 1
                continue
            if record.rec_type != "response":
                counts["readable"] += 1
                counts["non_response"] += 1
                continue
            url = record.rec_headers.get_header("WARC-Target-URI") or ""
            ctype = record.http_headers.get_header("Content-Type", "") if record.http_headers else ""
            if "text/html" not in ctype.lower():
                counts["readable"] += 1
                counts["skipped_non_html"] += 1
                continue
            try:
                body = record.content_stream().read()
            except Exception as exc:  # noqa: BLE001 - chunked/gzip decoding errors
                log.warning("%s: cannot decode body of %s (%s)", path, url, exc)
                counts["skipped_truncated"] += 1
                continue
            # the block reader keeps a positive limit when the file ended early
            if getattr(record.raw_stream, "limit", 0) > 0:
                log.warning("%s: truncated record for %s", path, url)
                counts["skipped_truncated"] += 1
                continue
            counts["readable"] += 1
            yield _RawPage(url, body)


def _iter_manifest(path: Path, counts: Counter) -> Iterator[_RawPage]:
    base = path.parent
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            counts["records"] += 1
            parts = line.split("\t")
            if len(parts) != 2:
                log.warning("%s:%d: malformed manifest row", path, lineno)
                counts["skipped_malformed"] += 1
                continue
            url, rel = parts
            try:
                body = (base / rel).read_bytes()
            except OSError as exc:
                log.warning("%s:%d: %s", path, lineno, exc)
                counts["skipped_unreadable"] += 1
                continue
            counts["readable"] += 1
            yield _RawPage(url, body)


def corpus_files(source: str | Path) -> list[Path]:
    """WARC files and manifests named by ``source`` (a file or a directory)."""
    source = Path(source)
    if source.is_file():
        return [source]
    if not source.is_dir():
        raise CorpusError(f"corpus source {source} does not exist")
    return sorted(
        p for p in source.rglob("*") if p.is_file() and p.name.endswith(WARC_SUFFIXES + MANIFEST_SUFFIXES)
    )


def iter_pages(sources: Iterable[str | Path], counts: Counter) -> Iterator[_RawPage]:
    for src in sources:
        for path in corpus_files(src):
            if path.name.endswith(MANIFEST_SUFFIXES):
                yield from _iter_manifest(path, counts)
            else:
                yield from _iter_warc(path, counts)


def _process(raw: _RawPage, rules: SuffixRuleSet):
    try:
        page = PageRecord.from_url(raw.url, raw.body, rules)
    except DomainError:
        return raw.url, None, None, None
    embedded, linked = analyze_page(page, rules)
    return raw.url, page.site_pld, embedded, linked


_worker_rules: SuffixRuleSet | None = None


def _init_worker(rules: SuffixRuleSet):
    global _worker_rules
    _worker_rules = rules


def _process_batch(batch: list[_RawPage]):
    return [_process(raw, _worker_rules) for raw in batch]


def ingest_corpus(
    source: str | Path | Iterable[str | Path],
    rules: SuffixRuleSet | None = None,
    workers: int = 1,
    batch_size: int = 256,
) -> IngestResult:
    """Extract and aggregate every HTML page of the corpus.

    Each (site, third_party) edge is emitted once with the number of distinct
    pages (by URL) of the site that embed the third party. Failing records
    are counted and skipped; a corpus with no readable record raises.
    """
    if isinstance(source, (str, Path)):
        source = [source]
    sources = list(source)
    rules = rules or default_rules()
    counts: Counter = Counter()
    edge_pages: Counter = Counter()
    site_pages: Counter = Counter()
    links: set[tuple[str, str]] = set()
    seen_urls: set[str] = set()

    def consume(url, site, embedded, linked):
        if site is None:
            counts["skipped_no_pld"] += 1
            return
        if url in seen_urls:
            counts["duplicate_url"] += 1
            return
        seen_urls.add(url)
        counts["pages"] += 1
        site_pages[site] += 1
        for tp in embedded:
            edge_pages[site, tp] += 1
        for dst in linked:
            links.add((site, dst))

    pages = iter_pages(sources, counts)
    if workers > 1:
        def batches():
            batch = []
            for raw in pages:
                batch.append(raw)
                if len(batch) >= batch_size:
                    yield batch
                    batch = []
            if batch:
                yield batch

        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(rules,)) as pool:
            for results in pool.map(_process_batch, batches()):
                for r in results:
                    consume(*r)
    else:
        for raw in pages:
            consume(*_process(raw, rules))

    if counts["readable"] == 0:
        raise CorpusError("no readable records")
    edges = sorted(EmbeddingEdge(s, t, c) for (s, t), c in edge_pages.items())
    return IngestResult(edges, dict(sorted(site_pages.items())), sorted(links), counts)
