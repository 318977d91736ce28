"""Third-party embedding extraction from archived HTML pages."""
from .corpus import (
    CorpusError,
    EmbeddingEdge,
    IngestResult,
    PageRecord,
    analyze_page,
    extract_page,
    ingest_corpus,
)
from .jsscan import TLD_LABEL_LENGTH, URI_LITERAL_RE, extract_js_uri_literals
from .markup import extract_embedded_hosts, scan_html

__all__ = [
    "CorpusError",
    "EmbeddingEdge",
    "IngestResult",
    "PageRecord",
    "TLD_LABEL_LENGTH",
    "URI_LITERAL_RE",
    "analyze_page",
    "extract_embedded_hosts",
    "extract_js_uri_literals",
    "extract_page",
    "ingest_corpus",
    "scan_html",
]
