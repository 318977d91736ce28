from __future__ import annotations

import io
import uuid
from pathlib import Path

import numpy as np
import pytest
from warcio.statusandheaders import StatusAndHeaders
from warcio.warcwriter import WARCWriter

from trackscope.extract import EmbeddingEdge
from trackscope.graph import build_bipartite

FIXTURES = Path(__file__).resolve().parent / "fixtures"
MINICORPUS = FIXTURES / "minicorpus"

# acceptance outcomes, filled by test_acceptance and echoed in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def bipartite_from_sets(site_tps: dict[str, set[str]]):
    edges = [EmbeddingEdge(s, t) for s, ts in site_tps.items() for t in ts]
    return build_bipartite(edges, extra_sites=site_tps)


def random_site_sets(rng: np.random.Generator, n_sites: int, n_tps: int, p: float) -> dict[str, set[str]]:
    sites = {}
    for i in range(n_sites):
        sites[f"site{i:03d}.org"] = {f"tp{j:02d}.net" for j in range(n_tps) if rng.random() < p}
    return sites


def write_warc(path: Path, records: list[tuple[str, bytes, str]], gzip: bool = False):
    """records: (url, payload, content type) response records."""
    with open(path, "wb") as fh:
        w = WARCWriter(fh, gzip=gzip)
        for n, (url, payload, ctype) in enumerate(records):
            rec = w.create_warc_record(
                url, "response", payload=io.BytesIO(payload), length=len(payload),
                http_headers=StatusAndHeaders("200 OK", [("Content-Type", ctype)], protocol="HTTP/1.1"),
                warc_headers_dict={"WARC-Date": "2012-07-01T00:00:00Z",
                                   "WARC-Record-ID": f"<urn:uuid:{uuid.uuid5(uuid.NAMESPACE_URL, str(n) + url)}>"},
            )
            w.write_record(rec)


# 10 pages on 4 sites embedding 5 third parties along 8 distinct edges
SMALL_PAGES = [
    ("http://www.alpha.com/", ["https://www.google-analytics.com/ga.js", "//connect.facebook.net/sdk.js"]),
    ("http://www.alpha.com/a", ["https://www.google-analytics.com/ga.js"]),
    ("http://alpha.com/b", ["https://ssl.google-analytics.com/ga.js"]),
    ("http://www.beta.de/", ["https://script.ivwbox.de/iam.js", "https://www.google-analytics.com/ga.js"]),
    ("http://www.beta.de/x", ["https://script.ivwbox.de/iam.js"]),
    ("http://news.gamma.co.uk/", ["https://b.scorecardresearch.com/beacon.js"]),
    ("http://news.gamma.co.uk/2", ["https://platform.twitter.com/widgets.js"]),
    ("http://www.gamma.co.uk/3", []),
    ("http://www.delta.org/", ["https://platform.twitter.com/widgets.js", "https://www.google-analytics.com/u.js"]),
    ("http://www.delta.org/z", ["https://platform.twitter.com/widgets.js"]),
]
SMALL_EDGES = {
    ("alpha.com", "google-analytics.com"): 3,
    ("alpha.com", "facebook.net"): 1,
    ("beta.de", "ivwbox.de"): 2,
    ("beta.de", "google-analytics.com"): 1,
    ("gamma.co.uk", "scorecardresearch.com"): 1,
    ("gamma.co.uk", "twitter.com"): 1,
    ("delta.org", "twitter.com"): 2,
    ("delta.org", "google-analytics.com"): 1,
}


@pytest.fixture
def small_manifest(tmp_path) -> Path:
    d = tmp_path / "small"
    d.mkdir()
    rows = []
    for n, (url, srcs) in enumerate(SMALL_PAGES):
        html = "<html><body>" + "".join(f'<script src="{s}"></script>' for s in srcs) + "</body></html>"
        (d / f"p{n}.html").write_text(html, encoding="utf-8")
        rows.append(f"{url}\tp{n}.html")
    (d / "manifest.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    return d / "manifest.tsv"
