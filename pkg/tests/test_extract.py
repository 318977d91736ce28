import gzip
import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackscope.domains import HostCandidate, Source, default_rules
from trackscope.extract import (
    TLD_LABEL_LENGTH,
    CorpusError,
    EmbeddingEdge,
    PageRecord,
    analyze_page,
    extract_embedded_hosts,
    extract_js_uri_literals,
    extract_page,
    ingest_corpus,
    scan_html,
)
from trackscope.extract.jsscan import JSSyntaxError, iter_string_literals, scan_quoted_spans
from trackscope.extract.markup import decode_html
from trackscope.graph import write_edges

from conftest import FIXTURES, SMALL_EDGES, write_warc

RULES = default_rules()
SNIPPET = (FIXTURES / "snippet" / "snippet.js.html").read_text()


def hosts(cands):
    return {c.raw for c in cands}


# -- JavaScript literals -------------------------------------------------------

def test_snippet_strict_tokenizer_fails_and_fallback_recovers():
    body = SNIPPET.split(">", 1)[1]
    with pytest.raises(JSSyntaxError):
        list(iter_string_literals(body))
    assert '.scorecardresearch.com/beacon.js\' ' in "".join(scan_quoted_spans(body))
    assert extract_js_uri_literals(body) == {HostCandidate("scorecardresearch.com", Source.JS_LITERAL)}


def test_snippet_through_html():
    assert extract_embedded_hosts(SNIPPET) == {HostCandidate("scorecardresearch.com", Source.JS_LITERAL)}


def test_snippet_well_formed_variant():
    js = ('document.write(unescape("%3Cscript src=\'" + (document.location.protocol == "https:" ? '
          '"https://sb" : "http://b") + ".scorecardresearch.com/beacon.js\' %3E%3C/script%3E"));')
    assert hosts(extract_js_uri_literals(js)) == {"scorecardresearch.com"}


def test_analytics_loader():
    js = ("var ga = document.createElement('script'); ga.src = ('https:' == document.location.protocol ? "
          "'https://ssl' : 'http://www') + '.google-analytics.com/ga.js';")
    assert hosts(extract_js_uri_literals(js)) == {"google-analytics.com"}


@pytest.mark.parametrize("js,expected", [
    ("var u = `https://${host}/x` + `//cdn.tpl-host.com/a.js`;", {"cdn.tpl-host.com"}),
    ("var r = /\"https:\\/\\/not.a-host.com\"/g; var s = 'https://real.example.com/';", {"real.example.com"}),
    ("var x = a / 2 / 'b.example.org/x';", {"b.example.org"}),
    ("// 'https://in-a-comment.com/'\nvar y = 1;", set()),
    ("/* \"https://block-comment.com/\" */", set()),
    ("<!-- 'https://html-comment.com/x'\nvar z = 'https://after.example.net/';", {"after.example.net"}),
    ("var s = 'https:\\/\\/escaped.example.com\\/p';", {"escaped.example.com"}),
    ("var s = '\\x68ttps://hex-escape.example.com/';", {"hex-escape.example.com"}),
    ("var v = '1.2.3', w = 'a.b', x = 'x.y1';", set()),
    ("var s = 'mailto:x@y.com'; var d = 'data:text/html,hi';", set()),
    ("document.write('<img src=\"//pix.example.io/p.gif\">');", {"pix.example.io"}),
    ("var s = 'http://192.168.1.1/admin';", set()),
    ("var s = '//cdn.example.com:8080/lib.js?x=1#y';", {"cdn.example.com"}),
    ("var s = 'https://www.EXAMPLE.com/';", {"www.example.com"}),
])
def test_js_literal_cases(js, expected):
    assert hosts(extract_js_uri_literals(js)) == expected


def test_tld_label_bounds():
    lo, hi = TLD_LABEL_LENGTH
    assert hosts(extract_js_uri_literals(f"'//a.example.{'x' * lo}/'")) == {f"a.example.{'x' * lo}"}
    assert hosts(extract_js_uri_literals(f"'//a.example.{'x' * (lo - 1)}/'")) == set()
    assert hosts(extract_js_uri_literals(f"'//a.example.{'x' * (hi + 1)}/'")) == set()


@settings(max_examples=150, deadline=None)
@given(st.text(max_size=200))
def test_js_scanner_never_raises(src):
    extract_js_uri_literals(src)


@settings(max_examples=150, deadline=None)
@given(st.text(max_size=300))
def test_html_scanner_never_raises(src):
    scan_html(src)


# -- markup -------------------------------------------------------------------

def test_markup_sources():
    html = """<html><head>
      <link rel=stylesheet href="https://f.styles.net/c.css">
      <script src="//cdn.a.org/x.js"></script></head><body>
      <iframe src="https://www.facebook.com/plugins/like.php"></iframe>
      <img src=//pix.tracker.com/i.png>
      <svg><image xlink:href="https://svg.example.com/i.svg"/></svg>
      <a href="https://linked.example.com/">not an embed</a>
      <area href="http://area.example.net/">
      <script>var u = "https://inline.example.de/c";</script>
    </body></html>"""
    scan = scan_html(html)
    assert set(scan.candidates) == {
        HostCandidate("f.styles.net", Source.LINK_REF),
        HostCandidate("cdn.a.org", Source.SCRIPT_SRC),
        HostCandidate("www.facebook.com", Source.IFRAME_SRC),
        HostCandidate("pix.tracker.com", Source.IMAGE_SRC),
        HostCandidate("svg.example.com", Source.IMAGE_SRC),
        HostCandidate("inline.example.de", Source.JS_LITERAL),
    }
    assert set(scan.link_hosts) == {"linked.example.com", "area.example.net"}


def test_unclosed_script_is_scanned():
    assert hosts(extract_embedded_hosts("<p>x<script>var a='//late.example.com/t.js'")) == {"late.example.com"}


def test_uppercase_and_malformed_markup():
    html = '<SCRIPT SRC="HTTP://CDN.UPPER.COM/A.JS"></SCRIPT><img src=http://ok.example.com/x.png alt=<<< ><p'
    assert hosts(extract_embedded_hosts(html)) == {"cdn.upper.com", "ok.example.com"}


def test_decode_html_charsets():
    assert decode_html("<p>ä</p>".encode("latin-1"), "latin-1") == "<p>ä</p>"
    assert "ä" in decode_html(b'<meta charset="iso-8859-1"><p>\xe4</p>')
    assert decode_html(b"\xef\xbb\xbf<p>x</p>") == "<p>x</p>"
    assert decode_html(b"<p>\xff</p>").startswith("<p>")


# -- pages --------------------------------------------------------------------

def test_page_drops_own_pld_and_non_public_hosts():
    html = (b'<script src="https://static.example.com/a.js"></script>'
            b'<script src="https://www.example.com/b.js"></script>'
            b'<img src="https://pixel.tracker.net/p.gif"><img src="http://intranet.local/x.png">')
    page = PageRecord.from_url("http://www.example.com/", html, RULES)
    assert page.site_pld == "example.com"
    assert extract_page(page, RULES) == {"tracker.net"}


def test_script_noise_has_no_known_tld():
    html = b"<script>var s = 'jquery.min.js', t = 'window.location', u = 'https://real.example.com/';</script>"
    page = PageRecord.from_url("http://site.org/", html, RULES)
    assert hosts(scan_html(page.body).candidates) == {"jquery.min.js", "window.location", "real.example.com"}
    assert extract_page(page, RULES) == {"example.com"}


def test_page_hyperlinks():
    html = b'<a href="https://other.org/x">o</a><a href="/rel">r</a><a href="http://www.example.com/">self</a>'
    embedded, linked = analyze_page(PageRecord.from_url("http://example.com/", html, RULES), RULES)
    assert embedded == set() and linked == {"other.org"}


def test_edge_validation():
    with pytest.raises(ValueError):
        EmbeddingEdge("a.com", "a.com")
    with pytest.raises(ValueError):
        EmbeddingEdge("a.com", "b.com", 0)


# -- corpora ------------------------------------------------------------------

def test_snippet_golden(tmp_path):
    res = ingest_corpus(FIXTURES / "snippet" / "manifest.tsv")
    write_edges(res.edges, tmp_path / "edges.tsv")
    assert (tmp_path / "edges.tsv").read_bytes() == (FIXTURES / "snippet" / "golden_edges.tsv").read_bytes()


def test_small_manifest(small_manifest):
    res = ingest_corpus(small_manifest)
    assert {(e.site, e.third_party): e.page_count for e in res.edges} == SMALL_EDGES
    s = res.summary()
    assert (s["pages"], s["sites"], s["third_parties"], s["edges"]) == (10, 4, 5, 8)
    assert res.site_pages["gamma.co.uk"] == 3


def test_parallel_matches_serial(small_manifest):
    assert ingest_corpus(small_manifest, workers=2, batch_size=3).edges == ingest_corpus(small_manifest).edges


def test_single_record_warc(tmp_path):
    path = tmp_path / "one.warc"
    write_warc(path, [("http://www.solo.net/", b"<script src='https://t.tracker.io/x.js'></script>",
                       "text/html")])
    res = ingest_corpus(path)
    assert res.summary()["pages"] == 1
    assert res.edges == [EmbeddingEdge("solo.net", "tracker.io", 1)]


def test_warc_skips_and_duplicates(tmp_path):
    path = tmp_path / "mixed.warc.gz"
    write_warc(path, [
        ("http://www.a.com/", b"<img src='//p.b.com/x.gif'>", "text/html; charset=utf-8"),
        ("http://www.a.com/logo.png", b"\x89PNG", "image/png"),
        ("http://www.a.com/", b"<img src='//p.c.com/x.gif'>", "text/html"),
        ("http://10.0.0.1/", b"<img src='//p.d.com/x.gif'>", "text/html"),
    ], gzip=True)
    res = ingest_corpus(path)
    s = res.summary()
    assert s["pages"] == 1 and s["duplicate_urls"] == 1
    assert s["skipped_by_reason"] == {"no_pld": 1, "non_html": 1}
    assert [(e.site, e.third_party) for e in res.edges] == [("a.com", "b.com")]


def test_truncated_warc(tmp_path):
    path = tmp_path / "cut.warc"
    write_warc(path, [("http://www.a.com/", b"<img src='//p.b.com/x.gif'>", "text/html"),
                      ("http://www.z.com/", b"<img src='//p.c.com/x.gif'>" * 20, "text/html")])
    data = path.read_bytes()
    path.write_bytes(data[:-200])
    res = ingest_corpus(path)
    assert res.summary()["skipped_by_reason"] == {"truncated": 1}
    assert [e.site for e in res.edges] == ["a.com"]


def test_truncated_gzip_warc(tmp_path):
    path = tmp_path / "cut.warc.gz"
    write_warc(path, [("http://www.a.com/", b"<img src='//p.b.com/x.gif'>", "text/html"),
                      ("http://www.z.com/", b"<img src='//p.c.com/x.gif'>" * 20, "text/html")], gzip=True)
    data = path.read_bytes()
    path.write_bytes(data[:-60])
    res = ingest_corpus(path)
    assert res.summary()["skipped_by_reason"] == {"truncated": 1}
    assert [e.site for e in res.edges] == ["a.com"]


def test_empty_corpus_errors(tmp_path):
    with pytest.raises(CorpusError):
        ingest_corpus(tmp_path)
    with pytest.raises(CorpusError):
        ingest_corpus(tmp_path / "missing")


def test_all_records_unreadable(tmp_path):
    (tmp_path / "junk.warc.gz").write_bytes(gzip.compress(b"not a warc at all"))
    with pytest.raises(CorpusError):
        ingest_corpus(tmp_path)


def test_directory_recursion(tmp_path, small_manifest):
    nested = tmp_path / "deep" / "er"
    nested.mkdir(parents=True)
    shutil.copytree(small_manifest.parent, nested / "small")
    assert len(ingest_corpus(tmp_path / "deep").edges) == 8


def test_minicorpus_goldens(tmp_path):
    from conftest import MINICORPUS
    from trackscope.graph import write_hyperlinks, write_sites

    res = ingest_corpus(MINICORPUS / "warc")
    write_edges(res.edges, tmp_path / "edges.tsv")
    write_sites(res.site_pages, tmp_path / "sites.tsv")
    write_hyperlinks(res.hyperlinks, tmp_path / "hyperlinks.tsv")
    for name in ("edges", "sites", "hyperlinks"):
        golden = (MINICORPUS / f"golden_{name}.tsv").read_bytes()
        assert (tmp_path / f"{name}.tsv").read_bytes() == golden, name
    s = res.summary()
    assert (s["records"], s["pages"], s["duplicate_urls"]) == (54, 50, 1)
    assert s["skipped_by_reason"] == {"non_html": 1, "truncated": 1}
