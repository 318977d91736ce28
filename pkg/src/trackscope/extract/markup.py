"""Static HTML scanning for embedded third-party resources."""
from __future__ import annotations

import codecs
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

from ..domains import HostCandidate, Source, canonicalize_uri
from .jsscan import extract_js_uri_literals

# tag -> (attributes holding a resource reference, source kind)
EMBED_ATTRIBUTES = {
    "script": (("src",), Source.SCRIPT_SRC),
    "iframe": (("src",), Source.IFRAME_SRC),
    "img": (("src",), Source.IMAGE_SRC),
    "image": (("src", "href", "xlink:href"), Source.IMAGE_SRC),
    # link references external resources through href in practice
    "link": (("src", "href"), Source.LINK_REF),
}
ANCHOR_TAGS = frozenset({"a", "area"})

_META_CHARSET_RE = re.compile(rb"<meta[^>]+charset\s*=\s*[\"']?([a-zA-Z0-9_\-]+)", re.IGNORECASE)


def decode_html(payload: bytes | str, charset: str | None = None) -> str:
    """Best-effort decoding; never raises."""
    if isinstance(payload, str):
        return payload
    if payload.startswith(codecs.BOM_UTF8):
        return payload[3:].decode("utf-8", errors="replace")
    if payload.startswith((codecs.BOM_UTF16_LE, codecs.BOM_UTF16_BE)):
        return payload.decode("utf-16", errors="replace")
    if charset is None:
        m = _META_CHARSET_RE.search(payload[:4096])
        charset = m.group(1).decode("ascii") if m else "utf-8"
    try:
        return payload.decode(charset, errors="replace")
    except LookupError:
        return payload.decode("utf-8", errors="replace")


@dataclass
class PageScan:
    candidates: set[HostCandidate] = field(default_factory=set)
    link_hosts: set[str] = field(default_factory=set)


class _EmbedParser(HTMLParser):
    def __init__(self, depth: int):
        super().__init__(convert_charrefs=True)
        self.depth = depth
        self.scan = PageScan()
        self._in_script = False
        self._script_chunks: list[str] = []

    def _add(self, value: str | None, source: Source):
        host = canonicalize_uri(value) if value else None
        if host:
            self.scan.candidates.add(HostCandidate(host, source))

    def handle_starttag(self, tag, attrs):
        spec = EMBED_ATTRIBUTES.get(tag)
        if spec:
            names, source = spec
            for name, value in attrs:
                if name in names:
                    self._add(value, source)
        elif tag in ANCHOR_TAGS:
            for name, value in attrs:
                if name == "href" and value:
                    host = canonicalize_uri(value)
                    if host:
                        self.scan.link_hosts.add(host)
        if tag == "script":
            self._flush_script()
            self._in_script = True

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        if tag == "script":
            self._flush_script()

    def handle_endtag(self, tag):
        if tag == "script":
            self._flush_script()

    def handle_data(self, data):
        if self._in_script:
            self._script_chunks.append(data)

    def _flush_script(self):
        if self._script_chunks:
            body = "".join(self._script_chunks)
            self.scan.candidates |= extract_js_uri_literals(body, _depth=self.depth)
        self._script_chunks = []
        self._in_script = False

    def finish(self) -> PageScan:
        try:
            self.close()
        except Exception:  # noqa: BLE001 - html.parser may choke on truncated markup
            pass
        self._flush_script()
        return self.scan


def scan_html(html: bytes | str, _depth: int = 0) -> PageScan:
    """Embedded-resource hosts and anchor-target hosts of a document."""
    parser = _EmbedParser(_depth)
    try:
        parser.feed(decode_html(html))
    except Exception:  # noqa: BLE001 - keep whatever was collected before the failure
        pass
    return parser.finish()


def extract_embedded_hosts(html: bytes | str) -> set[HostCandidate]:
    """Hosts referenced by script/iframe/img src, link src/href and inline scripts."""
    return scan_html(html).candidates
