"""String-literal scanning of JavaScript source.

Scripts are tokenized, never evaluated. Every string literal (including the
cooked chunks of template literals) is tested on its own against
``URI_LITERAL_RE``; concatenations are not joined.
"""
from __future__ import annotations

import re
from typing import Iterator
from urllib.parse import unquote

from ..domains import HostCandidate, Source, canonicalize_uri

# Bounds and alphabet of the final host label. The single knob with the
# largest effect on recall: it is what keeps "1.2.3" or "x.y5" from matching.
TLD_LABEL_LENGTH = (2, 24)
TLD_LABEL_PATTERN = rf"(?:[a-z]{{{TLD_LABEL_LENGTH[0]},{TLD_LABEL_LENGTH[1]}}}|xn--[a-z0-9\-]{{1,59}})"

URI_LITERAL_RE = re.compile(
    r"^(?:[a-z][a-z0-9+.\-]*:)?(?://)?\.*"
    r"((?:[a-z0-9_](?:[a-z0-9_\-]{0,61}[a-z0-9_])?\.)+" + TLD_LABEL_PATTERN + r")\.?"
    r"(?::\d{1,5})?(?:[/?#].*)?$",
    re.IGNORECASE | re.DOTALL,
)

_REGEX_KEYWORDS = frozenset(
    "return typeof instanceof in of new delete void throw case do else yield await".split()
)
_IDENT_RE = re.compile(r"[A-Za-z_$\u0080-\uffff][\w$\u0080-\uffff]*")
_NUMBER_RE = re.compile(r"\.?\d[\w.]*")
_SIMPLE_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f", "v": "\v", "0": "\0"}
# fallback: a quote runs to its partner or to the end of the line
_QUOTED_SPAN_RE = re.compile(r"\"([^\"\n]*)(?:\"|$)|'([^'\n]*)(?:'|$)|`([^`]*)(?:`|$)", re.MULTILINE)


class JSSyntaxError(ValueError):
    pass


def _read_escape(src: str, i: int) -> tuple[str, int]:
    """Decode the escape sequence whose backslash is at ``src[i]``."""
    if i + 1 >= len(src):
        raise JSSyntaxError("dangling backslash")
    c = src[i + 1]
    if c in _SIMPLE_ESCAPES and not (c == "0" and i + 2 < len(src) and src[i + 2].isdigit()):
        return _SIMPLE_ESCAPES[c], i + 2
    if c == "x":
        h = src[i + 2:i + 4]
        if re.fullmatch(r"[0-9a-fA-F]{2}", h):
            return chr(int(h, 16)), i + 4
        return "x", i + 2
    if c == "u":
        if src.startswith("{", i + 2):
            end = src.find("}", i + 3)
            h = src[i + 3:end] if end != -1 else ""
            if h and re.fullmatch(r"[0-9a-fA-F]{1,6}", h) and int(h, 16) <= 0x10FFFF:
                return chr(int(h, 16)), end + 1
            return "u", i + 2
        h = src[i + 2:i + 6]
        if re.fullmatch(r"[0-9a-fA-F]{4}", h):
            return chr(int(h, 16)), i + 6
        return "u", i + 2
    if c == "\r" and src.startswith("\n", i + 2):
        return "", i + 3
    if c in "\n\r\u2028\u2029":
        return "", i + 2
    return c, i + 2


def _read_string(src: str, i: int) -> tuple[str, int]:
    quote = src[i]
    out = []
    i += 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == quote:
            return "".join(out), i + 1
        if c == "\\":
            ch, i = _read_escape(src, i)
            out.append(ch)
            continue
        if c in "\n\r":
            raise JSSyntaxError(f"unterminated string literal at offset {i}")
        out.append(c)
        i += 1
    raise JSSyntaxError("unterminated string literal at end of input")


def _skip_expression(src: str, i: int) -> int:
    """Index just past the ``}`` closing a template substitution starting at ``i``."""
    depth = 1
    n = len(src)
    while i < n:
        c = src[i]
        if c in "'\"":
            _, i = _read_string(src, i)
            continue
        if c == "`":
            i = _read_template(src, i, [])
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    raise JSSyntaxError("unterminated template substitution")


def _read_template(src: str, i: int, out: list[str]) -> int:
    """Append cooked template chunks (and literals nested in substitutions) to ``out``."""
    i += 1
    chunk: list[str] = []
    n = len(src)
    while i < n:
        c = src[i]
        if c == "`":
            out.append("".join(chunk))
            return i + 1
        if c == "\\":
            ch, i = _read_escape(src, i)
            chunk.append(ch)
            continue
        if c == "$" and src.startswith("{", i + 1):
            out.append("".join(chunk))
            chunk = []
            end = _skip_expression(src, i + 2)
            out.extend(iter_string_literals(src[i + 2:end - 1]))
            i = end
            continue
        chunk.append(c)
        i += 1
    raise JSSyntaxError("unterminated template literal")


def _skip_regex(src: str, i: int) -> int:
    in_class = False
    i += 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\\":
            i += 2
            continue
        if c in "\n\r":
            raise JSSyntaxError(f"unterminated regular expression at offset {i}")
        if in_class:
            in_class = c != "]"
        elif c == "[":
            in_class = True
        elif c == "/":
            i += 1
            while i < n and (src[i].isalnum() or src[i] in "_$"):
                i += 1
            return i
        i += 1
    raise JSSyntaxError("unterminated regular expression")


def _at_line_start(src: str, i: int) -> bool:
    j = i - 1
    while j >= 0 and src[j] in " \t":
        j -= 1
    return j < 0 or src[j] in "\n\r"


def iter_string_literals(src: str) -> Iterator[str]:
    """Yield the decoded value of every string literal in ``src``.

    Raises JSSyntaxError on unterminated strings, comments, templates or
    regular expressions.
    """
    i = 0
    n = len(src)
    # kind of the previous significant token, decides "/" as regex vs division
    prev: str | None = None
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if src.startswith("<!--", i) or (src.startswith("-->", i) and _at_line_start(src, i)):
            end = src.find("\n", i)
            i = n if end == -1 else end
            continue
        if c == "/" and src.startswith("//", i):
            end = src.find("\n", i)
            i = n if end == -1 else end
            continue
        if c == "/" and src.startswith("/*", i):
            end = src.find("*/", i + 2)
            if end == -1:
                raise JSSyntaxError("unterminated block comment")
            i = end + 2
            continue
        if c in "'\"":
            value, i = _read_string(src, i)
            prev = "literal"
            yield value
            continue
        if c == "`":
            chunks: list[str] = []
            i = _read_template(src, i, chunks)
            prev = "literal"
            yield from chunks
            continue
        if c == "/":
            if prev is None or prev == "punct" or prev in _REGEX_KEYWORDS:
                i = _skip_regex(src, i)
                prev = "literal"
            else:
                i += 1
                prev = "punct"
            continue
        m = _IDENT_RE.match(src, i)
        if m:
            word = m.group()
            prev = word if word in _REGEX_KEYWORDS else "ident"
            i = m.end()
            continue
        m = _NUMBER_RE.match(src, i)
        if m:
            prev = "ident"
            i = m.end()
            continue
        # ")" and "]" end an operand; everything else leaves us expecting one
        prev = "ident" if c in ")]" else "punct"
        i += 1


def scan_quoted_spans(src: str) -> list[str]:
    """Lenient fallback: quote-delimited spans, an unclosed quote ends at end of line."""
    out = []
    for m in _QUOTED_SPAN_RE.finditer(src):
        span = next(g for g in m.groups() if g is not None)
        out.append(span)
    return out


def string_literals(src: str) -> list[str]:
    try:
        return list(iter_string_literals(src))
    except (JSSyntaxError, RecursionError):
        return scan_quoted_spans(src)


def literal_host(literal: str) -> str | None:
    """Canonical host of a literal that matches the URI pattern, else None."""
    s = literal.strip()
    m = URI_LITERAL_RE.match(s)
    if not m:
        return None
    s = s.lstrip(".")
    if not s.startswith("//") and not re.match(r"^[a-z][a-z0-9+.\-]*://", s, re.IGNORECASE):
        s = "//" + s
    return canonicalize_uri(s)


def extract_js_uri_literals(js_source: str, _depth: int = 0) -> set[HostCandidate]:
    """Hosts named by URI-shaped string literals in a script."""
    found: set[HostCandidate] = set()
    for literal in string_literals(js_source):
        variants = {literal}
        if "%" in literal:
            variants.add(unquote(literal))
        for v in variants:
            host = literal_host(v)
            if host:
                found.add(HostCandidate(host, Source.JS_LITERAL))
            if "<" in v and _depth < 3:
                # markup assembled in a string, e.g. document.write("<script src=...>")
                from .markup import scan_html

                for cand in scan_html(v, _depth=_depth + 1).candidates:
                    found.add(HostCandidate(cand.raw, Source.JS_LITERAL))
    return found
