"""Host canonicalization and pay-level-domain resolution.

A pay-level domain (PLD) is the public suffix of a host plus exactly one more
label, e.g. ``bar.co.uk`` for ``foo.bar.co.uk``. Suffix rules come from a file
in the Mozilla Public Suffix List format; a frozen snapshot ships with the
package so that aggregation is reproducible.
"""
from __future__ import annotations

import enum
import ipaddress
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable
from urllib.parse import urlsplit

PayLevelDomain = str

_SCHEME_RE = re.compile(r"^([a-zA-Z][a-zA-Z0-9+.\-]*):")
_LABEL_RE = re.compile(r"^[a-z0-9_](?:[a-z0-9_\-]*[a-z0-9_])?$")
# schemes whose authority component names a host we can attribute to a party
_NETWORK_SCHEMES = frozenset({"http", "https", "ftp", "ws", "wss"})


class DomainError(ValueError):
    """Raised when a host has no registrable part."""


class Source(str, enum.Enum):
    SCRIPT_SRC = "script_src"
    IFRAME_SRC = "iframe_src"
    LINK_REF = "link_ref"
    IMAGE_SRC = "image_src"
    JS_LITERAL = "js_literal"


@dataclass(frozen=True, order=True)
class HostCandidate:
    """A host referenced by a page and where the reference was found.

    ``raw`` holds the canonical host (see :func:`canonicalize_uri`), so two
    references to the same host from the same kind of element collapse.
    """

    raw: str
    source: Source

    def __post_init__(self):
        if not self.raw:
            raise ValueError("empty host candidate")
        object.__setattr__(self, "source", Source(self.source))

    def __str__(self):
        return f"{self.raw}/{self.source.value}"


def _canonical_host(host: str) -> str | None:
    host = host.strip().rstrip(".").lower()
    if not host:
        return None
    if not host.isascii():
        try:
            host = host.encode("idna").decode("ascii")
        except UnicodeError:
            return None
    try:
        ipaddress.ip_address(host.strip("[]"))
        return None
    except ValueError:
        pass
    labels = host.split(".")
    if len(labels) < 2 or not all(len(lb) <= 63 and _LABEL_RE.match(lb) for lb in labels):
        return None
    if labels[-1].isdigit():
        # dotted-quad variants the ipaddress module rejects, e.g. 010.1.1.1
        return None
    return host


def canonicalize_uri(raw: str) -> str | None:
    """Return the lowercase host of ``raw`` or None.

    Accepts absolute URIs with a network scheme, protocol-relative references
    (``//host/...``) and bare hosts followed by a path (``host/...``).
    Relative paths, non-network schemes, IP literals and dotless hosts give None.
    """
    if not isinstance(raw, str):
        return None
    s = raw.strip()
    if not s:
        return None
    m = _SCHEME_RE.match(s)
    if m and not s.startswith("//"):
        scheme = m.group(1).lower()
        rest = s[m.end():]
        if scheme in _NETWORK_SCHEMES:
            if not rest.startswith("//"):
                return None
            s = "http:" + rest
        elif rest.isdigit() or re.match(r"^\d+(?:[/?#]|$)", rest):
            # "host:8080/path" looks like a scheme to the regex
            s = "http://" + s
        else:
            return None
    elif s.startswith("//"):
        s = "http:" + s
    else:
        head = re.split(r"[/?#]", s, maxsplit=1)[0]
        if len(head) == len(s) or not s[len(head)] == "/":
            return None
        s = "http://" + s
    try:
        host = urlsplit(s).hostname
    except ValueError:
        return None
    if host is None:
        return None
    return _canonical_host(host)


class RuleKind(str, enum.Enum):
    NORMAL = "normal"
    WILDCARD = "wildcard"
    EXCEPTION = "exception"


class SuffixRuleSet:
    """Immutable set of public suffix rules.

    Rules are keyed by their dotted suffix (without ``*.`` or ``!``).
    """

    def __init__(self, rules: Iterable[tuple[str, RuleKind]]):
        normal, wildcard, exception = set(), set(), set()
        for suffix, kind in rules:
            kind = RuleKind(kind)
            suffix = suffix.lower()
            if kind is RuleKind.NORMAL:
                normal.add(suffix)
            elif kind is RuleKind.WILDCARD:
                wildcard.add(suffix)
            else:
                exception.add(suffix)
        for exc in exception:
            parent = exc.split(".", 1)[1] if "." in exc else ""
            if parent not in wildcard:
                raise ValueError(f"exception rule !{exc} has no covering wildcard *.{parent}")
        self._normal = frozenset(normal)
        self._wildcard = frozenset(wildcard)
        self._exception = frozenset(exception)
        self._tlds = frozenset(r for r in normal | wildcard if "." not in r)

    def __len__(self):
        return len(self._normal) + len(self._wildcard) + len(self._exception)

    @property
    def rules(self) -> frozenset[tuple[str, RuleKind]]:
        return frozenset(
            [(r, RuleKind.NORMAL) for r in self._normal]
            + [(r, RuleKind.WILDCARD) for r in self._wildcard]
            + [(r, RuleKind.EXCEPTION) for r in self._exception]
        )

    @classmethod
    def parse(cls, text: str, include_private: bool = False) -> "SuffixRuleSet":
        rules = []
        private = False
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("// ===BEGIN PRIVATE DOMAINS"):
                private = True
            if not line or line.startswith("//"):
                continue
            if private and not include_private:
                continue
            rule = line.split()[0]
            prefix = "!" if rule.startswith("!") else "*." if rule.startswith("*.") else ""
            body = rule[len(prefix):]
            if not body.isascii():
                try:
                    body = body.encode("idna").decode("ascii")
                except UnicodeError:
                    continue
            kind = {"!": RuleKind.EXCEPTION, "*.": RuleKind.WILDCARD, "": RuleKind.NORMAL}[prefix]
            rules.append((body, kind))
        return cls(rules)

    @classmethod
    def load(cls, path: str | Path | None = None, include_private: bool = False) -> "SuffixRuleSet":
        """Load a suffix list file; None loads the bundled snapshot."""
        if path is None:
            text = resources.files("trackscope.data").joinpath("public_suffix_list.dat").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        return cls.parse(text, include_private=include_private)

    def is_known_tld(self, label: str) -> bool:
        return label.lower() in self._tlds

    def public_suffix(self, host: str) -> str:
        """Public suffix of ``host`` by the longest matching rule.

        Exceptions beat wildcards; with no match the last label is the suffix.
        """
        labels = host.lower().split(".")
        n = len(labels)
        for i in range(n):
            if ".".join(labels[i:]) in self._exception:
                return ".".join(labels[i + 1:])
        best = 1
        for i in range(n):
            candidate = ".".join(labels[i:])
            if candidate in self._normal:
                best = max(best, n - i)
            if i > 0 and candidate in self._wildcard:
                best = max(best, n - i + 1)
        return ".".join(labels[n - best:])

    def resolve(self, host: str) -> PayLevelDomain:
        return resolve_pld(host, self)


def resolve_pld(host: str, rules: SuffixRuleSet) -> PayLevelDomain:
    """Registrable domain of ``host``: its public suffix plus one label."""
    host = host.strip().lower().rstrip(".")
    if not host.isascii():
        try:
            host = host.encode("idna").decode("ascii")
        except UnicodeError:
            raise DomainError(f"host {host!r} cannot be IDNA-encoded") from None
    labels = host.split(".")
    if not host or any(not lb for lb in labels):
        raise DomainError(f"malformed host {host!r}")
    suffix = rules.public_suffix(host)
    n_suffix = suffix.count(".") + 1
    if n_suffix >= len(labels):
        raise DomainError(f"{host!r} is a public suffix")
    return ".".join(labels[-(n_suffix + 1):])


@lru_cache(maxsize=4)
def default_rules(include_private: bool = False) -> SuffixRuleSet:
    return SuffixRuleSet.load(None, include_private=include_private)
