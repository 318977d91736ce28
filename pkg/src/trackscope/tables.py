"""Input tables consumed by the analyses: labels, categories, country data."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

LABEL_COLUMNS = ("pld", "company", "category", "country", "is_tracker")
CATEGORY_COLUMNS = ("pld", "category", "criticality")
INDICATOR_COLUMNS = ("democracy", "press_freedom", "english_pct", "ad_spend_pc", "ad_spend_ratio", "us_trade_pc")
CRITICALITY_LEVELS = ("highly_critical", "less_critical")

_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f", ""}


class TableError(ValueError):
    pass


def _check_header(path, fieldnames, expected):
    if fieldnames is None or tuple(f.strip() for f in fieldnames[: len(expected)]) != expected:
        raise TableError(f"{path}: expected header {','.join(expected)}, got {fieldnames}")


def _parse_bool(value: str, where: str) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise TableError(f"{where}: cannot read {value!r} as a boolean")


@dataclass(frozen=True)
class ThirdPartyLabel:
    pld: str
    company: str
    category: str
    country: str
    is_tracker: bool


class LabelTable:
    """Per-third-party metadata keyed by PLD."""

    def __init__(self, labels: Iterable[ThirdPartyLabel]):
        self._rows: dict[str, ThirdPartyLabel] = {}
        for lab in labels:
            if lab.pld in self._rows:
                raise TableError(f"duplicate label row for {lab.pld}")
            self._rows[lab.pld] = lab
        companies = defaultdict(list)
        for lab in self._rows.values():
            if lab.company:
                companies[lab.company].append(lab.pld)
        self._by_company = {c: sorted(p) for c, p in companies.items()}

    def __len__(self):
        return len(self._rows)

    def __contains__(self, pld):
        return pld in self._rows

    def __getitem__(self, pld) -> ThirdPartyLabel:
        return self._rows[pld]

    def get(self, pld, default=None):
        return self._rows.get(pld, default)

    def __iter__(self):
        return iter(sorted(self._rows.values(), key=lambda r: r.pld))

    def trackers(self) -> set[str]:
        return {p for p, lab in self._rows.items() if lab.is_tracker}

    def company_of(self, pld: str) -> str | None:
        lab = self._rows.get(pld)
        return lab.company if lab else None

    def plds_of(self, company: str) -> list[str]:
        return list(self._by_company.get(company, []))

    def companies(self, trackers_only: bool = True) -> list[str]:
        """Company names, restricted by default to companies owning a tracker."""
        return sorted(
            c for c, plds in self._by_company.items()
            if not trackers_only or any(self._rows[p].is_tracker for p in plds)
        )

    def tracker_plds_of(self, company: str) -> list[str]:
        return [p for p in self._by_company.get(company, []) if self._rows[p].is_tracker]

    @classmethod
    def load(cls, path: str | Path) -> "LabelTable":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            _check_header(path, reader.fieldnames, LABEL_COLUMNS)
            for n, row in enumerate(reader, 2):
                pld = row["pld"].strip().lower().rstrip(".")
                if not pld:
                    raise TableError(f"{path}:{n}: empty pld")
                rows.append(ThirdPartyLabel(
                    pld=pld,
                    company=row["company"].strip(),
                    category=row["category"].strip(),
                    country=row["country"].strip().upper(),
                    is_tracker=_parse_bool(row["is_tracker"], f"{path}:{n}"),
                ))
        return cls(rows)

    def write(self, path: str | Path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LABEL_COLUMNS)
            for lab in self:
                w.writerow([lab.pld, lab.company, lab.category, lab.country, "true" if lab.is_tracker else "false"])


@dataclass(frozen=True)
class CategoryRow:
    pld: str
    category: str
    criticality: str


class CategoryMap:
    """Site PLD -> content category, each category flagged by privacy criticality."""

    def __init__(self, rows: Iterable[CategoryRow]):
        self.rows = sorted(set(rows), key=lambda r: (r.category, r.pld))
        self.criticality: dict[str, str] = {}
        self._members: dict[str, set[str]] = defaultdict(set)
        for r in self.rows:
            if r.criticality not in CRITICALITY_LEVELS:
                raise TableError(f"unknown criticality {r.criticality!r} for {r.pld}")
            prev = self.criticality.setdefault(r.category, r.criticality)
            if prev != r.criticality:
                raise TableError(f"category {r.category!r} is both {prev} and {r.criticality}")
            self._members[r.category].add(r.pld)

    def categories(self, criticality: str | None = None) -> list[str]:
        return sorted(c for c, lvl in self.criticality.items() if criticality in (None, lvl))

    def sites(self, category: str) -> set[str]:
        return set(self._members.get(category, ()))

    def sites_by_criticality(self) -> tuple[set[str], set[str], set[str]]:
        """(highly critical, less critical, ambiguous) site sets.

        A site listed under categories of both levels is ambiguous and left
        out of the first two sets.
        """
        high, low = set(), set()
        for cat, lvl in self.criticality.items():
            (high if lvl == "highly_critical" else low).update(self._members[cat])
        both = high & low
        return high - both, low - both, both

    @classmethod
    def load(cls, path: str | Path) -> "CategoryMap":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            _check_header(path, reader.fieldnames, CATEGORY_COLUMNS)
            for row in reader:
                rows.append(CategoryRow(
                    row["pld"].strip().lower().rstrip("."),
                    row["category"].strip(),
                    row["criticality"].strip().lower(),
                ))
        return cls(rows)


def load_country_indicators(path: str | Path) -> dict[str, dict[str, float]]:
    """ccTLD -> indicator values. Press freedom is expected already inverted (high = free)."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(path, reader.fieldnames, ("tld",) + INDICATOR_COLUMNS)
        for n, row in enumerate(reader, 2):
            tld = row["tld"].strip().lower().lstrip(".")
            try:
                values = {c: float(row[c]) for c in INDICATOR_COLUMNS}
            except (TypeError, ValueError) as exc:
                raise TableError(f"{path}:{n}: {exc}") from None
            if not all(math.isfinite(v) for v in values.values()):
                raise TableError(f"{path}:{n}: non-finite indicator")
            out[tld] = values
    return out


def load_country_tlds(path: str | Path | None = None) -> dict[str, str]:
    """ccTLD -> country name; None reads the bundled table of 50 country TLDs."""
    if path is None:
        text = resources.files("trackscope.data").joinpath("cctlds.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    table = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        tld, country = line.split("\t")
        table[tld.strip().lower()] = country.strip()
    return table
