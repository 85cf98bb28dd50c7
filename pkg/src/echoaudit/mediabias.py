"""Domain leaning/reliability table and per-user leaning from shared URLs.

Leaning labels map to fixed numeric scores:

    ExtremeLeft -1.0, Left -0.66, LeftCenter -0.33, LeastBiased 0.0,
    RightCenter 0.33, Right 0.66, ExtremeRight 1.0

Reliability is an orthogonal attribute (reliable / questionable /
conspiracy_pseudoscience); questionable and conspiracy domains may carry no
leaning label at all.  URL-to-domain matching is exact on the registrable
domain, resolved against a bundled public-suffix snapshot (no network calls,
no fuzzy matching).
"""

from __future__ import annotations

import csv
import logging
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional
from urllib.parse import urlsplit

from .errors import InputError
from .ingest import TweetRecord

log = logging.getLogger(__name__)

LEANING_SCORES: dict[str, float] = {
    "ExtremeLeft": -1.0,
    "Left": -0.66,
    "LeftCenter": -0.33,
    "LeastBiased": 0.0,
    "RightCenter": 0.33,
    "Right": 0.66,
    "ExtremeRight": 1.0,
}

LEANING_ORDER = tuple(LEANING_SCORES)  # left to right

RELIABILITY_CLASSES = ("reliable", "questionable", "conspiracy_pseudoscience")

_NORM = re.compile(r"[^a-z]+")


def _canon_leaning(label: str) -> Optional[str]:
    key = _NORM.sub("", label.lower())
    for canonical in LEANING_SCORES:
        if key == canonical.lower():
            return canonical
    return None


def _canon_reliability(value: str) -> Optional[str]:
    key = re.sub(r"[\s\-]+", "_", value.strip().lower())
    return key if key in RELIABILITY_CLASSES else None


@dataclass(frozen=True)
class DomainProfile:
    domain: str
    leaning_label: Optional[str]
    leaning_score: Optional[float]
    reliability: str


@dataclass(frozen=True)
class UserLeaning:
    user_id: str
    n_urls: int
    score: Optional[float]


class PublicSuffixes:
    """Registrable-domain resolution against a public-suffix snapshot.

    Implements the standard rule semantics: longest matching rule wins,
    ``*.``-prefixed rules match one extra label, ``!``-prefixed exceptions
    shorten the suffix by one label, and an implicit ``*`` rule makes any
    unknown top-level label a suffix on its own.
    """

    def __init__(self, rules: Iterable[str]):
        self.exact: set[str] = set()
        self.wildcard: set[str] = set()
        self.exception: set[str] = set()
        for rule in rules:
            rule = rule.strip().lower()
            if not rule or rule.startswith("//"):
                continue
            if rule.startswith("!"):
                self.exception.add(rule[1:])
            elif rule.startswith("*."):
                self.wildcard.add(rule[2:])
            else:
                self.exact.add(rule)

    @classmethod
    def bundled(cls) -> "PublicSuffixes":
        text = (
            resources.files("echoaudit.data")
            .joinpath("public_suffix_snapshot.dat")
            .read_text(encoding="utf-8")
        )
        return cls(text.splitlines())

    def suffix_length(self, labels: list[str]) -> int:
        """Number of trailing labels forming the public suffix."""
        best = 1  # implicit "*" rule
        for take in range(1, len(labels) + 1):
            candidate = ".".join(labels[-take:])
            if candidate in self.exception:
                return take - 1
            if candidate in self.exact and take > best:
                best = take
            if take >= 2 and ".".join(labels[-(take - 1):]) in self.wildcard:
                if take > best:
                    best = take
        return best

    def registrable_domain(self, host: str) -> Optional[str]:
        host = host.strip(".").lower()
        if not host or re.fullmatch(r"[0-9.]+", host) or ":" in host:
            return None  # IP literals have no registrable domain
        labels = host.split(".")
        if any(not lab or not re.fullmatch(r"[a-z0-9-]+", lab) for lab in labels):
            return None
        take = self.suffix_length(labels)
        if len(labels) <= take:
            return None  # the host *is* a public suffix
        return ".".join(labels[-(take + 1):])


_bundled_suffixes: Optional[PublicSuffixes] = None


def _suffixes() -> PublicSuffixes:
    global _bundled_suffixes
    if _bundled_suffixes is None:
        _bundled_suffixes = PublicSuffixes.bundled()
    return _bundled_suffixes


def extract_domain(url: str, suffixes: Optional[PublicSuffixes] = None) -> Optional[str]:
    """Registrable domain of an absolute URL, or None when unresolvable.

    Strips scheme, credentials, port, path and query; ``www.`` collapses with
    every other subdomain.  Total function: malformed input returns None.
    """
    if not isinstance(url, str) or not url.strip():
        return None
    text = url.strip()
    if "://" not in text:
        if text.startswith("//"):
            text = "http:" + text
        elif " " in text:
            return None
        else:
            text = "http://" + text
    try:
        host = urlsplit(text).hostname
    except ValueError:
        return None
    if not host:
        return None
    return (suffixes or _suffixes()).registrable_domain(host)


def load_domain_table(path: str | Path) -> dict[str, DomainProfile]:
    """Load the ``domain,leaning_label,reliability`` CSV.

    Domains are lowercased and deduplicated (last row wins, with a warning);
    rows with an unknown label or reliability are skipped and logged.  An
    empty leaning label is allowed and yields a profile without a score.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"domain table not found: {path}")
    table: dict[str, DomainProfile] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"domain", "leaning_label", "reliability"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise InputError(
                f"domain table must have columns {sorted(required)}; "
                f"got {reader.fieldnames}"
            )
        for row_no, row in enumerate(reader, start=2):
            domain = (row["domain"] or "").strip().lower()
            if not domain:
                log.warning("%s:%d: empty domain; row skipped", path, row_no)
                continue
            reliability = _canon_reliability(row["reliability"] or "")
            if reliability is None:
                log.warning(
                    "%s:%d: unknown reliability %r; row skipped",
                    path, row_no, row["reliability"],
                )
                continue
            raw_label = (row["leaning_label"] or "").strip()
            label: Optional[str] = None
            if raw_label:
                label = _canon_leaning(raw_label)
                if label is None:
                    log.warning(
                        "%s:%d: unknown leaning label %r; row skipped",
                        path, row_no, raw_label,
                    )
                    continue
            if domain in table:
                log.warning("duplicate domain %r; keeping the last row", domain)
            table[domain] = DomainProfile(
                domain=domain,
                leaning_label=label,
                leaning_score=None if label is None else LEANING_SCORES[label],
                reliability=reliability,
            )
    return table


def matched_profiles(
    record: TweetRecord,
    table: Mapping[str, DomainProfile],
    suffixes: Optional[PublicSuffixes] = None,
) -> list[DomainProfile]:
    """Profiles for every URL occurrence in a record (with multiplicity)."""
    out = []
    for url in record.urls:
        domain = extract_domain(url, suffixes)
        if domain is not None and domain in table:
            out.append(table[domain])
    return out


def user_leaning(
    user_id: str,
    records: Iterable[TweetRecord],
    table: Mapping[str, DomainProfile],
    include_unreliable_leanings: bool = True,
    unmatched: Optional[Counter] = None,
) -> UserLeaning:
    """Mean leaning score over one user's matched URL occurrences.

    Every shared URL counts with multiplicity.  URLs that match no table row
    or whose profile carries no leaning score are ignored and counted.  With
    ``include_unreliable_leanings=False`` only reliable outlets contribute.
    """
    if unmatched is None:
        unmatched = Counter()
    total = 0.0
    n = 0
    for rec in records:
        for url in rec.urls:
            domain = extract_domain(url)
            profile = table.get(domain) if domain is not None else None
            if profile is None:
                unmatched["url_not_in_table"] += 1
                continue
            if profile.leaning_score is None:
                unmatched["no_leaning_label"] += 1
                continue
            if not include_unreliable_leanings and profile.reliability != "reliable":
                unmatched["unreliable_excluded"] += 1
                continue
            total += profile.leaning_score
            n += 1
    return UserLeaning(user_id=user_id, n_urls=n, score=(total / n if n else None))


def user_class_counts(
    records_by_user: Mapping[str, Iterable[TweetRecord]],
    table: Mapping[str, DomainProfile],
) -> dict[str, Counter]:
    """Per-user counts of URL shares by leaning class (with multiplicity)."""
    out: dict[str, Counter] = {}
    for user_id, records in records_by_user.items():
        counts: Counter = Counter()
        for rec in records:
            for profile in matched_profiles(rec, table):
                if profile.leaning_label is not None:
                    counts[profile.leaning_label] += 1
        if counts:
            out[user_id] = counts
    return out


def write_user_leanings(leanings: Iterable[UserLeaning], path: str | Path) -> None:
    """CSV export ``user_id,n_urls,score`` sorted by user id; blank = no score."""
    rows = sorted(leanings, key=lambda ul: ul.user_id)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("user_id,n_urls,score\n")
        for ul in rows:
            score = "" if ul.score is None else repr(ul.score)
            fh.write(f"{ul.user_id},{ul.n_urls},{score}\n")
