"""Active engagement: visible actions per impression, at three granularities.

For a tweet, AE_action = action_count / impressions (absent when the tweet
has no impressions).  User- and domain-level AE pools totals first
(sum of actions / sum of impressions) rather than averaging per-tweet ratios;
the mean of ratios is exported alongside for comparison.  AE can legitimately
exceed 1 on real data (impressions and actions are measured at different
times); such values are flagged, never clamped.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import EchoauditError
from .ingest import TweetRecord

log = logging.getLogger(__name__)

ACTIONS = ("retweet", "reply", "like", "quote")

_ACTION_FIELD = {"retweet": "retweets", "reply": "replies", "like": "likes", "quote": "quotes"}

GRANULARITIES = ("tweet", "user", "domain")


def action_count(rec: TweetRecord, action: str) -> int:
    return getattr(rec, _ACTION_FIELD[action])


def tweet_ae(rec: TweetRecord) -> Optional[dict[str, float]]:
    """Per-action AE ratios for one tweet; None when impressions are zero."""
    if rec.impressions == 0:
        return None
    return {a: action_count(rec, a) / rec.impressions for a in ACTIONS}


@dataclass(frozen=True)
class EngagementRecord:
    subject_id: str
    granularity: str
    impressions: float               # integer unless fractional attribution
    counts: dict[str, float]         # per action
    ae: dict[str, float]             # pooled: counts / impressions
    mean_ae: dict[str, Optional[float]]  # mean of per-tweet ratios
    n_tweets: int


def aggregate_ae(
    records: Iterable[TweetRecord],
    granularity: str,
    key_fn: Callable[[TweetRecord], object],
    fractional: bool = False,
    drop_zero_impressions: bool = False,
    stats: Optional[Counter] = None,
) -> list[EngagementRecord]:
    """Pool impressions and actions per subject and form AE ratios.

    ``key_fn`` maps a record to a subject key, a list of keys (a tweet that
    names several domains contributes to each), or None to skip.  With
    ``fractional=True`` a multi-key record splits its counts evenly instead
    of contributing fully to every key.  Subjects whose pooled impressions
    are zero are omitted and counted.  Order-independent by construction.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    if stats is None:
        stats = Counter()

    # Per-key contribution lists, reduced with exact summation at the end,
    # so the result is independent of record order (and of any partitioning
    # a parallel caller might have used).
    impressions: dict[str, list[float]] = defaultdict(list)
    counts: dict[str, dict[str, list[float]]] = defaultdict(
        lambda: {a: [] for a in ACTIONS}
    )
    ratio_sums: dict[str, dict[str, list[float]]] = defaultdict(
        lambda: {a: [] for a in ACTIONS}
    )
    ratio_n: dict[str, int] = defaultdict(int)
    n_tweets: dict[str, int] = defaultdict(int)

    for rec in records:
        if drop_zero_impressions and rec.impressions == 0:
            stats["zero_impression_tweets_dropped"] += 1
            continue
        keys = key_fn(rec)
        if keys is None:
            stats["unkeyed_records"] += 1
            continue
        if isinstance(keys, str):
            keys = [keys]
        else:
            keys = list(keys)
            if not keys:
                stats["unkeyed_records"] += 1
                continue
        weight = (1.0 / len(keys)) if fractional else 1.0
        ratios = tweet_ae(rec)
        for key in keys:
            impressions[key].append(weight * rec.impressions)
            n_tweets[key] += 1
            for a in ACTIONS:
                counts[key][a].append(weight * action_count(rec, a))
            if ratios is not None:
                ratio_n[key] += 1
                for a in ACTIONS:
                    ratio_sums[key][a].append(ratios[a])

    out: list[EngagementRecord] = []
    for key in sorted(impressions):
        imp = math.fsum(impressions[key])
        if imp == 0:
            stats["zero_impression_subjects_omitted"] += 1
            continue
        total = {a: math.fsum(counts[key][a]) for a in ACTIONS}
        ae = {a: total[a] / imp for a in ACTIONS}
        for a in ACTIONS:
            if ae[a] > 1.0:
                stats[f"ae_over_unity_{a}"] += 1
        mean_ae: dict[str, Optional[float]] = {
            a: (math.fsum(ratio_sums[key][a]) / ratio_n[key] if ratio_n[key] else None)
            for a in ACTIONS
        }
        out.append(
            EngagementRecord(
                subject_id=key,
                granularity=granularity,
                impressions=imp,
                counts=total,
                ae=ae,
                mean_ae=mean_ae,
                n_tweets=n_tweets[key],
            )
        )
    return out


def tweet_level_mean_ae(records: Iterable[TweetRecord]) -> dict[str, tuple[float, int]]:
    """Mean per-tweet AE including zero-action tweets, per action.

    Tweets without impressions carry no ratio and are excluded from the mean.
    Returns ``action -> (mean, n)``.
    """
    sums = {a: 0.0 for a in ACTIONS}
    n = 0
    for rec in records:
        ratios = tweet_ae(rec)
        if ratios is None:
            continue
        n += 1
        for a in ACTIONS:
            sums[a] += ratios[a]
    if n == 0:
        return {a: (math.nan, 0) for a in ACTIONS}
    return {a: (sums[a] / n, n) for a in ACTIONS}


@dataclass(frozen=True)
class CorrelationReport:
    action: str
    n: int
    pearson_r: float
    filter: str


def log_pearson(pairs: Sequence[tuple[float, float]]) -> float:
    """Pearson correlation of (log10 x, log10 y) over strictly positive pairs."""
    if len(pairs) < 2:
        raise EchoauditError(f"correlation needs at least 2 points, got {len(pairs)}")
    arr = np.asarray(pairs, dtype=np.float64)
    if (arr <= 0).any():
        raise EchoauditError("log-scale correlation requires strictly positive values")
    x = np.log10(arr[:, 0])
    y = np.log10(arr[:, 1])
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(xd @ xd) * float(yd @ yd))
    if denom == 0.0:
        raise EchoauditError("undefined correlation: zero variance in a coordinate")
    return float(xd @ yd) / denom


def followers_ae_pairs(
    records: Iterable[TweetRecord], action: str
) -> list[tuple[float, float]]:
    """(followers, AE) per tweet, restricted to positive followers and a
    nonzero count of the action under study (log scales require positivity)."""
    pairs = []
    for rec in records:
        if rec.impressions == 0 or rec.author_followers <= 0:
            continue
        count = action_count(rec, action)
        if count <= 0:
            continue
        pairs.append((float(rec.author_followers), count / rec.impressions))
    return pairs


def correlation_report(records: Sequence[TweetRecord], action: str) -> CorrelationReport:
    pairs = followers_ae_pairs(records, action)
    return CorrelationReport(
        action=action,
        n=len(pairs),
        pearson_r=log_pearson(pairs),
        filter=f"original tweets with {action} count > 0 and followers > 0",
    )


@dataclass(frozen=True)
class GroupSummary:
    group: str
    action: str
    n: int
    mean: float
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float


def group_ae(
    records: Sequence[EngagementRecord],
    groups: Mapping[str, str],
    stats: Optional[Counter] = None,
) -> list[GroupSummary]:
    """Boxplot-ready five-number summaries of AE per (group, action).

    Whiskers follow the 1.5*IQR rule: the extreme data points within
    ``[q1 - 1.5 IQR, q3 + 1.5 IQR]``.  Subjects without a group label are
    skipped and counted; groups that end up empty are omitted with a warning.
    """
    if stats is None:
        stats = Counter()
    by_group: dict[str, list[EngagementRecord]] = defaultdict(list)
    for rec in records:
        label = groups.get(rec.subject_id)
        if label is None:
            stats["unlabelled_subjects"] += 1
            continue
        by_group[label].append(rec)

    missing = set(groups.values()) - set(by_group)
    for label in sorted(missing):
        log.warning("group %r has no engagement records; omitted", label)

    out: list[GroupSummary] = []
    for label in sorted(by_group):
        for action in ACTIONS:
            values = np.asarray([r.ae[action] for r in by_group[label]])
            q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75])
            iqr = q3 - q1
            inside = values[(values >= q1 - 1.5 * iqr) & (values <= q3 + 1.5 * iqr)]
            out.append(
                GroupSummary(
                    group=label,
                    action=action,
                    n=int(values.size),
                    mean=float(values.mean()),
                    q1=float(q1),
                    median=float(median),
                    q3=float(q3),
                    whisker_lo=float(inside.min()),
                    whisker_hi=float(inside.max()),
                )
            )
    return out


def write_engagement(records: Sequence[EngagementRecord], path: str | Path) -> None:
    """Long-form CSV: one row per subject and action."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("subject,granularity,action,impressions,count,ae,mean_ae\n")
        for rec in records:
            for a in ACTIONS:
                mean = rec.mean_ae[a]
                mean_text = "" if mean is None else repr(mean)
                fh.write(
                    f"{rec.subject_id},{rec.granularity},{a},{rec.impressions!r},"
                    f"{rec.counts[a]!r},{rec.ae[a]!r},{mean_text}\n"
                )


def write_correlations(reports: Sequence[CorrelationReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("action,n,pearson_r,filter\n")
        for rep in reports:
            fh.write(f"{rep.action},{rep.n},{rep.pearson_r!r},{rep.filter}\n")


def write_group_summaries(summaries: Sequence[GroupSummary], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("group,action,n,mean,q1,median,q3,whisker_lo,whisker_hi\n")
        for s in summaries:
            fh.write(
                f"{s.group},{s.action},{s.n},{s.mean!r},{s.q1!r},{s.median!r},"
                f"{s.q3!r},{s.whisker_lo!r},{s.whisker_hi!r}\n"
            )
