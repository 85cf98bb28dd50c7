"""Plot-ready analysis artifacts: histograms, density grids, echo diagnostics.

Everything here is a pure transformation of scores, graphs and engagement
records into binned count data plus JSON metadata; no images are rendered.
All outputs are deterministic given inputs and flags, and every grid or
histogram conserves mass (counted-in plus skipped equals the population).
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .dip import dip_statistic
from .engagement import ACTIONS, action_count
from .graph import RetweetGraph
from .ideology import IdeologyScores
from .ingest import TweetRecord

log = logging.getLogger(__name__)

DEFAULT_GRID_BINS = 100
DEFAULT_HIST_BINS = 50
DEFAULT_TOP_INFLUENCERS = 10
DEFAULT_MIN_SHARES = 2

__all__ = [
    "DensityGrid",
    "HistogramSeries",
    "dip_statistic",
    "dip_threshold",
    "neighbor_opinion_grid",
    "ideology_histograms",
    "leaning_ideology_distributions",
    "ae_followers_density",
    "write_grid",
    "write_histogram",
]


@dataclass(frozen=True)
class DensityGrid:
    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray          # int64, shape (len(x_edges)-1, len(y_edges)-1)
    x_label: str
    y_label: str
    meta: dict = field(default_factory=dict)

    @property
    def log_density(self) -> np.ndarray:
        """log10(count + 1): finite everywhere, monotone in the raw counts."""
        return np.log10(self.counts.astype(np.float64) + 1.0)

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class HistogramSeries:
    bin_edges: np.ndarray
    series: dict[str, np.ndarray]       # name -> int64 counts
    normalization: str = "count"        # or "density"
    meta: dict = field(default_factory=dict)

    def values(self, name: str) -> np.ndarray:
        counts = self.series[name].astype(np.float64)
        if self.normalization == "count":
            return counts
        widths = np.diff(self.bin_edges)
        total = counts.sum()
        if total == 0:
            return counts
        return counts / (total * widths)


def dip_threshold(n: int, alpha: float = 0.01) -> float:
    """Critical dip value for rejecting unimodality at the given level.

    Values come from the bundled Monte Carlo table (uniform null); between
    grid sizes the sqrt(n)-scaled threshold is interpolated in log n, and
    sizes outside the grid use sqrt(n) scaling from the nearest entry.
    """
    text = (
        resources.files("echoaudit.data")
        .joinpath("dip_thresholds.json")
        .read_text(encoding="utf-8")
    )
    table = json.loads(text)
    key = str(alpha)
    if key not in {str(a) for a in table["alphas"]}:
        raise ValueError(f"no thresholds for alpha={alpha}; have {table['alphas']}")
    grid = sorted(int(k) for k in table["thresholds"])
    scaled = {m: table["thresholds"][str(m)][key] * math.sqrt(m) for m in grid}
    if n <= grid[0]:
        return scaled[grid[0]] / math.sqrt(n)
    if n >= grid[-1]:
        return scaled[grid[-1]] / math.sqrt(n)
    for a, b in zip(grid, grid[1:]):
        if a <= n <= b:
            frac = (math.log(n) - math.log(a)) / (math.log(b) - math.log(a))
            value = scaled[a] + frac * (scaled[b] - scaled[a])
            return value / math.sqrt(n)
    raise AssertionError("unreachable")


def _edges(lo: float, hi: float, bins: int) -> np.ndarray:
    if not (hi > lo):
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


def _bin_index(edges: np.ndarray, value: float) -> int:
    """Index of the bin containing value; the top edge closes the last bin."""
    idx = int(np.searchsorted(edges, value, side="right")) - 1
    return min(max(idx, 0), len(edges) - 2)


def neighbor_opinion_grid(
    scores: IdeologyScores,
    g: RetweetGraph,
    bins: int = DEFAULT_GRID_BINS,
    use_in_neighbors: bool = False,
    stats: Optional[Counter] = None,
) -> DensityGrid:
    """Own score vs edge-weighted mean score of retweeted accounts.

    One point per scored non-influencer user with at least one scored
    neighbor; neighbors are out-neighbors by default (the accounts the user
    retweeted — the endorsement direction), switchable to in-neighbors.
    Binned on [-1, 1]^2.  The share of mass in the two sign-agreeing
    quadrants lands in ``meta["diagonal_mass_share"]``.
    """
    if stats is None:
        stats = Counter()
    neighbor_score = dict(scores.user_scores)
    neighbor_score.update(scores.influencer_scores)

    x_edges = _edges(-1.0, 1.0, bins)
    y_edges = _edges(-1.0, 1.0, bins)
    counts = np.zeros((bins, bins), dtype=np.int64)

    influencer_ids = set(scores.influencer_scores)
    for uid, own in scores.user_scores.items():
        if uid in influencer_ids:
            stats["influencers_excluded"] += 1
            continue
        try:
            node = g.index_of(uid)
        except KeyError:
            stats["scored_user_not_in_graph"] += 1
            continue
        if use_in_neighbors:
            neigh, weights = g.in_edges(node)
        else:
            neigh, weights = g.out_edges(node)
        total_w = 0.0
        acc = 0.0
        for nb, w in zip(neigh.tolist(), weights.tolist()):
            ns = neighbor_score.get(g.node_ids[nb])
            if ns is None:
                continue
            acc += w * ns
            total_w += w
        if total_w == 0.0:
            stats["users_without_scored_neighbors"] += 1
            continue
        mean_neighbor = acc / total_w
        counts[_bin_index(x_edges, own), _bin_index(y_edges, mean_neighbor)] += 1
        stats["users_binned"] += 1

    centers_x = (x_edges[:-1] + x_edges[1:]) / 2.0
    centers_y = (y_edges[:-1] + y_edges[1:]) / 2.0
    same_sign = np.add.outer(np.sign(centers_x), np.sign(centers_y))
    diag_mass = int(counts[np.abs(same_sign) == 2].sum())
    total = int(counts.sum())
    share = diag_mass / total if total else math.nan

    return DensityGrid(
        x_edges=x_edges,
        y_edges=y_edges,
        counts=counts,
        x_label="user_score",
        y_label="mean_neighbor_score",
        meta={
            "diagonal_mass_share": share,
            "neighbor_direction": "in" if use_in_neighbors else "out",
            "skipped": {k: stats[k] for k in sorted(stats) if k != "users_binned"},
        },
    )


def ideology_histograms(
    scores: IdeologyScores,
    bins: int = DEFAULT_HIST_BINS,
    g: Optional[RetweetGraph] = None,
    top_k: int = DEFAULT_TOP_INFLUENCERS,
    normalization: str = "count",
) -> HistogramSeries:
    """User and influencer score histograms on shared [-1, 1] edges.

    When a graph is supplied, per-influencer retweeter-score histograms are
    added for the ``top_k`` influencers by unique in-degree, as series named
    ``retweeters:<influencer id>``.  The user series' dip statistic is
    recorded in the metadata for the bimodality check.
    """
    edges = _edges(-1.0, 1.0, bins)
    user_vals = np.asarray(sorted(scores.user_scores.values()))
    infl_vals = np.asarray(sorted(scores.influencer_scores.values()))
    series = {
        "users": np.histogram(user_vals, bins=edges)[0].astype(np.int64),
        "influencers": np.histogram(infl_vals, bins=edges)[0].astype(np.int64),
    }
    meta = {
        "n_users": int(user_vals.size),
        "n_influencers": int(infl_vals.size),
        "user_dip": dip_statistic(user_vals) if user_vals.size >= 2 else 0.0,
    }

    if g is not None and top_k > 0:
        ranked = sorted(
            (cid for cid in scores.influencer_scores if cid in g),
            key=lambda cid: (-int(g.unique_in_degree[g.index_of(cid)]), cid),
        )
        for cid in ranked[:top_k]:
            sources, _ = g.in_edges(g.index_of(cid))
            vals = [
                scores.user_scores[g.node_ids[s]]
                for s in sources.tolist()
                if g.node_ids[s] in scores.user_scores
            ]
            series[f"retweeters:{cid}"] = np.histogram(
                np.asarray(vals), bins=edges
            )[0].astype(np.int64)

    return HistogramSeries(bin_edges=edges, series=series,
                           normalization=normalization, meta=meta)


def leaning_ideology_distributions(
    scores: IdeologyScores,
    class_counts: Mapping[str, Mapping[str, int]],
    min_shares: int = DEFAULT_MIN_SHARES,
    bins: int = DEFAULT_HIST_BINS,
) -> dict[str, HistogramSeries]:
    """Score histograms per leaning class of repeatedly shared domains.

    An account joins a class when it shared that class of domains at least
    ``min_shares`` times; accounts may appear in several classes.  Users and
    influencers form separate series on shared edges.
    """
    edges = _edges(-1.0, 1.0, bins)
    out: dict[str, HistogramSeries] = {}
    members: dict[str, tuple[list[float], list[float]]] = {}
    for account, counts in class_counts.items():
        for label, n in counts.items():
            if n < min_shares:
                continue
            users, infl = members.setdefault(label, ([], []))
            if account in scores.influencer_scores:
                infl.append(scores.influencer_scores[account])
            elif account in scores.user_scores:
                users.append(scores.user_scores[account])
    for label in sorted(members):
        users, infl = members[label]
        out[label] = HistogramSeries(
            bin_edges=edges,
            series={
                "users": np.histogram(np.asarray(sorted(users)), bins=edges)[0].astype(np.int64),
                "influencers": np.histogram(np.asarray(sorted(infl)), bins=edges)[0].astype(np.int64),
            },
            meta={
                "leaning_class": label,
                "min_shares": min_shares,
                "n_users": len(users),
                "n_influencers": len(infl),
                "user_median": float(np.median(users)) if users else math.nan,
            },
        )
    return out


def ae_followers_density(
    records: Sequence[TweetRecord],
    bins: int = DEFAULT_GRID_BINS,
    stats: Optional[Counter] = None,
) -> dict[str, DensityGrid]:
    """Per-action grids over (log10 followers, log10 AE) for original tweets.

    Log axes need positive values, so only tweets with followers > 0,
    impressions > 0 and a nonzero count of the action under study enter the
    grid for that action; exclusions are counted per reason.
    """
    if stats is None:
        stats = Counter()
    out: dict[str, DensityGrid] = {}
    for action in ACTIONS:
        xs: list[float] = []
        ys: list[float] = []
        for rec in records:
            if rec.impressions == 0:
                stats[f"{action}:zero_impressions"] += 1
                continue
            if rec.author_followers <= 0:
                stats[f"{action}:zero_followers"] += 1
                continue
            count = action_count(rec, action)
            if count <= 0:
                stats[f"{action}:zero_actions"] += 1
                continue
            xs.append(math.log10(rec.author_followers))
            ys.append(math.log10(count / rec.impressions))
        if xs:
            x_edges = _edges(min(xs), max(xs), bins)
            y_edges = _edges(min(ys), max(ys), bins)
            counts, _, _ = np.histogram2d(xs, ys, bins=(x_edges, y_edges))
        else:
            x_edges = _edges(0.0, 1.0, bins)
            y_edges = _edges(0.0, 1.0, bins)
            counts = np.zeros((bins, bins))
        out[action] = DensityGrid(
            x_edges=x_edges,
            y_edges=y_edges,
            counts=counts.astype(np.int64),
            x_label="log10_followers",
            y_label=f"log10_ae_{action}",
            meta={
                "action": action,
                "n_tweets": len(xs),
                "skipped": {
                    k.split(":", 1)[1]: stats[k]
                    for k in sorted(stats)
                    if k.startswith(f"{action}:")
                },
            },
        )
    return out


def write_grid(grid: DensityGrid, csv_path: str | Path, sidecar_path: str | Path) -> None:
    """Long-form CSV ``x_bin,y_bin,count,log_density`` plus a JSON sidecar."""
    log_density = grid.log_density
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x_bin,y_bin,count,log_density\n")
        for i in range(grid.counts.shape[0]):
            for j in range(grid.counts.shape[1]):
                fh.write(
                    f"{i},{j},{int(grid.counts[i, j])},{float(log_density[i, j])!r}\n"
                )
    sidecar = {
        "x_label": grid.x_label,
        "y_label": grid.y_label,
        "x_edges": grid.x_edges.tolist(),
        "y_edges": grid.y_edges.tolist(),
        "total_count": grid.total(),
        "meta": grid.meta,
    }
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_histogram(hist: HistogramSeries, path: str | Path) -> None:
    """CSV ``bin_left,bin_right,series,count`` with series in sorted order."""
    edges = hist.bin_edges
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("bin_left,bin_right,series,count\n")
        for name in sorted(hist.series):
            counts = hist.series[name]
            for b in range(len(edges) - 1):
                fh.write(f"{edges[b]!r},{edges[b + 1]!r},{name},{int(counts[b])}\n")
