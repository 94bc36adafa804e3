"""Plot-ready data behind the standard result figures.

Nothing is drawn here; each table is a small CSV that any plotting tool can
read.
"""

from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from .contexts import spam_moving_average
from .parser import ChatEvent
from .profiles import FEATURE_NAMES, FeatureSnapshot
from .scoring import (
    PopulationTooSmall,
    ScorerConfig,
    kmeans_distances,
    normalize_scores,
    score_matrix,
    single_feature_label_rate,
    troll_feature_distances,
)

DEFAULT_KS = (1, 5, 50, 500)
DEFAULT_SINGLE_THRESHOLDS = (0.5,) * 10


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def report(
    snapshot: FeatureSnapshot,
    out_dir: str | Path,
    ks: Sequence[int] = DEFAULT_KS,
    threshold: float = 40.0,
    sample_size: int | None = None,
    seed: int = 0,
    single_thresholds: Sequence[float] = DEFAULT_SINGLE_THRESHOLDS,
    events: Sequence[ChatEvent] | None = None,
) -> dict:
    """Write the figure-data bundle into ``out_dir`` and return its summary.

    Method/k combinations that cannot run (too few users) are listed under
    ``"missing"`` instead of failing the whole bundle.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary: dict = {"n": len(snapshot), "threshold": threshold, "missing": [], "warnings": [], "files": []}
    matrix = snapshot.matrix

    hist_rows, pct_rows = [], []
    runs = [ScorerConfig(m, k, threshold) for m in ("dknn", "sknn") for k in ks]
    runs.append(ScorerConfig("kmeans", 1, threshold))
    for cfg in runs:
        k_out = "" if cfg.method == "kmeans" else cfg.k
        try:
            res = score_matrix(matrix, cfg, snapshot.usernames, sample_size=sample_size, seed=seed)
        except (PopulationTooSmall, ValueError) as exc:
            summary["missing"].append({"method": cfg.method, "k": k_out, "reason": str(exc)})
            continue
        hist = res.summary()["histogram"]
        hist_rows += [[cfg.method, k_out, b, c] for b, c in enumerate(hist)]
        pct_rows.append([cfg.method, k_out, res.n, res.trolls, res.troll_percent])
    _write_csv(out / "score_histograms.csv", ["method", "k", "bucket", "count"], hist_rows)
    _write_csv(out / "troll_percent.csv", ["method", "k", "n", "trolls", "troll_percent"], pct_rows)
    summary["files"] += ["score_histograms.csv", "troll_percent.csv"]

    single = [
        [name, thr, single_feature_label_rate(matrix, i, thr) if len(matrix) else 0.0]
        for i, (name, thr) in enumerate(zip(FEATURE_NAMES, single_thresholds))
    ]
    _write_csv(out / "single_feature_rates.csv", ["feature", "threshold", "percent_labeled"], single)
    summary["files"].append("single_feature_rates.csv")

    if len(matrix):
        centroid, raw = kmeans_distances(matrix)
        is_troll = normalize_scores(raw) > threshold
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dist, empty = troll_feature_distances(matrix, is_troll, centroid)
    else:
        dist, empty = np.zeros(len(FEATURE_NAMES)), True
    if empty:
        summary["warnings"].append("no trolls labelled by kmeans; per-feature distances are zero")
    _write_csv(out / "troll_feature_distance.csv", ["feature", "avg_distance"],
               [[n, float(d)] for n, d in zip(FEATURE_NAMES, dist)])
    summary["files"].append("troll_feature_distance.csv")

    if events is not None:
        starts, avg = spam_moving_average(events)
        _write_csv(out / "spam_moving_average.csv", ["period_start_ms", "spam_fraction"],
                   [[int(s), float(a)] for s, a in zip(starts, avg)])
        summary["files"].append("spam_moving_average.csv")
    else:
        summary["missing"].append({"figure": "spam_moving_average", "reason": "no chat log given"})

    with open(out / "report.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary
