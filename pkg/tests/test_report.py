import csv
from collections import defaultdict

import numpy as np

from trolldetect.profiles import FeatureSnapshot
from trolldetect.report import report


def _snapshot(matrix):
    n = len(matrix)
    names = tuple(f"u{i:03d}" for i in range(n))
    zeros = tuple([0] * n)
    return FeatureSnapshot(names, np.asarray(matrix, float), zeros, zeros, zeros)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_histograms_sum_to_population(tmp_path):
    m = np.random.default_rng(0).random((80, 10))
    summary = report(_snapshot(m), tmp_path, ks=(1, 5, 50))
    totals = defaultdict(int)
    for row in _read(tmp_path / "score_histograms.csv"):
        totals[(row["method"], row["k"])] += int(row["count"])
    assert len(totals) == 7
    assert set(totals.values()) == {80}
    assert summary["n"] == 80


def test_missing_k_is_reported(tmp_path):
    m = np.random.default_rng(1).random((60, 10))
    summary = report(_snapshot(m), tmp_path, ks=(1, 500))
    missing = {(x["method"], x["k"]) for x in summary["missing"] if "method" in x}
    assert missing == {("dknn", 500), ("sknn", 500)}
    pct = {(r["method"], r["k"]) for r in _read(tmp_path / "troll_percent.csv")}
    assert pct == {("dknn", "1"), ("sknn", "1"), ("kmeans", "")}


def test_no_trolls_gives_zero_distances_and_warning(tmp_path):
    m = np.full((20, 10), 0.25)
    summary = report(_snapshot(m), tmp_path, ks=(1,))
    assert summary["warnings"]
    dist = [float(r["avg_distance"]) for r in _read(tmp_path / "troll_feature_distance.csv")]
    assert dist == [0.0] * 10


def test_single_feature_rates(tmp_path):
    m = np.zeros((10, 10))
    m[:3, 6] = 0.9
    report(_snapshot(m), tmp_path, ks=(1,))
    rates = {r["feature"]: float(r["percent_labeled"]) for r in _read(tmp_path / "single_feature_rates.csv")}
    assert rates["f7"] == 30.0 and rates["f1"] == 0.0
