"""Per-user lifetime counters and the ten behavioural features.

Feature columns, in order:

====  =====================================================
f1    button inputs matching the top-1 goal of their context
f2    ... top-2 goals
f3    ... top-3 goals
f4    messages that are spam
f5    button inputs sent while anarchy was in effect
f6    button inputs that are START
f7    mode votes that are ANARCHY
f8    button inputs matching the bottom-1 goal of their context
f9    ... bottom-2 goals
f10   ... bottom-3 goals
====  =====================================================
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .contexts import ANARCHY, Context
from .parser import ChatEvent, Kind

FEATURE_NAMES = tuple(f"f{i}" for i in range(1, 11))
N_FEATURES = len(FEATURE_NAMES)
FEATURES_CSV_HEADER = ["username", *FEATURE_NAMES, "message_total", "first_seen_ms", "last_seen_ms"]


class Ineligible(ValueError):
    """Profile has too few messages to produce a trustworthy feature vector."""


@dataclass(slots=True)
class UserProfile:
    username: str
    button_total: int = 0
    spam_total: int = 0
    message_total: int = 0
    mode_vote_total: int = 0
    anarchy_vote_count: int = 0
    start_count: int = 0
    anarchy_mode_button_count: int = 0
    top_hits: list[int] = field(default_factory=lambda: [0, 0, 0])
    bottom_hits: list[int] = field(default_factory=lambda: [0, 0, 0])
    first_seen_ms: int | None = None
    last_seen_ms: int | None = None

    def _seen(self, ts: int) -> None:
        if self.first_seen_ms is None or ts < self.first_seen_ms:
            self.first_seen_ms = ts
        if self.last_seen_ms is None or ts > self.last_seen_ms:
            self.last_seen_ms = ts

    def merge(self, other: UserProfile) -> None:
        if other.username != self.username:
            raise ValueError("cannot merge profiles of different users")
        self.button_total += other.button_total
        self.spam_total += other.spam_total
        self.message_total += other.message_total
        self.mode_vote_total += other.mode_vote_total
        self.anarchy_vote_count += other.anarchy_vote_count
        self.start_count += other.start_count
        self.anarchy_mode_button_count += other.anarchy_mode_button_count
        for j in range(3):
            self.top_hits[j] += other.top_hits[j]
            self.bottom_hits[j] += other.bottom_hits[j]
        for ts in (other.first_seen_ms, other.last_seen_ms):
            if ts is not None:
                self._seen(ts)

    def check(self) -> None:
        """Assert the counter invariants."""
        assert self.top_hits[0] <= self.top_hits[1] <= self.top_hits[2] <= self.button_total
        assert self.bottom_hits[0] <= self.bottom_hits[1] <= self.bottom_hits[2] <= self.button_total
        assert self.button_total + self.spam_total + self.mode_vote_total == self.message_total
        assert self.anarchy_vote_count <= self.mode_vote_total
        assert self.start_count <= self.button_total
        assert self.anarchy_mode_button_count <= self.button_total
        # top-3 and bottom-3 of an 8-item permutation are disjoint
        assert self.top_hits[2] + self.bottom_hits[2] <= self.button_total


def _hit_depth(ranking: Sequence[str]) -> tuple[dict[str, int], dict[str, int]]:
    # number of top-k / bottom-k (k=1..3) sets each button belongs to
    top = {b: 3 - i for i, b in enumerate(ranking[:3])}
    bottom = {b: 3 - i for i, b in enumerate(reversed(ranking[-3:]))}
    return top, bottom


def ingest_context(
    profiles: dict[str, UserProfile], context: Context, window_events: Iterable[ChatEvent]
) -> dict[str, UserProfile]:
    """Fold one finalized context's events into ``profiles`` (mutated and returned)."""
    top, bottom = _hit_depth(context.goal_ranking)
    anarchy = context.mode_in_effect == ANARCHY
    for ev in window_events:
        p = profiles.get(ev.username)
        if p is None:
            p = profiles[ev.username] = UserProfile(ev.username)
        p.message_total += 1
        p._seen(ev.timestamp_ms)
        kind = ev.message_class.kind
        if kind is Kind.BUTTON:
            button = ev.message_class.command
            p.button_total += 1
            depth = top.get(button, 0)
            for j in range(3 - depth, 3):
                p.top_hits[j] += 1
            depth = bottom.get(button, 0)
            for j in range(3 - depth, 3):
                p.bottom_hits[j] += 1
            if button == "start":
                p.start_count += 1
            if anarchy:
                p.anarchy_mode_button_count += 1
        elif kind is Kind.MODE_VOTE:
            p.mode_vote_total += 1
            if ev.message_class.command == ANARCHY:
                p.anarchy_vote_count += 1
        else:
            p.spam_total += 1
    return profiles


def merge_profiles(*shards: Mapping[str, UserProfile]) -> dict[str, UserProfile]:
    """Reduce step: combine profile maps built on disjoint event shards."""
    out: dict[str, UserProfile] = {}
    for shard in shards:
        for name, prof in shard.items():
            if name not in out:
                out[name] = UserProfile(name)
            out[name].merge(prof)
    return out


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def extract_features(profile: UserProfile, min_messages: int = 10) -> np.ndarray:
    """Ten-feature vector of a profile; raises :class:`Ineligible` below ``min_messages``."""
    if profile.message_total < min_messages:
        raise Ineligible(f"{profile.username}: {profile.message_total} < {min_messages} messages")
    bt = profile.button_total
    return np.array([
        _ratio(profile.top_hits[0], bt),
        _ratio(profile.top_hits[1], bt),
        _ratio(profile.top_hits[2], bt),
        _ratio(profile.spam_total, profile.message_total),
        _ratio(profile.anarchy_mode_button_count, bt),
        _ratio(profile.start_count, bt),
        _ratio(profile.anarchy_vote_count, profile.mode_vote_total),
        _ratio(profile.bottom_hits[0], bt),
        _ratio(profile.bottom_hits[1], bt),
        _ratio(profile.bottom_hits[2], bt),
    ])


@dataclass(frozen=True)
class FeatureSnapshot:
    """Point-in-time feature matrix; row ``i`` belongs to ``usernames[i]``."""

    usernames: tuple[str, ...]
    matrix: np.ndarray
    message_total: np.ndarray
    first_seen_ms: np.ndarray
    last_seen_ms: np.ndarray

    def __len__(self) -> int:
        return len(self.usernames)

    def subset(self, rows: Sequence[int]) -> FeatureSnapshot:
        rows = np.asarray(rows, dtype=np.intp)
        m = self.matrix[rows]
        m.flags.writeable = False
        return FeatureSnapshot(
            tuple(self.usernames[i] for i in rows), m,
            self.message_total[rows], self.first_seen_ms[rows], self.last_seen_ms[rows],
        )


def snapshot_profiles(profiles: Mapping[str, UserProfile], min_messages: int = 10) -> FeatureSnapshot:
    """Feature matrix of every eligible user, rows sorted by username."""
    names, rows, totals, first, last = [], [], [], [], []
    for name in sorted(profiles):
        prof = profiles[name]
        try:
            vec = extract_features(prof, min_messages)
        except Ineligible:
            continue
        names.append(name)
        rows.append(vec)
        totals.append(prof.message_total)
        first.append(prof.first_seen_ms)
        last.append(prof.last_seen_ms)
    matrix = np.array(rows, dtype=float).reshape(len(rows), N_FEATURES)
    matrix.flags.writeable = False
    return FeatureSnapshot(
        tuple(names), matrix,
        np.array(totals, dtype=np.int64), np.array(first, dtype=np.int64), np.array(last, dtype=np.int64),
    )


def sample_features(n_population: int, n: int = 10_000, seed: int | None = 0) -> np.ndarray:
    """Sorted row indices of a uniform sample without replacement.

    Returns every index when ``n >= n_population``.
    """
    if n >= n_population:
        return np.arange(n_population)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_population, size=n, replace=False))


def write_features_csv(snapshot: FeatureSnapshot, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(FEATURES_CSV_HEADER)
    for i, name in enumerate(snapshot.usernames):
        w.writerow([name, *(repr(float(x)) for x in snapshot.matrix[i]),
                    int(snapshot.message_total[i]), int(snapshot.first_seen_ms[i]),
                    int(snapshot.last_seen_ms[i])])


def read_features_csv(fh: TextIO) -> FeatureSnapshot:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or header[:11] != FEATURES_CSV_HEADER[:11]:
        raise ValueError("not a features CSV: bad header")
    names, rows, totals, first, last = [], [], [], [], []
    extra = len(header) >= len(FEATURES_CSV_HEADER)
    for line_no, rec in enumerate(reader, start=2):
        if not rec:
            continue
        try:
            names.append(rec[0])
            rows.append([float(x) for x in rec[1:11]])
            if extra:
                totals.append(int(rec[11]))
                first.append(int(rec[12]))
                last.append(int(rec[13]))
            else:
                totals.append(0)
                first.append(0)
                last.append(0)
        except (ValueError, IndexError) as exc:
            raise ValueError(f"features CSV line {line_no}: {exc}") from exc
    matrix = np.array(rows, dtype=float).reshape(len(rows), N_FEATURES)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("features CSV contains non-finite values")
    matrix.flags.writeable = False
    return FeatureSnapshot(
        tuple(names), matrix,
        np.array(totals, dtype=np.int64), np.array(first, dtype=np.int64), np.array(last, dtype=np.int64),
    )

